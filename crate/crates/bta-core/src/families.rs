//! Outcome likelihood families and their analytic derivatives.
//!
//! Every Metropolis-Hastings kernel in this crate builds its Gaussian
//! proposal from local gradient and curvature, so each family exposes the
//! per-observation triple (log-density, d/dmu, d2/dmu2) plus (f, f', f'')
//! bundles for its global parameters.  All scalar parameters carry standard
//! normal priors; the prior terms are included in the bundles.
//!
//! Conventions:
//! - quantile indicator 1{y < mu} is strict, so it is 0 at y = mu;
//! - GEV evaluations outside the support h(y) > 0 return
//!   [`Error::SupportViolation`] so callers can reject the proposal;
//! - GEV shape magnitudes below [`XI_MIN`] are refused (the shape
//!   parameterization divides by xi).

use crate::error::Error;
use crate::model::{ChainState, Family, ModelSpec};

/// Smallest GEV shape magnitude the engine evaluates.
pub const XI_MIN: f64 = 1e-3;

/// Per-observation evaluation: log-density and its first two derivatives in
/// the mean parameter.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct FamilyEval {
    pub loglik: f64,
    pub dmu: f64,
    pub d2mu: f64,
}

/// A family with its current global parameters filled in.
#[derive(Debug, Clone, Copy)]
pub enum FamilyParams {
    Logistic,
    Quantile { kappa: f64, tau: f64 },
    Gev { kappa: f64, xi: f64 },
}

impl FamilyParams {
    /// Bind the family of outcome `r` to the globals in `state`.
    pub fn for_outcome(spec: &ModelSpec, state: &ChainState, r: usize) -> FamilyParams {
        match spec.outcomes[r].family {
            Family::Logistic => FamilyParams::Logistic,
            Family::Quantile { tau } => FamilyParams::Quantile {
                kappa: state.kappas[r],
                tau,
            },
            Family::Gev => FamilyParams::Gev {
                kappa: state.kappas[r],
                xi: state.xis[r],
            },
        }
    }

    pub fn eval(&self, y: f64, mu: f64) -> Result<FamilyEval, Error> {
        match *self {
            FamilyParams::Logistic => Ok(logistic_eval(y, mu)),
            FamilyParams::Quantile { kappa, tau } => Ok(quantile_eval(y, mu, kappa, tau)),
            FamilyParams::Gev { kappa, xi } => gev_eval(y, mu, kappa, xi),
        }
    }

    pub fn loglik(&self, y: f64, mu: f64) -> Result<f64, Error> {
        self.eval(y, mu).map(|e| e.loglik)
    }
}

/// Numerically safe log(1 + exp(x)).
fn log1p_exp(x: f64) -> f64 {
    if x > 0.0 {
        x + (-x).exp().ln_1p()
    } else {
        x.exp().ln_1p()
    }
}

/// Logistic sigmoid, overflow-safe at both tails.
fn sigmoid(x: f64) -> f64 {
    if x >= 0.0 {
        1.0 / (1.0 + (-x).exp())
    } else {
        let e = x.exp();
        e / (1.0 + e)
    }
}

/// Bernoulli log-likelihood with logit link: `y*mu - log(1 + exp(mu))`.
pub fn logistic_eval(y: f64, mu: f64) -> FamilyEval {
    let p = sigmoid(mu);
    FamilyEval {
        loglik: y * mu - log1p_exp(mu),
        dmu: y - p,
        d2mu: -p * (1.0 - p),
    }
}

/// Pinball loss rho_tau(u) = u * (tau - 1{u < 0}).
pub fn pinball(u: f64, tau: f64) -> f64 {
    u * (tau - if u < 0.0 { 1.0 } else { 0.0 })
}

/// Asymmetric Laplace log-likelihood:
/// `log(tau(1-tau)) + kappa - exp(kappa) * rho_tau(y - mu)`.
///
/// The second derivative in the mean is identically zero; curvature for mean
/// updates must come from elsewhere (see the proposal precision floor in the
/// kernels module).
pub fn quantile_eval(y: f64, mu: f64, kappa: f64, tau: f64) -> FamilyEval {
    let u = y - mu;
    let ek = kappa.exp();
    let indicator = if y < mu { 1.0 } else { 0.0 };
    FamilyEval {
        loglik: (tau * (1.0 - tau)).ln() + kappa - ek * pinball(u, tau),
        dmu: ek * (tau - indicator),
        d2mu: 0.0,
    }
}

/// Log-posterior bundle for the quantile log-precision kappa over the
/// present observations:
/// `f = n*kappa - exp(kappa)*S - kappa^2/2` with `S = sum rho_tau(y - mu)`.
///
/// S >= 0 guarantees f'' <= -1, so the Laplace proposal precision stays
/// positive without the floor.
pub fn quantile_kappa_derivs(ys: &[f64], mus: &[f64], kappa: f64, tau: f64) -> (f64, f64, f64) {
    debug_assert_eq!(ys.len(), mus.len());
    let n = ys.len() as f64;
    let s: f64 = ys
        .iter()
        .zip(mus)
        .map(|(&y, &mu)| pinball(y - mu, tau))
        .sum();
    let ek = kappa.exp();
    (
        n * kappa - ek * s - 0.5 * kappa * kappa,
        n - ek * s - kappa,
        -ek * s - 1.0,
    )
}

/// GEV support function h(y) = 1 + xi * exp(kappa) * (y - mu).
pub fn gev_support(y: f64, mu: f64, kappa: f64, xi: f64) -> f64 {
    1.0 + xi * kappa.exp() * (y - mu)
}

/// GEV log-likelihood and mean derivatives:
///
/// ```text
/// a  = kappa - ((xi+1)/xi) log h - h^(-1/xi)
/// a' = (xi+1) e^k h^-1 - e^k h^(-1/xi - 1)
/// a" = xi (xi+1) e^2k h^-2 - (xi+1) e^2k h^(-1/xi - 2)
/// ```
pub fn gev_eval(y: f64, mu: f64, kappa: f64, xi: f64) -> Result<FamilyEval, Error> {
    if xi.abs() < XI_MIN {
        return Err(Error::ShapeTooSmall { xi });
    }
    let h = gev_support(y, mu, kappa, xi);
    if h <= 0.0 || h.is_nan() {
        return Err(Error::SupportViolation);
    }
    let ek = kappa.exp();
    let log_h = h.ln();
    let h_pow = |e: f64| (e * log_h).exp();
    let loglik = kappa - (xi + 1.0) / xi * log_h - h_pow(-1.0 / xi);
    let dmu = (xi + 1.0) * ek / h - ek * h_pow(-1.0 / xi - 1.0);
    let d2mu = xi * (xi + 1.0) * ek * ek / (h * h) - (xi + 1.0) * ek * ek * h_pow(-1.0 / xi - 2.0);
    Ok(FamilyEval { loglik, dmu, d2mu })
}

/// Intermediate quantities for the GEV global-parameter bundles, per
/// observation.  With u = exp(kappa)(y - mu), L = log h and w = u/h:
///
/// ```text
/// g1 = ((xi+1)/xi) L          g2 = h^(-1/xi)
/// g1' = -L/xi^2 + ((xi+1)/xi) w
/// g2' = g2 (L/xi^2 - w/xi)
/// b1 = u h^(-1/xi - 1)        b2 = (xi+1) u^2 h^(-1/xi - 2) / ... (kappa block)
/// d1..d4                      (xi second-derivative pieces)
/// ```
#[derive(Debug, Clone, Copy)]
pub struct GevAux {
    pub h: f64,
    pub g1: f64,
    pub g2: f64,
    pub g1_dot: f64,
    pub g2_dot: f64,
    pub b1: f64,
    pub b2: f64,
    pub d1: f64,
    pub d2: f64,
    pub d3: f64,
    pub d4: f64,
}

pub fn gev_aux(y: f64, mu: f64, kappa: f64, xi: f64) -> Result<GevAux, Error> {
    if xi.abs() < XI_MIN {
        return Err(Error::ShapeTooSmall { xi });
    }
    let h = gev_support(y, mu, kappa, xi);
    if h <= 0.0 || h.is_nan() {
        return Err(Error::SupportViolation);
    }
    let u = kappa.exp() * (y - mu);
    let log_h = h.ln();
    let w = u / h;
    let h_pow = |e: f64| (e * log_h).exp();
    let xi2 = xi * xi;
    let xi3 = xi2 * xi;

    let g1 = (xi + 1.0) / xi * log_h;
    let g2 = h_pow(-1.0 / xi);
    let g1_dot = -log_h / xi2 + (xi + 1.0) / xi * w;
    let g2_dot = g2 * (log_h / xi2 - w / xi);

    let b1 = u * h_pow(-1.0 / xi - 1.0);
    let b2 = (xi + 1.0) * u * u * h_pow(-1.0 / xi - 2.0);

    let d1 = -2.0 * log_h / xi3 + w / xi2;
    let d2 = w / xi2 + (xi + 1.0) / xi * w * w;
    let d3 = g2_dot * log_h / xi2 + g2 * (-2.0 * log_h / xi3 + w / xi2);
    let d4 = g2_dot * w / xi - g2 * (w / xi2 + w * w / xi);

    Ok(GevAux {
        h,
        g1,
        g2,
        g1_dot,
        g2_dot,
        b1,
        b2,
        d1,
        d2,
        d3,
        d4,
    })
}

/// Log-posterior bundle for the GEV log-precision kappa over the present
/// observations, N(0,1) prior included.  Per observation, with w = u/h:
///
/// ```text
/// f'  contribution: 1 - (xi+1) w + b1
/// f'' contribution:   - (xi+1) w/h * u ... = -(xi+1) u/h^2 + b1 - b2
/// ```
pub fn gev_kappa_derivs(
    ys: &[f64],
    mus: &[f64],
    kappa: f64,
    xi: f64,
) -> Result<(f64, f64, f64), Error> {
    debug_assert_eq!(ys.len(), mus.len());
    let ek = kappa.exp();
    let mut f = 0.0;
    let mut fp = 0.0;
    let mut fpp = 0.0;
    for (&y, &mu) in ys.iter().zip(mus) {
        let aux = gev_aux(y, mu, kappa, xi)?;
        let e = gev_eval(y, mu, kappa, xi)?;
        let u = ek * (y - mu);
        let w = u / aux.h;
        f += e.loglik;
        fp += 1.0 - (xi + 1.0) * w + aux.b1;
        fpp += -(xi + 1.0) * u / (aux.h * aux.h) + aux.b1 - aux.b2;
    }
    Ok((
        f - 0.5 * kappa * kappa,
        fp - kappa,
        fpp - 1.0,
    ))
}

/// Log-posterior bundle for the GEV shape xi over the present observations,
/// N(0,1) prior included:
///
/// ```text
/// f   = sum (kappa - g1 - g2) - xi^2/2
/// f'  = sum (-g1' - g2')      - xi
/// f'' = sum (d1 + d2 - d3 + d4) - 1
/// ```
pub fn gev_xi_derivs(
    ys: &[f64],
    mus: &[f64],
    kappa: f64,
    xi: f64,
) -> Result<(f64, f64, f64), Error> {
    debug_assert_eq!(ys.len(), mus.len());
    let mut f = 0.0;
    let mut fp = 0.0;
    let mut fpp = 0.0;
    for (&y, &mu) in ys.iter().zip(mus) {
        let aux = gev_aux(y, mu, kappa, xi)?;
        f += kappa - aux.g1 - aux.g2;
        fp += -aux.g1_dot - aux.g2_dot;
        fpp += aux.d1 + aux.d2 - aux.d3 + aux.d4;
    }
    Ok((f - 0.5 * xi * xi, fp - xi, fpp - 1.0))
}

/// Log-posterior bundle for an outcome intercept alpha (N(0,1) prior).
/// `offsets[i]` is the mean without the intercept, so mu_i = offsets[i] + alpha.
pub fn alpha_derivs(
    fam: &FamilyParams,
    ys: &[f64],
    offsets: &[f64],
    alpha: f64,
) -> Result<(f64, f64, f64), Error> {
    debug_assert_eq!(ys.len(), offsets.len());
    let mut f = 0.0;
    let mut fp = 0.0;
    let mut fpp = 0.0;
    for (&y, &off) in ys.iter().zip(offsets) {
        let e = fam.eval(y, off + alpha)?;
        f += e.loglik;
        fp += e.dmu;
        fpp += e.d2mu;
    }
    Ok((f - 0.5 * alpha * alpha, fp - alpha, fpp - 1.0))
}

/// Log-posterior bundle for a free loading gamma_rt (N(0,1) prior).
/// `offsets[i]` is the mean without this loading's term and `index[i]` the
/// theory index, so mu_i = offsets[i] + gamma * index[i]; the chain rule
/// brings factors index and index^2.
pub fn gamma_derivs(
    fam: &FamilyParams,
    ys: &[f64],
    offsets: &[f64],
    index: &[f64],
    gamma: f64,
) -> Result<(f64, f64, f64), Error> {
    debug_assert_eq!(ys.len(), offsets.len());
    debug_assert_eq!(ys.len(), index.len());
    let mut f = 0.0;
    let mut fp = 0.0;
    let mut fpp = 0.0;
    for ((&y, &off), &x) in ys.iter().zip(offsets).zip(index) {
        let e = fam.eval(y, off + gamma * x)?;
        f += e.loglik;
        fp += e.dmu * x;
        fpp += e.d2mu * x * x;
    }
    Ok((f - 0.5 * gamma * gamma, fp - gamma, fpp - 1.0))
}
