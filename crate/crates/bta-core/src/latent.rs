//! The Gaussian latent layer: ridge posteriors for the proxy coefficients,
//! closed-form index marginals for conditional Bayes factor model moves, the
//! determinant model prior, and Laplace-MH updates of the latent indices.
//!
//! Conditioning on the index vector I_t separates this layer from the
//! non-Gaussian outcome likelihoods, so model comparison is exact:
//!
//! ```text
//! Xi      = nu X'X + (1/nu) I_p
//! beta^   = Xi^-1 nu X' I_t
//! log p(I_t | M) = -(n/2) ln 2pi + ((n-p)/2) ln nu
//!                  - (1/2) ln|Xi| - (nu/2) I'I + (1/2) beta^' Xi beta^
//! ```
//!
//! which reduces to the unit-precision ridge formulas at nu = 1.

use nalgebra::{Cholesky, DMatrix, DVector, Dyn};
use rand::Rng;
use rand_distr::StandardNormal;

use crate::context::EvalContext;
use crate::error::Error;
use crate::families::FamilyParams;
use crate::kernels::{mh_step, MhOutcome};
use crate::model::{mean_value, ChainState};

const LN_2PI: f64 = 1.837877066409345483560659472811;

/// Probability of a neighbor move (add/drop/swap); the remainder proposes an
/// independent jump to a uniformly sized random subset.
const NEIGHBOR_PROB: f64 = 0.8;

/// Determinants at or below this are treated as singular (zero prior mass).
const DET_TOL: f64 = 1e-12;

/// Ridge posterior summary for one theory's in-model coefficients.
#[derive(Debug, Clone)]
pub struct RidgeSummary {
    /// Posterior precision matrix.
    pub xi: DMatrix<f64>,
    /// Posterior mean.
    pub beta_hat: DVector<f64>,
    pub logdet_xi: f64,
    /// beta^' Xi beta^.
    pub quad: f64,
    /// I'I.
    pub resid: f64,
    chol: Cholesky<f64, Dyn>,
}

/// Form the ridge posterior of beta_M given the index vector.
pub fn ridge_summary(
    x_m: &DMatrix<f64>,
    index: &DVector<f64>,
    nu: f64,
) -> Result<RidgeSummary, Error> {
    let p = x_m.ncols();
    let mut xi = x_m.transpose() * x_m * nu;
    for j in 0..p {
        xi[(j, j)] += 1.0 / nu;
    }
    let chol = Cholesky::new(xi.clone()).ok_or(Error::NumericalSingularity)?;
    let beta_hat = chol.solve(&(x_m.transpose() * index * nu));
    let logdet_xi = 2.0 * chol.l().diagonal().iter().map(|d| d.ln()).sum::<f64>();
    if !logdet_xi.is_finite() {
        return Err(Error::NumericalSingularity);
    }
    let quad = beta_hat.dot(&(&xi * &beta_hat));
    let resid = index.dot(index);
    Ok(RidgeSummary {
        xi,
        beta_hat,
        logdet_xi,
        quad,
        resid,
        chol,
    })
}

impl RidgeSummary {
    /// Draw beta_M ~ N(beta^, Xi^-1).
    pub fn sample<R: Rng + ?Sized>(&self, rng: &mut R) -> DVector<f64> {
        let p = self.beta_hat.len();
        let z = DVector::from_fn(p, |_, _| rng.sample::<f64, _>(StandardNormal));
        // Xi = L L', so Xi^-1 = L^-T L^-1 and beta^ + L^-T z has the posterior law
        let w = self
            .chol
            .l()
            .transpose()
            .solve_upper_triangular(&z)
            .expect("Cholesky factor is nonsingular");
        &self.beta_hat + w
    }
}

fn model_columns(x: &DMatrix<f64>, model: &[usize]) -> DMatrix<f64> {
    x.select_columns(model.iter())
}

/// Gibbs refresh of beta_t from its full conditional given (M_t, I_t).
/// Off-model entries are set to zero.
pub fn gibbs_beta<R: Rng + ?Sized>(
    state: &mut ChainState,
    ctx: &EvalContext,
    t: usize,
    rng: &mut R,
) -> Result<(), Error> {
    let model = state.models[t].clone();
    assert!(!model.is_empty(), "gibbs_beta requires a nonempty model");
    let x_m = model_columns(&ctx.data.proxies[t], &model);
    let index = state.indices.column(t).into_owned();
    let rs = ridge_summary(&x_m, &index, state.nus[t])?;
    let draw = rs.sample(rng);
    state.betas[t].fill(0.0);
    for (k, &j) in model.iter().enumerate() {
        state.betas[t][j] = draw[k];
    }
    Ok(())
}

/// Refresh beta_t from its prior N(0, nu I) over the current model.  Used for
/// inactive theories, whose index column is pinned at zero and carries no
/// evidence.
pub fn prior_beta<R: Rng + ?Sized>(state: &mut ChainState, t: usize, rng: &mut R) {
    let sd = state.nus[t].sqrt();
    let model = state.models[t].clone();
    state.betas[t].fill(0.0);
    for &j in &model {
        let z: f64 = rng.sample(StandardNormal);
        state.betas[t][j] = sd * z;
    }
}

/// Closed-form log of the integrated index likelihood
/// `p(I_t | M) = ∫ N(I; X beta, I/nu) N(beta; 0, nu I) dbeta`, fully
/// normalized.
pub fn log_marginal_index(
    x_m: &DMatrix<f64>,
    index: &DVector<f64>,
    nu: f64,
) -> Result<f64, Error> {
    let rs = ridge_summary(x_m, index, nu)?;
    let n = index.len() as f64;
    let p = x_m.ncols() as f64;
    Ok(-0.5 * n * LN_2PI + 0.5 * (n - p) * nu.ln() - 0.5 * rs.logdet_xi - 0.5 * nu * rs.resid
        + 0.5 * rs.quad)
}

/// Dilution model prior: log det of the sub-correlation matrix over the
/// model's proxies; -inf (zero prior mass) for singular subsets.
pub fn log_model_prior(model: &[usize], corr: &DMatrix<f64>) -> f64 {
    assert!(!model.is_empty(), "the empty model is excluded");
    let sub = corr.select_rows(model.iter()).select_columns(model.iter());
    let det = sub.determinant();
    if det <= DET_TOL {
        f64::NEG_INFINITY
    } else {
        det.ln()
    }
}

/// A proposed model move with the log proposal densities needed for the
/// Hastings correction.
#[derive(Debug, Clone)]
pub struct ModelProposal {
    pub candidate: Vec<usize>,
    pub log_forward: f64,
    pub log_reverse: f64,
}

fn ln_choose(n: usize, k: usize) -> f64 {
    let mut acc = 0.0;
    for j in 0..k {
        acc += ((n - j) as f64).ln() - ((j + 1) as f64).ln();
    }
    acc
}

/// Log density of the independent-jump component: size uniform on {1..p},
/// then a uniform subset of that size.
fn log_q_jump(target_len: usize, p: usize) -> f64 {
    -(p as f64).ln() - ln_choose(p, target_len)
}

/// Log density of the full mixture kernel q(to | from).
fn log_q_move(from: &[usize], to: &[usize], p: usize) -> f64 {
    let jump = (1.0 - NEIGHBOR_PROB) * log_q_jump(to.len(), p).exp();
    let mut neighbor = 0.0;
    let m = from.len();
    let shared = to.iter().filter(|j| from.contains(j)).count();
    let added = to.len() - shared;
    let dropped = m - shared;
    let mut types = 0;
    let can_add = m < p;
    let can_drop = m > 1;
    let can_swap = m < p;
    if can_add {
        types += 1;
    }
    if can_drop {
        types += 1;
    }
    if can_swap {
        types += 1;
    }
    if types > 0 {
        let type_prob = 1.0 / types as f64;
        if added == 1 && dropped == 0 && can_add {
            neighbor = type_prob / (p - m) as f64;
        } else if added == 0 && dropped == 1 && can_drop {
            neighbor = type_prob / m as f64;
        } else if added == 1 && dropped == 1 && can_swap {
            neighbor = type_prob / (m * (p - m)) as f64;
        }
    }
    (NEIGHBOR_PROB * neighbor + jump).ln()
}

/// Propose a model move: with probability 0.8 a neighbor step (add / drop /
/// swap one proxy, never producing the empty model), otherwise an independent
/// jump to a uniformly random nonempty subset of uniformly random size.
pub fn propose_model_move<R: Rng + ?Sized>(
    model: &[usize],
    p: usize,
    rng: &mut R,
) -> ModelProposal {
    assert!(!model.is_empty());
    if p == 1 {
        return ModelProposal {
            candidate: model.to_vec(),
            log_forward: 0.0,
            log_reverse: 0.0,
        };
    }
    let m = model.len();
    let candidate = if rng.random::<f64>() < NEIGHBOR_PROB {
        let complement: Vec<usize> = (0..p).filter(|j| !model.contains(j)).collect();
        let mut types: Vec<u8> = Vec::with_capacity(3);
        if m < p {
            types.push(0); // add
        }
        if m > 1 {
            types.push(1); // drop
        }
        if m < p {
            types.push(2); // swap
        }
        let ty = types[rng.random_range(0..types.len())];
        let mut cand = model.to_vec();
        match ty {
            0 => {
                cand.push(complement[rng.random_range(0..complement.len())]);
            }
            1 => {
                cand.remove(rng.random_range(0..m));
            }
            _ => {
                let out = rng.random_range(0..m);
                let inn = complement[rng.random_range(0..complement.len())];
                cand[out] = inn;
            }
        }
        cand.sort_unstable();
        cand
    } else {
        let size = rng.random_range(1..=p);
        let mut pool: Vec<usize> = (0..p).collect();
        // partial Fisher-Yates
        for k in 0..size {
            let j = rng.random_range(k..p);
            pool.swap(k, j);
        }
        let mut cand: Vec<usize> = pool[..size].to_vec();
        cand.sort_unstable();
        cand
    };
    let log_forward = log_q_move(model, &candidate, p);
    let log_reverse = log_q_move(&candidate, model, p);
    ModelProposal {
        candidate,
        log_forward,
        log_reverse,
    }
}

/// One conditional-Bayes-factor model move for theory t.
///
/// Active theories compare integrated index likelihoods times the dilution
/// prior; on acceptance beta_t is refreshed from its new conditional.  For
/// inactive theories the index column is bookkeeping (pinned at zero), so the
/// move targets the model prior alone and beta refreshes from its prior.
/// Singular factorizations reject the proposal.
pub fn cbf_model_step<R: Rng + ?Sized>(
    state: &mut ChainState,
    ctx: &EvalContext,
    t: usize,
    rng: &mut R,
) -> Result<bool, Error> {
    let p = ctx.spec.n_proxies(t);
    let proposal = propose_model_move(&state.models[t], p, rng);
    if proposal.candidate == state.models[t] {
        return Ok(true); // self-move
    }
    let corr = &ctx.data.correlations[t];
    let lp_cur = log_model_prior(&state.models[t], corr);
    let lp_new = log_model_prior(&proposal.candidate, corr);
    if lp_new == f64::NEG_INFINITY {
        return Ok(false);
    }
    let active = state.theory_active(t);
    let log_accept = if active {
        let x = &ctx.data.proxies[t];
        let index = state.indices.column(t).into_owned();
        let nu = state.nus[t];
        let ml_cur = match log_marginal_index(&model_columns(x, &state.models[t]), &index, nu) {
            Ok(v) => v,
            Err(_) => return Ok(false),
        };
        let ml_new = match log_marginal_index(&model_columns(x, &proposal.candidate), &index, nu) {
            Ok(v) => v,
            Err(_) => return Ok(false),
        };
        ml_new + lp_new - ml_cur - lp_cur + proposal.log_reverse - proposal.log_forward
    } else {
        lp_new - lp_cur + proposal.log_reverse - proposal.log_forward
    };
    let accepted = log_accept >= 0.0 || rng.random::<f64>().ln() < log_accept;
    if accepted {
        state.models[t] = proposal.candidate;
        if active {
            gibbs_beta(state, ctx, t, rng)?;
        } else {
            prior_beta(state, t, rng);
        }
    }
    Ok(accepted)
}

/// One Laplace-MH update of the latent index I_it.  The target sums the
/// chain-ruled outcome contributions over present observations with non-zero
/// loadings plus the Gaussian prior N(x'beta, 1/nu).
pub fn update_index<R: Rng + ?Sized>(
    state: &mut ChainState,
    ctx: &EvalContext,
    t: usize,
    i: usize,
    rng: &mut R,
) -> MhOutcome {
    debug_assert!(state.theory_active(t), "index updates need an active theory");
    let nu = state.nus[t];
    let prior_mean = state.index_mean(ctx.data, t, i);
    let current = state.indices[(i, t)];

    // gather the outcome terms once; each is (y, loading, mu-without-this-term)
    let mut terms: Vec<(f64, f64, f64, FamilyParams)> = Vec::new();
    for r in 0..ctx.spec.n_outcomes() {
        let status = state.gamma[r][t];
        if !status.is_included() || !ctx.data.is_present(i, r) {
            continue;
        }
        let loading = status.value();
        let base = mean_value(state, i, r) - loading * current;
        terms.push((
            ctx.data.outcome(i, r),
            loading,
            base,
            FamilyParams::for_outcome(ctx.spec, state, r),
        ));
    }

    let target = |x: f64| -> Option<(f64, f64, f64)> {
        let d = x - prior_mean;
        let mut f = -0.5 * nu * d * d;
        let mut fp = -nu * d;
        let mut fpp = -nu;
        for &(y, loading, base, fam) in &terms {
            match fam.eval(y, base + loading * x) {
                Ok(e) => {
                    f += e.loglik;
                    fp += loading * e.dmu;
                    fpp += loading * loading * e.d2mu;
                }
                Err(_) => return None,
            }
        }
        Some((f, fp, fpp))
    };
    let out = mh_step(target, current, rng);
    state.indices[(i, t)] = out.value;
    out
}
