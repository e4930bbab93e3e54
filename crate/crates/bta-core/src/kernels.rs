//! Generic Laplace-expansion Metropolis-Hastings and the reversible-jump
//! moves that open, close, and re-anchor theory loadings.
//!
//! The scalar MH proposal comes from a quadratic expansion of the log
//! posterior f around the current point tau: with b = f'(tau) - f''(tau) tau
//! and c = -f''(tau), the proposal is N(b/c, 1/c).  No hand-tuned step sizes;
//! a precision floor guards the flat-curvature cases (the quantile family has
//! d2mu = 0 everywhere).
//!
//! Reversible-jump bookkeeping follows the identification rule: the smallest
//! outcome index with a non-zero loading holds the anchor (gamma = 1).  A
//! birth below the anchor therefore re-anchors the whole theory column and
//! rescales (beta, I, nu) so every other outcome's mean is untouched.

use rand::Rng;
use rand_distr::StandardNormal;

use crate::context::EvalContext;
use crate::error::Error;
use crate::model::{ChainState, GammaStatus};

/// Proposal precision floor shared by every Laplace-MH update.
pub const C_MIN: f64 = 1e-3;

/// Smallest rescale magnitude an anchor move will apply.
pub const ALPHA_MIN: f64 = 1e-12;

const LN_2PI: f64 = 1.837877066409345483560659472811;

/// Gaussian proposal fitted from local gradient and curvature.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct LaplaceProposal {
    pub mean: f64,
    pub precision: f64,
    /// Expansion point the proposal was built at.
    pub source: f64,
}

/// Build the proposal `N(b/c, 1/c)` with `b = f' - f'' tau`, `c = -f''`.
/// Non-positive curvature falls back to a random walk at `tau` with the floor
/// precision.
pub fn laplace_proposal(fp: f64, fpp: f64, tau: f64) -> LaplaceProposal {
    let c = -fpp;
    if c > 0.0 {
        let b = fp + c * tau;
        LaplaceProposal {
            mean: b / c,
            precision: c.max(C_MIN),
            source: tau,
        }
    } else {
        LaplaceProposal {
            mean: tau,
            precision: C_MIN,
            source: tau,
        }
    }
}

impl LaplaceProposal {
    pub fn sample<R: Rng + ?Sized>(&self, rng: &mut R) -> f64 {
        let z: f64 = rng.sample(StandardNormal);
        self.mean + z / self.precision.sqrt()
    }

    pub fn log_density(&self, x: f64) -> f64 {
        let d = x - self.mean;
        0.5 * (self.precision.ln() - LN_2PI) - 0.5 * self.precision * d * d
    }
}

/// Result of one scalar MH step.
#[derive(Debug, Clone, Copy)]
pub struct MhOutcome {
    pub value: f64,
    pub accepted: bool,
    pub log_accept: f64,
}

/// One Metropolis-Hastings step with Laplace proposals built at both
/// endpoints.  `target` returns (f, f', f'') or `None` outside the support;
/// out-of-support proposals are rejected.
///
/// log A = f(t') - f(t) + log q(t | t') - log q(t' | t).
pub fn mh_step<F, R>(target: F, tau: f64, rng: &mut R) -> MhOutcome
where
    F: Fn(f64) -> Option<(f64, f64, f64)>,
    R: Rng + ?Sized,
{
    let Some((f0, fp0, fpp0)) = target(tau) else {
        return MhOutcome {
            value: tau,
            accepted: false,
            log_accept: f64::NEG_INFINITY,
        };
    };
    let forward = laplace_proposal(fp0, fpp0, tau);
    let proposed = forward.sample(rng);
    let Some((f1, fp1, fpp1)) = target(proposed) else {
        return MhOutcome {
            value: tau,
            accepted: false,
            log_accept: f64::NEG_INFINITY,
        };
    };
    let reverse = laplace_proposal(fp1, fpp1, proposed);
    let log_accept = f1 - f0 + reverse.log_density(tau) - forward.log_density(proposed);
    let accepted = log_accept >= 0.0 || rng.random::<f64>().ln() < log_accept;
    MhOutcome {
        value: if accepted { proposed } else { tau },
        accepted,
        log_accept,
    }
}

/// Result of one reversible-jump attempt.  The state mutation is the real
/// outcome; this reports whether it happened.
#[derive(Debug, Clone, Copy)]
pub struct RjOutcome {
    pub accepted: bool,
    pub log_accept: f64,
}

impl RjOutcome {
    fn rejected() -> Self {
        RjOutcome {
            accepted: false,
            log_accept: f64::NEG_INFINITY,
        }
    }
}

/// Toggle a loading between Zero and Free for an outcome strictly above the
/// anchor.  Births draw gamma' ~ N(0,1); the proposal density cancels the
/// prior exactly, leaving the outcome-r likelihood ratio.
pub fn rj_toggle_gamma<R: Rng + ?Sized>(
    state: &mut ChainState,
    ctx: &EvalContext,
    r: usize,
    t: usize,
    rng: &mut R,
) -> RjOutcome {
    let anchor = state
        .anchor_of(t)
        .expect("rj_toggle_gamma requires an anchored theory");
    assert!(anchor < r, "toggles only apply above the anchor");
    match state.gamma[r][t] {
        GammaStatus::Zero => {
            let g: f64 = rng.sample(StandardNormal);
            let delta = ctx.loglik_delta(state, r, |i| g * state.indices[(i, t)]);
            let log_accept = match delta {
                Ok(d) => d,
                Err(_) => return RjOutcome::rejected(),
            };
            let accepted = log_accept >= 0.0 || rng.random::<f64>().ln() < log_accept;
            if accepted {
                state.gamma[r][t] = GammaStatus::Free(g);
            }
            RjOutcome {
                accepted,
                log_accept,
            }
        }
        GammaStatus::Free(g) => {
            let delta = ctx.loglik_delta(state, r, |i| -g * state.indices[(i, t)]);
            let log_accept = match delta {
                Ok(d) => d,
                Err(_) => return RjOutcome::rejected(),
            };
            let accepted = log_accept >= 0.0 || rng.random::<f64>().ln() < log_accept;
            if accepted {
                state.gamma[r][t] = GammaStatus::Zero;
            }
            RjOutcome {
                accepted,
                log_accept,
            }
        }
        GammaStatus::One => panic!("rj_toggle_gamma cannot touch the anchor"),
    }
}

/// Re-anchor theory t at outcome r (r below the current anchor): gamma_rt
/// becomes One, every other non-zero loading is scaled by a draw
/// alpha ~ N(0,1), and (I, beta, nu) are rescaled so that mu is unchanged for
/// every outcome except r.  The scale-free index nu_t * I_it is invariant.
///
/// Draws with alpha <= ALPHA_MIN are rejected outright: nu must stay
/// positive, and the zero-neighborhood is degenerate.
pub fn rj_rebalance_anchor<R: Rng + ?Sized>(
    state: &mut ChainState,
    ctx: &EvalContext,
    r: usize,
    t: usize,
    rng: &mut R,
) -> RjOutcome {
    let anchor = state
        .anchor_of(t)
        .expect("rj_rebalance_anchor requires an active theory");
    assert!(state.gamma[r][t] == GammaStatus::Zero && r < anchor);
    let alpha: f64 = rng.sample(StandardNormal);
    if alpha <= ALPHA_MIN {
        return RjOutcome::rejected();
    }
    // only outcome r's likelihood moves: its mean gains I_it / alpha
    let delta = ctx.loglik_delta(state, r, |i| state.indices[(i, t)] / alpha);
    let log_accept = match delta {
        Ok(d) => d,
        Err(_) => return RjOutcome::rejected(),
    };
    let accepted = log_accept >= 0.0 || rng.random::<f64>().ln() < log_accept;
    if accepted {
        apply_rebalance(state, r, t, alpha).expect("alpha already checked");
    }
    RjOutcome {
        accepted,
        log_accept,
    }
}

/// The deterministic rebalance transformation.  Exposed separately so the
/// identification-invariance properties can be exercised directly.
pub fn apply_rebalance(
    state: &mut ChainState,
    r: usize,
    t: usize,
    alpha: f64,
) -> Result<(), Error> {
    if alpha.abs() < ALPHA_MIN {
        return Err(Error::DegenerateScale { alpha });
    }
    for row in state.gamma.iter_mut() {
        row[t] = match row[t] {
            GammaStatus::Zero => GammaStatus::Zero,
            GammaStatus::One => GammaStatus::Free(alpha),
            GammaStatus::Free(v) => GammaStatus::Free(alpha * v),
        };
    }
    state.gamma[r][t] = GammaStatus::One;
    let n = state.indices.nrows();
    for i in 0..n {
        state.indices[(i, t)] /= alpha;
    }
    state.betas[t] /= alpha;
    state.nus[t] *= alpha;
    Ok(())
}

/// Remove the anchor of a multi-outcome theory: the next-smallest non-zero
/// loading is promoted to One and the rescale bookkeeping of
/// [`rj_rebalance_anchor`] runs in reverse with the implied alpha (that
/// loading's current value).  Non-positive implied scales are rejected.
pub fn rj_anchor_death<R: Rng + ?Sized>(
    state: &mut ChainState,
    ctx: &EvalContext,
    r: usize,
    t: usize,
    rng: &mut R,
) -> RjOutcome {
    assert!(state.gamma[r][t] == GammaStatus::One);
    let included = state.included_outcomes(t);
    assert!(
        included.len() >= 2,
        "anchor death needs another loading to promote"
    );
    let next = included[1];
    let alpha = state.gamma[next][t].value();
    if alpha <= ALPHA_MIN {
        return RjOutcome::rejected();
    }
    let delta = ctx.loglik_delta(state, r, |i| -state.indices[(i, t)]);
    let log_accept = match delta {
        Ok(d) => d,
        Err(_) => return RjOutcome::rejected(),
    };
    let accepted = log_accept >= 0.0 || rng.random::<f64>().ln() < log_accept;
    if accepted {
        apply_anchor_death(state, r, t, next, alpha);
    }
    RjOutcome {
        accepted,
        log_accept,
    }
}

fn apply_anchor_death(state: &mut ChainState, r: usize, t: usize, next: usize, alpha: f64) {
    for row in state.gamma.iter_mut() {
        row[t] = match row[t] {
            GammaStatus::Zero => GammaStatus::Zero,
            GammaStatus::One => GammaStatus::One,
            GammaStatus::Free(v) => GammaStatus::Free(v / alpha),
        };
    }
    state.gamma[r][t] = GammaStatus::Zero;
    state.gamma[next][t] = GammaStatus::One;
    let n = state.indices.nrows();
    for i in 0..n {
        state.indices[(i, t)] *= alpha;
    }
    state.betas[t] *= alpha;
    state.nus[t] /= alpha;
}

/// Turn a theory fully on or off.
///
/// Birth (theory off): pick an outcome uniformly, anchor it, and draw the
/// whole index column from its prior N(x'beta, 1/nu) given the current beta;
/// the index proposal densities cancel their prior factors, so
/// log A = likelihood ratio + log R.  Death (exactly one loading, the
/// anchor): zero it and the index column; log A = likelihood ratio - log R.
/// beta is kept through both directions.
pub fn rj_theory_toggle<R: Rng + ?Sized>(
    state: &mut ChainState,
    ctx: &EvalContext,
    t: usize,
    rng: &mut R,
) -> RjOutcome {
    let included = state.included_outcomes(t);
    let r_count = ctx.spec.n_outcomes();
    match included.len() {
        0 => {
            let r = rng.random_range(0..r_count);
            let sd = 1.0 / state.nus[t].sqrt();
            let n = ctx.n();
            let proposal: Vec<f64> = (0..n)
                .map(|i| {
                    let z: f64 = rng.sample(StandardNormal);
                    state.index_mean(ctx.data, t, i) + sd * z
                })
                .collect();
            let delta = ctx.loglik_delta(state, r, |i| proposal[i]);
            let log_accept = match delta {
                Ok(d) => d + (r_count as f64).ln(),
                Err(_) => return RjOutcome::rejected(),
            };
            let accepted = log_accept >= 0.0 || rng.random::<f64>().ln() < log_accept;
            if accepted {
                state.gamma[r][t] = GammaStatus::One;
                for (i, v) in proposal.iter().enumerate() {
                    state.indices[(i, t)] = *v;
                }
            }
            RjOutcome {
                accepted,
                log_accept,
            }
        }
        1 => {
            let r = included[0];
            assert!(
                state.gamma[r][t] == GammaStatus::One,
                "a single loading must be the anchor"
            );
            let delta = ctx.loglik_delta(state, r, |i| -state.indices[(i, t)]);
            let log_accept = match delta {
                Ok(d) => d - (r_count as f64).ln(),
                Err(_) => return RjOutcome::rejected(),
            };
            let accepted = log_accept >= 0.0 || rng.random::<f64>().ln() < log_accept;
            if accepted {
                state.gamma[r][t] = GammaStatus::Zero;
                let n = ctx.n();
                for i in 0..n {
                    state.indices[(i, t)] = 0.0;
                }
            }
            RjOutcome {
                accepted,
                log_accept,
            }
        }
        _ => panic!("rj_theory_toggle requires a fully-off or single-outcome theory"),
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::model::{
        scale_free_indices, validate_state, Dataset, Family, ModelSpec, OutcomeSpec, TheorySpec,
    };
    use nalgebra::{DMatrix, DVector};
    use rand::SeedableRng;
    use rand_xoshiro::Xoshiro256PlusPlus;

    #[test]
    fn laplace_recovers_exact_gaussian() {
        // f = -tau^2/2 expanded at tau=3: proposal is N(0,1) regardless of tau
        let p = laplace_proposal(-3.0, -1.0, 3.0);
        assert!((p.mean - 0.0).abs() < 1e-15);
        assert!((p.precision - 1.0).abs() < 1e-15);
    }

    #[test]
    fn laplace_floors_flat_curvature() {
        let p = laplace_proposal(0.4, 0.0, 1.7);
        assert_eq!(p.precision, C_MIN);
        assert_eq!(p.mean, 1.7);
    }

    #[test]
    fn laplace_mean_is_newton_step() {
        // one logistic observation y=1 at mu=tau: f' = 1 - sigmoid, f'' = -sig(1-sig)
        let tau = 0.6f64;
        let sig = 1.0 / (1.0 + (-tau).exp());
        let fp = 1.0 - sig;
        let fpp = -sig * (1.0 - sig);
        let p = laplace_proposal(fp, fpp, tau);
        let newton = tau - fp / fpp;
        assert!((p.mean - newton).abs() < 1e-12);
    }

    #[test]
    fn mh_accepts_exact_gaussian_target_with_probability_one() {
        let target = |x: f64| Some((-0.5 * x * x, -x, -1.0));
        let mut rng = Xoshiro256PlusPlus::seed_from_u64(7);
        let mut tau = 2.5;
        for _ in 0..200 {
            let out = mh_step(target, tau, &mut rng);
            assert!(out.accepted);
            assert!(out.log_accept.abs() < 1e-10);
            tau = out.value;
        }
    }

    #[test]
    fn mh_rejects_out_of_support_proposals() {
        // support is only the current point; any real proposal must be refused
        let tau = 0.4;
        let target = move |x: f64| {
            if (x - tau).abs() < 1e-14 {
                Some((0.0, 0.0, -1.0))
            } else {
                None
            }
        };
        let mut rng = Xoshiro256PlusPlus::seed_from_u64(8);
        for _ in 0..50 {
            let out = mh_step(target, tau, &mut rng);
            assert!(!out.accepted);
            assert_eq!(out.value, tau);
        }
    }

    #[test]
    fn mh_matches_quadrature_on_logistic_posterior() {
        // 1-d posterior: one logistic observation y=1, N(0,1) prior
        let target = |x: f64| {
            let e = crate::families::logistic_eval(1.0, x);
            Some((e.loglik - 0.5 * x * x, e.dmu - x, e.d2mu - 1.0))
        };
        let mut rng = Xoshiro256PlusPlus::seed_from_u64(9);
        let draws = 100_000;
        let mut x = 0.0;
        let mut samples = Vec::with_capacity(draws);
        for _ in 0..draws {
            x = mh_step(target, x, &mut rng).value;
            samples.push(x);
        }
        // quadrature normalization of the same density
        let lo = -8.0;
        let hi = 8.0;
        let m = 4001;
        let h = (hi - lo) / (m - 1) as f64;
        let dens: Vec<f64> = (0..m)
            .map(|k| {
                let v = lo + k as f64 * h;
                (target(v).unwrap().0).exp()
            })
            .collect();
        let total: f64 = dens.iter().sum::<f64>() * h;
        let mut cdf = vec![0.0; m];
        let mut acc = 0.0;
        for k in 0..m {
            acc += dens[k] * h / total;
            cdf[k] = acc.min(1.0);
        }
        samples.sort_by(|a, b| a.partial_cmp(b).unwrap());
        let mut ks: f64 = 0.0;
        for (j, s) in samples.iter().enumerate() {
            let k = (((s - lo) / h).round() as isize).clamp(0, m as isize - 1) as usize;
            let emp = (j + 1) as f64 / draws as f64;
            ks = ks.max((emp - cdf[k]).abs());
        }
        assert!(ks < 0.02, "KS distance {ks}");
    }

    // --- reversible-jump fixtures -------------------------------------------

    fn two_outcome_system(n: usize, seed: u64) -> (ModelSpec, Dataset) {
        let spec = ModelSpec {
            theories: vec![TheorySpec {
                name: "t".into(),
                proxy_names: vec!["a".into()],
                nu: 1.0,
            }],
            outcomes: vec![
                OutcomeSpec {
                    name: "y1".into(),
                    family: Family::Logistic,
                },
                OutcomeSpec {
                    name: "y2".into(),
                    family: Family::Logistic,
                },
            ],
        };
        let mut gen = Xoshiro256PlusPlus::seed_from_u64(seed);
        let x = DMatrix::from_fn(n, 1, |_, _| gen.random::<f64>() * 2.0 - 1.0);
        let y = DMatrix::from_fn(n, 2, |_, _| f64::from(gen.random::<bool>()));
        let data = Dataset::new(vec![x], y, vec![true; n * 2], vec![], vec![]).unwrap();
        (spec, data)
    }

    fn anchored_state(data: &Dataset, second: GammaStatus) -> ChainState {
        ChainState {
            models: vec![vec![0]],
            betas: vec![DVector::from_vec(vec![0.4])],
            indices: DMatrix::from_fn(data.n, 1, |i, _| 0.3 * (i as f64) - 0.5),
            gamma: vec![vec![GammaStatus::One], vec![second]],
            alphas: vec![0.1, -0.2],
            kappas: vec![0.0, 0.0],
            xis: vec![0.0, 0.0],
            nus: vec![1.0],
        }
    }

    #[test]
    fn toggle_with_zero_indices_always_flips() {
        let (spec, data) = two_outcome_system(4, 80);
        let ctx = EvalContext::new(&spec, &data).unwrap();
        let mut state = anchored_state(&data, GammaStatus::Zero);
        for i in 0..data.n {
            state.indices[(i, 0)] = 0.0;
        }
        let mut rng = Xoshiro256PlusPlus::seed_from_u64(81);
        let mut on = 0usize;
        let flips = 2000;
        for _ in 0..flips {
            let out = rj_toggle_gamma(&mut state, &ctx, 1, 0, &mut rng);
            assert!(out.accepted, "mu unchanged, log A must be 0");
            assert!(out.log_accept.abs() < 1e-12);
            if state.gamma[1][0].is_included() {
                on += 1;
            }
        }
        // deterministic alternation: included exactly half the time
        assert_eq!(on, flips / 2);
    }

    #[test]
    fn toggle_death_restores_prior_only_entry() {
        let (spec, data) = two_outcome_system(6, 82);
        let ctx = EvalContext::new(&spec, &data).unwrap();
        let mut state = anchored_state(&data, GammaStatus::Free(0.9));
        let reference = anchored_state(&data, GammaStatus::Zero);
        let mut rng = Xoshiro256PlusPlus::seed_from_u64(83);
        loop {
            let out = rj_toggle_gamma(&mut state, &ctx, 1, 0, &mut rng);
            if out.accepted {
                break;
            }
        }
        assert_eq!(state, reference);
    }

    #[test]
    fn toggle_birth_then_death_is_identity() {
        let (spec, data) = two_outcome_system(5, 84);
        let ctx = EvalContext::new(&spec, &data).unwrap();
        let mut state = anchored_state(&data, GammaStatus::Zero);
        let start = state.clone();
        let mut rng = Xoshiro256PlusPlus::seed_from_u64(85);
        loop {
            if rj_toggle_gamma(&mut state, &ctx, 1, 0, &mut rng).accepted {
                break;
            }
        }
        assert!(state.gamma[1][0].is_included());
        loop {
            if rj_toggle_gamma(&mut state, &ctx, 1, 0, &mut rng).accepted {
                break;
            }
        }
        assert_eq!(state, start);
    }

    #[test]
    fn rebalance_with_unit_alpha_is_pure_anchor_transfer() {
        let (spec, data) = two_outcome_system(5, 86);
        let _ = &spec;
        let mut state = anchored_state(&data, GammaStatus::Zero);
        // anchor currently at outcome 0; move it to... build the mirrored case:
        // anchor at outcome 1, outcome 0 zero
        state.gamma = vec![vec![GammaStatus::Zero], vec![GammaStatus::One]];
        let before_sf = scale_free_indices(&state);
        let mut moved = state.clone();
        apply_rebalance(&mut moved, 0, 0, 1.0).unwrap();
        assert_eq!(moved.gamma[0][0], GammaStatus::One);
        assert_eq!(moved.gamma[1][0], GammaStatus::Free(1.0));
        assert_eq!(moved.indices, state.indices);
        assert_eq!(moved.nus, state.nus);
        let after_sf = scale_free_indices(&moved);
        assert_eq!(before_sf, after_sf);
    }

    #[test]
    fn rebalance_preserves_scale_free_indices_and_other_means() {
        let (spec, data) = two_outcome_system(6, 87);
        let mut state = anchored_state(&data, GammaStatus::Zero);
        state.gamma = vec![vec![GammaStatus::Zero], vec![GammaStatus::One]];
        let before_sf = scale_free_indices(&state);
        let before_mu1: Vec<f64> = (0..data.n)
            .map(|i| crate::model::mean_value(&state, i, 1))
            .collect();
        let mut rng = Xoshiro256PlusPlus::seed_from_u64(88);
        for _ in 0..200 {
            let mut probe = state.clone();
            let alpha: f64 = rng.random::<f64>() * 3.0 + 1e-3;
            apply_rebalance(&mut probe, 0, 0, alpha).unwrap();
            let after_sf = scale_free_indices(&probe);
            for i in 0..data.n {
                assert!((after_sf[(i, 0)] - before_sf[(i, 0)]).abs() < 1e-12);
                let mu1 = crate::model::mean_value(&probe, i, 1);
                assert!((mu1 - before_mu1[i]).abs() < 1e-12);
            }
            let violations = validate_state(&probe, &spec, &data);
            assert!(violations.is_empty(), "{violations:?}");
        }
    }

    #[test]
    fn rebalance_rejects_degenerate_scale() {
        let (_, data) = two_outcome_system(4, 89);
        let mut state = anchored_state(&data, GammaStatus::Zero);
        state.gamma = vec![vec![GammaStatus::Zero], vec![GammaStatus::One]];
        assert!(matches!(
            apply_rebalance(&mut state, 0, 0, 1e-13),
            Err(Error::DegenerateScale { .. })
        ));
    }

    #[test]
    fn rebalance_then_anchor_death_is_identity() {
        let (spec, data) = two_outcome_system(5, 90);
        let ctx = EvalContext::new(&spec, &data).unwrap();
        let mut state = anchored_state(&data, GammaStatus::Zero);
        state.gamma = vec![vec![GammaStatus::Zero], vec![GammaStatus::One]];
        let start = state.clone();
        let mut rng = Xoshiro256PlusPlus::seed_from_u64(91);
        loop {
            if rj_rebalance_anchor(&mut state, &ctx, 0, 0, &mut rng).accepted {
                break;
            }
        }
        assert_eq!(state.gamma[0][0], GammaStatus::One);
        loop {
            if rj_anchor_death(&mut state, &ctx, 0, 0, &mut rng).accepted {
                break;
            }
        }
        assert_eq!(state.gamma, start.gamma);
        for i in 0..data.n {
            assert!((state.indices[(i, 0)] - start.indices[(i, 0)]).abs() < 1e-12);
        }
        assert!((state.nus[0] - start.nus[0]).abs() < 1e-12);
        assert!((state.betas[0][0] - start.betas[0][0]).abs() < 1e-12);
    }

    #[test]
    fn theory_birth_then_death_restores_exact_state() {
        let (spec, data) = two_outcome_system(5, 92);
        let ctx = EvalContext::new(&spec, &data).unwrap();
        let mut state = anchored_state(&data, GammaStatus::Zero);
        state.gamma = vec![vec![GammaStatus::Zero], vec![GammaStatus::Zero]];
        for i in 0..data.n {
            state.indices[(i, 0)] = 0.0;
        }
        let start = state.clone();
        let mut rng = Xoshiro256PlusPlus::seed_from_u64(93);
        loop {
            if rj_theory_toggle(&mut state, &ctx, 0, &mut rng).accepted {
                break;
            }
        }
        assert_eq!(state.included_outcomes(0).len(), 1);
        loop {
            if rj_theory_toggle(&mut state, &ctx, 0, &mut rng).accepted {
                break;
            }
        }
        assert_eq!(state, start);
    }

    #[test]
    fn theory_toggle_on_missing_outcome_is_pick_correction_only() {
        // all outcome cells missing: log A = +/- log R
        let spec = ModelSpec {
            theories: vec![TheorySpec {
                name: "t".into(),
                proxy_names: vec!["a".into()],
                nu: 1.0,
            }],
            outcomes: vec![
                OutcomeSpec {
                    name: "y1".into(),
                    family: Family::Logistic,
                },
                OutcomeSpec {
                    name: "y2".into(),
                    family: Family::Logistic,
                },
            ],
        };
        let n = 4;
        let x = DMatrix::from_element(n, 1, 0.2);
        let y = DMatrix::from_element(n, 2, 0.0);
        let data = Dataset::new(vec![x], y, vec![false; n * 2], vec![], vec![]).unwrap();
        let ctx = EvalContext::new(&spec, &data).unwrap();
        let mut state = anchored_state(&data, GammaStatus::Zero);
        state.gamma = vec![vec![GammaStatus::Zero], vec![GammaStatus::Zero]];
        for i in 0..n {
            state.indices[(i, 0)] = 0.0;
        }
        let mut rng = Xoshiro256PlusPlus::seed_from_u64(94);
        let out = rj_theory_toggle(&mut state, &ctx, 0, &mut rng);
        assert!((out.log_accept - 2.0f64.ln()).abs() < 1e-12);
        assert!(out.accepted);
        let out = rj_theory_toggle(&mut state, &ctx, 0, &mut rng);
        assert!((out.log_accept - (-(2.0f64.ln()))).abs() < 1e-12);
    }
}
