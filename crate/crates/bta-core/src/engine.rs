//! Sweep scheduling, multi-chain orchestration, and posterior summarization.
//!
//! One sweep runs, in fixed order: per theory, a model move, a beta refresh
//! and a full pass of index updates (active theories only — inactive index
//! columns stay pinned at zero); per outcome, Laplace-MH updates of the
//! intercept, the family globals and every free loading; finally the
//! reversible-jump phase.  Each RJ move runs behind a fair coin so the kernel
//! stays aperiodic even when every likelihood ratio is one (fully missing
//! data).
//!
//! Chains run on independent RNG streams derived from the master seed, so a
//! (seed, config, data) triple replays to a bit-identical sample stream
//! regardless of thread scheduling.

use nalgebra::{DMatrix, DVector};
use rand::Rng;
use rand::SeedableRng;
use rand_xoshiro::Xoshiro256PlusPlus;
use serde::{Deserialize, Serialize};

use crate::context::EvalContext;
use crate::error::Error;
use crate::families::{
    alpha_derivs, gamma_derivs, gev_kappa_derivs, gev_xi_derivs, quantile_kappa_derivs,
    FamilyParams,
};
use crate::kernels::{
    mh_step, rj_anchor_death, rj_rebalance_anchor, rj_theory_toggle, rj_toggle_gamma,
};
use crate::latent::{cbf_model_step, gibbs_beta, prior_beta, update_index};
use crate::model::{
    mean_value, validate_state, ChainState, Dataset, Family, GammaStatus, ModelSpec,
    PosteriorSummary,
};

/// Per-move-type counts applied within one sweep.
#[derive(Debug, Clone, Copy, Serialize, Deserialize)]
pub struct SweepConfig {
    /// Model moves attempted per theory.
    pub model_moves: usize,
    /// Full index-update passes per theory.
    pub index_passes: usize,
    /// Update rounds for each outcome's globals (intercept, kappa, xi, free loadings).
    pub global_moves: usize,
    /// Reversible-jump rounds.
    pub rj_moves: usize,
}

impl Default for SweepConfig {
    fn default() -> Self {
        SweepConfig {
            model_moves: 1,
            index_passes: 1,
            global_moves: 1,
            rj_moves: 1,
        }
    }
}

/// Run-level configuration.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct RunConfig {
    pub iterations: usize,
    pub burn_in: usize,
    pub thin: usize,
    pub chains: usize,
    pub seed: u64,
    #[serde(default)]
    pub sweep: SweepConfig,
}

impl RunConfig {
    /// Desk-scale defaults: 20k iterations, 5k burn-in, thin 5, 4 chains.
    pub fn desk_default() -> Self {
        RunConfig {
            iterations: 20_000,
            burn_in: 5_000,
            thin: 5,
            chains: 4,
            seed: 20_2608,
            sweep: SweepConfig::default(),
        }
    }

    /// Server-scale preset (long production runs with many parallel chains).
    pub fn server_preset() -> Self {
        RunConfig {
            iterations: 400_000,
            burn_in: 100_000,
            thin: 100,
            chains: 30,
            seed: 20_2608,
            sweep: SweepConfig::default(),
        }
    }

    pub fn validate(&self) -> Result<(), Error> {
        if self.iterations <= self.burn_in {
            return Err(Error::InvalidSpec(format!(
                "iterations ({}) must exceed burn-in ({})",
                self.iterations, self.burn_in
            )));
        }
        if self.thin == 0 {
            return Err(Error::InvalidSpec("thin must be at least 1".into()));
        }
        if self.chains == 0 {
            return Err(Error::InvalidSpec("need at least one chain".into()));
        }
        Ok(())
    }
}

/// Compact snapshot of one stored state.  Models are bitsets over proxy
/// indices; indices are stored per theory.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SampleRecord {
    pub iteration: usize,
    pub models: Vec<u64>,
    pub gamma: Vec<Vec<GammaStatus>>,
    pub betas: Vec<Vec<f64>>,
    pub indices: Vec<Vec<f64>>,
    pub alphas: Vec<f64>,
    pub kappas: Vec<f64>,
    pub xis: Vec<f64>,
    pub nus: Vec<f64>,
}

impl SampleRecord {
    pub fn from_state(iteration: usize, state: &ChainState) -> Self {
        let models = state
            .models
            .iter()
            .map(|m| m.iter().fold(0u64, |acc, &j| acc | (1 << j)))
            .collect();
        let t_count = state.indices.ncols();
        let n = state.indices.nrows();
        let indices = (0..t_count)
            .map(|t| (0..n).map(|i| state.indices[(i, t)]).collect())
            .collect();
        SampleRecord {
            iteration,
            models,
            gamma: state.gamma.clone(),
            betas: state.betas.iter().map(|b| b.as_slice().to_vec()).collect(),
            indices,
            alphas: state.alphas.clone(),
            kappas: state.kappas.clone(),
            xis: state.xis.clone(),
            nus: state.nus.clone(),
        }
    }

    pub fn to_state(&self) -> ChainState {
        let t_count = self.models.len();
        let n = self.indices.first().map_or(0, |col| col.len());
        let mut indices = DMatrix::zeros(n, t_count);
        for (t, col) in self.indices.iter().enumerate() {
            for (i, v) in col.iter().enumerate() {
                indices[(i, t)] = *v;
            }
        }
        ChainState {
            models: self
                .models
                .iter()
                .map(|bits| (0..64).filter(|j| bits >> j & 1 == 1).collect())
                .collect(),
            betas: self.betas.iter().map(|b| DVector::from_vec(b.clone())).collect(),
            indices,
            gamma: self.gamma.clone(),
            alphas: self.alphas.clone(),
            kappas: self.kappas.clone(),
            xis: self.xis.clone(),
            nus: self.nus.clone(),
        }
    }

    /// Scale-free index for observation i of theory t.
    pub fn scaled_index(&self, t: usize, i: usize) -> f64 {
        self.nus[t] * self.indices[t][i]
    }
}

/// Receives the thinned post-burn-in records of one chain.
pub trait SampleSink {
    fn write(&mut self, record: &SampleRecord) -> Result<(), Error>;
}

/// In-memory sink.
#[derive(Debug, Default)]
pub struct VecSink {
    pub records: Vec<SampleRecord>,
}

impl SampleSink for VecSink {
    fn write(&mut self, record: &SampleRecord) -> Result<(), Error> {
        self.records.push(record.clone());
        Ok(())
    }
}

/// Attempt/accept counters per move family.
#[derive(Debug, Clone, Copy, Default, Serialize, Deserialize)]
pub struct MoveStats {
    pub attempts: u64,
    pub accepts: u64,
}

impl MoveStats {
    fn tally(&mut self, accepted: bool) {
        self.attempts += 1;
        self.accepts += u64::from(accepted);
    }

    pub fn rate(&self) -> f64 {
        if self.attempts == 0 {
            f64::NAN
        } else {
            self.accepts as f64 / self.attempts as f64
        }
    }
}

/// Per-chain acceptance accounting.
#[derive(Debug, Clone, Copy, Default, Serialize, Deserialize)]
pub struct SweepStats {
    pub model: MoveStats,
    pub index: MoveStats,
    pub alpha: MoveStats,
    pub kappa: MoveStats,
    pub xi: MoveStats,
    pub gamma: MoveStats,
    pub rj_toggle: MoveStats,
    pub rj_rebalance: MoveStats,
    pub rj_anchor_death: MoveStats,
    pub rj_theory: MoveStats,
}

/// Deterministic starting state: full models, zero coefficients and indices,
/// every theory anchored at the first outcome.  GEV outcomes get
/// support-safe intercept and log-precision (h > 0 must hold at the initial
/// state for every present observation).
pub fn initial_state(spec: &ModelSpec, data: &Dataset) -> ChainState {
    let t_count = spec.n_theories();
    let r_count = spec.n_outcomes();
    let mut alphas = vec![0.0; r_count];
    let mut kappas = vec![0.0; r_count];
    let mut xis = vec![0.0; r_count];
    for (r, oc) in spec.outcomes.iter().enumerate() {
        if oc.family == Family::Gev {
            let mut present: Vec<f64> = (0..data.n)
                .filter(|&i| data.is_present(i, r))
                .map(|i| data.outcome(i, r))
                .collect();
            let xi0 = 0.1;
            xis[r] = xi0;
            if present.is_empty() {
                continue;
            }
            present.sort_by(|a, b| a.partial_cmp(b).unwrap());
            let median = present[present.len() / 2];
            alphas[r] = median;
            let spread = present
                .iter()
                .map(|y| median - y)
                .fold(f64::MIN, f64::max)
                .max(1e-9);
            kappas[r] = (0.9 / (xi0 * spread)).ln().min(0.0);
        }
    }
    ChainState {
        models: (0..t_count).map(|t| (0..spec.n_proxies(t)).collect()).collect(),
        betas: (0..t_count).map(|t| DVector::zeros(spec.n_proxies(t))).collect(),
        indices: DMatrix::zeros(data.n, t_count),
        gamma: (0..r_count)
            .map(|r| {
                (0..t_count)
                    .map(|_| if r == 0 { GammaStatus::One } else { GammaStatus::Zero })
                    .collect()
            })
            .collect(),
        alphas,
        kappas,
        xis,
        nus: spec.theories.iter().map(|th| th.nu).collect(),
    }
}

fn update_outcome_globals<R: Rng + ?Sized>(
    state: &mut ChainState,
    ctx: &EvalContext,
    r: usize,
    rng: &mut R,
    stats: &mut SweepStats,
) {
    let ys: Vec<f64> = ctx.present[r].iter().map(|&(_, y)| y).collect();
    let rows: Vec<usize> = ctx.present[r].iter().map(|&(i, _)| i).collect();

    // intercept
    {
        let fam = FamilyParams::for_outcome(ctx.spec, state, r);
        let alpha = state.alphas[r];
        let offsets: Vec<f64> = rows
            .iter()
            .map(|&i| mean_value(state, i, r) - alpha)
            .collect();
        let out = mh_step(
            |a| alpha_derivs(&fam, &ys, &offsets, a).ok(),
            alpha,
            rng,
        );
        stats.alpha.tally(out.accepted);
        state.alphas[r] = out.value;
    }

    // family globals
    match ctx.spec.outcomes[r].family {
        Family::Logistic => {}
        Family::Quantile { tau } => {
            let mus: Vec<f64> = rows.iter().map(|&i| mean_value(state, i, r)).collect();
            let out = mh_step(
                |k| Some(quantile_kappa_derivs(&ys, &mus, k, tau)),
                state.kappas[r],
                rng,
            );
            stats.kappa.tally(out.accepted);
            state.kappas[r] = out.value;
        }
        Family::Gev => {
            let mus: Vec<f64> = rows.iter().map(|&i| mean_value(state, i, r)).collect();
            let xi = state.xis[r];
            let out = mh_step(
                |k| gev_kappa_derivs(&ys, &mus, k, xi).ok(),
                state.kappas[r],
                rng,
            );
            stats.kappa.tally(out.accepted);
            state.kappas[r] = out.value;

            let kappa = state.kappas[r];
            let out = mh_step(
                |x| gev_xi_derivs(&ys, &mus, kappa, x).ok(),
                state.xis[r],
                rng,
            );
            stats.xi.tally(out.accepted);
            state.xis[r] = out.value;
        }
    }

    // free loadings
    for t in 0..ctx.spec.n_theories() {
        if let GammaStatus::Free(g) = state.gamma[r][t] {
            let fam = FamilyParams::for_outcome(ctx.spec, state, r);
            let index: Vec<f64> = rows.iter().map(|&i| state.indices[(i, t)]).collect();
            let offsets: Vec<f64> = rows
                .iter()
                .zip(&index)
                .map(|(&i, &x)| mean_value(state, i, r) - g * x)
                .collect();
            let out = mh_step(
                |v| gamma_derivs(&fam, &ys, &offsets, &index, v).ok(),
                g,
                rng,
            );
            stats.gamma.tally(out.accepted);
            state.gamma[r][t] = GammaStatus::Free(out.value);
        }
    }
}

fn rj_phase<R: Rng + ?Sized>(
    state: &mut ChainState,
    ctx: &EvalContext,
    t: usize,
    rng: &mut R,
    stats: &mut SweepStats,
) {
    let r_count = ctx.spec.n_outcomes();
    // whole-theory toggle slot: birth when off, death when on in one outcome
    if state.included_outcomes(t).len() <= 1 && rng.random::<f64>() < 0.5 {
        let out = rj_theory_toggle(state, ctx, t, rng);
        stats.rj_theory.tally(out.accepted);
    }
    // per-outcome slots; the dispatch re-reads the anchor each time because
    // earlier slots may have moved it
    for r in 0..r_count {
        if rng.random::<f64>() >= 0.5 {
            continue;
        }
        let Some(anchor) = state.anchor_of(t) else {
            continue;
        };
        if r < anchor {
            let out = rj_rebalance_anchor(state, ctx, r, t, rng);
            stats.rj_rebalance.tally(out.accepted);
        } else if r == anchor {
            if state.included_outcomes(t).len() >= 2 {
                let out = rj_anchor_death(state, ctx, r, t, rng);
                stats.rj_anchor_death.tally(out.accepted);
            }
            // the single-inclusion case belongs to the theory-toggle slot
        } else {
            let out = rj_toggle_gamma(state, ctx, r, t, rng);
            stats.rj_toggle.tally(out.accepted);
        }
    }
}

/// One full sweep over the state.
pub fn sweep<R: Rng + ?Sized>(
    state: &mut ChainState,
    ctx: &EvalContext,
    cfg: &SweepConfig,
    rng: &mut R,
    stats: &mut SweepStats,
) -> Result<(), Error> {
    let t_count = ctx.spec.n_theories();
    let r_count = ctx.spec.n_outcomes();
    for t in 0..t_count {
        for _ in 0..cfg.model_moves {
            let accepted = cbf_model_step(state, ctx, t, rng)?;
            stats.model.tally(accepted);
        }
        if state.theory_active(t) {
            gibbs_beta(state, ctx, t, rng)?;
            for _ in 0..cfg.index_passes {
                for i in 0..ctx.n() {
                    let out = update_index(state, ctx, t, i, rng);
                    stats.index.tally(out.accepted);
                }
            }
        } else {
            prior_beta(state, t, rng);
        }
    }
    for _ in 0..cfg.global_moves {
        for r in 0..r_count {
            update_outcome_globals(state, ctx, r, rng, stats);
        }
    }
    for _ in 0..cfg.rj_moves {
        for t in 0..t_count {
            rj_phase(state, ctx, t, rng, stats);
        }
    }
    Ok(())
}

/// Streaming accumulator behind [`summarize`]; also used online by
/// [`run_chains`] so summaries never require the full store in memory.
pub struct SummaryAccumulator {
    t_count: usize,
    r_count: usize,
    n: usize,
    proxy_counts: Vec<usize>,
    n_samples: usize,
    incl_counts: Vec<Vec<u64>>,
    gamma_sums: Vec<Vec<f64>>,
    proxy_incl: Vec<Vec<u64>>,
    proxy_beta_sum: Vec<Vec<f64>>,
    index_sum: Vec<Vec<f64>>,
    cell_sum: Vec<f64>,
    cell_cross: Vec<f64>,
}

impl SummaryAccumulator {
    pub fn new(spec: &ModelSpec, n: usize) -> Self {
        let t_count = spec.n_theories();
        let r_count = spec.n_outcomes();
        SummaryAccumulator {
            t_count,
            r_count,
            n,
            proxy_counts: (0..t_count).map(|t| spec.n_proxies(t)).collect(),
            n_samples: 0,
            incl_counts: vec![vec![0; t_count]; r_count],
            gamma_sums: vec![vec![0.0; t_count]; r_count],
            proxy_incl: (0..t_count).map(|t| vec![0; spec.n_proxies(t)]).collect(),
            proxy_beta_sum: (0..t_count).map(|t| vec![0.0; spec.n_proxies(t)]).collect(),
            index_sum: vec![vec![0.0; n]; t_count],
            cell_sum: vec![0.0; t_count],
            cell_cross: vec![0.0; t_count * t_count],
        }
    }

    pub fn add(&mut self, rec: &SampleRecord) {
        self.n_samples += 1;
        for r in 0..self.r_count {
            for t in 0..self.t_count {
                let status = rec.gamma[r][t];
                if status.is_included() {
                    self.incl_counts[r][t] += 1;
                    self.gamma_sums[r][t] += status.value();
                }
            }
        }
        for t in 0..self.t_count {
            for j in 0..self.proxy_counts[t] {
                if rec.models[t] >> j & 1 == 1 {
                    self.proxy_incl[t][j] += 1;
                    self.proxy_beta_sum[t][j] += rec.betas[t][j];
                }
            }
        }
        let mut scaled = vec![0.0; self.t_count];
        for i in 0..self.n {
            for (t, slot) in scaled.iter_mut().enumerate() {
                let v = rec.scaled_index(t, i);
                *slot = v;
                self.index_sum[t][i] += v;
            }
            for t in 0..self.t_count {
                self.cell_sum[t] += scaled[t];
                for u in 0..self.t_count {
                    self.cell_cross[t * self.t_count + u] += scaled[t] * scaled[u];
                }
            }
        }
    }

    pub fn merge(&mut self, other: &SummaryAccumulator) {
        self.n_samples += other.n_samples;
        for r in 0..self.r_count {
            for t in 0..self.t_count {
                self.incl_counts[r][t] += other.incl_counts[r][t];
                self.gamma_sums[r][t] += other.gamma_sums[r][t];
            }
        }
        for t in 0..self.t_count {
            for j in 0..self.proxy_counts[t] {
                self.proxy_incl[t][j] += other.proxy_incl[t][j];
                self.proxy_beta_sum[t][j] += other.proxy_beta_sum[t][j];
            }
            for i in 0..self.n {
                self.index_sum[t][i] += other.index_sum[t][i];
            }
            self.cell_sum[t] += other.cell_sum[t];
            for u in 0..self.t_count {
                self.cell_cross[t * self.t_count + u] +=
                    other.cell_cross[t * self.t_count + u];
            }
        }
    }

    pub fn theory_inclusion(&self) -> Vec<Vec<f64>> {
        self.incl_counts
            .iter()
            .map(|row| {
                row.iter()
                    .map(|&c| c as f64 / self.n_samples.max(1) as f64)
                    .collect()
            })
            .collect()
    }

    pub fn finalize(&self, groups: &[String]) -> Result<PosteriorSummary, Error> {
        if self.n_samples == 0 {
            return Err(Error::EmptySampleStore);
        }
        let s = self.n_samples as f64;
        let gamma_conditional_mean = (0..self.r_count)
            .map(|r| {
                (0..self.t_count)
                    .map(|t| {
                        let c = self.incl_counts[r][t];
                        (c > 0).then(|| self.gamma_sums[r][t] / c as f64)
                    })
                    .collect()
            })
            .collect();
        let proxy_inclusion = (0..self.t_count)
            .map(|t| {
                (0..self.proxy_counts[t])
                    .map(|j| self.proxy_incl[t][j] as f64 / s)
                    .collect()
            })
            .collect();
        let proxy_conditional_mean = (0..self.t_count)
            .map(|t| {
                (0..self.proxy_counts[t])
                    .map(|j| {
                        let c = self.proxy_incl[t][j];
                        (c > 0).then(|| self.proxy_beta_sum[t][j] / c as f64)
                    })
                    .collect()
            })
            .collect();
        let index_mean =
            DMatrix::from_fn(self.n, self.t_count, |i, t| self.index_sum[t][i] / s);

        let cells = s * self.n as f64;
        let means: Vec<f64> = self.cell_sum.iter().map(|v| v / cells).collect();
        let mut corr = DMatrix::identity(self.t_count, self.t_count);
        let var: Vec<f64> = (0..self.t_count)
            .map(|t| self.cell_cross[t * self.t_count + t] / cells - means[t] * means[t])
            .collect();
        for t in 0..self.t_count {
            for u in (t + 1)..self.t_count {
                let cov = self.cell_cross[t * self.t_count + u] / cells - means[t] * means[u];
                let denom = (var[t] * var[u]).sqrt();
                let rho = if denom > 0.0 { cov / denom } else { 0.0 };
                corr[(t, u)] = rho;
                corr[(u, t)] = rho;
            }
        }

        let mut means_by_group: Vec<(String, Vec<f64>)> = Vec::new();
        if !groups.is_empty() {
            let mut keys: Vec<&String> = groups.iter().collect();
            keys.sort();
            keys.dedup();
            for key in keys {
                let members: Vec<usize> =
                    (0..self.n).filter(|&i| &groups[i] == key).collect();
                let row = (0..self.t_count)
                    .map(|t| {
                        members
                            .iter()
                            .map(|&i| index_mean[(i, t)])
                            .sum::<f64>()
                            / members.len() as f64
                    })
                    .collect();
                means_by_group.push((key.clone(), row));
            }
        }

        Ok(PosteriorSummary {
            n_samples: self.n_samples,
            theory_inclusion: self.theory_inclusion(),
            gamma_conditional_mean,
            proxy_inclusion,
            proxy_conditional_mean,
            index_mean,
            index_correlation: corr,
            means_by_group,
        })
    }
}

/// Summarize a sample store: inclusion probabilities as sample proportions,
/// conditional means over included samples (the anchor counts as one),
/// scale-free index means, the pooled index correlation, and means by group.
pub fn summarize<'a, I>(
    spec: &ModelSpec,
    n: usize,
    groups: &[String],
    records: I,
) -> Result<PosteriorSummary, Error>
where
    I: IntoIterator<Item = &'a SampleRecord>,
{
    let mut acc = SummaryAccumulator::new(spec, n);
    for rec in records {
        acc.add(rec);
    }
    acc.finalize(groups)
}

/// Cross-chain agreement report.
#[derive(Debug, Clone, Serialize)]
pub struct RunDiagnostics {
    /// Theory inclusion probabilities per chain, [chain][outcome][theory].
    pub per_chain_inclusion: Vec<Vec<Vec<f64>>>,
    /// Max absolute cross-chain difference in theory inclusion.
    pub max_inclusion_spread: f64,
    pub samples_per_chain: usize,
    pub move_stats: Vec<SweepStats>,
}

pub struct RunOutput<S> {
    pub summary: PosteriorSummary,
    pub diagnostics: RunDiagnostics,
    pub sinks: Vec<S>,
}

/// Independent RNG stream for chain k: k long-jumps from the master seed.
pub fn chain_rng(seed: u64, chain: usize) -> Xoshiro256PlusPlus {
    let mut rng = Xoshiro256PlusPlus::seed_from_u64(seed);
    for _ in 0..chain {
        rng.long_jump();
    }
    rng
}

/// Run the configured chains in parallel and stream thinned post-burn-in
/// records into per-chain sinks.  Summaries pool every chain; diagnostics
/// report the per-chain inclusion probabilities and their spread.
pub fn run_chains<S, F>(
    config: &RunConfig,
    spec: &ModelSpec,
    data: &Dataset,
    make_sink: F,
) -> Result<RunOutput<S>, Error>
where
    S: SampleSink + Send,
    F: Fn(usize) -> Result<S, Error> + Sync,
{
    config.validate()?;
    if data.n == 0 {
        return Err(Error::NoObservations);
    }
    let ctx = EvalContext::new(spec, data)?;
    {
        let init = initial_state(spec, data);
        let violations = validate_state(&init, spec, data);
        assert!(violations.is_empty(), "invalid initial state: {violations:?}");
    }

    type ChainResult<S> = Result<(S, SummaryAccumulator, SweepStats), Error>;
    let mut results: Vec<ChainResult<S>> = Vec::with_capacity(config.chains);
    std::thread::scope(|scope| {
        let mut handles = Vec::with_capacity(config.chains);
        for chain in 0..config.chains {
            let ctx = &ctx;
            let make_sink = &make_sink;
            handles.push(scope.spawn(move || -> ChainResult<S> {
                let mut sink = make_sink(chain)?;
                let mut rng = chain_rng(config.seed, chain);
                let mut state = initial_state(spec, data);
                let mut acc = SummaryAccumulator::new(spec, data.n);
                let mut stats = SweepStats::default();
                for s in 0..config.iterations {
                    sweep(&mut state, ctx, &config.sweep, &mut rng, &mut stats)?;
                    if s >= config.burn_in && (s - config.burn_in).is_multiple_of(config.thin) {
                        let rec = SampleRecord::from_state(s, &state);
                        sink.write(&rec)?;
                        acc.add(&rec);
                    }
                }
                Ok((sink, acc, stats))
            }));
        }
        for h in handles {
            results.push(h.join().expect("chain thread panicked"));
        }
    });

    let mut sinks = Vec::with_capacity(config.chains);
    let mut accs = Vec::with_capacity(config.chains);
    let mut move_stats = Vec::with_capacity(config.chains);
    for res in results {
        let (sink, acc, stats) = res?;
        sinks.push(sink);
        accs.push(acc);
        move_stats.push(stats);
    }

    let per_chain_inclusion: Vec<Vec<Vec<f64>>> =
        accs.iter().map(|a| a.theory_inclusion()).collect();
    let mut spread: f64 = 0.0;
    for a in 0..accs.len() {
        for b in (a + 1)..accs.len() {
            for (row_a, row_b) in per_chain_inclusion[a].iter().zip(&per_chain_inclusion[b]) {
                for (pa, pb) in row_a.iter().zip(row_b) {
                    spread = spread.max((pa - pb).abs());
                }
            }
        }
    }

    let mut pooled = SummaryAccumulator::new(spec, data.n);
    for acc in &accs {
        pooled.merge(acc);
    }
    let samples_per_chain = accs.first().map_or(0, |a| a.n_samples);
    let summary = pooled.finalize(&data.groups)?;
    Ok(RunOutput {
        summary,
        diagnostics: RunDiagnostics {
            per_chain_inclusion,
            max_inclusion_spread: spread,
            samples_per_chain,
            move_stats,
        },
        sinks,
    })
}
