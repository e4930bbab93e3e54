//! Domain types shared by every kernel: the model specification, the panel
//! dataset, the chain state with its identification rules, and the posterior
//! summary container.
//!
//! The model: each outcome r gets a mean
//!
//! ```text
//! mu_ir = alpha_r + sum_t gamma_rt * I_it
//! ```
//!
//! where the latent theory index I_it follows the proxy linear model
//! `I_it = x_it' beta_t + eps`, `eps ~ N(0, 1/nu_t)`.  A theory loading
//! `gamma_rt` is either constrained to zero, anchored at one, or free real;
//! the anchor always sits at the smallest outcome index with a non-zero
//! loading.

use nalgebra::{DMatrix, DVector};
use serde::{Deserialize, Serialize};

use crate::error::Error;

/// Outcome sampling family.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub enum Family {
    /// Bernoulli outcome with logit link.
    Logistic,
    /// Asymmetric Laplace outcome targeting the `tau` quantile.
    Quantile { tau: f64 },
    /// Generalized extreme value outcome with global log-precision and shape.
    Gev,
}

/// One theory block: a named group of proxy columns and the fixed precision
/// scale the latent index starts from.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct TheorySpec {
    pub name: String,
    pub proxy_names: Vec<String>,
    pub nu: f64,
}

/// One outcome equation.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct OutcomeSpec {
    pub name: String,
    pub family: Family,
}

/// Declarative description of the full system. Outcome order is meaningful:
/// identification anchors prefer the smallest outcome index.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct ModelSpec {
    pub theories: Vec<TheorySpec>,
    pub outcomes: Vec<OutcomeSpec>,
}

impl ModelSpec {
    pub fn n_theories(&self) -> usize {
        self.theories.len()
    }

    pub fn n_outcomes(&self) -> usize {
        self.outcomes.len()
    }

    pub fn n_proxies(&self, t: usize) -> usize {
        self.theories[t].proxy_names.len()
    }

    /// Check the structural invariants: at least one theory and outcome,
    /// nonempty proxy groups, positive precisions, quantile levels in (0,1).
    pub fn validate(&self) -> Result<(), Error> {
        if self.theories.is_empty() {
            return Err(Error::InvalidSpec("need at least one theory".into()));
        }
        if self.outcomes.is_empty() {
            return Err(Error::InvalidSpec("need at least one outcome".into()));
        }
        for th in &self.theories {
            if th.proxy_names.is_empty() {
                return Err(Error::InvalidSpec(format!(
                    "theory {} has no proxies",
                    th.name
                )));
            }
            if th.proxy_names.len() > 64 {
                return Err(Error::InvalidSpec(format!(
                    "theory {} has more than 64 proxies",
                    th.name
                )));
            }
            if th.nu <= 0.0 || !th.nu.is_finite() {
                return Err(Error::InvalidSpec(format!(
                    "theory {} needs a positive finite nu, got {}",
                    th.name, th.nu
                )));
            }
        }
        for oc in &self.outcomes {
            if let Family::Quantile { tau } = oc.family {
                if !(tau > 0.0 && tau < 1.0) {
                    return Err(Error::InvalidSpec(format!(
                        "outcome {} needs tau in (0,1), got {}",
                        oc.name, tau
                    )));
                }
            }
        }
        Ok(())
    }
}

/// Panel data: per-theory proxy matrices, the outcome matrix with a
/// missingness mask, and optional observation labels.  Proxies are complete
/// by construction; only outcomes may be missing.
#[derive(Debug, Clone)]
pub struct Dataset {
    pub n: usize,
    /// One n x p_t matrix per theory.
    pub proxies: Vec<DMatrix<f64>>,
    /// n x R outcome matrix; entries are meaningful only where present.
    pub outcomes: DMatrix<f64>,
    /// Row-major n x R presence flags.
    present: Vec<bool>,
    /// Display label per observation (may be empty).
    pub labels: Vec<String>,
    /// Grouping key per observation for means-by-group summaries (may be empty).
    pub groups: Vec<String>,
    /// Sample correlation matrix of each theory's proxy columns.
    pub correlations: Vec<DMatrix<f64>>,
    /// Proxy columns flagged as constant (unit self-correlation, zero cross).
    pub constant_columns: Vec<Vec<usize>>,
}

impl Dataset {
    pub fn new(
        proxies: Vec<DMatrix<f64>>,
        outcomes: DMatrix<f64>,
        present: Vec<bool>,
        labels: Vec<String>,
        groups: Vec<String>,
    ) -> Result<Self, Error> {
        let n = outcomes.nrows();
        if n == 0 {
            return Err(Error::NoObservations);
        }
        let r = outcomes.ncols();
        if present.len() != n * r {
            return Err(Error::InvalidData(format!(
                "mask has {} entries for an {} x {} outcome matrix",
                present.len(),
                n,
                r
            )));
        }
        for (t, x) in proxies.iter().enumerate() {
            if x.nrows() != n {
                return Err(Error::InvalidData(format!(
                    "theory {} proxy matrix has {} rows, expected {}",
                    t,
                    x.nrows(),
                    n
                )));
            }
            if x.iter().any(|v| !v.is_finite()) {
                return Err(Error::InvalidData(format!(
                    "theory {} proxy matrix contains a non-finite value",
                    t
                )));
            }
        }
        if !labels.is_empty() && labels.len() != n {
            return Err(Error::InvalidData("label count does not match rows".into()));
        }
        if !groups.is_empty() && groups.len() != n {
            return Err(Error::InvalidData("group count does not match rows".into()));
        }
        let mut correlations = Vec::with_capacity(proxies.len());
        let mut constant_columns = Vec::with_capacity(proxies.len());
        for x in &proxies {
            let (c, flagged) = sample_correlation(x);
            correlations.push(c);
            constant_columns.push(flagged);
        }
        Ok(Dataset {
            n,
            proxies,
            outcomes,
            present,
            labels,
            groups,
            correlations,
            constant_columns,
        })
    }

    pub fn n_outcomes(&self) -> usize {
        self.outcomes.ncols()
    }

    pub fn is_present(&self, i: usize, r: usize) -> bool {
        self.present[i * self.outcomes.ncols() + r]
    }

    pub fn outcome(&self, i: usize, r: usize) -> f64 {
        self.outcomes[(i, r)]
    }

    pub fn present_count(&self, r: usize) -> usize {
        (0..self.n).filter(|&i| self.is_present(i, r)).count()
    }

    /// Shape and content conformance against a spec: matching counts, and
    /// logistic outcomes must be 0/1 wherever present.
    pub fn check_against(&self, spec: &ModelSpec) -> Result<(), Error> {
        if self.proxies.len() != spec.n_theories() {
            return Err(Error::InvalidData(format!(
                "{} proxy blocks for {} theories",
                self.proxies.len(),
                spec.n_theories()
            )));
        }
        for (t, x) in self.proxies.iter().enumerate() {
            if x.ncols() != spec.n_proxies(t) {
                return Err(Error::InvalidData(format!(
                    "theory {} has {} proxy columns, spec declares {}",
                    spec.theories[t].name,
                    x.ncols(),
                    spec.n_proxies(t)
                )));
            }
        }
        if self.n_outcomes() != spec.n_outcomes() {
            return Err(Error::InvalidData(format!(
                "{} outcome columns for {} outcome equations",
                self.n_outcomes(),
                spec.n_outcomes()
            )));
        }
        for (r, oc) in spec.outcomes.iter().enumerate() {
            if oc.family == Family::Logistic {
                for i in 0..self.n {
                    if self.is_present(i, r) {
                        let y = self.outcome(i, r);
                        if y != 0.0 && y != 1.0 {
                            return Err(Error::InvalidData(format!(
                                "logistic outcome {} has value {} at row {}",
                                oc.name, y, i
                            )));
                        }
                    }
                }
            }
        }
        Ok(())
    }
}

/// Sample correlation of the columns of `x`.  Constant columns get unit
/// self-correlation and zero cross-correlation and are reported back.
fn sample_correlation(x: &DMatrix<f64>) -> (DMatrix<f64>, Vec<usize>) {
    let n = x.nrows();
    let p = x.ncols();
    let means: Vec<f64> = (0..p).map(|j| x.column(j).sum() / n as f64).collect();
    let mut sds = vec![0.0; p];
    let mut flagged = Vec::new();
    for j in 0..p {
        let ss: f64 = x.column(j).iter().map(|v| (v - means[j]).powi(2)).sum();
        sds[j] = (ss / (n as f64 - 1.0).max(1.0)).sqrt();
        if sds[j] == 0.0 {
            flagged.push(j);
        }
    }
    let mut c = DMatrix::identity(p, p);
    for j in 0..p {
        for k in (j + 1)..p {
            if sds[j] == 0.0 || sds[k] == 0.0 {
                continue;
            }
            let cov: f64 = (0..n)
                .map(|i| (x[(i, j)] - means[j]) * (x[(i, k)] - means[k]))
                .sum::<f64>()
                / (n as f64 - 1.0).max(1.0);
            let rho = cov / (sds[j] * sds[k]);
            c[(j, k)] = rho;
            c[(k, j)] = rho;
        }
    }
    (c, flagged)
}

/// Constraint state of one theory loading gamma_rt.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub enum GammaStatus {
    /// Theory t does not enter outcome r.
    Zero,
    /// Identification anchor: the loading is pinned at one.
    One,
    /// Unconstrained real loading.
    Free(f64),
}

impl GammaStatus {
    pub fn value(&self) -> f64 {
        match self {
            GammaStatus::Zero => 0.0,
            GammaStatus::One => 1.0,
            GammaStatus::Free(v) => *v,
        }
    }

    pub fn is_included(&self) -> bool {
        !matches!(self, GammaStatus::Zero)
    }
}

/// One MCMC state.
///
/// `nus` starts at the spec values and is rescaled by anchor-rebalance moves;
/// the reported scale-free index `nu_t * I_it` is invariant under those
/// rescalings.
#[derive(Debug, Clone, PartialEq)]
pub struct ChainState {
    /// Current model per theory: sorted, nonempty proxy index subsets.
    pub models: Vec<Vec<usize>>,
    /// Full-length coefficient vectors, zero off-model.
    pub betas: Vec<DVector<f64>>,
    /// n x T latent index matrix.
    pub indices: DMatrix<f64>,
    /// Loading status per (outcome, theory).
    pub gamma: Vec<Vec<GammaStatus>>,
    /// Intercept per outcome.
    pub alphas: Vec<f64>,
    /// Log-precision per outcome (quantile and GEV families).
    pub kappas: Vec<f64>,
    /// GEV shape per outcome.
    pub xis: Vec<f64>,
    /// Current precision scale per theory.
    pub nus: Vec<f64>,
}

impl ChainState {
    pub fn gamma(&self, r: usize, t: usize) -> GammaStatus {
        self.gamma[r][t]
    }

    /// Whether any outcome currently loads on theory t.
    pub fn theory_active(&self, t: usize) -> bool {
        self.gamma.iter().any(|row| row[t].is_included())
    }

    /// Smallest outcome index with a non-zero loading on theory t.
    pub fn anchor_of(&self, t: usize) -> Option<usize> {
        self.gamma.iter().position(|row| row[t].is_included())
    }

    /// Outcome indices with non-zero loadings on theory t.
    pub fn included_outcomes(&self, t: usize) -> Vec<usize> {
        (0..self.gamma.len())
            .filter(|&r| self.gamma[r][t].is_included())
            .collect()
    }

    /// Fitted proxy mean x_it' beta_t.
    pub fn index_mean(&self, data: &Dataset, t: usize, i: usize) -> f64 {
        self.proxy_row_dot(data, t, i)
    }

    fn proxy_row_dot(&self, data: &Dataset, t: usize, i: usize) -> f64 {
        let x = &data.proxies[t];
        let beta = &self.betas[t];
        let mut acc = 0.0;
        for &j in &self.models[t] {
            acc += x[(i, j)] * beta[j];
        }
        acc
    }
}

/// Mean-model evaluation mu_ir = alpha_r + sum over non-zero loadings.
pub fn mean_value(state: &ChainState, i: usize, r: usize) -> f64 {
    let mut mu = state.alphas[r];
    for (t, status) in state.gamma[r].iter().enumerate() {
        match status {
            GammaStatus::Zero => {}
            GammaStatus::One => mu += state.indices[(i, t)],
            GammaStatus::Free(v) => mu += v * state.indices[(i, t)],
        }
    }
    mu
}

/// Scale-free index matrix `nu_t * I_it` (n x T).
pub fn scale_free_indices(state: &ChainState) -> DMatrix<f64> {
    let n = state.indices.nrows();
    let t_count = state.indices.ncols();
    DMatrix::from_fn(n, t_count, |i, t| state.nus[t] * state.indices[(i, t)])
}

/// One violated state invariant.  Violations are data, not exceptions.
#[derive(Debug, Clone, PartialEq)]
pub enum StateViolation {
    EmptyModel { t: usize },
    OffModelNonzeroBeta { t: usize, j: usize },
    MissingAnchor { t: usize },
    AnchorNotSmallest { t: usize, r: usize },
    InactiveIndexNonzero { t: usize, i: usize },
    NonPositiveNu { t: usize },
    GevSupportViolated { r: usize, i: usize },
    DimensionMismatch(String),
}

impl std::fmt::Display for StateViolation {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        match self {
            StateViolation::EmptyModel { t } => write!(f, "empty model for theory {t}"),
            StateViolation::OffModelNonzeroBeta { t, j } => {
                write!(f, "theory {t} beta[{j}] is nonzero off-model")
            }
            StateViolation::MissingAnchor { t } => {
                write!(f, "missing identification anchor for theory {t}")
            }
            StateViolation::AnchorNotSmallest { t, r } => {
                write!(f, "theory {t} anchor is not the smallest inclusion (outcome {r})")
            }
            StateViolation::InactiveIndexNonzero { t, i } => {
                write!(f, "inactive theory {t} has nonzero index at row {i}")
            }
            StateViolation::NonPositiveNu { t } => write!(f, "theory {t} has non-positive nu"),
            StateViolation::GevSupportViolated { r, i } => {
                write!(f, "GEV outcome {r} outside support at row {i}")
            }
            StateViolation::DimensionMismatch(msg) => write!(f, "dimension mismatch: {msg}"),
        }
    }
}

/// Check every state invariant; returns all violations found.
pub fn validate_state(state: &ChainState, spec: &ModelSpec, data: &Dataset) -> Vec<StateViolation> {
    let mut out = Vec::new();
    let t_count = spec.n_theories();
    let r_count = spec.n_outcomes();
    if state.models.len() != t_count
        || state.betas.len() != t_count
        || state.nus.len() != t_count
        || state.indices.ncols() != t_count
        || state.indices.nrows() != data.n
        || state.gamma.len() != r_count
        || state.gamma.iter().any(|row| row.len() != t_count)
        || state.alphas.len() != r_count
        || state.kappas.len() != r_count
        || state.xis.len() != r_count
    {
        out.push(StateViolation::DimensionMismatch(
            "state shape does not match spec/data".into(),
        ));
        return out;
    }
    for t in 0..t_count {
        if state.models[t].is_empty() {
            out.push(StateViolation::EmptyModel { t });
        }
        if state.nus[t] <= 0.0 || state.nus[t].is_nan() {
            out.push(StateViolation::NonPositiveNu { t });
        }
        for j in 0..spec.n_proxies(t) {
            if !state.models[t].contains(&j) && state.betas[t][j] != 0.0 {
                out.push(StateViolation::OffModelNonzeroBeta { t, j });
            }
        }
        let included: Vec<usize> = (0..r_count)
            .filter(|&r| state.gamma[r][t].is_included())
            .collect();
        if included.is_empty() {
            for i in 0..data.n {
                if state.indices[(i, t)] != 0.0 {
                    out.push(StateViolation::InactiveIndexNonzero { t, i });
                    break;
                }
            }
        } else {
            let smallest = included[0];
            if state.gamma[smallest][t] != GammaStatus::One {
                out.push(StateViolation::MissingAnchor { t });
            }
            for &r in &included[1..] {
                if state.gamma[r][t] == GammaStatus::One {
                    out.push(StateViolation::AnchorNotSmallest { t, r });
                }
            }
        }
    }
    for (r, oc) in spec.outcomes.iter().enumerate() {
        if oc.family == Family::Gev {
            for i in 0..data.n {
                if data.is_present(i, r) {
                    let mu = mean_value(state, i, r);
                    let h = 1.0
                        + state.xis[r] * state.kappas[r].exp() * (data.outcome(i, r) - mu);
                    if h <= 0.0 || h.is_nan() {
                        out.push(StateViolation::GevSupportViolated { r, i });
                        break;
                    }
                }
            }
        }
    }
    out
}

/// Posterior summary across stored samples.
///
/// Matrices indexed `[outcome][theory]`; conditional means are `None` when an
/// entry was never included.  Index summaries are on the scale-free
/// `nu_t * I_it`.
#[derive(Debug, Clone)]
pub struct PosteriorSummary {
    pub n_samples: usize,
    pub theory_inclusion: Vec<Vec<f64>>,
    pub gamma_conditional_mean: Vec<Vec<Option<f64>>>,
    /// Per theory, per proxy: inclusion probability.
    pub proxy_inclusion: Vec<Vec<f64>>,
    /// Per theory, per proxy: mean coefficient conditional on inclusion.
    pub proxy_conditional_mean: Vec<Vec<Option<f64>>>,
    /// n x T posterior means of the scale-free indices.
    pub index_mean: DMatrix<f64>,
    /// T x T correlation pooled over all samples and observations.
    pub index_correlation: DMatrix<f64>,
    /// Group key -> per-theory mean of posterior-mean indices, sorted by key.
    pub means_by_group: Vec<(String, Vec<f64>)>,
}

#[cfg(test)]
mod tests {
    use super::*;

    fn tiny_spec() -> ModelSpec {
        ModelSpec {
            theories: vec![
                TheorySpec {
                    name: "t1".into(),
                    proxy_names: vec!["a".into(), "b".into()],
                    nu: 1.0,
                },
                TheorySpec {
                    name: "t2".into(),
                    proxy_names: vec!["c".into()],
                    nu: 2.0,
                },
            ],
            outcomes: vec![
                OutcomeSpec {
                    name: "y1".into(),
                    family: Family::Logistic,
                },
                OutcomeSpec {
                    name: "y2".into(),
                    family: Family::Quantile { tau: 0.9 },
                },
            ],
        }
    }

    fn tiny_data() -> Dataset {
        let x1 = DMatrix::from_row_slice(3, 2, &[0.1, 0.5, -0.3, 0.2, 0.7, -0.1]);
        let x2 = DMatrix::from_row_slice(3, 1, &[1.0, -1.0, 0.5]);
        let y = DMatrix::from_row_slice(3, 2, &[1.0, 0.4, 0.0, f64::NAN, 1.0, 2.0]);
        let present = vec![true, true, true, false, true, true];
        Dataset::new(vec![x1, x2], y, present, vec![], vec![]).unwrap()
    }

    fn base_state() -> ChainState {
        ChainState {
            models: vec![vec![0, 1], vec![0]],
            betas: vec![DVector::from_vec(vec![0.2, -0.1]), DVector::from_vec(vec![0.3])],
            indices: DMatrix::zeros(3, 2),
            gamma: vec![
                vec![GammaStatus::One, GammaStatus::Zero],
                vec![GammaStatus::Free(-0.5), GammaStatus::One],
            ],
            alphas: vec![0.0, 0.0],
            kappas: vec![0.0, 0.0],
            xis: vec![0.0, 0.0],
            nus: vec![1.0, 2.0],
        }
    }

    #[test]
    fn mean_value_empty_sum_is_alpha() {
        let mut state = base_state();
        state.gamma = vec![
            vec![GammaStatus::Zero, GammaStatus::Zero],
            vec![GammaStatus::Zero, GammaStatus::Zero],
        ];
        assert_eq!(mean_value(&state, 0, 0), 0.0);
        state.alphas[0] = 1.25;
        assert_eq!(mean_value(&state, 0, 0), 1.25);
    }

    #[test]
    fn mean_value_direct_evaluation() {
        let mut state = base_state();
        state.alphas[0] = 0.5;
        state.gamma[0] = vec![GammaStatus::One, GammaStatus::Free(-0.5)];
        state.indices[(1, 0)] = 2.0;
        state.indices[(1, 1)] = 4.0;
        assert!((mean_value(&state, 1, 0) - 0.5).abs() < 1e-12);
    }

    #[test]
    fn mean_value_zero_index_drops_free_loading() {
        let mut state = base_state();
        state.alphas[0] = 1.0;
        state.gamma[0] = vec![GammaStatus::Free(3.0), GammaStatus::Zero];
        assert_eq!(mean_value(&state, 2, 0), 1.0);
    }

    #[test]
    fn mean_value_linear_in_index() {
        let mut state = base_state();
        state.gamma[1] = vec![GammaStatus::One, GammaStatus::Free(1.7)];
        let base = mean_value(&state, 0, 1);
        state.indices[(0, 1)] += 2.0;
        let bumped = mean_value(&state, 0, 1);
        assert!((bumped - base - 1.7 * 2.0).abs() < 1e-12);
    }

    #[test]
    fn scale_free_matches_nu_scaling() {
        let mut state = base_state();
        state.indices[(0, 0)] = 3.0;
        state.indices[(0, 1)] = 3.0;
        let sf = scale_free_indices(&state);
        assert_eq!(sf[(0, 0)], 3.0);
        assert_eq!(sf[(0, 1)], 6.0);
        // dividing back by nu recovers the raw index
        assert!((sf[(0, 1)] / state.nus[1] - state.indices[(0, 1)]).abs() < 1e-15);
        // a fully-off theory keeps a zero column
        assert!(sf.column(0).iter().skip(1).all(|v| *v == 0.0));
    }

    #[test]
    fn validate_flags_empty_model() {
        let spec = tiny_spec();
        let data = tiny_data();
        let mut state = base_state();
        state.models[0].clear();
        let v = validate_state(&state, &spec, &data);
        assert!(v.contains(&StateViolation::EmptyModel { t: 0 }));
    }

    #[test]
    fn validate_flags_missing_anchor() {
        let spec = tiny_spec();
        let data = tiny_data();
        let mut state = base_state();
        state.gamma[0][0] = GammaStatus::Free(2.0);
        state.gamma[1][0] = GammaStatus::Free(1.0);
        let v = validate_state(&state, &spec, &data);
        assert!(v.contains(&StateViolation::MissingAnchor { t: 0 }));
    }

    #[test]
    fn validate_ok_on_consistent_state() {
        let spec = tiny_spec();
        let data = tiny_data();
        let state = base_state();
        assert!(validate_state(&state, &spec, &data).is_empty());
    }

    #[test]
    fn validate_flags_inactive_nonzero_index() {
        let spec = tiny_spec();
        let data = tiny_data();
        let mut state = base_state();
        state.gamma[0][0] = GammaStatus::Zero;
        state.gamma[1][0] = GammaStatus::Zero;
        state.indices[(2, 0)] = 0.4;
        let v = validate_state(&state, &spec, &data);
        assert!(v.contains(&StateViolation::InactiveIndexNonzero { t: 0, i: 2 }));
    }

    #[test]
    fn constant_proxy_columns_are_flagged() {
        let x = DMatrix::from_row_slice(4, 2, &[1.0, 0.3, 1.0, -0.2, 1.0, 0.9, 1.0, 0.1]);
        let y = DMatrix::from_element(4, 1, 0.0);
        let data = Dataset::new(vec![x], y, vec![true; 4], vec![], vec![]).unwrap();
        assert_eq!(data.constant_columns[0], vec![0]);
        assert_eq!(data.correlations[0][(0, 1)], 0.0);
        assert_eq!(data.correlations[0][(0, 0)], 1.0);
    }

    #[test]
    fn empty_dataset_is_rejected() {
        let err = Dataset::new(
            vec![DMatrix::zeros(0, 1)],
            DMatrix::zeros(0, 1),
            vec![],
            vec![],
            vec![],
        )
        .unwrap_err();
        assert_eq!(err, Error::NoObservations);
    }
}
