//! Latent theory-index model averaging: non-Gaussian outcome equations driven
//! by model-averaged proxy regressions, sampled by a hybrid MCMC (Gibbs,
//! conditional Bayes factors, Laplace-expansion Metropolis-Hastings, and
//! reversible jump).
//!
//! Module map:
//! - [`model`]: domain types, state validity, the mean model;
//! - [`families`]: logistic / quantile / GEV likelihoods and derivative bundles;
//! - [`latent`]: ridge posteriors, index marginals, model moves, index updates;
//! - [`kernels`]: Laplace-MH and the reversible-jump moves;
//! - [`engine`]: sweeps, multi-chain runs, summaries.

pub mod context;
pub mod engine;
pub mod error;
pub mod families;
pub mod kernels;
pub mod latent;
pub mod model;

pub use context::EvalContext;
pub use engine::{run_chains, summarize, RunConfig, SampleRecord, SampleSink, VecSink};
pub use error::Error;
pub use model::{
    mean_value, scale_free_indices, validate_state, ChainState, Dataset, Family, GammaStatus,
    ModelSpec, OutcomeSpec, PosteriorSummary, TheorySpec,
};
