//! JSON model specification: theory groups with proxy column names, outcome
//! equations with family tags, and optional run defaults.

use std::collections::HashSet;
use std::path::Path;

use serde::{Deserialize, Serialize};

use bta_core::engine::RunConfig;
use bta_core::model::{Family, ModelSpec, OutcomeSpec, TheorySpec};

use crate::error::{data_err, CliError};

fn default_nu() -> f64 {
    1.0
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct TheoryEntry {
    pub name: String,
    pub proxies: Vec<String>,
    #[serde(default = "default_nu")]
    pub nu: f64,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct OutcomeEntry {
    pub name: String,
    /// Data column; defaults to the outcome name.
    #[serde(default)]
    pub column: Option<String>,
    pub family: String,
    #[serde(default)]
    pub tau: Option<f64>,
}

impl OutcomeEntry {
    pub fn column_name(&self) -> &str {
        self.column.as_deref().unwrap_or(&self.name)
    }
}

/// Run defaults carried in the spec file; command-line flags override them.
#[derive(Debug, Clone, Default, Serialize, Deserialize)]
pub struct RunDefaults {
    pub iterations: Option<usize>,
    pub burn_in: Option<usize>,
    pub thin: Option<usize>,
    pub chains: Option<usize>,
    pub seed: Option<u64>,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct SpecFile {
    pub theories: Vec<TheoryEntry>,
    pub outcomes: Vec<OutcomeEntry>,
    #[serde(default)]
    pub run: Option<RunDefaults>,
}

impl SpecFile {
    pub fn read(path: &Path) -> Result<SpecFile, CliError> {
        let text = std::fs::read_to_string(path)
            .map_err(|e| data_err(format!("cannot read spec file {}: {e}", path.display())))?;
        serde_json::from_str(&text)
            .map_err(|e| data_err(format!("cannot parse spec file {}: {e}", path.display())))
    }

    /// Build the in-memory model spec, checking name uniqueness and family
    /// parameters.
    pub fn to_model_spec(&self) -> Result<ModelSpec, CliError> {
        let mut seen = HashSet::new();
        for th in &self.theories {
            if !seen.insert(th.name.clone()) {
                return Err(data_err(format!("duplicate theory name {}", th.name)));
            }
            let mut proxy_seen = HashSet::new();
            for p in &th.proxies {
                if !proxy_seen.insert(p.clone()) {
                    return Err(data_err(format!(
                        "duplicate proxy {} in theory {}",
                        p, th.name
                    )));
                }
            }
        }
        let mut outcome_seen = HashSet::new();
        for oc in &self.outcomes {
            if !outcome_seen.insert(oc.name.clone()) {
                return Err(data_err(format!("duplicate outcome name {}", oc.name)));
            }
        }
        let theories = self
            .theories
            .iter()
            .map(|th| TheorySpec {
                name: th.name.clone(),
                proxy_names: th.proxies.clone(),
                nu: th.nu,
            })
            .collect();
        let outcomes = self
            .outcomes
            .iter()
            .map(|oc| {
                let family = match oc.family.as_str() {
                    "logistic" => Family::Logistic,
                    "quantile" => {
                        let tau = oc.tau.ok_or_else(|| {
                            data_err(format!("outcome {} needs tau for the quantile family", oc.name))
                        })?;
                        Family::Quantile { tau }
                    }
                    "gev" => Family::Gev,
                    other => {
                        return Err(data_err(format!(
                            "outcome {}: unknown family {other} (expected logistic, quantile, or gev)",
                            oc.name
                        )))
                    }
                };
                Ok(OutcomeSpec {
                    name: oc.name.clone(),
                    family,
                })
            })
            .collect::<Result<Vec<_>, CliError>>()?;
        let spec = ModelSpec { theories, outcomes };
        spec.validate().map_err(CliError::from)?;
        Ok(spec)
    }

    /// Resolve run configuration: desk defaults, overlaid with the spec
    /// file's run block, overlaid with explicit command-line values.
    pub fn run_config(&self, overrides: &RunDefaults) -> RunConfig {
        let mut config = RunConfig::desk_default();
        for source in [self.run.as_ref().cloned().unwrap_or_default(), overrides.clone()] {
            if let Some(v) = source.iterations {
                config.iterations = v;
            }
            if let Some(v) = source.burn_in {
                config.burn_in = v;
            }
            if let Some(v) = source.thin {
                config.thin = v;
            }
            if let Some(v) = source.chains {
                config.chains = v;
            }
            if let Some(v) = source.seed {
                config.seed = v;
            }
        }
        config
    }
}
