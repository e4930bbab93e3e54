//! Evaluation context: a spec/data pair with per-outcome present-observation
//! lists, shared by every kernel that needs likelihood sums.  Missing outcome
//! cells simply contribute nothing.

use crate::error::Error;
use crate::families::FamilyParams;
use crate::model::{mean_value, ChainState, Dataset, ModelSpec};

pub struct EvalContext<'a> {
    pub spec: &'a ModelSpec,
    pub data: &'a Dataset,
    /// Per outcome: (row, y) for each present observation.
    pub present: Vec<Vec<(usize, f64)>>,
}

impl<'a> EvalContext<'a> {
    pub fn new(spec: &'a ModelSpec, data: &'a Dataset) -> Result<Self, Error> {
        spec.validate()?;
        data.check_against(spec)?;
        let present = (0..spec.n_outcomes())
            .map(|r| {
                (0..data.n)
                    .filter(|&i| data.is_present(i, r))
                    .map(|i| (i, data.outcome(i, r)))
                    .collect()
            })
            .collect();
        Ok(EvalContext {
            spec,
            data,
            present,
        })
    }

    pub fn n(&self) -> usize {
        self.data.n
    }

    /// Outcome-r log-likelihood at the current state, summed over present
    /// observations.
    pub fn outcome_loglik(&self, state: &ChainState, r: usize) -> Result<f64, Error> {
        let fam = FamilyParams::for_outcome(self.spec, state, r);
        let mut acc = 0.0;
        for &(i, y) in &self.present[r] {
            acc += fam.loglik(y, mean_value(state, i, r))?;
        }
        Ok(acc)
    }

    /// Log-likelihood change for outcome r when every mean is shifted by
    /// `shift(i)`.  A support violation at the shifted point surfaces as an
    /// error so the caller can reject the proposal.
    pub fn loglik_delta(
        &self,
        state: &ChainState,
        r: usize,
        shift: impl Fn(usize) -> f64,
    ) -> Result<f64, Error> {
        let fam = FamilyParams::for_outcome(self.spec, state, r);
        let mut acc = 0.0;
        for &(i, y) in &self.present[r] {
            let mu = mean_value(state, i, r);
            acc += fam.loglik(y, mu + shift(i))? - fam.loglik(y, mu)?;
        }
        Ok(acc)
    }
}
