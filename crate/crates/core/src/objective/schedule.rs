use serde::Serialize;

use crate::error::{Error, Result};

/// Logarithmic annealing `beta(t) = start * (end / start)^(t / steps)`, `t` in `0..=steps`.
#[derive(Clone, Copy, Debug, PartialEq, Serialize)]
pub struct BetaSchedule {
    pub beta_start: f64,
    pub beta_end: f64,
    pub steps: u64,
}

impl BetaSchedule {
    pub fn new(beta_start: f64, beta_end: f64, steps: u64) -> Result<Self> {
        if !(beta_start > 0.0 && beta_end > 0.0 && beta_start.is_finite() && beta_end.is_finite()) {
            return Err(Error::Config(format!(
                "beta_start and beta_end must be positive, got {beta_start} and {beta_end}"
            )));
        }
        if steps == 0 {
            return Err(Error::Config("beta schedule needs steps >= 1".into()));
        }
        Ok(Self {
            beta_start,
            beta_end,
            steps,
        })
    }

    /// Fixed `beta` for every step.
    pub fn constant(beta: f64) -> Result<Self> {
        Self::new(beta, beta, 1)
    }

    pub fn beta(&self, t: u64) -> f64 {
        let t = t.min(self.steps);
        if t == 0 {
            return self.beta_start;
        }
        if t == self.steps {
            return self.beta_end;
        }
        let frac = t as f64 / self.steps as f64;
        self.beta_start * (self.beta_end / self.beta_start).powf(frac)
    }

    /// `beta` in effect at optimizer step `step` of `train_steps`: the schedule
    /// index advances as `floor(step * steps / train_steps)`.
    pub fn beta_at(&self, step: u64, train_steps: u64) -> f64 {
        if train_steps == 0 {
            return self.beta_start;
        }
        let t = (step as u128 * self.steps as u128 / train_steps as u128) as u64;
        self.beta(t)
    }
}
