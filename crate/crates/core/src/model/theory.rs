use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Constants of the smoothness / convexity / gradient assumptions, plus the
/// round shape (`τ` local steps, `m` selected clients).
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct TheoryParams {
    /// Smoothness `L`.
    pub l: f64,
    /// Strong convexity `μ`.
    pub mu: f64,
    /// Bound `G` on the stochastic gradient norm.
    pub g: f64,
    /// Bound `σ` on the stochastic gradient standard deviation.
    pub sigma: f64,
    pub tau: usize,
    pub m: usize,
}

impl TheoryParams {
    pub fn validate(&self) -> Result<()> {
        let finite = [self.l, self.mu, self.g, self.sigma].iter().all(|v| v.is_finite());
        if !finite {
            return Err(Error::invalid("theory constants must be finite"));
        }
        if self.mu <= 0.0 {
            return Err(Error::invalid(format!("mu must be positive, got {}", self.mu)));
        }
        if self.l < self.mu {
            return Err(Error::invalid(format!("L = {} must be at least mu = {}", self.l, self.mu)));
        }
        if self.g < 0.0 || self.sigma < 0.0 {
            return Err(Error::invalid("G and sigma must be nonnegative"));
        }
        if self.tau == 0 || self.m == 0 {
            return Err(Error::invalid("tau and m must be at least 1"));
        }
        Ok(())
    }
}
