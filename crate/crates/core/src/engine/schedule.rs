use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Learning-rate schedules.
///
/// `Decaying` is indexed by the global local-iteration counter `t`;
/// `StepDecay` is indexed by communication round.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "schedule", rename_all = "snake_case")]
pub enum LrSchedule {
    Fixed { eta: f64 },
    /// `η_t = beta / (t + gamma)`.
    Decaying { beta: f64, gamma: f64 },
    /// `eta` halved once at each listed round.
    StepDecay { eta: f64, halve_at: Vec<usize> },
}

impl LrSchedule {
    /// `η_t = 1 / (μ (t + γ))` with `γ = 4L/μ`.
    pub fn strongly_convex(l: f64, mu: f64) -> Self {
        LrSchedule::Decaying {
            beta: 1.0 / mu,
            gamma: 4.0 * l / mu,
        }
    }

    pub fn validate(&self) -> Result<()> {
        let ok = match self {
            LrSchedule::Fixed { eta } | LrSchedule::StepDecay { eta, .. } => eta.is_finite() && *eta > 0.0,
            LrSchedule::Decaying { beta, gamma } => {
                beta.is_finite() && gamma.is_finite() && *beta > 0.0 && *gamma > 0.0
            }
        };
        if ok {
            Ok(())
        } else {
            Err(Error::invalid(format!("invalid learning-rate schedule {self:?}")))
        }
    }

    pub fn rate(&self, round: usize, iteration: usize) -> f64 {
        match self {
            LrSchedule::Fixed { eta } => *eta,
            LrSchedule::Decaying { beta, gamma } => beta / (iteration as f64 + gamma),
            LrSchedule::StepDecay { eta, halve_at } => {
                let halvings = halve_at.iter().filter(|&&r| r <= round).count();
                eta * 0.5f64.powi(halvings as i32)
            }
        }
    }
}
