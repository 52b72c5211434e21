use super::LrSchedule;
use crate::error::{Error, Result};
use crate::model::{Objective, ParamVector};
use crate::rng::SimRng;

#[derive(Debug, Clone, PartialEq)]
pub struct LocalUpdate {
    pub model: ParamVector,
    /// Mean of the per-step mini-batch losses, the value an `rpow-d` client
    /// reports back.
    pub avg_loss: f64,
}

/// `τ` sequential SGD steps on client `k`, starting from `w_start`.
///
/// `first_iteration` is the global iteration index `t` of the first step and
/// feeds iteration-indexed schedules.
#[allow(clippy::too_many_arguments)]
pub fn local_sgd(
    task: &dyn Objective,
    k: usize,
    w_start: &ParamVector,
    tau: usize,
    lr: &LrSchedule,
    round: usize,
    first_iteration: usize,
    batch: usize,
    rng: &mut SimRng,
) -> Result<LocalUpdate> {
    w_start.check_dim(task.dim())?;
    if tau == 0 {
        return Err(Error::invalid("tau must be at least 1"));
    }
    let mut w = w_start.clone();
    let mut loss_sum = 0.0;
    for step in 0..tau {
        let eta = lr.rate(round, first_iteration + step);
        let (g, loss) = task.stochastic_step(k, &w, batch, rng)?;
        w.axpy(-eta, &g);
        loss_sum += loss;
        if !w.is_finite() || !loss.is_finite() {
            return Err(Error::Divergence { round, client: k });
        }
    }
    Ok(LocalUpdate {
        model: w,
        avg_loss: loss_sum / tau as f64,
    })
}
