use crate::error::{Error, Result};
use crate::model::{ParamVector, TheoryParams, Task};

/// Relative slack added to the largest gradient norm seen on a trajectory.
pub const G_SLACK: f64 = 0.1;

/// Theory constants of a quadratic task: `L = max h_k`, `μ = min h_k`,
/// `σ = 0`, and `G` from the largest local gradient norm at the given
/// global models, inflated by [`G_SLACK`].
///
/// Quadratic gradients are unbounded globally, so `G` is only meaningful
/// on the region the trajectory visits. Local gradient steps stay on the
/// segment between the start point and `w_k*`, where the norm is at most
/// its value at the start, so the maximum over the global models bounds
/// every local gradient as well.
pub fn estimate_theory_params(task: &Task, trajectory: &[ParamVector], tau: usize, m: usize) -> Result<TheoryParams> {
    let q = task
        .as_quadratic()
        .ok_or_else(|| Error::Unsupported(format!("theory constants for the {} task", task.kind())))?;
    if trajectory.is_empty() {
        return Err(Error::invalid("trajectory is empty"));
    }
    let h = q.curvatures();
    let l = h.iter().copied().fold(f64::NEG_INFINITY, f64::max);
    let mu = h.iter().copied().fold(f64::INFINITY, f64::min);
    let optima: Vec<ParamVector> = (0..q.num_clients()).map(|k| q.local_optimum(k)).collect();
    let mut g: f64 = 0.0;
    for w in trajectory {
        w.check_dim(q.dim())?;
        for (hk, wk) in h.iter().zip(&optima) {
            g = g.max(hk * w.distance_sq(wk).sqrt());
        }
    }
    let params = TheoryParams {
        l,
        mu,
        g: g * (1.0 + G_SLACK),
        sigma: 0.0,
        tau,
        m,
    };
    params.validate()?;
    Ok(params)
}
