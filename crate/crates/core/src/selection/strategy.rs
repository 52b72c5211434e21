use log::warn;

use super::sampling::{sample_with_replacement, sample_without_replacement, top_m};
use super::{SelectionConfig, SelectionKind};
use crate::error::{Error, Result};
use crate::model::{DataFractions, Objective, ParamVector};
use crate::rng::SimRng;

/// Returns the selected clients sorted by id. With replacement the same id
/// may appear several times.
pub fn select_rand(
    p: &DataFractions,
    m: usize,
    replacement: bool,
    pool: &[usize],
    rng: &mut SimRng,
) -> Result<Vec<usize>> {
    let mut s = if replacement {
        sample_with_replacement(p, pool, m, rng)?
    } else {
        sample_without_replacement(p, pool, m, rng)?
    };
    s.sort_unstable();
    Ok(s)
}

fn candidate_count(config: &SelectionConfig, pool: &[usize]) -> Result<usize> {
    if pool.is_empty() {
        return Err(Error::EmptyPool);
    }
    if config.m > pool.len() {
        return Err(Error::PoolTooSmall {
            requested: config.m,
            available: pool.len(),
        });
    }
    if config.d > pool.len() {
        warn!(
            "{}: only {} clients available, clamping d from {}",
            config.label(),
            pool.len(),
            config.d
        );
        return Ok(pool.len());
    }
    Ok(config.d.max(config.m))
}

fn candidates(p: &DataFractions, config: &SelectionConfig, pool: &[usize], rng: &mut SimRng) -> Result<Vec<usize>> {
    let d = candidate_count(config, pool)?;
    sample_without_replacement(p, pool, d, rng)
}

fn finish(mut s: Vec<usize>) -> Vec<usize> {
    s.sort_unstable();
    s
}

/// Power-of-choice: keep the `m` candidates with the largest exact local loss
/// at `w`.
pub fn select_pow_d(
    task: &dyn Objective,
    w: &ParamVector,
    config: &SelectionConfig,
    pool: &[usize],
    rng: &mut SimRng,
) -> Result<Vec<usize>> {
    let a = candidates(task.fractions(), config, pool, rng)?;
    let scores = a.iter().map(|&k| task.local_loss(k, w)).collect::<Result<Vec<_>>>()?;
    Ok(finish(top_m(&a, &scores, config.m, rng)?))
}

/// Computation-efficient variant: each candidate scores the mean loss over
/// one uniformly drawn mini-batch of `estimate_batch` samples.
pub fn select_cpow_d(
    task: &dyn Objective,
    w: &ParamVector,
    config: &SelectionConfig,
    pool: &[usize],
    rng: &mut SimRng,
) -> Result<Vec<usize>> {
    let a = candidates(task.fractions(), config, pool, rng)?;
    let scores = a
        .iter()
        .map(|&k| task.estimated_loss(k, w, config.estimate_batch, rng))
        .collect::<Result<Vec<_>>>()?;
    Ok(finish(top_m(&a, &scores, config.m, rng)?))
}

/// Communication-efficient variant: candidates are ranked by the loss they
/// last reported, `+∞` for clients never selected.
pub fn select_rpow_d(
    state: &SelectionState,
    p: &DataFractions,
    config: &SelectionConfig,
    pool: &[usize],
    rng: &mut SimRng,
) -> Result<Vec<usize>> {
    let a = candidates(p, config, pool, rng)?;
    let scores: Vec<f64> = a.iter().map(|&k| state.last_reported(k)).collect();
    Ok(finish(top_m(&a, &scores, config.m, rng)?))
}

/// Server-side bookkeeping for `rpow-d`.
#[derive(Debug, Clone, PartialEq)]
pub struct SelectionState {
    last_reported: Vec<f64>,
}

impl SelectionState {
    pub fn new(clients: usize) -> Self {
        SelectionState {
            last_reported: vec![f64::INFINITY; clients],
        }
    }

    pub fn last_reported(&self, k: usize) -> f64 {
        self.last_reported[k]
    }

    pub fn losses(&self) -> &[f64] {
        &self.last_reported
    }

    /// Overwrites client `k`'s entry; the latest report wins.
    pub fn report(&mut self, k: usize, accumulated_avg_loss: f64) {
        self.last_reported[k] = accumulated_avg_loss;
    }
}

/// A configured strategy together with its state.
#[derive(Debug, Clone)]
pub struct Selector {
    config: SelectionConfig,
    state: SelectionState,
}

impl Selector {
    pub fn new(config: SelectionConfig, clients: usize) -> Result<Self> {
        config.validate(clients)?;
        Ok(Selector {
            config,
            state: SelectionState::new(clients),
        })
    }

    pub fn config(&self) -> &SelectionConfig {
        &self.config
    }

    pub fn state(&self) -> &SelectionState {
        &self.state
    }

    pub fn select(
        &self,
        task: &dyn Objective,
        w: &ParamVector,
        pool: &[usize],
        rng: &mut SimRng,
    ) -> Result<Vec<usize>> {
        let c = &self.config;
        match c.kind {
            SelectionKind::Rand => select_rand(task.fractions(), c.m, c.replacement, pool, rng),
            SelectionKind::PowD => select_pow_d(task, w, c, pool, rng),
            SelectionKind::CpowD => select_cpow_d(task, w, c, pool, rng),
            SelectionKind::RpowD => select_rpow_d(&self.state, task.fractions(), c, pool, rng),
        }
    }

    pub fn report_round_loss(&mut self, k: usize, accumulated_avg_loss: f64) {
        self.state.report(k, accumulated_avg_loss);
    }
}
