use rand::Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use super::rho::{excess_losses, selection_marginals, DENOMINATOR_FLOOR};
use super::{ClientOptima, SkewStrategy};
use crate::error::{Error, Result};
use crate::model::{Objective, ParamVector};
use crate::rng::{stream, Domain};

/// Which `(w, w′)` pairs the minimum runs over.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize, Default)]
#[serde(rename_all = "snake_case")]
pub enum GridPairing {
    /// `w′ = w` for every grid point: the skew between a selection point
    /// and the models reached from it within one round.
    #[default]
    Diagonal,
    /// The i-th `w` with the i-th independently drawn `w′`; `w*` and each
    /// `w_k*` are paired with themselves.
    Paired,
    /// Every `w` with every `w′`.
    Product,
}

/// How the `(w, w′)` sample sets are built.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct GridSpec {
    /// Uniform box samples drawn for each of the `w` and `w′` sets, on top
    /// of `w*` and every `w_k*`.
    pub samples_per_role: usize,
    /// Box half-width as a multiple of `max_k ‖w_k* − w*‖`.
    pub half_width_factor: f64,
    /// Half-width used when every local optimum coincides with `w*`.
    pub min_half_width: f64,
    /// Selections simulated per `w`.
    pub draws: usize,
    pub seed: u64,
    #[serde(default)]
    pub pairing: GridPairing,
}

impl Default for GridSpec {
    fn default() -> Self {
        GridSpec {
            samples_per_role: 1000,
            half_width_factor: 3.0,
            min_half_width: 1.0,
            draws: 10_000,
            seed: 0,
            pairing: GridPairing::Diagonal,
        }
    }
}

impl GridSpec {
    fn validate(&self) -> Result<()> {
        if self.draws == 0 {
            return Err(Error::invalid("at least one draw required"));
        }
        if !(self.half_width_factor.is_finite() && self.half_width_factor >= 0.0) {
            return Err(Error::invalid("half_width_factor must be finite and nonnegative"));
        }
        if !(self.min_half_width.is_finite() && self.min_half_width >= 0.0) {
            return Err(Error::invalid("min_half_width must be finite and nonnegative"));
        }
        Ok(())
    }

    /// `w*`, every `w_k*`, then `samples_per_role` uniform points of the box.
    fn points(&self, optima: &ClientOptima, half_width: f64, role: u64) -> Vec<ParamVector> {
        let mut rng = stream(self.seed, Domain::Grid, &[role]);
        let center = &optima.global;
        let mut pts = Vec::with_capacity(1 + optima.local.len() + self.samples_per_role);
        pts.push(center.clone());
        pts.extend(optima.local.iter().cloned());
        for _ in 0..self.samples_per_role {
            let v = center
                .iter()
                .map(|c| c + half_width * (2.0 * rng.random::<f64>() - 1.0))
                .collect();
            pts.push(ParamVector::from_vec_unchecked(v));
        }
        pts
    }
}

/// Grid extrema of the selection skew.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SkewEstimate {
    pub strategy: String,
    /// Minimum of `ρ(w, w′)` over the grid pairs; at least the true infimum.
    pub rho_bar: f64,
    /// Maximum of `ρ(w, w*)` over the `w` grid.
    pub rho_tilde: f64,
    /// Local-global objective gap `Γ`.
    pub gamma: f64,
    pub grid: GridSpec,
    /// Half-width actually used for the sampling box.
    pub half_width: f64,
    pub w_points: usize,
    pub w_prime_points: usize,
    /// `w′` points dropped for a vanishing denominator.
    pub skipped: usize,
}

/// Estimates `ρ̄` and `ρ̃` for `strategy` on a box grid around `w*`.
///
/// Selections are simulated once per `w`; every `ρ(w, w′)` is then the
/// simulated mean of the aggregated excess loss at `w′`. If `Γ` vanishes
/// the skew at `w*` is undefined and `ρ̃` falls back to the largest value
/// over all grid pairs.
pub fn estimate_rho_bounds(
    task: &dyn Objective,
    optima: &ClientOptima,
    strategy: SkewStrategy,
    grid: &GridSpec,
) -> Result<SkewEstimate> {
    grid.validate()?;
    if optima.local_losses.len() != task.num_clients() {
        return Err(Error::invalid("optima do not belong to this task"));
    }
    optima.global.check_dim(task.dim())?;
    let spread = optima.spread();
    let half_width = if spread > 0.0 {
        grid.half_width_factor * spread
    } else {
        grid.min_half_width
    };
    let ws = grid.points(optima, half_width, 0);
    let w_primes = match grid.pairing {
        GridPairing::Diagonal => ws.clone(),
        GridPairing::Paired | GridPairing::Product => grid.points(optima, half_width, 1),
    };

    let marginals: Vec<Vec<f64>> = ws
        .par_iter()
        .enumerate()
        .map(|(i, w)| {
            let mut rng = stream(grid.seed, Domain::Skew, &[i as u64]);
            selection_marginals(task, strategy, w, grid.draws, &mut rng)
        })
        .collect::<Result<_>>()?;

    let p = task.fractions().as_slice();
    // (excess losses, denominator) for each usable w′.
    let targets: Vec<Option<(Vec<f64>, f64)>> = w_primes
        .par_iter()
        .map(|wp| {
            let a = excess_losses(task, optima, wp)?;
            let den: f64 = p.iter().zip(&a).map(|(pk, ak)| pk * ak).sum();
            Ok((den >= DENOMINATOR_FLOOR).then_some((a, den)))
        })
        .collect::<Result<_>>()?;
    let skipped = targets.iter().filter(|t| t.is_none()).count();
    let usable: Vec<&(Vec<f64>, f64)> = targets.iter().flatten().collect();
    if usable.is_empty() {
        return Err(Error::DegenerateGrid(w_primes.len()));
    }

    let rho = |s: &[f64], (a, den): &(Vec<f64>, f64)| -> f64 {
        s.iter().zip(a).map(|(sk, ak)| sk * ak).sum::<f64>() / den
    };
    let fold_pairs = |pairs: Vec<(f64, f64)>| {
        pairs
            .into_iter()
            .fold((f64::INFINITY, f64::NEG_INFINITY), |x, y| (x.0.min(y.0), x.1.max(y.1)))
    };
    let (rho_bar, pair_max) = match grid.pairing {
        GridPairing::Diagonal | GridPairing::Paired => fold_pairs(
            marginals
                .iter()
                .zip(&targets)
                .filter_map(|(s, t)| t.as_ref().map(|t| rho(s, t)))
                .map(|r| (r, r))
                .collect(),
        ),
        GridPairing::Product => fold_pairs(
            marginals
                .par_iter()
                .map(|s| {
                    usable.iter().fold((f64::INFINITY, f64::NEG_INFINITY), |(lo, hi), t| {
                        let r = rho(s, t);
                        (lo.min(r), hi.max(r))
                    })
                })
                .collect(),
        ),
    };

    // w′ = w* is the first point of the w′ set.
    let rho_tilde = match &targets[0] {
        Some(t) => marginals.iter().map(|s| rho(s, t)).fold(f64::NEG_INFINITY, f64::max),
        None => pair_max,
    };
    let gamma = optima.gap(task);
    // (w*, w*) is always a grid pair, so the minimum cannot exceed ρ̃.
    debug_assert!(rho_bar <= rho_tilde);
    Ok(SkewEstimate {
        strategy: strategy.selection.label(),
        rho_bar,
        rho_tilde,
        gamma,
        grid: *grid,
        half_width,
        w_points: ws.len(),
        w_prime_points: w_primes.len(),
        skipped,
    })
}
