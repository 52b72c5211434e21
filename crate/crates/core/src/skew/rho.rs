use serde::{Deserialize, Serialize};

use super::ClientOptima;
use crate::engine::{selection_weights, Aggregation};
use crate::error::{Error, Result};
use crate::model::{Objective, ParamVector};
use crate::rng::SimRng;
use crate::selection::{sample_without_replacement, select_rand, top_m, SelectionConfig, SelectionKind};

/// Denominators below this are treated as zero.
pub(crate) const DENOMINATOR_FLOOR: f64 = 1e-12;

/// A selection strategy together with the aggregation rule that weights the
/// selected clients.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SkewStrategy {
    pub selection: SelectionConfig,
    #[serde(default)]
    pub aggregation: Aggregation,
}

impl SkewStrategy {
    pub fn new(selection: SelectionConfig, aggregation: Aggregation) -> Self {
        SkewStrategy { selection, aggregation }
    }

    fn validate(&self, clients: usize) -> Result<()> {
        self.selection.validate(clients)?;
        if self.selection.kind == SelectionKind::RpowD {
            return Err(Error::Unsupported(
                "rpow-d selection depends on training history, not on the current model".into(),
            ));
        }
        Ok(())
    }
}

/// Draws selections at a fixed model, caching the exact losses that pow-d
/// ranks by.
struct Drawer<'a> {
    task: &'a dyn Objective,
    w: &'a ParamVector,
    strategy: SkewStrategy,
    pool: Vec<usize>,
    losses: Option<Vec<f64>>,
}

impl<'a> Drawer<'a> {
    fn new(task: &'a dyn Objective, w: &'a ParamVector, strategy: SkewStrategy) -> Result<Self> {
        let k = task.num_clients();
        strategy.validate(k)?;
        w.check_dim(task.dim())?;
        let losses = if strategy.selection.kind == SelectionKind::PowD {
            Some((0..k).map(|c| task.local_loss(c, w)).collect::<Result<Vec<_>>>()?)
        } else {
            None
        };
        Ok(Drawer {
            task,
            w,
            strategy,
            pool: (0..k).collect(),
            losses,
        })
    }

    /// One selection and its per-slot aggregation weights.
    fn draw(&self, rng: &mut SimRng) -> Result<(Vec<usize>, Vec<f64>)> {
        let cfg = &self.strategy.selection;
        let p = self.task.fractions();
        let selected = match cfg.kind {
            SelectionKind::Rand => select_rand(p, cfg.m, cfg.replacement, &self.pool, rng)?,
            SelectionKind::PowD | SelectionKind::CpowD => {
                let d = cfg.d.max(cfg.m).min(self.pool.len());
                // Every client is a candidate; top_m orders ties itself.
                let a = if d == self.pool.len() {
                    self.pool.clone()
                } else {
                    sample_without_replacement(p, &self.pool, d, rng)?
                };
                let scores = match &self.losses {
                    Some(l) => a.iter().map(|&c| l[c]).collect(),
                    None => a
                        .iter()
                        .map(|&c| self.task.estimated_loss(c, self.w, cfg.estimate_batch, rng))
                        .collect::<Result<Vec<_>>>()?,
                };
                top_m(&a, &scores, cfg.m, rng)?
            }
            SelectionKind::RpowD => unreachable!("rejected in validate"),
        };
        let weights = selection_weights(self.strategy.aggregation, p, &selected)?;
        Ok((selected, weights))
    }
}

/// Monte-Carlo estimate of `s_k(w) = E[Σ_{slots of k} q_slot]`, the expected
/// aggregation weight each client receives when selecting at `w`.
pub fn selection_marginals(
    task: &dyn Objective,
    strategy: SkewStrategy,
    w: &ParamVector,
    draws: usize,
    rng: &mut SimRng,
) -> Result<Vec<f64>> {
    if draws == 0 {
        return Err(Error::invalid("at least one draw required"));
    }
    let drawer = Drawer::new(task, w, strategy)?;
    let mut s = vec![0.0; task.num_clients()];
    for _ in 0..draws {
        let (sel, q) = drawer.draw(rng)?;
        for (&k, &qk) in sel.iter().zip(&q) {
            s[k] += qk;
        }
    }
    let n = draws as f64;
    s.iter_mut().for_each(|v| *v /= n);
    Ok(s)
}

/// Excess local losses `F_k(w) − F_k*`, clamped at zero.
pub(crate) fn excess_losses(task: &dyn Objective, optima: &ClientOptima, w: &ParamVector) -> Result<Vec<f64>> {
    (0..task.num_clients())
        .map(|k| Ok((task.local_loss(k, w)? - optima.local_losses[k]).max(0.0)))
        .collect()
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SkewSample {
    pub rho: f64,
    /// Standard error of `rho` over the Monte-Carlo draws.
    pub std_error: f64,
    /// `Σ p_k (F_k(w′) − F_k*)`.
    pub denominator: f64,
}

/// `ρ(w, w′)`: the expected aggregated excess loss at `w′` of clients
/// selected at `w`, relative to the data-weighted excess loss at `w′`.
pub fn selection_skew_at(
    task: &dyn Objective,
    optima: &ClientOptima,
    strategy: SkewStrategy,
    w: &ParamVector,
    w_prime: &ParamVector,
    draws: usize,
    rng: &mut SimRng,
) -> Result<SkewSample> {
    if draws == 0 {
        return Err(Error::invalid("at least one draw required"));
    }
    if optima.local_losses.len() != task.num_clients() {
        return Err(Error::invalid("optima do not belong to this task"));
    }
    w_prime.check_dim(task.dim())?;
    let a = excess_losses(task, optima, w_prime)?;
    let p = task.fractions().as_slice();
    let denominator: f64 = p.iter().zip(&a).map(|(pk, ak)| pk * ak).sum();
    if denominator < DENOMINATOR_FLOOR {
        return Err(Error::DegenerateDenominator(denominator));
    }
    let drawer = Drawer::new(task, w, strategy)?;
    let (mut sum, mut sum_sq) = (0.0, 0.0);
    for _ in 0..draws {
        let (sel, q) = drawer.draw(rng)?;
        let num: f64 = sel.iter().zip(&q).map(|(&k, qk)| qk * a[k]).sum();
        sum += num;
        sum_sq += num * num;
    }
    let n = draws as f64;
    let mean = sum / n;
    let var = if draws > 1 {
        ((sum_sq - n * mean * mean) / (n - 1.0)).max(0.0)
    } else {
        0.0
    };
    Ok(SkewSample {
        rho: mean / denominator,
        std_error: (var / n).sqrt() / denominator,
        denominator,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::model::{DataFractions, QuadraticTask};
    use crate::rng::{stream, Domain};

    fn pv(v: &[f64]) -> ParamVector {
        ParamVector::new(v.to_vec()).unwrap()
    }

    fn task() -> QuadraticTask {
        QuadraticTask::new(
            vec![1.0, 2.0, 4.0],
            vec![pv(&[0.5]), pv(&[-1.0]), pv(&[2.0])],
            DataFractions::new(vec![0.5, 0.3, 0.2]).unwrap(),
        )
        .unwrap()
    }

    #[test]
    fn rand_with_replacement_marginals_match_fractions() {
        let t = task();
        let s = selection_marginals(
            &t,
            SkewStrategy::new(SelectionConfig::rand(2, true), Aggregation::SimpleMean),
            &pv(&[0.0]),
            40_000,
            &mut stream(1, Domain::Skew, &[0]),
        )
        .unwrap();
        for (sk, pk) in s.iter().zip(t.fractions().as_slice()) {
            assert!((sk - pk).abs() < 0.01, "{s:?}");
        }
    }

    #[test]
    fn full_candidate_set_is_deterministic() {
        // d = K with m = 1: always the client with the largest loss.
        let t = task();
        let w = pv(&[0.0]);
        let losses: Vec<f64> = (0..3).map(|k| t.loss(k, &w).unwrap()).collect();
        let worst = (0..3).max_by(|&a, &b| losses[a].total_cmp(&losses[b])).unwrap();
        let s = selection_marginals(
            &t,
            SkewStrategy::new(SelectionConfig::pow_d(1, 3), Aggregation::SimpleMean),
            &w,
            100,
            &mut stream(1, Domain::Skew, &[0]),
        )
        .unwrap();
        assert_eq!(s[worst], 1.0);
    }

    #[test]
    fn rpow_d_is_unsupported() {
        let t = task();
        let o = ClientOptima::from_quadratic(&t);
        let r = selection_skew_at(
            &t,
            &o,
            SkewStrategy::new(SelectionConfig::rpow_d(1, 2), Aggregation::SimpleMean),
            &pv(&[0.0]),
            &pv(&[1.0]),
            10,
            &mut stream(1, Domain::Skew, &[0]),
        );
        assert!(matches!(r, Err(Error::Unsupported(_))));
    }

    #[test]
    fn degenerate_denominator_is_reported() {
        let t = QuadraticTask::new(
            vec![1.0, 1.0],
            vec![pv(&[1.0]), pv(&[1.0])],
            DataFractions::new(vec![0.5, 0.5]).unwrap(),
        )
        .unwrap();
        let o = ClientOptima::from_quadratic(&t);
        let r = selection_skew_at(
            &t,
            &o,
            SkewStrategy::new(SelectionConfig::rand(1, true), Aggregation::SimpleMean),
            &pv(&[0.0]),
            &o.global,
            10,
            &mut stream(1, Domain::Skew, &[0]),
        );
        assert!(matches!(r, Err(Error::DegenerateDenominator(_))));
    }
}
