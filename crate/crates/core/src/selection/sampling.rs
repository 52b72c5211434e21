use rand::seq::SliceRandom;
use rand::Rng;

use crate::error::{Error, Result};
use crate::model::DataFractions;
use crate::rng::SimRng;

fn pick(weights: &[f64], total: f64, rng: &mut SimRng) -> usize {
    let target = rng.random::<f64>() * total;
    let mut acc = 0.0;
    let mut last_positive = 0;
    for (i, &w) in weights.iter().enumerate() {
        if w > 0.0 {
            acc += w;
            last_positive = i;
            if target < acc {
                return i;
            }
        }
    }
    // Rounding can leave `target` at the very top of the range.
    last_positive
}

fn pool_weights(p: &DataFractions, pool: &[usize]) -> Result<Vec<f64>> {
    if pool.is_empty() {
        return Err(Error::EmptyPool);
    }
    pool.iter()
        .map(|&k| {
            if k < p.len() {
                Ok(p.get(k))
            } else {
                Err(Error::ClientOutOfRange {
                    index: k,
                    clients: p.len(),
                })
            }
        })
        .collect()
}

/// `m` independent draws from `pool`, client `k` with probability
/// proportional to `p_k`.
pub fn sample_with_replacement(
    p: &DataFractions,
    pool: &[usize],
    m: usize,
    rng: &mut SimRng,
) -> Result<Vec<usize>> {
    let weights = pool_weights(p, pool)?;
    let total: f64 = weights.iter().sum();
    if total <= 0.0 {
        return Err(Error::invalid("available clients carry no data weight"));
    }
    Ok((0..m).map(|_| pool[pick(&weights, total, rng)]).collect())
}

/// `n` successive draws proportional to `p_k`, removing each drawn client and
/// renormalizing over the rest. Returned in draw order.
///
/// Once every positive-weight client has been drawn, the remainder is filled
/// uniformly from the zero-weight clients.
pub fn sample_without_replacement(
    p: &DataFractions,
    pool: &[usize],
    n: usize,
    rng: &mut SimRng,
) -> Result<Vec<usize>> {
    let mut weights = pool_weights(p, pool)?;
    if n > pool.len() {
        return Err(Error::PoolTooSmall {
            requested: n,
            available: pool.len(),
        });
    }
    let mut ids: Vec<usize> = pool.to_vec();
    let mut out = Vec::with_capacity(n);
    for _ in 0..n {
        let total: f64 = weights.iter().sum();
        let i = if total > 0.0 {
            pick(&weights, total, rng)
        } else {
            rng.random_range(0..ids.len())
        };
        out.push(ids.remove(i));
        weights.remove(i);
    }
    Ok(out)
}

/// The `m` candidates with the largest scores, ties broken uniformly at
/// random. `scores[i]` belongs to `candidates[i]`; `+∞` ranks above every
/// finite score.
pub fn top_m(candidates: &[usize], scores: &[f64], m: usize, rng: &mut SimRng) -> Result<Vec<usize>> {
    if candidates.len() != scores.len() {
        return Err(Error::invalid("one score per candidate required"));
    }
    if m > candidates.len() {
        return Err(Error::PoolTooSmall {
            requested: m,
            available: candidates.len(),
        });
    }
    if let Some(s) = scores.iter().find(|s| s.is_nan()) {
        return Err(Error::invalid(format!("candidate score is {s}")));
    }
    let mut order: Vec<usize> = (0..candidates.len()).collect();
    // A uniform shuffle followed by a stable sort leaves every ordering of
    // equal scores equally likely.
    order.shuffle(rng);
    order.sort_by(|&a, &b| scores[b].total_cmp(&scores[a]));
    Ok(order[..m].iter().map(|&i| candidates[i]).collect())
}
