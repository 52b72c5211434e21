#![allow(dead_code)]

use std::collections::BTreeMap;

use powchoice::model::{DataFractions, ParamVector, QuadraticTask};
use statrs::distribution::{ChiSquared, ContinuousCDF};

pub fn pv(v: &[f64]) -> ParamVector {
    ParamVector::new(v.to_vec()).unwrap()
}

pub fn quadratic(h: &[f64], e: &[&[f64]], p: &[f64]) -> QuadraticTask {
    QuadraticTask::new(
        h.to_vec(),
        e.iter().map(|v| pv(v)).collect(),
        DataFractions::new(p.to_vec()).unwrap(),
    )
    .unwrap()
}

/// Every ordered sequence of `n` distinct draws from `pool`, each drawn with
/// probability proportional to its weight among those left, with its
/// probability.
pub fn ordered_draws(p: &[f64], pool: &[usize], n: usize) -> Vec<(Vec<usize>, f64)> {
    fn rec(p: &[f64], left: &[usize], n: usize, prefix: &mut Vec<usize>, prob: f64, out: &mut Vec<(Vec<usize>, f64)>) {
        if prefix.len() == n {
            out.push((prefix.clone(), prob));
            return;
        }
        let total: f64 = left.iter().map(|&k| p[k]).sum();
        for (i, &k) in left.iter().enumerate() {
            let mut rest = left.to_vec();
            rest.remove(i);
            prefix.push(k);
            rec(p, &rest, n, prefix, prob * p[k] / total, out);
            prefix.pop();
        }
    }
    let mut out = Vec::new();
    rec(p, pool, n, &mut Vec::new(), 1.0, &mut out);
    out
}

/// All `r`-subsets of `items`.
pub fn subsets(items: &[usize], r: usize) -> Vec<Vec<usize>> {
    if r == 0 {
        return vec![vec![]];
    }
    if items.len() < r {
        return vec![];
    }
    let mut with: Vec<Vec<usize>> = subsets(&items[1..], r - 1)
        .into_iter()
        .map(|mut s| {
            s.insert(0, items[0]);
            s
        })
        .collect();
    with.extend(subsets(&items[1..], r));
    with
}

/// Distribution of the `m` highest-scoring members of `cands`, ties at the
/// cut broken uniformly.
pub fn top_m_distribution(cands: &[usize], scores: &[f64], m: usize) -> Vec<(Vec<usize>, f64)> {
    let mut order: Vec<usize> = (0..cands.len()).collect();
    order.sort_by(|&a, &b| scores[b].partial_cmp(&scores[a]).unwrap());
    let cut = scores[order[m - 1]];
    let above: Vec<usize> = order.iter().filter(|&&i| scores[i] > cut).map(|&i| cands[i]).collect();
    let tied: Vec<usize> = order.iter().filter(|&&i| scores[i] == cut).map(|&i| cands[i]).collect();
    let fill = subsets(&tied, m - above.len());
    let w = 1.0 / fill.len() as f64;
    fill.into_iter()
        .map(|f| {
            let mut s = above.clone();
            s.extend(f);
            s.sort_unstable();
            (s, w)
        })
        .collect()
}

/// Exact pow-d selection distribution: candidate sets drawn without
/// replacement proportional to `p`, then the top `m` by `losses`.
pub fn pow_d_distribution(p: &[f64], losses: &[f64], m: usize, d: usize) -> BTreeMap<Vec<usize>, f64> {
    let pool: Vec<usize> = (0..p.len()).collect();
    let mut out = BTreeMap::new();
    for (seq, prob) in ordered_draws(p, &pool, d) {
        let scores: Vec<f64> = seq.iter().map(|&k| losses[k]).collect();
        for (s, w) in top_m_distribution(&seq, &scores, m) {
            *out.entry(s).or_insert(0.0) += prob * w;
        }
    }
    out
}

/// Exact distribution of sorted sets from `n` draws without replacement.
pub fn without_replacement_distribution(p: &[f64], n: usize) -> BTreeMap<Vec<usize>, f64> {
    let pool: Vec<usize> = (0..p.len()).collect();
    let mut out = BTreeMap::new();
    for (mut seq, prob) in ordered_draws(p, &pool, n) {
        seq.sort_unstable();
        *out.entry(seq).or_insert(0.0) += prob;
    }
    out
}

/// Upper tail probability of a chi-square statistic.
pub fn chi_square_p(stat: f64, dof: usize) -> f64 {
    1.0 - ChiSquared::new(dof as f64).unwrap().cdf(stat)
}

/// Goodness of fit of `counts` to `probs`.
pub fn goodness_of_fit(counts: &[u64], probs: &[f64]) -> f64 {
    let n: u64 = counts.iter().sum();
    let stat: f64 = counts
        .iter()
        .zip(probs)
        .map(|(&c, &q)| {
            let e = q * n as f64;
            (c as f64 - e).powi(2) / e
        })
        .sum();
    chi_square_p(stat, counts.len() - 1)
}

/// Two-sample homogeneity test on two count vectors over the same cells.
pub fn two_sample(a: &[u64], b: &[u64]) -> f64 {
    let (na, nb) = (a.iter().sum::<u64>() as f64, b.iter().sum::<u64>() as f64);
    let mut stat = 0.0;
    let mut cells = 0;
    for (&x, &y) in a.iter().zip(b) {
        let total = (x + y) as f64;
        if total == 0.0 {
            continue;
        }
        cells += 1;
        let (ea, eb) = (total * na / (na + nb), total * nb / (na + nb));
        stat += (x as f64 - ea).powi(2) / ea + (y as f64 - eb).powi(2) / eb;
    }
    chi_square_p(stat, cells - 1)
}

/// Counts of each key in `keys`, in that order.
pub fn tally(samples: &[Vec<usize>], keys: &[Vec<usize>]) -> Vec<u64> {
    let mut map: BTreeMap<&[usize], u64> = BTreeMap::new();
    for s in samples {
        *map.entry(s.as_slice()).or_insert(0) += 1;
    }
    let known: u64 = keys.iter().map(|k| map.get(k.as_slice()).copied().unwrap_or(0)).sum();
    assert_eq!(known, samples.len() as u64, "sample outside the key set");
    keys.iter().map(|k| map.get(k.as_slice()).copied().unwrap_or(0)).collect()
}
