//! Selection and skew estimates against exact enumeration, and gradients
//! against finite differences.

mod common;

use std::sync::Arc;

use common::*;
use powchoice::engine::Aggregation;
use powchoice::model::{
    DataFractions, LogisticTask, Objective, ParamVector, QuadraticTask, SyntheticDataset, SyntheticParams,
};
use powchoice::rng::{stream, Domain};
use powchoice::selection::{select_pow_d, select_rand, select_rpow_d, SelectionConfig, SelectionState};
use powchoice::skew::{selection_skew_at, ClientOptima, SkewStrategy};
use rand::Rng;

#[test]
fn rand_frequencies_follow_p() {
    let p = DataFractions::new(vec![0.5, 0.3, 0.2]).unwrap();
    let mut rng = stream(1, Domain::Selection, &[]);
    let mut counts = [0u64; 3];
    for _ in 0..100_000 {
        counts[select_rand(&p, 1, true, &[0, 1, 2], &mut rng).unwrap()[0]] += 1;
    }
    assert!(goodness_of_fit(&counts, p.as_slice()) > 0.001, "{counts:?}");
}

#[test]
fn rand_without_replacement_matches_enumeration() {
    let p = [0.5, 0.3, 0.2];
    // Client 0 is in S unless the first two draws are 1 and 2 in some order.
    let by_hand = 1.0 - (0.3 * 0.2 / 0.7 + 0.2 * 0.3 / 0.8);
    let exact = without_replacement_distribution(&p, 2);
    let oracle: f64 = exact.iter().filter(|(s, _)| s.contains(&0)).map(|(_, q)| q).sum();
    assert!((oracle - by_hand).abs() < 1e-15);

    let fr = DataFractions::new(p.to_vec()).unwrap();
    let mut rng = stream(2, Domain::Selection, &[]);
    let n = 100_000;
    let draws: Vec<Vec<usize>> = (0..n).map(|_| select_rand(&fr, 2, false, &[0, 1, 2], &mut rng).unwrap()).collect();
    let keys: Vec<Vec<usize>> = exact.keys().cloned().collect();
    let probs: Vec<f64> = exact.values().copied().collect();
    assert!(goodness_of_fit(&tally(&draws, &keys), &probs) > 0.001);
    let hits = draws.iter().filter(|s| s.contains(&0)).count() as f64 / n as f64;
    let se = (oracle * (1.0 - oracle) / n as f64).sqrt();
    assert!((hits - oracle).abs() < 4.0 * se, "{hits} vs {oracle}");
}

fn heterogeneous_k5() -> QuadraticTask {
    quadratic(
        &[1.0, 3.0, 7.0, 2.0, 12.0],
        &[&[1.0, -2.0], &[4.0, 0.5], &[-3.0, 3.0], &[0.2, 0.1], &[6.0, -6.0]],
        &[0.35, 0.1, 0.25, 0.2, 0.1],
    )
}

#[test]
fn pow_d_with_d_equal_m_is_rand_without_replacement() {
    let task = heterogeneous_k5();
    let pool: Vec<usize> = (0..5).collect();
    let w = pv(&[0.5, 0.5]);
    let n = 100_000;
    let cfg = SelectionConfig::pow_d(2, 2);
    let mut r1 = stream(3, Domain::Selection, &[0]);
    let mut r2 = stream(3, Domain::Selection, &[1]);
    let a: Vec<Vec<usize>> = (0..n).map(|_| select_pow_d(&task, &w, &cfg, &pool, &mut r1).unwrap()).collect();
    let b: Vec<Vec<usize>> = (0..n)
        .map(|_| select_rand(task.fractions(), 2, false, &pool, &mut r2).unwrap())
        .collect();
    let keys = subsets(&pool, 2);
    let p = two_sample(&tally(&a, &keys), &tally(&b, &keys));
    assert!(p > 0.01, "two-sample p = {p}");
}

#[test]
fn pow_d_distribution_matches_enumeration() {
    let task = heterogeneous_k5();
    let pool: Vec<usize> = (0..5).collect();
    let w = pv(&[0.0, 1.0]);
    let losses: Vec<f64> = (0..5).map(|k| task.local_loss(k, &w).unwrap()).collect();
    let exact = pow_d_distribution(task.fractions().as_slice(), &losses, 2, 3);
    let cfg = SelectionConfig::pow_d(2, 3);
    let mut rng = stream(4, Domain::Selection, &[]);
    let draws: Vec<Vec<usize>> = (0..50_000).map(|_| select_pow_d(&task, &w, &cfg, &pool, &mut rng).unwrap()).collect();
    let keys: Vec<Vec<usize>> = exact.keys().cloned().collect();
    let probs: Vec<f64> = exact.values().copied().collect();
    assert!(goodness_of_fit(&tally(&draws, &keys), &probs) > 0.001);
}

#[test]
fn pow_d_full_pool_picks_the_argmax() {
    let task = heterogeneous_k5();
    let w = pv(&[0.0, 0.0]);
    let losses: Vec<f64> = (0..5).map(|k| task.local_loss(k, &w).unwrap()).collect();
    let best = (0..5).max_by(|&a, &b| losses[a].partial_cmp(&losses[b]).unwrap()).unwrap();
    let mut rng = stream(5, Domain::Selection, &[]);
    for _ in 0..200 {
        let s = select_pow_d(&task, &w, &SelectionConfig::pow_d(1, 5), &[0, 1, 2, 3, 4], &mut rng).unwrap();
        assert_eq!(s, vec![best]);
    }
}

/// Exact `ρ(w, w′)` for pow-d with simple averaging.
fn exact_rho(task: &QuadraticTask, m: usize, d: usize, w: &ParamVector, w_prime: &ParamVector) -> f64 {
    let k = task.num_clients();
    let optima = task.optima();
    let losses: Vec<f64> = (0..k).map(|c| task.local_loss(c, w).unwrap()).collect();
    let a: Vec<f64> = (0..k)
        .map(|c| task.local_loss(c, w_prime).unwrap() - task.local_loss(c, &optima.local[c]).unwrap())
        .collect();
    let p = task.fractions().as_slice();
    let num: f64 = pow_d_distribution(p, &losses, m, d)
        .iter()
        .map(|(s, q)| q * s.iter().map(|&c| a[c]).sum::<f64>() / m as f64)
        .sum();
    num / p.iter().zip(&a).map(|(x, y)| x * y).sum::<f64>()
}

#[test]
fn monte_carlo_rho_matches_enumeration() {
    let task = quadratic(
        &[2.0, 5.0, 1.5, 9.0],
        &[&[1.0, 0.0], &[-2.0, 4.0], &[0.5, -1.5], &[9.0, 9.0]],
        &[0.4, 0.3, 0.2, 0.1],
    );
    let optima = ClientOptima::from_quadratic(&task);
    let points = [(pv(&[0.0, 0.0]), pv(&[1.0, 1.0])), (pv(&[-1.0, 2.0]), pv(&[0.3, -0.2])), (pv(&[2.0, 2.0]), pv(&[2.0, 2.0]))];
    for (i, (w, wp)) in points.iter().enumerate() {
        for (m, d) in [(1, 2), (2, 3), (1, 4), (2, 2)] {
            let strategy = SkewStrategy::new(SelectionConfig::pow_d(m, d), Aggregation::SimpleMean);
            let mut rng = stream(6, Domain::Skew, &[i as u64, m as u64, d as u64]);
            let mc = selection_skew_at(&task, &optima, strategy, w, wp, 20_000, &mut rng).unwrap();
            let exact = exact_rho(&task, m, d, w, wp);
            assert!(
                (mc.rho - exact).abs() <= 3.0 * mc.std_error + 1e-12,
                "point {i}, m={m}, d={d}: {} vs {exact} (se {})",
                mc.rho,
                mc.std_error
            );
        }
    }
}

#[test]
fn rpow_d_round_zero_is_uniform_over_the_candidates() {
    let p = DataFractions::new(vec![0.4, 0.3, 0.2, 0.1]).unwrap();
    let state = SelectionState::new(4);
    let pool = [0, 1, 2, 3];
    let mut rng = stream(7, Domain::Selection, &[]);
    let draws: Vec<Vec<usize>> = (0..100_000)
        .map(|_| select_rpow_d(&state, &p, &SelectionConfig::rpow_d(2, 4), &pool, &mut rng).unwrap())
        .collect();
    let keys = subsets(&pool, 2);
    assert!(goodness_of_fit(&tally(&draws, &keys), &[1.0 / 6.0; 6]) > 0.001);
}

#[test]
fn rpow_d_sentinel_dominates_and_latest_report_wins() {
    let p = DataFractions::new(vec![0.25; 4]).unwrap();
    let mut state = SelectionState::new(4);
    for (k, l) in [(0, 9.0), (1, 5.0), (3, 7.0)] {
        state.report(k, l);
    }
    let mut rng = stream(8, Domain::Selection, &[]);
    for _ in 0..500 {
        let s = select_rpow_d(&state, &p, &SelectionConfig::rpow_d(1, 4), &[0, 1, 2, 3], &mut rng).unwrap();
        assert_eq!(s, vec![2]);
    }
    state.report(2, 1.0);
    state.report(0, 3.0);
    assert!(state.losses().iter().all(|l| l.is_finite()));
    let s = select_rpow_d(&state, &p, &SelectionConfig::rpow_d(1, 4), &[0, 1, 2, 3], &mut rng).unwrap();
    assert_eq!(s, vec![3]);
}

#[test]
fn rpow_d_matches_pow_d_when_reports_equal_losses() {
    let task = heterogeneous_k5();
    let w = pv(&[0.3, -0.7]);
    let mut state = SelectionState::new(5);
    for k in 0..5 {
        state.report(k, task.local_loss(k, &w).unwrap());
    }
    let pool: Vec<usize> = (0..5).collect();
    for (m, d) in [(1, 5), (2, 5), (2, 3), (3, 4)] {
        for seed in 0..200 {
            let mut r1 = stream(seed, Domain::Selection, &[]);
            let mut r2 = stream(seed, Domain::Selection, &[]);
            let a = select_pow_d(&task, &w, &SelectionConfig::pow_d(m, d), &pool, &mut r1).unwrap();
            let b = select_rpow_d(&state, task.fractions(), &SelectionConfig::rpow_d(m, d), &pool, &mut r2).unwrap();
            assert_eq!(a, b);
        }
    }
}

fn relative_error(a: f64, b: f64) -> f64 {
    (a - b).abs() / a.abs().max(b.abs()).max(1e-8)
}

/// Central differences along coordinates and one random direction.
fn check_gradients(task: &dyn Objective, points: usize, coords: usize, seed: u64, scale: f64) {
    let mut rng = stream(seed, Domain::Local, &[]);
    let dim = task.dim();
    let h = 1e-4;
    for i in 0..points {
        let k = i % task.num_clients();
        let w = ParamVector::new((0..dim).map(|_| rng.random_range(-scale..scale)).collect()).unwrap();
        let g = task.local_gradient(k, &w).unwrap();
        let mut dirs: Vec<Vec<f64>> = (0..coords)
            .map(|_| {
                let mut e = vec![0.0; dim];
                e[rng.random_range(0..dim)] = 1.0;
                e
            })
            .collect();
        dirs.push((0..dim).map(|_| rng.random_range(-1.0..1.0)).collect());
        for u in dirs {
            let u = ParamVector::new(u).unwrap();
            let (mut plus, mut minus) = (w.clone(), w.clone());
            plus.axpy(h, &u);
            minus.axpy(-h, &u);
            let fd = (task.local_loss(k, &plus).unwrap() - task.local_loss(k, &minus).unwrap()) / (2.0 * h);
            let an = g.dot(&u);
            assert!(relative_error(an, fd) < 1e-5, "point {i}, client {k}: {an} vs {fd}");
        }
    }
}

#[test]
fn quadratic_gradients_match_finite_differences() {
    let task = QuadraticTask::generate(10, 5, 3.0, 0).unwrap();
    check_gradients(&task, 50, 5, 9, 3.0);
}

#[test]
fn logistic_gradients_match_finite_differences() {
    let mut params = SyntheticParams::new(1.0, 1.0, 5, 3.0, 0);
    params.max_samples = 60;
    let data = SyntheticDataset::generate(params).unwrap();
    let task = LogisticTask::new(Arc::new(data)).with_l2(1e-4).unwrap();
    check_gradients(&task, 50, 5, 10, 0.5);
}
