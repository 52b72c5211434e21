mod common;

use std::sync::Arc;

use common::*;
use powchoice::engine::{run_training, LrSchedule, RunConfig};
use powchoice::error::Result;
use powchoice::model::{
    DataFractions, LogisticTask, Objective, ParamVector, QuadraticTask, SyntheticDataset, SyntheticParams,
};
use powchoice::rng::{stream, Domain, SimRng};
use powchoice::selection::{
    frequency_profile, select_cpow_d, select_pow_d, select_rand, AvailabilityModel, SelectionConfig,
};
use proptest::prelude::*;
use rand::Rng;

/// Reports `exp(F_k)` and `3 F_k + 1` style transforms of the wrapped losses.
struct Transformed<'a> {
    inner: &'a QuadraticTask,
    f: fn(f64) -> f64,
}

impl Objective for Transformed<'_> {
    fn num_clients(&self) -> usize {
        self.inner.num_clients()
    }
    fn dim(&self) -> usize {
        self.inner.dim()
    }
    fn fractions(&self) -> &DataFractions {
        self.inner.fractions()
    }
    fn local_loss(&self, k: usize, w: &ParamVector) -> Result<f64> {
        Ok((self.f)(self.inner.loss(k, w)?))
    }
    fn local_gradient(&self, k: usize, w: &ParamVector) -> Result<ParamVector> {
        self.inner.gradient(k, w)
    }
    fn stochastic_step(&self, k: usize, w: &ParamVector, batch: usize, rng: &mut SimRng) -> Result<(ParamVector, f64)> {
        Objective::stochastic_step(self.inner, k, w, batch, rng)
    }
    fn estimated_loss(&self, k: usize, w: &ParamVector, _batch: usize, _rng: &mut SimRng) -> Result<f64> {
        self.local_loss(k, w)
    }
}

fn strategy() -> impl Strategy<Value = (usize, SelectionConfig)> {
    (2usize..12).prop_flat_map(|k| {
        (1..=k).prop_flat_map(move |m| {
            (m..=k, any::<bool>()).prop_map(move |(d, repl)| {
                let cfg = match d % 3 {
                    0 => SelectionConfig::rand(m, repl),
                    1 => SelectionConfig::pow_d(m, d),
                    _ => SelectionConfig::cpow_d(m, d, 5),
                };
                (k, cfg)
            })
        })
    })
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(64))]

    #[test]
    fn selections_have_m_members_from_the_pool((k, cfg) in strategy(), seed in any::<u64>()) {
        let task = QuadraticTask::generate(k, 3, 3.0, seed).unwrap();
        let w = ParamVector::filled(3, 0.2);
        let pool: Vec<usize> = (0..k).collect();
        let mut rng = stream(seed, Domain::Selection, &[]);
        for _ in 0..20 {
            let s = match cfg.kind {
                powchoice::selection::SelectionKind::Rand => select_rand(task.fractions(), cfg.m, cfg.replacement, &pool, &mut rng),
                powchoice::selection::SelectionKind::PowD => select_pow_d(&task, &w, &cfg, &pool, &mut rng),
                _ => select_cpow_d(&task, &w, &cfg, &pool, &mut rng),
            }.unwrap();
            prop_assert_eq!(s.len(), cfg.m);
            prop_assert!(s.iter().all(|&c| c < k));
            if !cfg.allows_duplicates() {
                let mut u = s.clone();
                u.dedup();
                prop_assert_eq!(u.len(), s.len());
            }
        }
    }

    #[test]
    fn pow_d_depends_on_loss_ranking_only(k in 2usize..9, seed in any::<u64>(), mfrac in 0.0f64..1.0, dfrac in 0.0f64..1.0) {
        let m = 1 + ((k - 1) as f64 * mfrac) as usize;
        let d = m + ((k - m) as f64 * dfrac) as usize;
        let task = QuadraticTask::generate(k, 2, 3.0, seed).unwrap();
        let w = ParamVector::filled(2, 0.4);
        let cfg = SelectionConfig::pow_d(m, d);
        let pool: Vec<usize> = (0..k).collect();
        for f in [(|x: f64| x.exp()) as fn(f64) -> f64, |x| 3.0 * x + 1.0, |x| x.powi(3)] {
            let t = Transformed { inner: &task, f };
            let mut r1 = stream(seed, Domain::Selection, &[]);
            let mut r2 = stream(seed, Domain::Selection, &[]);
            for _ in 0..20 {
                prop_assert_eq!(
                    select_pow_d(&task, &w, &cfg, &pool, &mut r1).unwrap(),
                    select_pow_d(&t, &w, &cfg, &pool, &mut r2).unwrap()
                );
            }
        }
    }

    #[test]
    fn profiles_sum_to_one(history in prop::collection::vec(prop::collection::vec(0usize..6, 1..4), 1..30)) {
        let r = frequency_profile(&history, 6).unwrap();
        prop_assert!((r.iter().sum::<f64>() - 1.0).abs() < 1e-12);
    }
}

#[test]
fn frequency_profile_example() {
    let r = frequency_profile(&[vec![0], vec![0], vec![1]], 3).unwrap();
    assert_eq!(r, vec![2.0 / 3.0, 1.0 / 3.0, 0.0]);
}

#[test]
fn alternating_availability_keeps_selection_inside_the_active_group() {
    let task = QuadraticTask::generate(20, 3, 3.0, 1).unwrap();
    let model = AvailabilityModel::alternating();
    for sel in [
        SelectionConfig::rand(2, true),
        SelectionConfig::rand(3, false),
        SelectionConfig::pow_d(2, 6),
        SelectionConfig::cpow_d(2, 12, 10),
        SelectionConfig::rpow_d(2, 5),
    ] {
        let mut cfg = RunConfig::new(sel, 2, 60, LrSchedule::Fixed { eta: 0.01 }, 3);
        cfg.availability = model;
        for rec in run_training(&task, &cfg).unwrap() {
            let group = model.group(rec.round, 20);
            assert!(rec.selected.iter().all(|k| group.contains(k)), "{} round {}", sel.label(), rec.round);
        }
    }
}

#[test]
fn alternating_pool_drops_a_tenth_of_the_group() {
    let model = AvailabilityModel::alternating();
    let mut rng = stream(4, Domain::Availability, &[]);
    for round in 0..10 {
        let pool = model.pool(round, 40, &mut rng);
        let group = model.group(round, 40);
        assert_eq!(pool.len(), 18);
        assert!(pool.iter().all(|k| group.contains(k)));
    }
}

#[test]
fn pow_d_profile_departs_from_p() {
    let task = QuadraticTask::generate(30, 5, 3.0, 0).unwrap();
    let cfg = RunConfig::new(SelectionConfig::pow_d(3, 9), 2, 2000, LrSchedule::Fixed { eta: 2e-5 }, 0);
    let history: Vec<Vec<usize>> = run_training(&task, &cfg).unwrap().into_iter().map(|r| r.selected).collect();
    let mut counts = vec![0u64; 30];
    history.iter().flatten().for_each(|&k| counts[k] += 1);
    let p = goodness_of_fit(&counts, task.fractions().as_slice());
    assert!(p < 0.01, "chi-square p = {p}");
}

#[test]
fn rand_profile_tracks_p() {
    let task = QuadraticTask::generate(30, 5, 3.0, 0).unwrap();
    let cfg = RunConfig::new(SelectionConfig::rand(3, true), 1, 5000, LrSchedule::Fixed { eta: 2e-5 }, 0);
    let history: Vec<Vec<usize>> = run_training(&task, &cfg).unwrap().into_iter().map(|r| r.selected).collect();
    let mut counts = vec![0u64; 30];
    history.iter().flatten().for_each(|&k| counts[k] += 1);
    assert!(goodness_of_fit(&counts, task.fractions().as_slice()) > 0.001);
}

#[test]
fn cpow_d_favours_high_loss_clients_on_synthetic_data() {
    let data = SyntheticDataset::generate(SyntheticParams::new(1.0, 1.0, 30, 3.0, 0)).unwrap();
    let task = LogisticTask::new(Arc::new(data));
    let mut init = stream(6, Domain::Local, &[]);
    let w = ParamVector::new((0..task.dim()).map(|_| init.random_range(-0.5..0.5)).collect()).unwrap();
    let losses: Vec<f64> = (0..30).map(|k| task.loss(k, &w).unwrap()).collect();
    let pool: Vec<usize> = (0..30).collect();
    let mut rng = stream(5, Domain::Selection, &[]);
    let (mut cpow, mut rand) = (0.0, 0.0);
    let n = 10_000;
    let cfg = SelectionConfig::cpow_d(3, 9, 50);
    for _ in 0..n {
        cpow += select_cpow_d(&task, &w, &cfg, &pool, &mut rng).unwrap().iter().map(|&k| losses[k]).sum::<f64>();
        rand += select_rand(task.fractions(), 3, true, &pool, &mut rng).unwrap().iter().map(|&k| losses[k]).sum::<f64>();
    }
    assert!(cpow > rand, "mean selected loss cpow-d {} vs rand {}", cpow / n as f64, rand / n as f64);
}

#[test]
fn cpow_d_on_the_quadratic_task_is_pow_d() {
    let task = QuadraticTask::generate(8, 2, 3.0, 2).unwrap();
    let w = pv(&[0.1, 0.9]);
    let pool: Vec<usize> = (0..8).collect();
    for seed in 0..100 {
        let mut r1 = stream(seed, Domain::Selection, &[]);
        let mut r2 = stream(seed, Domain::Selection, &[]);
        assert_eq!(
            select_pow_d(&task, &w, &SelectionConfig::pow_d(2, 5), &pool, &mut r1).unwrap(),
            select_cpow_d(&task, &w, &SelectionConfig::cpow_d(2, 5, 7), &pool, &mut r2).unwrap()
        );
    }
}
