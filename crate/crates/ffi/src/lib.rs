//! C ABI over the `powchoice` simulator.
//!
//! Tasks and trainers are opaque handles created by `pc_*_new` and released
//! by the matching `pc_*_free`. Every fallible call returns a [`PcStatus`];
//! on failure `pc_last_error_message` describes the most recent error on
//! the calling thread. A trainer borrows its task, so the task must outlive
//! every trainer built on it.

use std::cell::RefCell;
use std::ffi::{c_char, CString};
use std::panic::{catch_unwind, AssertUnwindSafe};
use std::ptr;
use std::sync::Arc;

use powchoice::engine::{LrSchedule, RunConfig, Trainer};
use powchoice::error::Error;
use powchoice::model::{LogisticTask, Objective, ParamVector, QuadraticTask, SyntheticDataset, SyntheticParams, Task, TheoryParams};
use powchoice::selection::SelectionConfig;
use powchoice::skew::{theorem1_bound, theorem2_bound, theorem2_rate_cap, BoundInputs, BoundTerms};

/// Result of every fallible call.
#[repr(C)]
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum PcStatus {
    Ok = 0,
    NullPointer = 1,
    InvalidArgument = 2,
    BufferTooSmall = 3,
    Divergence = 4,
    Unsupported = 5,
    Finished = 6,
    Internal = 7,
    Panic = 8,
}

#[repr(C)]
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum PcStrategy {
    Rand = 0,
    PowD = 1,
    CpowD = 2,
    RpowD = 3,
}

/// Options for [`pc_trainer_new`]. Obtain defaults from
/// [`pc_run_options_default`].
#[repr(C)]
#[derive(Debug, Clone, Copy)]
pub struct PcRunOptions {
    pub strategy: PcStrategy,
    /// Clients per round.
    pub m: usize,
    /// Candidate set size for the pow-d variants.
    pub d: usize,
    /// `rand` only: sample with replacement.
    pub replacement: bool,
    /// `cpow-d` only: mini-batch size for loss estimates.
    pub estimate_batch: usize,
    pub local_steps: usize,
    pub rounds: usize,
    pub batch_size: usize,
    /// Fixed learning rate.
    pub eta: f64,
    pub seed: u64,
}

#[repr(C)]
#[derive(Debug, Clone, Copy)]
pub struct PcBoundInputs {
    pub l: f64,
    pub mu: f64,
    pub g: f64,
    pub sigma: f64,
    pub tau: usize,
    pub m: usize,
    pub gamma_gap: f64,
    pub rho_bar: f64,
    pub rho_tilde: f64,
    pub init_dist_sq: f64,
    /// `F(w0) - F*`; a negative value means unknown.
    pub init_excess: f64,
}

#[repr(C)]
#[derive(Debug, Clone, Copy, Default)]
pub struct PcBoundTerms {
    pub vanishing: f64,
    pub bias: f64,
    pub total: f64,
}

/// Opaque objective handle.
pub struct PcTask {
    task: Task,
}

/// Opaque training run handle.
pub struct PcTrainer {
    trainer: Trainer<'static>,
}

thread_local! {
    static LAST_ERROR: RefCell<Option<CString>> = const { RefCell::new(None) };
}

struct Failure(PcStatus, String);

impl From<Error> for Failure {
    fn from(e: Error) -> Self {
        let status = match e {
            Error::Divergence { .. } => PcStatus::Divergence,
            Error::Unsupported(_) => PcStatus::Unsupported,
            Error::Optimization(_) | Error::DegenerateDenominator(_) | Error::DegenerateGrid(_) => PcStatus::Internal,
            _ => PcStatus::InvalidArgument,
        };
        Failure(status, e.to_string())
    }
}

fn set_error(msg: String) {
    let c = CString::new(msg.replace('\0', " ")).unwrap_or_default();
    LAST_ERROR.with(|e| *e.borrow_mut() = Some(c));
}

fn guard(f: impl FnOnce() -> Result<(), Failure>) -> PcStatus {
    match catch_unwind(AssertUnwindSafe(f)) {
        Ok(Ok(())) => PcStatus::Ok,
        Ok(Err(Failure(status, msg))) => {
            set_error(msg);
            status
        }
        Err(payload) => {
            let msg = payload
                .downcast_ref::<&str>()
                .map(|s| s.to_string())
                .or_else(|| payload.downcast_ref::<String>().cloned())
                .unwrap_or_else(|| "panic".into());
            set_error(format!("panic: {msg}"));
            PcStatus::Panic
        }
    }
}

fn null(what: &str) -> Failure {
    Failure(PcStatus::NullPointer, format!("{what} is null"))
}

unsafe fn read_model(w: *const f64, len: usize, dim: usize) -> Result<ParamVector, Failure> {
    if w.is_null() {
        return Err(null("model"));
    }
    if len != dim {
        return Err(Failure(
            PcStatus::InvalidArgument,
            format!("model length {len} does not match dimension {dim}"),
        ));
    }
    Ok(ParamVector::from_vec_unchecked(std::slice::from_raw_parts(w, len).to_vec()))
}

unsafe fn write_slice(src: &[f64], out: *mut f64, len: usize) -> Result<(), Failure> {
    if out.is_null() {
        return Err(null("output buffer"));
    }
    if len < src.len() {
        return Err(Failure(
            PcStatus::BufferTooSmall,
            format!("buffer holds {len} values, {} needed", src.len()),
        ));
    }
    std::slice::from_raw_parts_mut(out, src.len()).copy_from_slice(src);
    Ok(())
}

unsafe fn put_task(task: Task, out: *mut *mut PcTask) -> Result<(), Failure> {
    *out = Box::into_raw(Box::new(PcTask { task }));
    Ok(())
}

/// Message for the last failed call on this thread, or null. The pointer
/// stays valid until the next failing call on the same thread.
#[no_mangle]
pub extern "C" fn pc_last_error_message() -> *const c_char {
    LAST_ERROR.with(|e| e.borrow().as_ref().map_or(ptr::null(), |c| c.as_ptr()))
}

/// Quadratic task with `clients` clients in dimension `dim`.
///
/// # Safety
/// `out` must be a valid pointer.
#[no_mangle]
pub unsafe extern "C" fn pc_quadratic_new(
    clients: usize,
    dim: usize,
    power_law_a: f64,
    seed: u64,
    out: *mut *mut PcTask,
) -> PcStatus {
    guard(|| {
        if out.is_null() {
            return Err(null("out"));
        }
        let q = QuadraticTask::generate(clients, dim, power_law_a, seed)?;
        put_task(Task::Quadratic(q), out)
    })
}

/// Logistic regression on a generated Synthetic(alpha, beta) dataset.
///
/// # Safety
/// `out` must be a valid pointer.
#[no_mangle]
pub unsafe extern "C" fn pc_synthetic_new(
    alpha: f64,
    beta: f64,
    clients: usize,
    power_law_a: f64,
    seed: u64,
    out: *mut *mut PcTask,
) -> PcStatus {
    guard(|| {
        if out.is_null() {
            return Err(null("out"));
        }
        let data = SyntheticDataset::generate(SyntheticParams::new(alpha, beta, clients, power_law_a, seed))?;
        put_task(Task::Logistic(LogisticTask::new(Arc::new(data))), out)
    })
}

/// # Safety
/// `task` must come from a `pc_*_new` call and not be freed already.
#[no_mangle]
pub unsafe extern "C" fn pc_task_free(task: *mut PcTask) {
    if !task.is_null() {
        drop(Box::from_raw(task));
    }
}

/// Number of clients, or 0 for a null handle.
///
/// # Safety
/// `task` must be null or a live handle.
#[no_mangle]
pub unsafe extern "C" fn pc_task_num_clients(task: *const PcTask) -> usize {
    task.as_ref().map_or(0, |t| t.task.num_clients())
}

/// Model dimension, or 0 for a null handle.
///
/// # Safety
/// `task` must be null or a live handle.
#[no_mangle]
pub unsafe extern "C" fn pc_task_dim(task: *const PcTask) -> usize {
    task.as_ref().map_or(0, |t| t.task.dim())
}

/// Copies the data fractions `p_k` into `out`.
///
/// # Safety
/// `task` must be a live handle; `out` must hold `len` doubles.
#[no_mangle]
pub unsafe extern "C" fn pc_task_fractions(task: *const PcTask, out: *mut f64, len: usize) -> PcStatus {
    guard(|| {
        let t = task.as_ref().ok_or_else(|| null("task"))?;
        write_slice(t.task.fractions().as_slice(), out, len)
    })
}

/// `F(w)`.
///
/// # Safety
/// `task` must be a live handle; `w` must hold `len` doubles; `out` must be
/// valid.
#[no_mangle]
pub unsafe extern "C" fn pc_task_global_loss(task: *const PcTask, w: *const f64, len: usize, out: *mut f64) -> PcStatus {
    guard(|| {
        let t = task.as_ref().ok_or_else(|| null("task"))?;
        let out = out.as_mut().ok_or_else(|| null("out"))?;
        let w = read_model(w, len, t.task.dim())?;
        *out = t.task.global_loss(&w)?;
        Ok(())
    })
}

/// `F_k(w)`.
///
/// # Safety
/// As for [`pc_task_global_loss`].
#[no_mangle]
pub unsafe extern "C" fn pc_task_local_loss(
    task: *const PcTask,
    k: usize,
    w: *const f64,
    len: usize,
    out: *mut f64,
) -> PcStatus {
    guard(|| {
        let t = task.as_ref().ok_or_else(|| null("task"))?;
        let out = out.as_mut().ok_or_else(|| null("out"))?;
        let w = read_model(w, len, t.task.dim())?;
        *out = t.task.local_loss(k, &w)?;
        Ok(())
    })
}

/// Defaults: `rand` with replacement, `m = 1`, one local step, batch 1,
/// 100 rounds, `eta = 0.01`, seed 0.
#[no_mangle]
pub extern "C" fn pc_run_options_default() -> PcRunOptions {
    PcRunOptions {
        strategy: PcStrategy::Rand,
        m: 1,
        d: 0,
        replacement: true,
        estimate_batch: 50,
        local_steps: 1,
        rounds: 100,
        batch_size: 1,
        eta: 0.01,
        seed: 0,
    }
}

fn selection(o: &PcRunOptions) -> SelectionConfig {
    match o.strategy {
        PcStrategy::Rand => SelectionConfig::rand(o.m, o.replacement),
        PcStrategy::PowD => SelectionConfig::pow_d(o.m, o.d),
        PcStrategy::CpowD => SelectionConfig::cpow_d(o.m, o.d, o.estimate_batch),
        PcStrategy::RpowD => SelectionConfig::rpow_d(o.m, o.d),
    }
}

/// Starts a training run from the zero model.
///
/// # Safety
/// `task` must be a live handle that outlives the trainer; `options` and
/// `out` must be valid.
#[no_mangle]
pub unsafe extern "C" fn pc_trainer_new(
    task: *const PcTask,
    options: *const PcRunOptions,
    out: *mut *mut PcTrainer,
) -> PcStatus {
    guard(|| {
        let t: &'static PcTask = task.as_ref().ok_or_else(|| null("task"))?;
        let o = options.as_ref().ok_or_else(|| null("options"))?;
        if out.is_null() {
            return Err(null("out"));
        }
        let mut config = RunConfig::new(selection(o), o.local_steps, o.rounds, LrSchedule::Fixed { eta: o.eta }, o.seed);
        config.batch_size = o.batch_size;
        config.parallel = false;
        let trainer = Trainer::new(&t.task, config)?;
        *out = Box::into_raw(Box::new(PcTrainer { trainer }));
        Ok(())
    })
}

/// # Safety
/// `trainer` must come from [`pc_trainer_new`] and not be freed already.
#[no_mangle]
pub unsafe extern "C" fn pc_trainer_free(trainer: *mut PcTrainer) {
    if !trainer.is_null() {
        drop(Box::from_raw(trainer));
    }
}

/// Runs one communication round and stores the post-round global loss in
/// `loss` (may be null). Returns `PC_STATUS_FINISHED` once every round has
/// run.
///
/// # Safety
/// `trainer` must be a live handle; `loss` must be null or valid.
#[no_mangle]
pub unsafe extern "C" fn pc_trainer_step(trainer: *mut PcTrainer, loss: *mut f64) -> PcStatus {
    guard(|| {
        let t = trainer.as_mut().ok_or_else(|| null("trainer"))?;
        if t.trainer.is_finished() {
            return Err(Failure(PcStatus::Finished, "all rounds have run".into()));
        }
        let record = t.trainer.step()?;
        if let Some(l) = loss.as_mut() {
            *l = record.global_loss;
        }
        Ok(())
    })
}

/// Completed rounds, or 0 for a null handle.
///
/// # Safety
/// `trainer` must be null or a live handle.
#[no_mangle]
pub unsafe extern "C" fn pc_trainer_round(trainer: *const PcTrainer) -> usize {
    trainer.as_ref().map_or(0, |t| t.trainer.round())
}

/// Copies the current global model into `out`.
///
/// # Safety
/// `trainer` must be a live handle; `out` must hold `len` doubles.
#[no_mangle]
pub unsafe extern "C" fn pc_trainer_model(trainer: *const PcTrainer, out: *mut f64, len: usize) -> PcStatus {
    guard(|| {
        let t = trainer.as_ref().ok_or_else(|| null("trainer"))?;
        write_slice(t.trainer.global_model().as_slice(), out, len)
    })
}

fn bound_inputs(b: &PcBoundInputs) -> BoundInputs {
    BoundInputs {
        theory: TheoryParams {
            l: b.l,
            mu: b.mu,
            g: b.g,
            sigma: b.sigma,
            tau: b.tau,
            m: b.m,
        },
        gamma_gap: b.gamma_gap,
        rho_bar: b.rho_bar,
        rho_tilde: b.rho_tilde,
        init_dist_sq: b.init_dist_sq,
        init_excess: (b.init_excess >= 0.0).then_some(b.init_excess),
    }
}

fn terms(t: BoundTerms) -> PcBoundTerms {
    PcBoundTerms {
        vanishing: t.vanishing,
        bias: t.bias,
        total: t.total,
    }
}

/// Decaying learning rate bound after `t` iterations.
///
/// # Safety
/// `inputs` and `out` must be valid.
#[no_mangle]
pub unsafe extern "C" fn pc_bound_decaying(inputs: *const PcBoundInputs, t: u64, out: *mut PcBoundTerms) -> PcStatus {
    guard(|| {
        let i = inputs.as_ref().ok_or_else(|| null("inputs"))?;
        let out = out.as_mut().ok_or_else(|| null("out"))?;
        *out = terms(theorem1_bound(&bound_inputs(i), t)?);
        Ok(())
    })
}

/// Fixed learning rate bound after `t` iterations; `eta` must not exceed
/// [`pc_bound_fixed_rate_cap`].
///
/// # Safety
/// `inputs` and `out` must be valid.
#[no_mangle]
pub unsafe extern "C" fn pc_bound_fixed(
    inputs: *const PcBoundInputs,
    eta: f64,
    t: u64,
    out: *mut PcBoundTerms,
) -> PcStatus {
    guard(|| {
        let i = inputs.as_ref().ok_or_else(|| null("inputs"))?;
        let out = out.as_mut().ok_or_else(|| null("out"))?;
        *out = terms(theorem2_bound(&bound_inputs(i), eta, t)?);
        Ok(())
    })
}

/// Largest learning rate the fixed-rate bound admits, or NaN for null.
///
/// # Safety
/// `inputs` must be null or valid.
#[no_mangle]
pub unsafe extern "C" fn pc_bound_fixed_rate_cap(inputs: *const PcBoundInputs) -> f64 {
    inputs.as_ref().map_or(f64::NAN, |i| theorem2_rate_cap(&bound_inputs(i)))
}
