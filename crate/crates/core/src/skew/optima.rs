use argmin::core::{CostFunction, Executor, Gradient};
use argmin::solver::linesearch::MoreThuenteLineSearch;
use argmin::solver::quasinewton::LBFGS;

use crate::error::{Error, Result};
use crate::model::{Objective, ParamVector, QuadraticTask, Task};

/// Global and per-client minimizers with their objective values.
#[derive(Debug, Clone, PartialEq)]
pub struct ClientOptima {
    pub global: ParamVector,
    /// `F* = F(w*)`.
    pub global_loss: f64,
    pub local: Vec<ParamVector>,
    /// `F_k* = F_k(w_k*)`.
    pub local_losses: Vec<f64>,
}

impl ClientOptima {
    pub fn from_quadratic(task: &QuadraticTask) -> Self {
        let o = task.optima();
        let local_losses = vec![0.0; task.num_clients()];
        ClientOptima {
            global: o.global,
            global_loss: o.global_loss,
            local: o.local,
            local_losses,
        }
    }

    /// Closed form for quadratic tasks; numerical minimization (see
    /// [`minimize`]) for logistic ones, with the task's own regularization.
    pub fn for_task(task: &Task, opts: &MinimizeOptions) -> Result<Self> {
        match task {
            Task::Quadratic(q) => Ok(Self::from_quadratic(q)),
            Task::Logistic(l) => Self::numeric(l, opts),
        }
    }

    /// Minimizes `F` and every `F_k` numerically, from the origin.
    pub fn numeric(task: &dyn Objective, opts: &MinimizeOptions) -> Result<Self> {
        let x0 = ParamVector::zeros(task.dim());
        let global = minimize(
            |w| task.global_loss(w),
            |w| global_gradient(task, w),
            &x0,
            opts,
        )?;
        let global_loss = task.global_loss(&global)?;
        let mut local = Vec::with_capacity(task.num_clients());
        let mut local_losses = Vec::with_capacity(task.num_clients());
        for k in 0..task.num_clients() {
            let wk = minimize(
                |w| task.local_loss(k, w),
                |w| task.local_gradient(k, w),
                &x0,
                opts,
            )?;
            local_losses.push(task.local_loss(k, &wk)?);
            local.push(wk);
        }
        Ok(ClientOptima {
            global,
            global_loss,
            local,
            local_losses,
        })
    }

    /// `Γ = F* − Σ p_k F_k*`.
    pub fn gap(&self, task: &dyn Objective) -> f64 {
        let weighted: f64 = task
            .fractions()
            .as_slice()
            .iter()
            .zip(&self.local_losses)
            .map(|(p, f)| p * f)
            .sum();
        (self.global_loss - weighted).max(0.0)
    }

    /// Largest distance from `w*` to a local optimum.
    pub fn spread(&self) -> f64 {
        self.local
            .iter()
            .map(|wk| wk.distance_sq(&self.global).sqrt())
            .fold(0.0, f64::max)
    }
}

/// Local-global objective gap of a quadratic task from its closed-form
/// optima, `Σ p_k (F_k(w*) − F_k(w_k*))`.
pub fn local_global_gap(task: &QuadraticTask) -> f64 {
    let o = task.optima();
    (0..task.num_clients())
        .map(|k| task.fractions().get(k) * task.loss_unchecked(k, o.global.as_slice()))
        .sum()
}

fn global_gradient(task: &dyn Objective, w: &ParamVector) -> Result<ParamVector> {
    let mut g = ParamVector::zeros(task.dim());
    for k in 0..task.num_clients() {
        g.axpy(task.fractions().get(k), &task.local_gradient(k, w)?);
    }
    Ok(g)
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct MinimizeOptions {
    /// Stop once `‖∇f‖ ≤ grad_tol`.
    pub grad_tol: f64,
    pub max_iter: u64,
}

impl Default for MinimizeOptions {
    fn default() -> Self {
        MinimizeOptions {
            grad_tol: 1e-8,
            max_iter: 20_000,
        }
    }
}

struct Problem<F, G> {
    f: F,
    grad: G,
}

impl<F, G> CostFunction for Problem<F, G>
where
    F: Fn(&ParamVector) -> Result<f64>,
{
    type Param = Vec<f64>;
    type Output = f64;

    fn cost(&self, p: &Vec<f64>) -> std::result::Result<f64, argmin::core::Error> {
        Ok((self.f)(&ParamVector::from_vec_unchecked(p.clone()))?)
    }
}

impl<F, G> Gradient for Problem<F, G>
where
    G: Fn(&ParamVector) -> Result<ParamVector>,
{
    type Param = Vec<f64>;
    type Gradient = Vec<f64>;

    fn gradient(&self, p: &Vec<f64>) -> std::result::Result<Vec<f64>, argmin::core::Error> {
        Ok((self.grad)(&ParamVector::from_vec_unchecked(p.clone()))?.into_vec())
    }
}

/// L-BFGS with a More-Thuente line search from `x0`, to `‖∇f‖ ≤ grad_tol`.
pub fn minimize<F, G>(f: F, grad: G, x0: &ParamVector, opts: &MinimizeOptions) -> Result<ParamVector>
where
    F: Fn(&ParamVector) -> Result<f64>,
    G: Fn(&ParamVector) -> Result<ParamVector>,
{
    let fail = |e: argmin::core::Error| Error::Optimization(e.to_string());
    let solver = LBFGS::new(MoreThuenteLineSearch::new(), 10)
        .with_tolerance_grad(opts.grad_tol)
        .and_then(|s| s.with_tolerance_cost(0.0))
        .map_err(fail)?;
    let problem = Problem { f, grad };
    let res = Executor::new(problem, solver)
        .configure(|state| state.param(x0.as_slice().to_vec()).max_iters(opts.max_iter))
        .run();
    // The line search gives up once f stops changing in floating point; the
    // gradient check below decides whether that point is good enough.
    let (x, problem) = match res {
        Ok(mut r) => {
            let x = r.state.take_best_param().ok_or_else(|| Error::Optimization("no iterate".into()))?;
            (x, r.problem.take_problem())
        }
        Err(e) => return Err(fail(e)),
    };
    let x = ParamVector::from_vec_unchecked(x);
    let g = match problem {
        Some(p) => (p.grad)(&x)?,
        None => return Err(Error::Optimization("solver dropped the problem".into())),
    };
    if !x.is_finite() {
        return Err(Error::Optimization("iterate became non-finite".into()));
    }
    let norm = g.norm();
    if norm > opts.grad_tol {
        return Err(Error::Optimization(format!(
            "gradient norm {norm:e} above {} after at most {} iterations",
            opts.grad_tol, opts.max_iter
        )));
    }
    Ok(x)
}
