use super::{DataFractions, LogisticTask, ParamVector, QuadraticTask};
use crate::error::Result;
use crate::rng::SimRng;

/// A federated objective `F(w) = Σ p_k F_k(w)`.
pub trait Objective: Send + Sync {
    fn num_clients(&self) -> usize;

    fn dim(&self) -> usize;

    fn fractions(&self) -> &DataFractions;

    /// Exact local objective `F_k(w)`.
    fn local_loss(&self, k: usize, w: &ParamVector) -> Result<f64>;

    fn local_gradient(&self, k: usize, w: &ParamVector) -> Result<ParamVector>;

    /// Stochastic gradient `g_k(w, ξ)` over a mini-batch of size `batch`
    /// together with the mean loss on that batch.
    fn stochastic_step(&self, k: usize, w: &ParamVector, batch: usize, rng: &mut SimRng)
        -> Result<(ParamVector, f64)>;

    /// Mini-batch estimate of `F_k(w)`; exact for sample-free objectives.
    fn estimated_loss(&self, k: usize, w: &ParamVector, batch: usize, rng: &mut SimRng) -> Result<f64>;

    fn global_loss(&self, w: &ParamVector) -> Result<f64> {
        let p = self.fractions();
        let mut total = 0.0;
        for k in 0..self.num_clients() {
            total += p.get(k) * self.local_loss(k, w)?;
        }
        Ok(total)
    }
}

/// The built-in objective families.
#[derive(Debug, Clone)]
pub enum Task {
    Quadratic(QuadraticTask),
    Logistic(LogisticTask),
}

impl Task {
    pub fn kind(&self) -> &'static str {
        match self {
            Task::Quadratic(_) => "quadratic",
            Task::Logistic(_) => "logistic",
        }
    }

    pub fn as_quadratic(&self) -> Option<&QuadraticTask> {
        match self {
            Task::Quadratic(q) => Some(q),
            Task::Logistic(_) => None,
        }
    }
}

impl Objective for QuadraticTask {
    fn num_clients(&self) -> usize {
        QuadraticTask::num_clients(self)
    }

    fn dim(&self) -> usize {
        QuadraticTask::dim(self)
    }

    fn fractions(&self) -> &DataFractions {
        QuadraticTask::fractions(self)
    }

    fn local_loss(&self, k: usize, w: &ParamVector) -> Result<f64> {
        self.loss(k, w)
    }

    fn local_gradient(&self, k: usize, w: &ParamVector) -> Result<ParamVector> {
        self.gradient(k, w)
    }

    // Sample-free: every "mini-batch" is the whole objective.
    fn stochastic_step(&self, k: usize, w: &ParamVector, _batch: usize, _rng: &mut SimRng)
        -> Result<(ParamVector, f64)> {
        Ok((self.gradient(k, w)?, self.loss(k, w)?))
    }

    fn estimated_loss(&self, k: usize, w: &ParamVector, _batch: usize, _rng: &mut SimRng) -> Result<f64> {
        self.loss(k, w)
    }

    fn global_loss(&self, w: &ParamVector) -> Result<f64> {
        QuadraticTask::global_loss(self, w)
    }
}

impl Objective for LogisticTask {
    fn num_clients(&self) -> usize {
        LogisticTask::num_clients(self)
    }

    fn dim(&self) -> usize {
        LogisticTask::param_dim()
    }

    fn fractions(&self) -> &DataFractions {
        LogisticTask::fractions(self)
    }

    fn local_loss(&self, k: usize, w: &ParamVector) -> Result<f64> {
        self.loss(k, w)
    }

    fn local_gradient(&self, k: usize, w: &ParamVector) -> Result<ParamVector> {
        self.gradient(k, w)
    }

    fn stochastic_step(&self, k: usize, w: &ParamVector, batch: usize, rng: &mut SimRng)
        -> Result<(ParamVector, f64)> {
        self.stochastic_gradient(k, w, batch, rng)
    }

    fn estimated_loss(&self, k: usize, w: &ParamVector, batch: usize, rng: &mut SimRng) -> Result<f64> {
        self.minibatch_loss(k, w, batch, rng)
    }
}

macro_rules! delegate {
    ($self:ident, $t:ident => $e:expr) => {
        match $self {
            Task::Quadratic($t) => $e,
            Task::Logistic($t) => $e,
        }
    };
}

impl Objective for Task {
    fn num_clients(&self) -> usize {
        delegate!(self, t => Objective::num_clients(t))
    }

    fn dim(&self) -> usize {
        delegate!(self, t => Objective::dim(t))
    }

    fn fractions(&self) -> &DataFractions {
        delegate!(self, t => Objective::fractions(t))
    }

    fn local_loss(&self, k: usize, w: &ParamVector) -> Result<f64> {
        delegate!(self, t => t.local_loss(k, w))
    }

    fn local_gradient(&self, k: usize, w: &ParamVector) -> Result<ParamVector> {
        delegate!(self, t => t.local_gradient(k, w))
    }

    fn stochastic_step(&self, k: usize, w: &ParamVector, batch: usize, rng: &mut SimRng)
        -> Result<(ParamVector, f64)> {
        delegate!(self, t => t.stochastic_step(k, w, batch, rng))
    }

    fn estimated_loss(&self, k: usize, w: &ParamVector, batch: usize, rng: &mut SimRng) -> Result<f64> {
        delegate!(self, t => t.estimated_loss(k, w, batch, rng))
    }

    fn global_loss(&self, w: &ParamVector) -> Result<f64> {
        delegate!(self, t => Objective::global_loss(t, w))
    }
}
