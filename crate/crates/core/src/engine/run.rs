use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use super::{aggregate, local_sgd, selection_weights, Aggregation, LocalUpdate, LrSchedule};
use crate::error::{Error, Result};
use crate::model::{Objective, ParamVector};
use crate::rng::{stream, Domain, SimRng};
use crate::selection::{AvailabilityModel, SelectionConfig, Selector};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RunConfig {
    pub selection: SelectionConfig,
    /// Local steps per round, `τ`.
    pub local_steps: usize,
    pub rounds: usize,
    pub batch_size: usize,
    pub lr: LrSchedule,
    #[serde(default)]
    pub aggregation: Aggregation,
    #[serde(default)]
    pub availability: AvailabilityModel,
    pub seed: u64,
    /// Initial global model; zeros when absent.
    #[serde(default)]
    pub init: Option<ParamVector>,
    /// Run the selected clients' local updates on the rayon pool.
    #[serde(default = "default_parallel")]
    pub parallel: bool,
}

fn default_parallel() -> bool {
    true
}

impl RunConfig {
    pub fn new(selection: SelectionConfig, local_steps: usize, rounds: usize, lr: LrSchedule, seed: u64) -> Self {
        RunConfig {
            selection,
            local_steps,
            rounds,
            batch_size: 1,
            lr,
            aggregation: Aggregation::SimpleMean,
            availability: AvailabilityModel::AlwaysOn,
            seed,
            init: None,
            parallel: true,
        }
    }

    pub fn validate(&self, task: &dyn Objective) -> Result<()> {
        if self.local_steps == 0 {
            return Err(Error::invalid("local_steps must be at least 1"));
        }
        if self.rounds == 0 {
            return Err(Error::invalid("rounds must be at least 1"));
        }
        if self.batch_size == 0 {
            return Err(Error::invalid("batch_size must be at least 1"));
        }
        self.lr.validate()?;
        self.selection.validate(task.num_clients())?;
        self.availability.validate(task.num_clients())?;
        if let Some(w) = &self.init {
            w.check_dim(task.dim())?;
        }
        Ok(())
    }
}

/// Telemetry for one communication round.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RoundRecord {
    pub round: usize,
    /// Local iterations completed after this round, `t`.
    pub iteration: usize,
    /// Selected clients, sorted; duplicates are separate participants.
    pub selected: Vec<usize>,
    /// `F(w̄)` on the post-aggregation model.
    pub global_loss: f64,
    /// Accumulated average loss each selected participant reported,
    /// aligned with `selected`.
    pub reported_losses: Vec<f64>,
    pub eval_metric: Option<f64>,
    /// Learning rate at the round's first local step.
    pub lr: f64,
}

type Evaluator<'a> = dyn Fn(&ParamVector) -> Result<f64> + Sync + 'a;

/// Round-by-round FedAvg driver.
pub struct Trainer<'a> {
    task: &'a dyn Objective,
    config: RunConfig,
    selector: Selector,
    global: ParamVector,
    round: usize,
    iteration: usize,
    selection_rng: SimRng,
    availability_rng: SimRng,
    evaluator: Option<&'a Evaluator<'a>>,
}

impl<'a> Trainer<'a> {
    pub fn new(task: &'a dyn Objective, config: RunConfig) -> Result<Self> {
        config.validate(task)?;
        let selector = Selector::new(config.selection, task.num_clients())?;
        let global = config.init.clone().unwrap_or_else(|| ParamVector::zeros(task.dim()));
        Ok(Trainer {
            task,
            selector,
            global,
            round: 0,
            iteration: 0,
            selection_rng: stream(config.seed, Domain::Selection, &[]),
            availability_rng: stream(config.seed, Domain::Availability, &[]),
            evaluator: None,
            config,
        })
    }

    /// Attaches an evaluation metric recorded after every round.
    pub fn with_evaluator(mut self, eval: &'a Evaluator<'a>) -> Self {
        self.evaluator = Some(eval);
        self
    }

    pub fn global_model(&self) -> &ParamVector {
        &self.global
    }

    pub fn round(&self) -> usize {
        self.round
    }

    pub fn iteration(&self) -> usize {
        self.iteration
    }

    pub fn selector(&self) -> &Selector {
        &self.selector
    }

    pub fn config(&self) -> &RunConfig {
        &self.config
    }

    pub fn is_finished(&self) -> bool {
        self.round >= self.config.rounds
    }

    /// Runs one round: availability, selection at the current global model,
    /// `τ` local steps per participant, aggregation.
    pub fn step(&mut self) -> Result<RoundRecord> {
        let task = self.task;
        let k_total = task.num_clients();
        let round = self.round;
        let pool = self.config.availability.pool(round, k_total, &mut self.availability_rng);
        let selected = self.selector.select(task, &self.global, &pool, &mut self.selection_rng)?;

        // Copies of the same client train independently on their own streams.
        let slots: Vec<(usize, u64)> = selected
            .iter()
            .enumerate()
            .map(|(i, &k)| (k, selected[..i].iter().filter(|&&j| j == k).count() as u64))
            .collect();

        let seed = self.config.seed;
        let start = &self.global;
        let cfg = &self.config;
        let t0 = self.iteration;
        let train = |&(k, copy): &(usize, u64)| -> Result<LocalUpdate> {
            let mut rng = stream(seed, Domain::Local, &[round as u64, k as u64, copy]);
            local_sgd(task, k, start, cfg.local_steps, &cfg.lr, round, t0, cfg.batch_size, &mut rng)
        };
        let updates: Vec<LocalUpdate> = if cfg.parallel {
            slots.par_iter().map(train).collect::<Result<_>>()?
        } else {
            slots.iter().map(train).collect::<Result<_>>()?
        };

        let weights = selection_weights(cfg.aggregation, task.fractions(), &selected)?;
        let models: Vec<ParamVector> = updates.iter().map(|u| u.model.clone()).collect();
        let next = aggregate(&models, Some(&weights))?;
        if !next.is_finite() {
            return Err(Error::Divergence {
                round,
                client: selected[0],
            });
        }

        let reported: Vec<f64> = updates.iter().map(|u| u.avg_loss).collect();
        for (&k, &loss) in selected.iter().zip(&reported) {
            self.selector.report_round_loss(k, loss);
        }

        let lr = cfg.lr.rate(round, t0);
        self.global = next;
        self.iteration += cfg.local_steps;
        self.round += 1;
        let global_loss = task.global_loss(&self.global)?;
        if !global_loss.is_finite() {
            return Err(Error::Divergence {
                round,
                client: selected[0],
            });
        }
        let eval_metric = self.evaluator.map(|f| f(&self.global)).transpose()?;
        Ok(RoundRecord {
            round,
            iteration: self.iteration,
            selected,
            global_loss,
            reported_losses: reported,
            eval_metric,
            lr,
        })
    }
}

/// Runs every configured round.
pub fn run_training(task: &dyn Objective, config: &RunConfig) -> Result<Vec<RoundRecord>> {
    let mut trainer = Trainer::new(task, config.clone())?;
    let mut records = Vec::with_capacity(config.rounds);
    while !trainer.is_finished() {
        records.push(trainer.step()?);
    }
    Ok(records)
}
