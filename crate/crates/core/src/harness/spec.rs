use std::fs::File;
use std::io::BufReader;
use std::path::{Path, PathBuf};
use std::sync::Arc;

use serde::{Deserialize, Serialize};

use crate::engine::{Aggregation, LrSchedule, RunConfig, Target};
use crate::error::{Error, Result};
use crate::model::{LogisticTask, QuadraticTask, SyntheticDataset, SyntheticParams, Task};
use crate::selection::{AvailabilityModel, SelectionConfig};
use crate::skew::{GridPairing, GridSpec};

/// Version of the spec-file schema this build reads.
pub const SCHEMA_VERSION: u32 = 1;

fn one() -> usize {
    1
}

/// Objective to train on.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case", deny_unknown_fields)]
pub enum TaskSpec {
    Quadratic {
        clients: usize,
        dim: usize,
        power_law_a: f64,
        #[serde(default)]
        seed: u64,
    },
    Synthetic {
        alpha: f64,
        beta: f64,
        clients: usize,
        power_law_a: f64,
        #[serde(default)]
        max_samples: Option<usize>,
        #[serde(default)]
        seed: u64,
        #[serde(default)]
        l2: f64,
        /// Read the samples from a JSONL export instead of generating them;
        /// relative to the spec file.
        #[serde(default)]
        dataset: Option<PathBuf>,
    },
}

impl TaskSpec {
    /// Builds the task; `base` resolves relative dataset paths.
    pub fn build(&self, base: &Path) -> Result<Task> {
        match self {
            TaskSpec::Quadratic {
                clients,
                dim,
                power_law_a,
                seed,
            } => Ok(Task::Quadratic(QuadraticTask::generate(*clients, *dim, *power_law_a, *seed)?)),
            TaskSpec::Synthetic {
                alpha,
                beta,
                clients,
                power_law_a,
                max_samples,
                seed,
                l2,
                dataset,
            } => {
                let data = match dataset {
                    Some(path) => {
                        let path = base.join(path);
                        let f = File::open(&path).map_err(|e| Error::io(&path, e))?;
                        SyntheticDataset::read_jsonl(BufReader::new(f))?
                    }
                    None => {
                        let mut p = SyntheticParams::new(*alpha, *beta, *clients, *power_law_a, *seed);
                        if let Some(n) = max_samples {
                            p.max_samples = *n;
                        }
                        SyntheticDataset::generate(p)?
                    }
                };
                Ok(Task::Logistic(LogisticTask::new(Arc::new(data)).with_l2(*l2)?))
            }
        }
    }
}

/// Grid settings of the `skew` subcommand; the grid seed is the spec's
/// base seed.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct SkewSection {
    pub samples_per_role: usize,
    pub half_width_factor: f64,
    pub min_half_width: f64,
    pub draws: usize,
    pub pairing: GridPairing,
}

impl Default for SkewSection {
    fn default() -> Self {
        let g = GridSpec::default();
        SkewSection {
            samples_per_role: g.samples_per_role,
            half_width_factor: g.half_width_factor,
            min_half_width: g.min_half_width,
            draws: g.draws,
            pairing: g.pairing,
        }
    }
}

impl SkewSection {
    pub fn grid(&self, seed: u64) -> GridSpec {
        GridSpec {
            samples_per_role: self.samples_per_role,
            half_width_factor: self.half_width_factor,
            min_half_width: self.min_half_width,
            draws: self.draws,
            seed,
            pairing: self.pairing,
        }
    }
}

/// A strategy comparison: every strategy is run once per seed on the same
/// task.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ExperimentSpec {
    pub schema_version: u32,
    pub name: String,
    pub task: TaskSpec,
    pub rounds: usize,
    pub local_steps: usize,
    #[serde(default = "one")]
    pub batch_size: usize,
    pub lr: LrSchedule,
    #[serde(default)]
    pub aggregation: Aggregation,
    #[serde(default)]
    pub availability: AvailabilityModel,
    pub strategies: Vec<SelectionConfig>,
    /// Runs per strategy; run `i` uses seed `base_seed + i`.
    #[serde(default = "one")]
    pub seeds: usize,
    #[serde(default)]
    pub base_seed: u64,
    #[serde(default)]
    pub out_dir: Option<PathBuf>,
    /// Comparison target: first round with global loss at most this value.
    #[serde(default)]
    pub target_loss: Option<f64>,
    #[serde(default)]
    pub skew: SkewSection,
}

impl ExperimentSpec {
    pub fn from_toml(text: &str) -> Result<Self> {
        let spec: ExperimentSpec = toml::from_str(text).map_err(|e| Error::Config(e.to_string()))?;
        spec.validate()?;
        Ok(spec)
    }

    /// Checks everything that does not need the task itself.
    pub fn validate(&self) -> Result<()> {
        let cfg = |msg: String| Err(Error::Config(msg));
        if self.schema_version != SCHEMA_VERSION {
            return cfg(format!(
                "schema_version {} is not supported (expected {SCHEMA_VERSION})",
                self.schema_version
            ));
        }
        if self.strategies.is_empty() {
            return cfg("strategy list is empty".into());
        }
        if self.seeds == 0 {
            return cfg("seeds must be at least 1".into());
        }
        let mut labels: Vec<String> = self.strategies.iter().map(|s| s.label()).collect();
        labels.sort();
        if let Some(w) = labels.windows(2).find(|w| w[0] == w[1]) {
            return cfg(format!("strategy {} is listed twice", w[0]));
        }
        if let Some(t) = self.target_loss {
            if !t.is_finite() {
                return cfg("target_loss must be finite".into());
            }
        }
        Ok(())
    }

    pub fn target(&self) -> Option<Target> {
        self.target_loss.map(Target::LossAtMost)
    }

    pub fn seed_list(&self) -> Vec<u64> {
        (0..self.seeds as u64).map(|i| self.base_seed + i).collect()
    }

    pub fn run_config(&self, selection: SelectionConfig, seed: u64) -> RunConfig {
        RunConfig {
            selection,
            local_steps: self.local_steps,
            rounds: self.rounds,
            batch_size: self.batch_size,
            lr: self.lr.clone(),
            aggregation: self.aggregation,
            availability: self.availability,
            seed,
            init: None,
            parallel: true,
        }
    }

    /// Builds the task and validates every run configuration against it.
    pub fn build_task(&self, base: &Path) -> Result<Task> {
        let task = self.task.build(base)?;
        for s in &self.strategies {
            self.run_config(*s, self.base_seed)
                .validate(&task)
                .map_err(|e| Error::Config(format!("strategy {}: {e}", s.label())))?;
        }
        Ok(task)
    }
}

/// Reads and validates a spec file.
pub fn load_spec(path: &Path) -> Result<ExperimentSpec> {
    let text = std::fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
    ExperimentSpec::from_toml(&text).map_err(|e| match e {
        Error::Config(msg) => Error::Config(format!("{}: {msg}", path.display())),
        other => other,
    })
}
