use std::io::Write;
use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};

use super::run::{create, finish};
use super::{load_spec, SCHEMA_VERSION};
use crate::engine::{LrSchedule, Trainer};
use crate::error::{Error, Result};
use crate::model::Objective;
use crate::skew::{
    bound_table, estimate_rho_bounds, estimate_theory_params, write_bound_table, BoundInputs, ClientOptima,
    SkewStrategy,
};

pub const BOUNDS_FILE: &str = "bounds.csv";
pub const BOUND_INPUTS_FILE: &str = "bound_inputs.toml";

/// Derive the bound inputs from an experiment spec on a quadratic task.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct DeriveSection {
    /// Experiment spec, relative to the bound file.
    pub spec: PathBuf,
    /// Label of the strategy to analyse, e.g. `pow-d9`.
    pub strategy: String,
    /// Rounds of the decaying-rate run whose trajectory sets `G`.
    pub trajectory_rounds: usize,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct BoundFile {
    pub schema_version: u32,
    pub horizons: Vec<u64>,
    /// Also evaluate the fixed-rate bound at this rate.
    #[serde(default)]
    pub eta: Option<f64>,
    #[serde(default)]
    pub inputs: Option<BoundInputs>,
    #[serde(default)]
    pub derive: Option<DeriveSection>,
}

impl BoundFile {
    pub fn from_toml(text: &str) -> Result<Self> {
        let f: BoundFile = toml::from_str(text).map_err(|e| Error::Config(e.to_string()))?;
        if f.schema_version != SCHEMA_VERSION {
            return Err(Error::Config(format!(
                "schema_version {} is not supported (expected {SCHEMA_VERSION})",
                f.schema_version
            )));
        }
        if f.horizons.is_empty() {
            return Err(Error::Config("horizons is empty".into()));
        }
        if f.inputs.is_some() == f.derive.is_some() {
            return Err(Error::Config("give exactly one of [inputs] and [derive]".into()));
        }
        Ok(f)
    }
}

/// Bound inputs for one strategy of an experiment spec: theory constants
/// from a decaying-rate trajectory, `ρ̄`/`ρ̃`/`Γ` from the skew grid, and the
/// starting point `w̄⁽⁰⁾ = 0`.
pub fn derive_inputs(section: &DeriveSection, base: &Path, seed: Option<u64>) -> Result<BoundInputs> {
    let spec_path = base.join(&section.spec);
    let mut spec = load_spec(&spec_path)?;
    if let Some(s) = seed {
        spec.base_seed = s;
    }
    let strategy = *spec
        .strategies
        .iter()
        .find(|s| s.label() == section.strategy)
        .ok_or_else(|| Error::Config(format!("strategy {} not in {}", section.strategy, spec_path.display())))?;
    let spec_dir = spec_path.parent().unwrap_or(Path::new("."));
    let task = spec.task.build(spec_dir)?;
    let quad = task
        .as_quadratic()
        .ok_or_else(|| Error::Unsupported(format!("deriving bound inputs for the {} task", task.kind())))?;
    let h = quad.curvatures();
    let l = h.iter().copied().fold(f64::NEG_INFINITY, f64::max);
    let mu = h.iter().copied().fold(f64::INFINITY, f64::min);

    let mut config = spec.run_config(strategy, spec.base_seed);
    config.lr = LrSchedule::strongly_convex(l, mu);
    config.rounds = section.trajectory_rounds;
    let mut trainer = Trainer::new(&task, config)?;
    let mut trajectory = vec![trainer.global_model().clone()];
    while !trainer.is_finished() {
        trainer.step()?;
        trajectory.push(trainer.global_model().clone());
    }
    let theory = estimate_theory_params(&task, &trajectory, spec.local_steps, strategy.m)?;

    let optima = ClientOptima::from_quadratic(quad);
    let est = estimate_rho_bounds(
        &task,
        &optima,
        SkewStrategy::new(strategy, spec.aggregation),
        &spec.skew.grid(spec.base_seed),
    )?;
    let w0 = &trajectory[0];
    Ok(BoundInputs {
        theory,
        gamma_gap: est.gamma,
        rho_bar: est.rho_bar,
        rho_tilde: est.rho_tilde,
        init_dist_sq: w0.distance_sq(&optima.global),
        init_excess: Some((task.global_loss(w0)? - optima.global_loss).max(0.0)),
    })
}

/// Evaluates the bounds described by a bound file and writes
/// `bounds.csv` and the inputs used to `bound_inputs.toml`.
pub fn run_bound(path: &Path, out: &Path, seed: Option<u64>) -> Result<(PathBuf, BoundInputs)> {
    let text = std::fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
    let file = BoundFile::from_toml(&text).map_err(|e| match e {
        Error::Config(msg) => Error::Config(format!("{}: {msg}", path.display())),
        other => other,
    })?;
    let inputs = match (&file.inputs, &file.derive) {
        (Some(i), _) => *i,
        (None, Some(d)) => derive_inputs(d, path.parent().unwrap_or(Path::new(".")), seed)?,
        (None, None) => unreachable!("checked in from_toml"),
    };
    let rows = bound_table(&inputs, &file.horizons, file.eta)?;

    let table = out.join(BOUNDS_FILE);
    let mut w = create(&table)?;
    write_bound_table(&mut w, &rows)?;
    finish(w, &table)?;

    let ipath = out.join(BOUND_INPUTS_FILE);
    let text = toml::to_string(&inputs).map_err(|e| Error::format("bound inputs", e))?;
    let mut w = create(&ipath)?;
    w.write_all(text.as_bytes()).map_err(|e| Error::io(&ipath, e))?;
    finish(w, &ipath)?;
    Ok((table, inputs))
}
