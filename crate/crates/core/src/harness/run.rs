use std::collections::BTreeMap;
use std::fs::{self, File};
use std::io::{BufWriter, Write};
use std::path::{Path, PathBuf};

use log::info;
use rayon::prelude::*;
use serde::Serialize;

use super::ExperimentSpec;
use crate::engine::{read_metrics, run_training, write_metrics, write_summary, RunSummary, Target};
use crate::error::{Error, Result};
use crate::model::{Objective, Task};

pub const METRICS_DIR: &str = "metrics";
pub const SUMMARIES_DIR: &str = "summaries";
pub const FRACTIONS_FILE: &str = "fractions.csv";
pub const COMPARISON_FILE: &str = "comparison.csv";
pub const TARGETS_FILE: &str = "targets.csv";
pub const MANIFEST_FILE: &str = "manifest.toml";

pub(crate) fn create(path: &Path) -> Result<BufWriter<File>> {
    if let Some(dir) = path.parent() {
        fs::create_dir_all(dir).map_err(|e| Error::io(dir, e))?;
    }
    File::create(path).map(BufWriter::new).map_err(|e| Error::io(path, e))
}

pub(crate) fn finish(mut w: BufWriter<File>, path: &Path) -> Result<()> {
    w.flush().map_err(|e| Error::io(path, e))
}

/// `metrics/<strategy>_seed<seed>.csv`
pub fn metrics_path(out: &Path, strategy: &str, seed: u64) -> PathBuf {
    out.join(METRICS_DIR).join(format!("{strategy}_seed{seed}.csv"))
}

#[derive(Serialize)]
struct Manifest<'a> {
    name: &'a str,
    schema_version: u32,
    task: &'a str,
    clients: usize,
    base_seed: u64,
    seeds: Vec<u64>,
    strategies: Vec<String>,
}

/// Files written by [`run_experiment`].
#[derive(Debug, Clone, PartialEq)]
pub struct RunOutputs {
    pub metrics: Vec<PathBuf>,
    pub comparison: PathBuf,
    pub targets: PathBuf,
}

pub fn write_fractions(path: &Path, fractions: &[f64]) -> Result<()> {
    let mut w = create(path)?;
    let io = |e| Error::io(path, e);
    writeln!(w, "client,p_k").map_err(io)?;
    for (k, p) in fractions.iter().enumerate() {
        writeln!(w, "{k},{p}").map_err(io)?;
    }
    finish(w, path)
}

/// Runs every (strategy, seed) pair of `spec` and writes per-run metrics
/// and summaries, then the cross-seed comparison. Runs execute on the
/// current rayon pool.
pub fn run_experiment(spec: &ExperimentSpec, task: &Task, out: &Path) -> Result<RunOutputs> {
    fs::create_dir_all(out).map_err(|e| Error::io(out, e))?;
    let labels: Vec<String> = spec.strategies.iter().map(|s| s.label()).collect();
    let manifest = Manifest {
        name: &spec.name,
        schema_version: spec.schema_version,
        task: task.kind(),
        clients: task.num_clients(),
        base_seed: spec.base_seed,
        seeds: spec.seed_list(),
        strategies: labels.clone(),
    };
    let text = toml::to_string(&manifest).map_err(|e| Error::format("manifest", e))?;
    let manifest_path = out.join(MANIFEST_FILE);
    fs::write(&manifest_path, text).map_err(|e| Error::io(&manifest_path, e))?;
    write_fractions(&out.join(FRACTIONS_FILE), task.fractions().as_slice())?;

    let jobs: Vec<(usize, u64)> = (0..spec.strategies.len())
        .flat_map(|i| spec.seed_list().into_iter().map(move |s| (i, s)))
        .collect();
    let target = spec.target();
    let metrics = jobs
        .par_iter()
        .map(|&(i, seed)| {
            let label = &labels[i];
            let config = spec.run_config(spec.strategies[i], seed);
            let records = run_training(task, &config)?;
            let path = metrics_path(out, label, seed);
            let mut w = create(&path)?;
            write_metrics(&mut w, &records)?;
            finish(w, &path)?;

            let summary = RunSummary::from_records(label, seed, &records, target)?;
            let spath = out.join(SUMMARIES_DIR).join(format!("{label}_seed{seed}.toml"));
            let mut w = create(&spath)?;
            write_summary(&mut w, &summary)?;
            finish(w, &spath)?;
            info!("{label} seed {seed}: final loss {}", summary.final_loss);
            Ok(path)
        })
        .collect::<Result<Vec<_>>>()?;

    let (comparison, targets) = summarize(out, target)?;
    Ok(RunOutputs {
        metrics,
        comparison,
        targets,
    })
}

/// Metrics files of a run directory grouped by strategy, each group sorted
/// by seed.
pub fn collect_metrics(out: &Path) -> Result<BTreeMap<String, Vec<(u64, PathBuf)>>> {
    let dir = out.join(METRICS_DIR);
    let entries = fs::read_dir(&dir).map_err(|e| Error::io(&dir, e))?;
    let mut groups: BTreeMap<String, Vec<(u64, PathBuf)>> = BTreeMap::new();
    for entry in entries {
        let path = entry.map_err(|e| Error::io(&dir, e))?.path();
        if path.extension().and_then(|e| e.to_str()) != Some("csv") {
            continue;
        }
        let stem = path.file_stem().and_then(|s| s.to_str()).unwrap_or_default();
        let Some((label, seed)) = stem.rsplit_once("_seed") else {
            continue;
        };
        let Ok(seed) = seed.parse::<u64>() else {
            continue;
        };
        groups.entry(label.to_string()).or_default().push((seed, path));
    }
    for runs in groups.values_mut() {
        runs.sort();
    }
    if groups.is_empty() {
        return Err(Error::Config(format!("no metrics files in {}", dir.display())));
    }
    Ok(groups)
}

fn mean_std(values: &[f64]) -> (f64, f64) {
    let n = values.len() as f64;
    let mean = values.iter().sum::<f64>() / n;
    if values.len() < 2 {
        return (mean, 0.0);
    }
    let var = values.iter().map(|v| (v - mean) * (v - mean)).sum::<f64>() / (n - 1.0);
    (mean, var.sqrt())
}

/// Rebuilds `comparison.csv` (mean and sample std of the global loss per
/// round across seeds) and `targets.csv` (rounds-to-target per strategy)
/// from the metrics files alone.
pub fn summarize(out: &Path, target: Option<Target>) -> Result<(PathBuf, PathBuf)> {
    let groups = collect_metrics(out)?;
    let comparison = out.join(COMPARISON_FILE);
    let targets = out.join(TARGETS_FILE);
    let mut cw = create(&comparison)?;
    let mut tw = create(&targets)?;
    let cio = |e| Error::io(&comparison, e);
    let tio = |e| Error::io(&targets, e);
    writeln!(cw, "strategy,round,t,mean_loss,std_loss,runs").map_err(cio)?;
    writeln!(
        tw,
        "strategy,runs,reached,mean_rounds_to_target,mean_curve_rounds_to_target,final_mean_loss,final_std_loss"
    )
    .map_err(tio)?;
    for (label, runs) in &groups {
        let mut all = Vec::with_capacity(runs.len());
        for (_, path) in runs {
            let f = File::open(path).map_err(|e| Error::io(path, e))?;
            let records = read_metrics(f)?;
            if records.is_empty() {
                return Err(Error::format("metrics", format!("{} has no rows", path.display())));
            }
            all.push(records);
        }
        let rounds = all.iter().map(Vec::len).min().unwrap_or(0);
        let mut mean_curve = Vec::with_capacity(rounds);
        for r in 0..rounds {
            let losses: Vec<f64> = all.iter().map(|rs| rs[r].global_loss).collect();
            let (mean, std) = mean_std(&losses);
            mean_curve.push(mean);
            let rec = &all[0][r];
            writeln!(cw, "{label},{},{},{mean},{std},{}", rec.round, rec.iteration, all.len()).map_err(cio)?;
        }
        let finals: Vec<f64> = all.iter().map(|rs| rs[rounds - 1].global_loss).collect();
        let (fmean, fstd) = mean_std(&finals);
        let (reached, mean_r, curve_r) = match target {
            Some(t) => {
                let hits: Vec<f64> = all
                    .iter()
                    .filter_map(|rs| crate::engine::rounds_to_target(rs, t))
                    .map(|r| r as f64)
                    .collect();
                let mean_r = if hits.is_empty() {
                    String::new()
                } else {
                    mean_std(&hits).0.to_string()
                };
                let curve = match t {
                    Target::LossAtMost(v) => mean_curve.iter().position(|&l| l <= v).map(|i| i + 1),
                    Target::EvalAtLeast(_) => None,
                };
                (hits.len().to_string(), mean_r, curve.map(|c| c.to_string()).unwrap_or_default())
            }
            None => (String::new(), String::new(), String::new()),
        };
        writeln!(tw, "{label},{},{reached},{mean_r},{curve_r},{fmean},{fstd}", all.len()).map_err(tio)?;
    }
    finish(cw, &comparison)?;
    finish(tw, &targets)?;
    Ok((comparison, targets))
}
