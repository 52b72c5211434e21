use std::io::Write;
use std::path::{Path, PathBuf};

use log::{info, warn};
use serde::Serialize;

use super::run::{create, finish};
use super::ExperimentSpec;
use crate::error::{Error, Result};
use crate::model::Task;
use crate::selection::SelectionKind;
use crate::skew::{estimate_rho_bounds, ClientOptima, MinimizeOptions, SkewEstimate, SkewStrategy};

pub const SKEW_REPORT_FILE: &str = "skew_report.toml";
pub const SKEW_TABLE_FILE: &str = "skew_table.csv";

#[derive(Serialize)]
struct Report<'a> {
    name: &'a str,
    /// Grid minima over-estimate the true `ρ̄`.
    note: &'static str,
    estimate: &'a [SkewEstimate],
}

/// Estimates `ρ̄`, `ρ̃` for every strategy of `spec` (history-dependent
/// `rpow-d` entries are skipped) and writes the key-value report plus a
/// `strategy,d,rho_bar,rho_tilde,ratio,gamma` table.
pub fn run_skew(spec: &ExperimentSpec, task: &Task, out: &Path) -> Result<(PathBuf, PathBuf)> {
    let optima = ClientOptima::for_task(task, &MinimizeOptions::default())?;
    let grid = spec.skew.grid(spec.base_seed);
    let mut estimates = Vec::new();
    for s in &spec.strategies {
        if s.kind == SelectionKind::RpowD {
            warn!("{}: skew depends on the loss history; skipped", s.label());
            continue;
        }
        let est = estimate_rho_bounds(task, &optima, SkewStrategy::new(*s, spec.aggregation), &grid)?;
        info!("{}: rho_bar {} rho_tilde {}", est.strategy, est.rho_bar, est.rho_tilde);
        estimates.push(est);
    }
    if estimates.is_empty() {
        return Err(Error::Config("no strategy supports skew estimation".into()));
    }

    let report = out.join(SKEW_REPORT_FILE);
    let text = toml::to_string(&Report {
        name: &spec.name,
        note: "rho_bar is a grid minimum and therefore an upper estimate of the true minimum",
        estimate: &estimates,
    })
    .map_err(|e| Error::format("skew report", e))?;
    let mut w = create(&report)?;
    w.write_all(text.as_bytes()).map_err(|e| Error::io(&report, e))?;
    finish(w, &report)?;

    let table = out.join(SKEW_TABLE_FILE);
    let mut w = create(&table)?;
    let io = |e| Error::io(&table, e);
    writeln!(w, "strategy,d,rho_bar,rho_tilde,ratio,gamma").map_err(io)?;
    for (s, e) in spec
        .strategies
        .iter()
        .filter(|s| s.kind != SelectionKind::RpowD)
        .zip(&estimates)
    {
        let d = if s.kind == SelectionKind::Rand { String::new() } else { s.d.to_string() };
        writeln!(
            w,
            "{},{d},{},{},{},{}",
            e.strategy,
            e.rho_bar,
            e.rho_tilde,
            e.rho_tilde / e.rho_bar,
            e.gamma
        )
        .map_err(io)?;
    }
    finish(w, &table)?;
    Ok((report, table))
}
