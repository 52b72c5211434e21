use std::fs::File;
use std::io::Write;
use std::path::{Path, PathBuf};

use super::run::{collect_metrics, create, finish, FRACTIONS_FILE};
use crate::error::{Error, Result};
use crate::selection::{frequency_profile, read_history, sorted_profile};

pub const FREQUENCY_FILE: &str = "frequency.csv";

fn read_fractions(path: &Path) -> Result<Vec<f64>> {
    let f = File::open(path).map_err(|e| Error::io(path, e))?;
    let mut r = csv::Reader::from_reader(f);
    let mut out = Vec::new();
    for (i, rec) in r.records().enumerate() {
        let rec = rec.map_err(|e| Error::format("fractions", e))?;
        let k: usize = rec
            .get(0)
            .and_then(|v| v.parse().ok())
            .ok_or_else(|| Error::format("fractions", format!("row {}", i + 1)))?;
        let p: f64 = rec
            .get(1)
            .and_then(|v| v.parse().ok())
            .ok_or_else(|| Error::format("fractions", format!("row {}", i + 1)))?;
        if k != out.len() {
            return Err(Error::format("fractions", "client ids must be 0, 1, 2, ..."));
        }
        out.push(p);
    }
    Ok(out)
}

/// Selected-frequency profile of every strategy in a run directory, pooled
/// over seeds: rows `strategy,rank,client,ratio,p_k` in descending ratio
/// order.
pub fn run_freq(run_dir: &Path, out: &Path) -> Result<PathBuf> {
    let fractions = read_fractions(&run_dir.join(FRACTIONS_FILE))?;
    let groups = collect_metrics(run_dir)?;
    let path = out.join(FREQUENCY_FILE);
    let mut w = create(&path)?;
    let io = |e| Error::io(&path, e);
    writeln!(w, "strategy,rank,client,ratio,p_k").map_err(io)?;
    for (label, runs) in &groups {
        let mut history = Vec::new();
        for (_, file) in runs {
            let f = File::open(file).map_err(|e| Error::io(file, e))?;
            history.extend(read_history(f)?);
        }
        let ratios = frequency_profile(&history, fractions.len())?;
        for (rank, row) in sorted_profile(&ratios, &fractions).iter().enumerate() {
            writeln!(w, "{label},{},{},{},{}", rank + 1, row.client, row.ratio, row.fraction).map_err(io)?;
        }
    }
    finish(w, &path)?;
    Ok(path)
}
