//! Per-run metrics files.
//!
//! One CSV row per round with the stable column contract
//! `round,t,global_loss,eval_metric,selected_ids,lr`. Floats use Rust's
//! shortest round-trip formatting; `eval_metric` is empty when not recorded
//! and `selected_ids` is a `;`-separated id list.

use std::io::{Read, Write};

use serde::{Deserialize, Serialize};

use super::RoundRecord;
use crate::error::{Error, Result};
use crate::selection::{format_ids, parse_ids};

pub const METRICS_COLUMNS: [&str; 6] = ["round", "t", "global_loss", "eval_metric", "selected_ids", "lr"];

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "metric", content = "value", rename_all = "snake_case")]
pub enum Target {
    LossAtMost(f64),
    EvalAtLeast(f64),
}

/// Rounds completed when `target` is first met (`round + 1` of the first
/// qualifying record).
pub fn rounds_to_target(records: &[RoundRecord], target: Target) -> Option<usize> {
    records
        .iter()
        .find(|r| match target {
            Target::LossAtMost(v) => r.global_loss <= v,
            Target::EvalAtLeast(v) => r.eval_metric.is_some_and(|e| e >= v),
        })
        .map(|r| r.round + 1)
}

pub fn write_metrics<W: Write>(out: W, records: &[RoundRecord]) -> Result<()> {
    let err = |e: csv::Error| Error::format("metrics", e);
    let mut w = csv::Writer::from_writer(out);
    w.write_record(METRICS_COLUMNS).map_err(err)?;
    for r in records {
        w.write_record([
            r.round.to_string(),
            r.iteration.to_string(),
            r.global_loss.to_string(),
            r.eval_metric.map(|v| v.to_string()).unwrap_or_default(),
            format_ids(&r.selected),
            r.lr.to_string(),
        ])
        .map_err(err)?;
    }
    w.flush().map_err(|e| Error::format("metrics", e))?;
    Ok(())
}

/// Parses a metrics file back into records (reported losses are not part of
/// the file and come back empty).
pub fn read_metrics<R: Read>(input: R) -> Result<Vec<RoundRecord>> {
    let mut r = csv::Reader::from_reader(input);
    let headers = r.headers().map_err(|e| Error::format("metrics", e))?.clone();
    let col = |name: &str| {
        headers
            .iter()
            .position(|h| h == name)
            .ok_or_else(|| Error::format("metrics", format!("missing column {name}")))
    };
    let (c_round, c_t, c_loss, c_eval, c_ids, c_lr) = (
        col("round")?,
        col("t")?,
        col("global_loss")?,
        col("eval_metric")?,
        col("selected_ids")?,
        col("lr")?,
    );
    let num = |s: &str, what: &str| -> Result<f64> {
        s.parse::<f64>().map_err(|e| Error::format("metrics", format!("{what}: {e}")))
    };
    let mut out = Vec::new();
    for rec in r.records() {
        let rec = rec.map_err(|e| Error::format("metrics", e))?;
        let eval = &rec[c_eval];
        out.push(RoundRecord {
            round: rec[c_round].parse().map_err(|e| Error::format("metrics round", e))?,
            iteration: rec[c_t].parse().map_err(|e| Error::format("metrics t", e))?,
            global_loss: num(&rec[c_loss], "global_loss")?,
            eval_metric: if eval.is_empty() { None } else { Some(num(eval, "eval_metric")?) },
            selected: parse_ids(&rec[c_ids])?,
            reported_losses: Vec::new(),
            lr: num(&rec[c_lr], "lr")?,
        });
    }
    Ok(out)
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RunSummary {
    pub strategy: String,
    pub seed: u64,
    pub rounds: usize,
    pub final_loss: f64,
    pub min_loss: f64,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub target: Option<Target>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub rounds_to_target: Option<usize>,
}

impl RunSummary {
    pub fn from_records(strategy: &str, seed: u64, records: &[RoundRecord], target: Option<Target>) -> Result<Self> {
        let last = records.last().ok_or_else(|| Error::invalid("no records to summarize"))?;
        Ok(RunSummary {
            strategy: strategy.to_string(),
            seed,
            rounds: records.len(),
            final_loss: last.global_loss,
            min_loss: records.iter().map(|r| r.global_loss).fold(f64::INFINITY, f64::min),
            target,
            rounds_to_target: target.and_then(|t| rounds_to_target(records, t)),
        })
    }
}

/// Key-value (TOML) summary.
pub fn write_summary<W: Write>(mut out: W, summary: &RunSummary) -> Result<()> {
    let text = toml::to_string(summary).map_err(|e| Error::format("summary", e))?;
    out.write_all(text.as_bytes()).map_err(|e| Error::io("<summary>", e))
}
