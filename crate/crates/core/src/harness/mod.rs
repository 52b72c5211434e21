//! Spec-file driven experiments behind the `powchoice` binary.
//!
//! A run directory holds `manifest.toml`, `fractions.csv`,
//! `metrics/<strategy>_seed<seed>.csv` (columns
//! `round,t,global_loss,eval_metric,selected_ids,lr`),
//! `summaries/<strategy>_seed<seed>.toml`, `comparison.csv` and
//! `targets.csv`. The `skew`, `freq` and `bound` subcommands add
//! `skew_report.toml` and `skew_table.csv`, `frequency.csv`, and
//! `bounds.csv` with `bound_inputs.toml`.

mod bound;
mod freq;
mod run;
mod skew;
mod spec;

pub use bound::{derive_inputs, run_bound, BoundFile, DeriveSection, BOUNDS_FILE, BOUND_INPUTS_FILE};
pub use freq::{run_freq, FREQUENCY_FILE};
pub use run::{
    collect_metrics, metrics_path, run_experiment, summarize, write_fractions, RunOutputs, COMPARISON_FILE,
    FRACTIONS_FILE, MANIFEST_FILE, METRICS_DIR, SUMMARIES_DIR, TARGETS_FILE,
};
pub use skew::{run_skew, SKEW_REPORT_FILE, SKEW_TABLE_FILE};
pub use spec::{load_spec, ExperimentSpec, SkewSection, TaskSpec, SCHEMA_VERSION};

use crate::error::Error;

/// Exit status for a failed command: 2 for configuration and input
/// problems, 3 for divergence, 1 otherwise.
pub fn exit_code(err: &Error) -> i32 {
    match err {
        Error::Divergence { .. } => 3,
        Error::Config(_)
        | Error::Io { .. }
        | Error::Format { .. }
        | Error::InvalidParameter(_)
        | Error::LearningRateCap { .. } => 2,
        _ => 1,
    }
}
