//! FedAvg with partial participation.

mod aggregate;
mod local;
mod metrics;
mod run;
mod schedule;

pub use aggregate::{aggregate, selection_weights, Aggregation};
pub use local::{local_sgd, LocalUpdate};
pub use metrics::{
    read_metrics, rounds_to_target, write_metrics, write_summary, RunSummary, Target,
};
pub use run::{run_training, RoundRecord, RunConfig, Trainer};
pub use schedule::LrSchedule;
