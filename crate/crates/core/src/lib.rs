//! Federated averaging with biased client selection.
//!
//! The crate is organised around five pieces:
//!
//! * [`model`]: parameter vectors, data fractions and the two built-in
//!   objectives (a strongly convex quadratic family with closed-form optima
//!   and multinomial logistic regression on a heterogeneous synthetic
//!   dataset).
//! * [`selection`]: the client-selection strategies (`rand`, `pow-d`,
//!   `cpow-d`, `rpow-d`), the intermittent-availability model and the
//!   selected-frequency profiler.
//! * [`engine`]: the FedAvg round loop: broadcast, `τ` local SGD steps per
//!   selected client, aggregation, learning-rate schedules and per-round
//!   telemetry.
//! * [`skew`]: the local-global objective gap `Γ`, the selection skew
//!   `ρ` with its grid extrema `ρ̄`/`ρ̃`, and the decaying- and
//!   fixed-rate error bounds.
//! * [`harness`]: the spec-file driven experiment runner behind the
//!   `powchoice` binary.

pub mod engine;
pub mod error;
pub mod harness;
pub mod model;
pub mod rng;
pub mod selection;
pub mod skew;

pub use error::{Error, Result};
pub use model::{DataFractions, Objective, ParamVector, QuadraticTask, Task};
