//! Heterogeneity and selection-skew measurements, and the error bounds they
//! feed.

mod bounds;
mod grid;
mod optima;
mod rho;
mod theory;

pub use bounds::{bound_table, theorem1_bound, theorem2_bound, theorem2_rate_cap, write_bound_table, BoundInputs, BoundRow, BoundTerms, Theorem};
pub use grid::{estimate_rho_bounds, GridPairing, GridSpec, SkewEstimate};
pub use optima::{local_global_gap, minimize, ClientOptima, MinimizeOptions};
pub use rho::{selection_marginals, selection_skew_at, SkewSample, SkewStrategy};
pub use theory::{estimate_theory_params, G_SLACK};
