//! Client selection strategies and selection-frequency bookkeeping.

mod availability;
mod config;
mod profile;
mod sampling;
mod strategy;

pub use availability::AvailabilityModel;
pub use config::{SelectionConfig, SelectionKind};
pub use profile::{format_ids, frequency_profile, parse_ids, read_history, sorted_profile, write_history, ProfileRow};
pub use sampling::{sample_with_replacement, sample_without_replacement, top_m};
pub use strategy::{select_cpow_d, select_pow_d, select_rand, select_rpow_d, SelectionState, Selector};
