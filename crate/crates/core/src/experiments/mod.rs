//! Scripted experiments: convergence rates, radius concentration, deviation
//! probabilities, moment bounds and geometry checks.
//!
//! Every experiment is a pure function of its [`RunConfig`] (seeds
//! included): reruns produce byte-identical CSV reports at any parallelism
//! degree. Reports embed the resolved config and the artifact version.

pub mod concentration;
pub mod config;
pub mod deviation;
pub mod gap;
pub mod geometry;
pub mod moments;
pub mod rate;

pub use concentration::{radius_concentration_experiment, ConcentrationReport};
pub use config::{ExperimentKind, RunConfig};
pub use deviation::{deviation_experiment, DeviationReport};
pub use gap::{operator_gap_experiment, GapReport};
pub use geometry::{geometry_check_experiment, GeometryReport};
pub use moments::{moment_bound_experiment, MomentReport};
pub use rate::{knn_rate_experiment, rate_experiment, RateReport};
