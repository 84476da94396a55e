//! Beating experiments: initial data, coupled simulation and model runs,
//! analysis of the resulting series, and report output.

pub mod analysis;
pub mod beating;
pub mod config;
pub mod data;
pub mod report;
pub mod sweep;

pub use analysis::{
    corollary_schedule, estimate_period, leakage_check, log_condition_check, LeakageCheck, Schedule,
};
pub use beating::{run_beating, scenario_field, BeatingReport, ClusterSeries};
pub use config::{ScenarioConfig, Variable, Weights, DEFAULT_TIME_FACTOR};
pub use data::{add_tail, tail_bound, exponential_weights, thm0_initial_data, thm1_initial_data};
pub use report::{emit_report, read_report};
pub use sweep::run_sweep;

use crate::model::ModelError;
use crate::resonance::ArithError;
use crate::spectral::SpectralError;

#[derive(Debug, thiserror::Error)]
pub enum ExperimentError {
    #[error("invalid configuration: {0}")]
    Config(String),
    #[error("cluster {cluster} (n = {center}) has amplitude {relative:e} relative to the first, below machine precision")]
    UnrepresentableAmplitude { cluster: usize, center: i128, relative: f64 },
    #[error("series too short for a period estimate ({extrema} extrema found)")]
    InsufficientSpan { extrema: usize },
    #[error(transparent)]
    Model(#[from] ModelError),
    #[error(transparent)]
    Spectral(#[from] SpectralError),
    #[error(transparent)]
    Arith(#[from] ArithError),
    #[error("{path}: {message}")]
    Io { path: String, message: String },
}

pub type Result<T> = std::result::Result<T, ExperimentError>;
