//! Convergence-rate experiments for periodic homogenization: `ε`-sweeps over
//! the objects built by `homoglab-core`, least-squares rate fits and
//! plot-ready reports.

#![allow(clippy::neg_cmp_op_on_partial_ord, clippy::needless_range_loop)]

pub mod config;
pub mod context;
pub mod experiments;
pub mod fit;
pub mod registry;
pub mod report;
pub mod runner;
pub mod tables;

pub use config::{CoefficientSpec, Config, Settings};
pub use registry::{Group, REGISTRY};
pub use report::{Format, RateReport, Status};
pub use runner::run;

#[derive(Debug, thiserror::Error)]
pub enum Error {
    #[error(transparent)]
    Core(#[from] homoglab_core::Error),
    #[error("configuration: {0}")]
    Config(String),
    #[error("{0}: {1}")]
    Io(String, std::io::Error),
    #[error("unknown experiment `{id}`; available: {available}")]
    UnknownExperiment { id: String, available: String },
}

pub type Result<T> = std::result::Result<T, Error>;
