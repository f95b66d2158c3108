//! Experiment harness for `dbr-core`: JSON experiment configs, seeded
//! replicate sweeps written as CSV with a manifest, bundled scenarios and
//! the acceptance suite.

pub mod acceptance;
pub mod bundled;
pub mod config;
pub mod error;
pub mod exec;
pub mod experiments;
pub mod output;

pub use config::ExperimentConfig;
pub use error::{LabError, Result};
pub use exec::Exec;
pub use experiments::{execute, run_experiment};
