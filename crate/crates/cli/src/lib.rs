//! Configuration-driven experiment runner for trapped-mode computations.

pub mod config;
pub mod error;
pub mod output;
pub mod reproduce;
pub mod run;

pub use config::{Experiment, ExperimentConfig, Format};
pub use error::CliError;
pub use output::Artifact;
