//! Experiment harness behind the `turbo` binary: declarative experiment
//! configs, replicated runs with independent seeds, and plot-ready CSV
//! emission (per-replicate traces plus mean/standard-error summaries).

pub mod config;
pub mod experiment;

pub use config::{Algorithm, ExperimentConfig};
pub use experiment::{batch_study, run_experiment, Summary};
