//! Experiment driver: configuration files, the pipeline behind every
//! subcommand, run manifests and the verification suite.

pub mod commands;
pub mod config;
pub mod manifest;
pub mod verify;

pub use config::ExperimentConfig;
