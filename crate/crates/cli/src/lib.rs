//! Experiment runner: configuration, scenario execution, artifact emission.

pub mod artifact;
pub mod config;
pub mod scenario;
