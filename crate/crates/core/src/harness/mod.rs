//! Experiment plumbing: configuration, scenarios, metrics, sweeps, plots.

pub mod config;
pub mod io;
pub mod metrics;
pub mod plot;
pub mod scenario;
pub mod sweep;
