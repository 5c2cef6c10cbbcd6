//! Multi-UAV age-of-information relay simulator with a deep Q-learning
//! trainer and heuristic baselines.

pub mod clustering;
pub mod env;
pub mod error;
pub mod harness;
pub mod nn;
pub mod physics;
pub mod policy;
pub mod rng;
pub mod trajectory;

pub use error::{Error, Result};
