//! Action selection: the DQN agent and the GA / NN / RW baselines.

pub mod baselines;
pub mod dqn;
pub mod replay;
pub mod rollout;

use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Serialize};

pub use baselines::{ga_select, nn_select, rw_select};
pub use dqn::{dqn_select, train, DqnConfig, EpsilonSchedule, TrainOutcome};
pub use replay::{ReplayBuffer, TransitionRecord};
pub use rollout::{run_episode, EpisodeStats};

use crate::env::{EnvState, Environment};
use crate::error::{Error, Result};
use crate::nn::Mlp;
use crate::rng::SimRng;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum PolicyKind {
    Dqn,
    Ga,
    Nn,
    Rw,
}

impl PolicyKind {
    pub const BASELINES: [PolicyKind; 3] = [PolicyKind::Ga, PolicyKind::Nn, PolicyKind::Rw];

    pub fn as_str(self) -> &'static str {
        match self {
            PolicyKind::Dqn => "dqn",
            PolicyKind::Ga => "ga",
            PolicyKind::Nn => "nn",
            PolicyKind::Rw => "rw",
        }
    }
}

impl fmt::Display for PolicyKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

impl FromStr for PolicyKind {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s.to_ascii_lowercase().as_str() {
            "dqn" => Ok(PolicyKind::Dqn),
            "ga" => Ok(PolicyKind::Ga),
            "nn" => Ok(PolicyKind::Nn),
            "rw" => Ok(PolicyKind::Rw),
            other => Err(Error::Config(format!("unknown policy '{other}' (expected dqn, ga, nn or rw)"))),
        }
    }
}

/// A policy ready to act. The DQN variant borrows a frozen network.
#[derive(Debug, Clone, Copy)]
pub enum Policy<'a> {
    Dqn { net: &'a Mlp, epsilon: f64 },
    Ga,
    Nn,
    Rw,
}

impl Policy<'_> {
    pub fn kind(&self) -> PolicyKind {
        match self {
            Policy::Dqn { .. } => PolicyKind::Dqn,
            Policy::Ga => PolicyKind::Ga,
            Policy::Nn => PolicyKind::Nn,
            Policy::Rw => PolicyKind::Rw,
        }
    }

    pub fn select(&self, env: &Environment, state: &EnvState, rng: &mut SimRng) -> Result<usize> {
        match *self {
            Policy::Dqn { net, epsilon } => dqn_select(net, &env.encode_state(state), epsilon, rng),
            Policy::Ga => ga_select(env, state),
            Policy::Nn => nn_select(env, state, rng),
            Policy::Rw => Ok(rw_select(env.action_space().count(), rng)),
        }
    }
}
