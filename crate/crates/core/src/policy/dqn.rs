//! Deep Q-learning agent: epsilon-greedy acting, experience replay and a
//! periodically synchronised target network.

use log::{debug, info};
use rand::Rng;
use serde::{Deserialize, Serialize};

use super::replay::{ReplayBuffer, TransitionRecord};
use super::rollout::EpisodeStats;
use crate::env::Environment;
use crate::error::{Error, Result};
use crate::nn::{self, Adam, AdamHyper, Loss, Mlp, TrainOptions, DEFAULT_HIDDEN};
use crate::rng::{stream, streams, SimRng};

/// Linear decay from `start` to `min` over the first `decay_fraction` of
/// the episodes, flat afterwards.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct EpsilonSchedule {
    pub start: f64,
    pub min: f64,
    pub decay_fraction: f64,
}

impl Default for EpsilonSchedule {
    fn default() -> Self {
        Self { start: 1.0, min: 0.05, decay_fraction: 0.5 }
    }
}

impl EpsilonSchedule {
    pub fn validate(&self) -> Result<()> {
        if !(0.0..=1.0).contains(&self.start) || !(0.0..=1.0).contains(&self.min) || self.min > self.start {
            return Err(Error::InvalidParams(format!(
                "epsilon needs 0 <= min <= start <= 1, got start {} min {}",
                self.start, self.min
            )));
        }
        if !(self.decay_fraction > 0.0 && self.decay_fraction <= 1.0) {
            return Err(Error::InvalidParams(format!(
                "epsilon decay_fraction must be in (0, 1], got {}",
                self.decay_fraction
            )));
        }
        Ok(())
    }

    /// Exploration rate for 0-based `episode` out of `total`.
    pub fn value(&self, episode: usize, total: usize) -> f64 {
        let horizon = self.decay_fraction * total as f64;
        let e = episode as f64;
        if horizon <= 0.0 || e >= horizon {
            self.min
        } else {
            self.start - (self.start - self.min) * e / horizon
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct DqnConfig {
    pub gamma: f64,
    pub learning_rate: f64,
    pub batch_size: usize,
    /// Training steps between target-network syncs.
    pub target_sync: u64,
    /// Transitions collected before the first gradient step.
    pub warmup: usize,
    pub replay_capacity: usize,
    pub hidden: Vec<usize>,
    pub epsilon: EpsilonSchedule,
    /// Environment slots per gradient step.
    pub train_every: usize,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub huber: Option<f64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub grad_clip: Option<f64>,
}

impl Default for DqnConfig {
    fn default() -> Self {
        Self {
            gamma: 0.99,
            learning_rate: 1e-4,
            batch_size: 64,
            target_sync: 1000,
            warmup: 1000,
            replay_capacity: 100_000,
            hidden: DEFAULT_HIDDEN.to_vec(),
            epsilon: EpsilonSchedule::default(),
            train_every: 1,
            huber: None,
            grad_clip: None,
        }
    }
}

impl DqnConfig {
    pub fn validate(&self) -> Result<()> {
        if !(0.0..1.0).contains(&self.gamma) {
            return Err(Error::InvalidParams(format!("gamma must be in [0, 1), got {}", self.gamma)));
        }
        if !(self.learning_rate.is_finite() && self.learning_rate > 0.0) {
            return Err(Error::InvalidParams("learning_rate must be > 0".into()));
        }
        if self.batch_size == 0 || self.batch_size > self.replay_capacity {
            return Err(Error::InvalidParams(format!(
                "batch_size must be in 1..=replay_capacity ({}), got {}",
                self.replay_capacity, self.batch_size
            )));
        }
        if self.target_sync == 0 || self.train_every == 0 {
            return Err(Error::InvalidParams("target_sync and train_every must be >= 1".into()));
        }
        if self.hidden.contains(&0) {
            return Err(Error::InvalidParams("hidden layer widths must be >= 1".into()));
        }
        if let Some(h) = self.huber {
            if !(h.is_finite() && h > 0.0) {
                return Err(Error::InvalidParams("huber threshold must be > 0".into()));
            }
        }
        if let Some(c) = self.grad_clip {
            if !(c.is_finite() && c > 0.0) {
                return Err(Error::InvalidParams("grad_clip must be > 0".into()));
            }
        }
        self.epsilon.validate()
    }

    pub fn layer_sizes(&self, input: usize, output: usize) -> Vec<usize> {
        let mut s = vec![input];
        s.extend(&self.hidden);
        s.push(output);
        s
    }

    fn train_options(&self) -> TrainOptions {
        TrainOptions { loss: self.huber.map_or(Loss::MeanSquared, Loss::Huber), grad_clip: self.grad_clip }
    }
}

/// Index of the first maximal entry.
pub fn argmax(values: &[f64]) -> usize {
    let mut best = 0;
    for (i, &v) in values.iter().enumerate().skip(1) {
        if v > values[best] {
            best = i;
        }
    }
    best
}

/// Epsilon-greedy action: uniform with probability `epsilon`, otherwise the
/// greedy action with ties going to the lowest index.
pub fn dqn_select<R: Rng + ?Sized>(net: &Mlp, state: &[f64], epsilon: f64, rng: &mut R) -> Result<usize> {
    if epsilon > 0.0 && rng.random::<f64>() < epsilon {
        return Ok(rng.random_range(0..net.output_dim()));
    }
    Ok(argmax(&net.forward_one(state)?))
}

#[derive(Debug, Clone)]
pub struct TrainOutcome {
    pub net: Mlp,
    pub adam: Adam,
    pub episodes: Vec<EpisodeStats>,
    pub train_steps: u64,
    pub replay_len: usize,
}

/// Run `episodes` training episodes on `env`. Fully determined by `seed`.
pub fn train(env: &Environment, cfg: &DqnConfig, episodes: usize, seed: u64) -> Result<TrainOutcome> {
    cfg.validate()?;
    let space = env.action_space();
    let sizes = cfg.layer_sizes(env.state_dim(), space.count());
    let mut net = Mlp::new(&sizes, &mut stream(seed, streams::NET_INIT))?;
    let mut target = net.clone();
    let mut adam = Adam::new(&net, AdamHyper { lr: cfg.learning_rate, ..AdamHyper::default() });
    let mut explore: SimRng = stream(seed, streams::EXPLORATION);
    let mut sampler: SimRng = stream(seed, streams::REPLAY);
    let mut buffer = ReplayBuffer::new(cfg.replay_capacity)?;
    let opts = cfg.train_options();

    info!(
        "training DQN: layers {:?}, {} parameters, {} actions, {} episodes",
        sizes,
        net.param_count(),
        space.count(),
        episodes
    );

    let mut stats = Vec::with_capacity(episodes);
    let mut train_steps = 0u64;
    let mut slots = 0u64;
    for ep in 0..episodes {
        let epsilon = cfg.epsilon.value(ep, episodes);
        let mut state = env.reset();
        let mut enc = env.encode_state(&state);
        let mut acc = super::rollout::EpisodeAccumulator::new(env);
        let mut loss_sum = 0.0;
        let mut loss_n = 0u64;
        while !state.done {
            let a = dqn_select(&net, &enc, epsilon, &mut explore)?;
            let action = space.decode(a)?;
            let out = env.step(&state, &action)?;
            let next_enc = env.encode_state(&out.next_state);
            acc.record(&out);
            buffer.push(TransitionRecord {
                state: std::mem::take(&mut enc),
                action: a,
                reward: out.reward,
                next_state: next_enc.clone(),
                done: out.done,
            })?;
            slots += 1;

            if buffer.len() >= cfg.warmup.max(cfg.batch_size) && slots.is_multiple_of(cfg.train_every as u64) {
                let batch = buffer.sample(cfg.batch_size, &mut sampler)?;
                let targets = nn::td_targets(&batch, &target, cfg.gamma)?;
                let loss = nn::train_step(&mut net, &mut adam, &batch, &targets, opts)?;
                loss_sum += loss;
                loss_n += 1;
                train_steps += 1;
                if train_steps.is_multiple_of(cfg.target_sync) {
                    target.copy_from(&net)?;
                }
            }
            state = out.next_state;
            enc = next_enc;
        }
        let mut s = acc.finish(ep);
        s.epsilon = epsilon;
        s.mean_loss = if loss_n > 0 { Some(loss_sum / loss_n as f64) } else { None };
        if ep % 100 == 0 || ep + 1 == episodes {
            debug!(
                "episode {ep}: reward {:.3}, length {}, eps {:.3}, loss {:?}",
                s.reward, s.length, epsilon, s.mean_loss
            );
        }
        stats.push(s);
    }
    Ok(TrainOutcome { net, adam, episodes: stats, train_steps, replay_len: buffer.len() })
}
