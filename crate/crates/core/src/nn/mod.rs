//! Feed-forward Q-network, temporal-difference targets and Adam training.

mod adam;
pub mod checkpoint;
mod mlp;

pub use adam::{Adam, AdamHyper};
pub use checkpoint::Checkpoint;
pub use mlp::{clip_gradients, Dense, Gradients, Loss, Mlp};

use ndarray::Array2;

use crate::error::{Error, Result};

/// Hidden layer widths of the Q-network.
pub const DEFAULT_HIDDEN: [usize; 5] = [64, 128, 256, 128, 128];

/// A batch of transitions, one row per sample.
#[derive(Debug, Clone, PartialEq)]
pub struct Minibatch {
    pub states: Array2<f64>,
    pub actions: Vec<usize>,
    pub rewards: Vec<f64>,
    pub next_states: Array2<f64>,
    pub dones: Vec<bool>,
}

impl Minibatch {
    pub fn len(&self) -> usize {
        self.actions.len()
    }

    pub fn is_empty(&self) -> bool {
        self.actions.is_empty()
    }

    pub fn validate(&self, action_count: usize) -> Result<()> {
        let n = self.actions.len();
        if self.states.nrows() != n
            || self.next_states.nrows() != n
            || self.rewards.len() != n
            || self.dones.len() != n
            || self.states.ncols() != self.next_states.ncols()
        {
            return Err(Error::ShapeMismatch {
                expected: format!("{n} rows in every minibatch field"),
                got: format!(
                    "states {:?}, next {:?}, rewards {}, dones {}",
                    self.states.dim(),
                    self.next_states.dim(),
                    self.rewards.len(),
                    self.dones.len()
                ),
            });
        }
        if let Some(&a) = self.actions.iter().find(|&&a| a >= action_count) {
            return Err(Error::ActionOutOfRange { index: a, count: action_count });
        }
        Ok(())
    }
}

/// `y_i = r_i` for terminal samples, else `r_i + gamma * max_a Q_target(s'_i, a)`.
pub fn td_targets(batch: &Minibatch, target: &Mlp, gamma: f64) -> Result<Vec<f64>> {
    if !(0.0..1.0).contains(&gamma) {
        return Err(Error::InvalidParams(format!("gamma must be in [0, 1), got {gamma}")));
    }
    let q_next = target.forward(batch.next_states.view())?;
    Ok(q_next
        .rows()
        .into_iter()
        .zip(&batch.rewards)
        .zip(&batch.dones)
        .map(
            |((row, &r), &done)| {
                if done {
                    r
                } else {
                    r + gamma * row.iter().copied().fold(f64::NEG_INFINITY, f64::max)
                }
            },
        )
        .collect())
}

/// Optional training-time safeguards, all off by default.
#[derive(Debug, Clone, Copy, PartialEq, Default)]
pub struct TrainOptions {
    pub loss: Loss,
    pub grad_clip: Option<f64>,
}

/// One gradient step on the batch towards `targets`. Returns the loss
/// measured before the update.
pub fn train_step(
    net: &mut Mlp,
    adam: &mut Adam,
    batch: &Minibatch,
    targets: &[f64],
    opts: TrainOptions,
) -> Result<f64> {
    batch.validate(net.output_dim())?;
    let (loss, mut grads) = net.loss_and_gradients(batch.states.view(), &batch.actions, targets, opts.loss)?;
    if !loss.is_finite() {
        return Err(Error::NonFiniteLoss {
            step: adam.step,
            loss,
            detail: format!(
                "batch of {}, targets finite: {}, params finite: {}",
                batch.len(),
                targets.iter().all(|t| t.is_finite()),
                net.is_finite()
            ),
        });
    }
    if let Some(max_norm) = opts.grad_clip {
        clip_gradients(&mut grads, max_norm);
    }
    adam.update(net, &grads)?;
    Ok(loss)
}

/// Tabular Q-learning update `q + alpha (r + gamma max_next - q)`.
pub fn tabular_q_update(q: f64, alpha: f64, reward: f64, gamma: f64, max_next: f64) -> f64 {
    q + alpha * (reward + gamma * max_next - q)
}
