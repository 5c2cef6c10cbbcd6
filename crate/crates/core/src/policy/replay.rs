use ndarray::Array2;
use rand::Rng;

use crate::error::{Error, Result};
use crate::nn::Minibatch;

#[derive(Debug, Clone, PartialEq)]
pub struct TransitionRecord {
    pub state: Vec<f64>,
    pub action: usize,
    pub reward: f64,
    pub next_state: Vec<f64>,
    pub done: bool,
}

/// Fixed-capacity FIFO experience store.
#[derive(Debug, Clone)]
pub struct ReplayBuffer {
    capacity: usize,
    items: Vec<TransitionRecord>,
    /// Slot the next push overwrites once the buffer is full.
    cursor: usize,
}

impl ReplayBuffer {
    pub fn new(capacity: usize) -> Result<Self> {
        if capacity == 0 {
            return Err(Error::InvalidParams("replay capacity must be >= 1".into()));
        }
        Ok(Self { capacity, items: Vec::with_capacity(capacity.min(1 << 16)), cursor: 0 })
    }

    pub fn capacity(&self) -> usize {
        self.capacity
    }

    pub fn len(&self) -> usize {
        self.items.len()
    }

    pub fn is_empty(&self) -> bool {
        self.items.is_empty()
    }

    pub fn push(&mut self, record: TransitionRecord) -> Result<()> {
        if !record.reward.is_finite() {
            return Err(Error::InvalidParams(format!("non-finite reward {}", record.reward)));
        }
        if record.state.len() != record.next_state.len() {
            return Err(Error::ShapeMismatch {
                expected: format!("next state of length {}", record.state.len()),
                got: format!("{}", record.next_state.len()),
            });
        }
        if self.items.len() < self.capacity {
            self.items.push(record);
        } else {
            self.items[self.cursor] = record;
            self.cursor = (self.cursor + 1) % self.capacity;
        }
        Ok(())
    }

    /// Records from oldest to newest.
    pub fn iter(&self) -> impl Iterator<Item = &TransitionRecord> {
        let (newer, older) = self.items.split_at(self.cursor);
        older.iter().chain(newer)
    }

    /// Uniform sample of `n` distinct records.
    pub fn sample<R: Rng + ?Sized>(&self, n: usize, rng: &mut R) -> Result<Minibatch> {
        if n == 0 || n > self.items.len() {
            return Err(Error::InvalidParams(format!(
                "cannot sample {n} records from a buffer of {}",
                self.items.len()
            )));
        }
        let width = self.items[0].state.len();
        let picks = rand::seq::index::sample(rng, self.items.len(), n);
        let mut states = Array2::zeros((n, width));
        let mut next_states = Array2::zeros((n, width));
        let mut actions = Vec::with_capacity(n);
        let mut rewards = Vec::with_capacity(n);
        let mut dones = Vec::with_capacity(n);
        for (row, idx) in picks.iter().enumerate() {
            let rec = &self.items[idx];
            for (j, (&s, &s2)) in rec.state.iter().zip(&rec.next_state).enumerate() {
                states[[row, j]] = s;
                next_states[[row, j]] = s2;
            }
            actions.push(rec.action);
            rewards.push(rec.reward);
            dones.push(rec.done);
        }
        Ok(Minibatch { states, actions, rewards, next_states, dones })
    }
}
