use serde::{Deserialize, Serialize};

use super::Policy;
use crate::env::{Environment, StepOutcome};
use crate::error::Result;
use crate::rng::SimRng;
use crate::trajectory::SlotRecord;

/// Per-episode summary.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EpisodeStats {
    pub index: usize,
    /// Sum of rewards over the episode.
    pub reward: f64,
    pub length: u32,
    /// Mean over slots of `sum_k delta_k A_k(t+1)`.
    pub mean_weighted_age: f64,
    /// Mean over slots and devices of `A_k(t+1)`.
    pub mean_age: f64,
    /// Mean over slots of `(1/K) sum_k P_k(t)`, W.
    pub mean_power: f64,
    /// Battery quanta consumed per UAV.
    pub energy: Vec<i64>,
    pub epsilon: f64,
    pub mean_loss: Option<f64>,
}

pub(crate) struct EpisodeAccumulator {
    reward: f64,
    length: u32,
    weighted_age: f64,
    age: f64,
    power: f64,
    energy: Vec<i64>,
    devices: f64,
}

impl EpisodeAccumulator {
    pub(crate) fn new(env: &Environment) -> Self {
        Self {
            reward: 0.0,
            length: 0,
            weighted_age: 0.0,
            age: 0.0,
            power: 0.0,
            energy: vec![0; env.uav_count()],
            devices: env.devices().len() as f64,
        }
    }

    pub(crate) fn record(&mut self, out: &StepOutcome) {
        self.reward += out.reward;
        self.length += 1;
        self.weighted_age += out.info.weighted_age;
        self.age += out.info.mean_age;
        self.power += out.info.power_sum / self.devices;
        for (e, c) in self.energy.iter_mut().zip(&out.info.consumed) {
            *e += c;
        }
    }

    pub(crate) fn finish(self, index: usize) -> EpisodeStats {
        let n = f64::from(self.length.max(1));
        EpisodeStats {
            index,
            reward: self.reward,
            length: self.length,
            mean_weighted_age: self.weighted_age / n,
            mean_age: self.age / n,
            mean_power: self.power / n,
            energy: self.energy,
            epsilon: 0.0,
            mean_loss: None,
        }
    }
}

/// Play one episode from reset to termination, optionally logging slots.
pub fn run_episode(
    env: &Environment,
    policy: &Policy<'_>,
    index: usize,
    rng: &mut SimRng,
    mut log: Option<&mut Vec<SlotRecord>>,
) -> Result<EpisodeStats> {
    let space = env.action_space();
    let mut state = env.reset();
    let mut acc = EpisodeAccumulator::new(env);
    while !state.done {
        let a = policy.select(env, &state, rng)?;
        let action = space.decode(a)?;
        let out = env.step(&state, &action)?;
        acc.record(&out);
        if let Some(log) = log.as_deref_mut() {
            log.push(SlotRecord {
                t: state.t,
                cells: state.uavs.iter().map(|u| u.cell).collect(),
                next_cells: out.next_state.uavs.iter().map(|u| u.cell).collect(),
                action: a,
                moves: action.0.iter().map(|x| x.mv).collect(),
                requested: action.0.iter().map(|x| x.schedule).collect(),
                schedules: out.info.schedules.clone(),
                served: out.info.served.clone(),
                reward: out.reward,
                battery: out.next_state.uavs.iter().map(|u| u.battery).collect(),
                consumed: out.info.consumed.clone(),
                aoi: out.next_state.aoi.clone(),
                beta: out.next_state.beta.clone(),
                power_sum: out.info.power_sum,
                done: out.done,
            });
        }
        state = out.next_state;
    }
    Ok(acc.finish(index))
}
