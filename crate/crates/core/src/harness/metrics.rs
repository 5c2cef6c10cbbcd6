//! Per-episode metric rows, ergodic summaries and policy evaluation.

use std::path::Path;

use serde::{Deserialize, Serialize};

use super::scenario::Scenario;
use crate::env::{EnvConfig, Environment};
use crate::error::{Error, Result};
use crate::physics::{device_tx_power, SystemParams};
use crate::policy::{run_episode, EpisodeStats, Policy};
use crate::rng::{derive_seed, stream, streams};
use crate::trajectory::{EpisodeHeader, EpisodeLog};

/// Two-sided 95% normal quantile.
const Z95: f64 = 1.959_963_984_540_054;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MetricsRow {
    pub config_hash: String,
    pub seed: u64,
    pub phase: String,
    pub policy: String,
    pub lambda: Option<f64>,
    pub episode: usize,
    pub reward: f64,
    pub length: u32,
    pub mean_weighted_age: f64,
    pub mean_age: f64,
    pub mean_power_w: f64,
    /// Quanta consumed per UAV, `;`-separated.
    pub energy: String,
    pub epsilon: f64,
    pub mean_loss: Option<f64>,
}

/// Identifies the run a row or log belongs to.
#[derive(Debug, Clone, PartialEq)]
pub struct Provenance {
    pub config_hash: String,
    pub seed: u64,
    pub policy: String,
    pub lambda: Option<f64>,
}

impl MetricsRow {
    pub fn new(p: &Provenance, phase: &str, s: &EpisodeStats) -> Self {
        Self {
            config_hash: p.config_hash.clone(),
            seed: p.seed,
            phase: phase.to_string(),
            policy: p.policy.clone(),
            lambda: p.lambda,
            episode: s.index,
            reward: s.reward,
            length: s.length,
            mean_weighted_age: s.mean_weighted_age,
            mean_age: s.mean_age,
            mean_power_w: s.mean_power,
            energy: s.energy.iter().map(i64::to_string).collect::<Vec<_>>().join(";"),
            epsilon: s.epsilon,
            mean_loss: s.mean_loss,
        }
    }
}

/// Serialise rows as CSV with a header line.
pub fn rows_to_csv<T: Serialize>(rows: &[T]) -> Result<Vec<u8>> {
    let mut w = csv::Writer::from_writer(Vec::new());
    for r in rows {
        w.serialize(r)?;
    }
    w.into_inner().map_err(|e| Error::Io(e.into_error()))
}

pub fn write_csv<T: Serialize>(path: &Path, rows: &[T]) -> Result<()> {
    super::io::write_atomic(path, &rows_to_csv(rows)?)
}

pub fn read_csv<T: for<'de> Deserialize<'de>>(path: &Path) -> Result<Vec<T>> {
    let mut r = csv::Reader::from_path(path)?;
    r.deserialize().map(|row| row.map_err(Error::from)).collect()
}

/// Mean and 95% confidence half-width of independent samples.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct MeanCi {
    pub mean: f64,
    pub half_width: f64,
}

impl MeanCi {
    pub fn of(xs: &[f64]) -> Self {
        let n = xs.len();
        if n == 0 {
            return Self { mean: f64::NAN, half_width: f64::NAN };
        }
        let mean = xs.iter().sum::<f64>() / n as f64;
        if n == 1 {
            return Self { mean, half_width: 0.0 };
        }
        let var = xs.iter().map(|x| (x - mean).powi(2)).sum::<f64>() / (n - 1) as f64;
        Self { mean, half_width: Z95 * (var / n as f64).sqrt() }
    }

    pub fn lo(&self) -> f64 {
        self.mean - self.half_width
    }

    pub fn hi(&self) -> f64 {
        self.mean + self.half_width
    }

    /// True when the two intervals share no point.
    pub fn disjoint(&self, other: &MeanCi) -> bool {
        self.hi() < other.lo() || other.hi() < self.lo()
    }
}

/// Episode-level averages over an evaluation. Per-episode time averages
/// are treated as the independent samples behind the intervals.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ErgodicSummary {
    pub episodes: usize,
    pub reward: MeanCi,
    pub age: MeanCi,
    pub weighted_age: MeanCi,
    pub power: MeanCi,
    pub length: MeanCi,
}

impl ErgodicSummary {
    pub fn of(stats: &[EpisodeStats]) -> Self {
        let col = |f: fn(&EpisodeStats) -> f64| MeanCi::of(&stats.iter().map(f).collect::<Vec<_>>());
        Self {
            episodes: stats.len(),
            reward: col(|s| s.reward),
            age: col(|s| s.mean_age),
            weighted_age: col(|s| s.mean_weighted_age),
            power: col(|s| s.mean_power),
            length: col(|s| f64::from(s.length)),
        }
    }
}

#[derive(Debug, Clone)]
pub struct Evaluation {
    pub stats: Vec<EpisodeStats>,
    pub summary: ErgodicSummary,
    /// Slot logs of the first `logged` episodes.
    pub logs: Vec<EpisodeLog>,
}

/// Run `episodes` evaluation episodes. Episode `i` draws from its own
/// stream derived from `seed`, so a shorter evaluation is a prefix of a
/// longer one.
pub fn evaluate(
    env: &Environment,
    policy: &Policy<'_>,
    episodes: usize,
    seed: u64,
    logged: usize,
    prov: &Provenance,
) -> Result<Evaluation> {
    let mut stats = Vec::with_capacity(episodes);
    let mut logs = Vec::new();
    for ep in 0..episodes {
        let mut rng = stream(derive_seed(seed, ep as u64), streams::EVALUATION);
        if ep < logged {
            let mut slots = Vec::new();
            stats.push(run_episode(env, policy, ep, &mut rng, Some(&mut slots))?);
            logs.push(EpisodeLog {
                header: EpisodeHeader {
                    config_hash: prov.config_hash.clone(),
                    seed: prov.seed,
                    policy: prov.policy.clone(),
                    lambda: prov.lambda,
                    episode: ep,
                    uavs: env.uav_count(),
                    clusters: env.cluster_count(),
                },
                slots,
            });
        } else {
            stats.push(run_episode(env, policy, ep, &mut rng, None)?);
        }
    }
    let summary = ErgodicSummary::of(&stats);
    Ok(Evaluation { stats, summary, logs })
}

/// Recompute each slot's reward from a log and the scenario alone, without
/// the environment: weighted ages from the logged cluster ages, powers from
/// the logged UAV cells and effective schedules.
pub fn objective_from_log(
    log: &EpisodeLog,
    scenario: &Scenario,
    params: &SystemParams,
    env: &EnvConfig,
) -> Result<Vec<f64>> {
    let k = scenario.devices.len() as f64;
    let members = &scenario.assignment.members;
    let weights: Vec<f64> = members.iter().map(|m| m.iter().map(|&i| scenario.devices[i].weight).sum()).collect();
    let mut out = Vec::with_capacity(log.slots.len());
    for s in &log.slots {
        let age: f64 = s.aoi.iter().zip(&weights).map(|(&a, w)| w * f64::from(a)).sum();
        let mut power = 0.0;
        for (cell, &sched) in s.cells.iter().zip(&s.schedules) {
            if sched == 0 {
                continue;
            }
            let c = scenario.grid.center_m(*cell);
            for &i in &members[sched - 1] {
                let d = scenario.devices[i].xy;
                power += device_tx_power((d[0] - c[0]).hypot(d[1] - c[1]), params)?;
            }
        }
        out.push(-age - params.lambda / k * power * env.reward_power_unit.per_watt());
    }
    Ok(out)
}
