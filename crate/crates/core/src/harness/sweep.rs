//! Training / evaluation cells and the lambda sweep.
//!
//! Run directory layout:
//!
//! ```text
//! config.toml             resolved configuration
//! scenario.json           devices and clusters
//! checkpoints/dqn_l{lambda}_s{seed}.ckpt
//! metrics/train_dqn_l{lambda}_s{seed}.csv
//! metrics/eval_{policy}[_l{lambda}_s{seed}].csv
//! logs/{policy}[_l{lambda}_s{seed}]_ep{i}.jsonl
//! sweep.csv               one row per evaluated (policy, lambda, seed)
//! ```

use std::path::{Path, PathBuf};

use log::info;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use super::config::ExperimentConfig;
use super::metrics::{evaluate, write_csv, Evaluation, MetricsRow, Provenance};
use super::scenario::{generate_scenario, Scenario};
use crate::error::{Error, Result};
use crate::nn::{Checkpoint, Mlp};
use crate::policy::{train, Policy, PolicyKind, TrainOutcome};

/// One point of the achievable region.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SweepPoint {
    pub config_hash: String,
    pub policy: String,
    /// Blank for baselines, which do not depend on lambda.
    pub lambda: Option<f64>,
    /// Training seed; blank for baselines.
    pub train_seed: Option<u64>,
    pub eval_seed: u64,
    pub uavs: usize,
    pub devices: usize,
    pub episodes: usize,
    pub ergodic_age: f64,
    pub age_ci: f64,
    pub ergodic_power_w: f64,
    pub power_ci: f64,
    pub reward: f64,
    pub reward_ci: f64,
    pub weighted_age: f64,
}

/// File-name stem for a policy cell.
pub fn cell_name(policy: PolicyKind, lambda: Option<f64>, seed: Option<u64>) -> String {
    match (lambda, seed) {
        (Some(l), Some(s)) => format!("{policy}_l{l}_s{s}"),
        _ => policy.to_string(),
    }
}

pub fn checkpoint_path(out: &Path, lambda: f64, seed: u64) -> PathBuf {
    out.join("checkpoints").join(format!("dqn_l{lambda}_s{seed}.ckpt"))
}

/// Load `out/scenario.json`, or generate and save it if absent.
pub fn load_or_generate_scenario(cfg: &ExperimentConfig, out: &Path) -> Result<Scenario> {
    let path = out.join("scenario.json");
    if path.exists() {
        let s = Scenario::load(&path)?;
        if s.devices.len() != cfg.scenario.devices || s.uavs != cfg.scenario.uavs {
            return Err(Error::Config(format!(
                "{} does not match the configured scenario; regenerate it",
                path.display()
            )));
        }
        Ok(s)
    } else {
        let s = generate_scenario(cfg, cfg.scenario.seed)?;
        s.save(&path)?;
        Ok(s)
    }
}

/// Train one DQN and persist its checkpoint and per-episode metrics.
pub fn train_cell(
    cfg: &ExperimentConfig,
    scenario: &Scenario,
    lambda: f64,
    seed: u64,
    out: &Path,
) -> Result<TrainOutcome> {
    let env = scenario.environment(cfg, lambda)?;
    let hash = cfg.hash()?;
    info!("training dqn lambda={lambda} seed={seed}");
    let outcome = train(&env, &cfg.dqn, cfg.run.train_episodes, seed)?;
    let prov = Provenance { config_hash: hash.clone(), seed, policy: "dqn".into(), lambda: Some(lambda) };
    let rows: Vec<MetricsRow> = outcome.episodes.iter().map(|s| MetricsRow::new(&prov, "train", s)).collect();
    let name = cell_name(PolicyKind::Dqn, Some(lambda), Some(seed));
    write_csv(&out.join("metrics").join(format!("train_{name}.csv")), &rows)?;
    Checkpoint {
        tag: format!("dqn lambda={lambda} seed={seed} config={hash}"),
        net: outcome.net.clone(),
        adam: Some(outcome.adam.clone()),
    }
    .save(&checkpoint_path(out, lambda, seed))?;
    Ok(outcome)
}

/// Evaluate one policy and persist its metric rows and slot logs.
///
/// Baselines are evaluated without the power penalty (`lambda` = 0 in the
/// reward) since their behaviour does not depend on it.
pub fn eval_cell(
    cfg: &ExperimentConfig,
    scenario: &Scenario,
    kind: PolicyKind,
    dqn: Option<(&Mlp, f64, u64)>,
    out: &Path,
) -> Result<(SweepPoint, Evaluation)> {
    let hash = cfg.hash()?;
    let (policy, lambda, train_seed) = match (kind, dqn) {
        (PolicyKind::Dqn, Some((net, l, s))) => (Policy::Dqn { net, epsilon: 0.0 }, Some(l), Some(s)),
        (PolicyKind::Dqn, None) => return Err(Error::Missing("dqn evaluation needs a network".into())),
        (PolicyKind::Ga, _) => (Policy::Ga, None, None),
        (PolicyKind::Nn, _) => (Policy::Nn, None, None),
        (PolicyKind::Rw, _) => (Policy::Rw, None, None),
    };
    let env = scenario.environment(cfg, lambda.unwrap_or(0.0))?;
    let seed = cfg.run.eval_seed;
    let prov = Provenance { config_hash: hash.clone(), seed, policy: kind.to_string(), lambda };
    let eval = evaluate(&env, &policy, cfg.run.eval_episodes, seed, cfg.run.logged_episodes, &prov)?;

    let name = cell_name(kind, lambda, train_seed);
    let rows: Vec<MetricsRow> = eval.stats.iter().map(|s| MetricsRow::new(&prov, "eval", s)).collect();
    write_csv(&out.join("metrics").join(format!("eval_{name}.csv")), &rows)?;
    for log in &eval.logs {
        let path = out.join("logs").join(format!("{name}_ep{}.jsonl", log.header.episode));
        super::io::write_atomic(&path, &log.to_jsonl())?;
    }
    let s = &eval.summary;
    let point = SweepPoint {
        config_hash: hash,
        policy: kind.to_string(),
        lambda,
        train_seed,
        eval_seed: seed,
        uavs: env.uav_count(),
        devices: env.devices().len(),
        episodes: s.episodes,
        ergodic_age: s.age.mean,
        age_ci: s.age.half_width,
        ergodic_power_w: s.power.mean,
        power_ci: s.power.half_width,
        reward: s.reward.mean,
        reward_ci: s.reward.half_width,
        weighted_age: s.weighted_age.mean,
    };
    Ok((point, eval))
}

pub struct DqnCell {
    pub lambda: f64,
    pub seed: u64,
    pub outcome: TrainOutcome,
    pub point: SweepPoint,
    pub eval: Evaluation,
}

pub struct SweepResult {
    pub scenario: Scenario,
    pub points: Vec<SweepPoint>,
    pub dqn: Vec<DqnCell>,
    pub baselines: Vec<(PolicyKind, Evaluation)>,
}

/// Train one DQN per (lambda, training seed), evaluate each, evaluate the
/// baselines once, and write everything under `cfg.run.output_dir`.
pub fn run_sweep(cfg: &ExperimentConfig) -> Result<SweepResult> {
    cfg.validate()?;
    let out = cfg.run.output_dir.as_path();
    std::fs::create_dir_all(out)?;
    super::io::write_atomic(&out.join("config.toml"), cfg.to_toml()?.as_bytes())?;
    let scenario = generate_scenario(cfg, cfg.scenario.seed)?;
    scenario.save(&out.join("scenario.json"))?;

    let cells: Vec<(f64, u64)> =
        cfg.run.lambdas.iter().flat_map(|&l| cfg.run.train_seeds.iter().map(move |&s| (l, s))).collect();
    // Cells are independent and each owns its environment and agent, so
    // results do not depend on scheduling.
    let dqn: Vec<DqnCell> = cells
        .into_par_iter()
        .map(|(lambda, seed)| {
            let outcome = train_cell(cfg, &scenario, lambda, seed, out)?;
            let (point, eval) = eval_cell(cfg, &scenario, PolicyKind::Dqn, Some((&outcome.net, lambda, seed)), out)?;
            Ok(DqnCell { lambda, seed, outcome, point, eval })
        })
        .collect::<Result<_>>()?;

    let mut points: Vec<SweepPoint> = dqn.iter().map(|c| c.point.clone()).collect();
    let mut baselines = Vec::new();
    for kind in PolicyKind::BASELINES {
        let (p, eval) = eval_cell(cfg, &scenario, kind, None, out)?;
        points.push(p);
        baselines.push((kind, eval));
    }
    write_csv(&out.join("sweep.csv"), &points)?;
    Ok(SweepResult { scenario, points, dqn, baselines })
}
