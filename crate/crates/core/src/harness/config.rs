//! Experiment configuration: one TOML document, unknown keys rejected.

use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};

use crate::env::{EnvConfig, GridSpec};
use crate::error::{Error, Result};
use crate::physics::{db_to_linear, dbm_to_watts, PropulsionParams, SystemParams};
use crate::policy::DqnConfig;

/// How device weights are assigned.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize, Default)]
#[serde(rename_all = "lowercase")]
pub enum WeightMode {
    /// Every device weighs `1/K`.
    #[default]
    Uniform,
    /// Weights drawn uniformly from (0, 1] and normalised to sum to one.
    Random,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ScenarioConfig {
    pub devices: usize,
    pub uavs: usize,
    #[serde(default)]
    pub weights: WeightMode,
    pub seed: u64,
    /// Lloyd iterations per k-means restart.
    #[serde(default = "default_kmeans_iter")]
    pub kmeans_iter: usize,
}

fn default_kmeans_iter() -> usize {
    100
}

/// Physical constants as a user writes them: gains in dB, noise in dBm.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct PhysicsConfig {
    pub g0_db: f64,
    pub uav_altitude: f64,
    pub bs_height: f64,
    pub bandwidth: f64,
    pub packet_bits: f64,
    pub noise_dbm: f64,
    pub battery_capacity_j: f64,
    pub battery_quanta: u32,
    pub speed: f64,
    pub max_age: u32,
    pub cluster_rate: f64,
    pub propulsion: PropulsionParams,
}

impl Default for PhysicsConfig {
    fn default() -> Self {
        let p = SystemParams::default();
        Self {
            g0_db: 30.0,
            uav_altitude: p.uav_altitude,
            bs_height: p.bs_height,
            bandwidth: p.bandwidth,
            packet_bits: p.packet_bits,
            noise_dbm: -100.0,
            battery_capacity_j: p.battery_capacity_j,
            battery_quanta: p.battery_quanta,
            speed: p.speed,
            max_age: p.max_age,
            cluster_rate: p.cluster_rate,
            propulsion: p.propulsion,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct RunConfig {
    pub lambdas: Vec<f64>,
    pub train_episodes: usize,
    pub eval_episodes: usize,
    pub train_seeds: Vec<u64>,
    pub eval_seed: u64,
    /// Evaluation episodes whose slot logs are written out per policy.
    #[serde(default = "default_logged")]
    pub logged_episodes: usize,
    pub output_dir: PathBuf,
}

fn default_logged() -> usize {
    1
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ExperimentConfig {
    pub grid: GridSpec,
    pub scenario: ScenarioConfig,
    #[serde(default)]
    pub physics: PhysicsConfig,
    #[serde(default)]
    pub env: EnvConfig,
    #[serde(default)]
    pub dqn: DqnConfig,
    pub run: RunConfig,
}

impl ExperimentConfig {
    /// The shipped desk-scale profile.
    pub const DESK_TOML: &'static str = include_str!("../../../../configs/desk.toml");

    pub fn desk() -> Self {
        Self::from_toml(Self::DESK_TOML).expect("shipped desk profile is valid")
    }

    pub fn from_toml(text: &str) -> Result<Self> {
        let cfg: Self = toml::from_str(text)?;
        cfg.validate()?;
        Ok(cfg)
    }

    pub fn load(path: &Path) -> Result<Self> {
        let text =
            std::fs::read_to_string(path).map_err(|e| Error::Config(format!("cannot read {}: {e}", path.display())))?;
        Self::from_toml(&text)
    }

    pub fn to_toml(&self) -> Result<String> {
        Ok(toml::to_string(self)?)
    }

    /// Hex SHA-256 of the canonical serialisation. The output directory
    /// is left out: where results go does not change what they are.
    pub fn hash(&self) -> Result<String> {
        let mut c = self.clone();
        c.run.output_dir = PathBuf::new();
        Ok(hex::encode(Sha256::digest(c.to_toml()?.as_bytes())))
    }

    /// Physical parameters in SI units, with `lambda` as the trade-off weight.
    pub fn system_params(&self, lambda: f64) -> SystemParams {
        let p = &self.physics;
        SystemParams {
            g0: db_to_linear(p.g0_db),
            uav_altitude: p.uav_altitude,
            bs_height: p.bs_height,
            bandwidth: p.bandwidth,
            packet_bits: p.packet_bits,
            noise_power: dbm_to_watts(p.noise_dbm),
            battery_capacity_j: p.battery_capacity_j,
            battery_quanta: p.battery_quanta,
            cell_side: self.grid.cell_side,
            speed: p.speed,
            max_age: p.max_age,
            propulsion: p.propulsion,
            lambda,
            cluster_rate: p.cluster_rate,
        }
    }

    /// Checks everything a run depends on, before any work starts.
    pub fn validate(&self) -> Result<()> {
        self.grid.validate()?;
        let lambdas = if self.run.lambdas.is_empty() { vec![0.0] } else { self.run.lambdas.clone() };
        for &l in &lambdas {
            self.system_params(l).validate()?;
        }
        crate::clustering::cluster_capacity(&self.system_params(0.0))?;
        let s = &self.scenario;
        if s.devices == 0 {
            return Err(Error::Config("scenario.devices must be >= 1".into()));
        }
        if !(1..=4).contains(&s.uavs) {
            return Err(Error::Config(format!("scenario.uavs must be in 1..=4, got {}", s.uavs)));
        }
        if s.kmeans_iter == 0 {
            return Err(Error::Config("scenario.kmeans_iter must be >= 1".into()));
        }
        if self.env.max_slots == 0 {
            return Err(Error::Config("env.max_slots must be >= 1".into()));
        }
        self.dqn.validate()?;
        let r = &self.run;
        if r.lambdas.is_empty() {
            return Err(Error::Config("run.lambdas must not be empty".into()));
        }
        if let Some(l) = r.lambdas.iter().find(|l| !(l.is_finite() && **l >= 0.0)) {
            return Err(Error::Config(format!("lambda must be finite and >= 0, got {l}")));
        }
        if r.train_seeds.is_empty() {
            return Err(Error::Config("run.train_seeds must not be empty".into()));
        }
        if r.eval_episodes == 0 {
            return Err(Error::Config("run.eval_episodes must be >= 1".into()));
        }
        if r.logged_episodes > r.eval_episodes {
            return Err(Error::Config("run.logged_episodes exceeds run.eval_episodes".into()));
        }
        Ok(())
    }
}

/// Parse a comma-separated list of lambdas, e.g. `0,25,100`.
pub fn parse_lambda_list(text: &str) -> Result<Vec<f64>> {
    let out: Vec<f64> = text
        .split(',')
        .map(str::trim)
        .filter(|s| !s.is_empty())
        .map(|s| s.parse::<f64>().map_err(|_| Error::Config(format!("bad lambda '{s}'"))))
        .collect::<Result<_>>()?;
    if out.is_empty() {
        return Err(Error::Config("empty lambda list".into()));
    }
    Ok(out)
}
