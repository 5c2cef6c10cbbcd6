//! Device placement and clustering, persisted as JSON.

use std::path::Path;

use rand::Rng;
use serde::{Deserialize, Serialize};

use super::config::{ExperimentConfig, WeightMode};
use crate::clustering::{cluster_capacity, kmeans_capacitated, ClusterAssignment, Device};
use crate::env::{Environment, GridSpec};
use crate::error::{Error, Result};
use crate::rng::{stream, streams};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Scenario {
    pub config_hash: String,
    pub seed: u64,
    pub grid: GridSpec,
    pub uavs: usize,
    pub devices: Vec<Device>,
    pub assignment: ClusterAssignment,
}

/// Place devices uniformly over the grid area (no clustering yet).
pub fn place_devices(cfg: &ExperimentConfig, seed: u64) -> Vec<Device> {
    let mut rng = stream(seed, streams::SCENARIO);
    let h = cfg.grid.half_extent();
    let n = cfg.scenario.devices;
    let xy: Vec<[f64; 2]> = (0..n).map(|_| [rng.random_range(-h..h), rng.random_range(-h..h)]).collect();
    let mut devices = Device::uniform(&xy);
    if cfg.scenario.weights == WeightMode::Random {
        // 1 - u lies in (0, 1], so every device keeps a positive weight.
        let raw: Vec<f64> = (0..n).map(|_| 1.0 - rng.random::<f64>()).collect();
        let total: f64 = raw.iter().sum();
        for (d, w) in devices.iter_mut().zip(raw) {
            d.weight = w / total;
        }
    }
    devices
}

/// Cluster `devices` with the capacity implied by the configured rate.
pub fn cluster_devices(cfg: &ExperimentConfig, devices: &[Device], seed: u64) -> Result<ClusterAssignment> {
    let capacity = cluster_capacity(&cfg.system_params(0.0))?;
    kmeans_capacitated(devices, capacity, seed, cfg.scenario.kmeans_iter)
}

/// Devices plus clusters; same config and seed give an identical scenario.
pub fn generate_scenario(cfg: &ExperimentConfig, seed: u64) -> Result<Scenario> {
    let devices = place_devices(cfg, seed);
    let assignment = cluster_devices(cfg, &devices, seed)?;
    Ok(Scenario { config_hash: cfg.hash()?, seed, grid: cfg.grid, uavs: cfg.scenario.uavs, devices, assignment })
}

impl Scenario {
    pub fn validate(&self) -> Result<()> {
        self.grid.validate()?;
        if self.devices.is_empty() {
            return Err(Error::Format("scenario has no devices".into()));
        }
        for (i, d) in self.devices.iter().enumerate() {
            if d.id != i {
                return Err(Error::Format(format!("device at position {i} has id {}", d.id)));
            }
            let h = self.grid.half_extent();
            if !d.xy.iter().all(|v| v.is_finite() && v.abs() <= h) {
                return Err(Error::Format(format!("device {i} lies outside the grid")));
            }
            if !(d.weight.is_finite() && d.weight > 0.0) {
                return Err(Error::Format(format!("device {i} has weight {}", d.weight)));
            }
        }
        self.assignment.validate(&self.devices).map_err(|e| Error::Format(format!("scenario clusters: {e}")))
    }

    pub fn to_json(&self) -> Result<String> {
        let mut s = serde_json::to_string_pretty(self)?;
        s.push('\n');
        Ok(s)
    }

    pub fn from_json(bytes: &[u8]) -> Result<Self> {
        let s: Self = serde_json::from_slice(bytes).map_err(|e| Error::Format(format!("scenario: {e}")))?;
        s.validate()?;
        Ok(s)
    }

    pub fn save(&self, path: &Path) -> Result<()> {
        super::io::write_atomic(path, self.to_json()?.as_bytes())
    }

    pub fn load(path: &Path) -> Result<Self> {
        let bytes = std::fs::read(path).map_err(|e| Error::Missing(format!("scenario {}: {e}", path.display())))?;
        Self::from_json(&bytes)
    }

    /// An environment over this scenario with the trade-off weight `lambda`.
    pub fn environment(&self, cfg: &ExperimentConfig, lambda: f64) -> Result<Environment> {
        if self.grid != cfg.grid {
            return Err(Error::Config("scenario grid differs from the configured grid".into()));
        }
        Environment::new(
            self.grid,
            cfg.system_params(lambda),
            cfg.env,
            self.devices.clone(),
            self.assignment.clone(),
            self.uavs,
        )
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn desk_scenario_shape_and_determinism() {
        let cfg = ExperimentConfig::desk();
        let a = generate_scenario(&cfg, 7).unwrap();
        assert_eq!(a.devices.len(), 20);
        assert_eq!(a.assignment.capacity, 5);
        assert_eq!(a.assignment.len(), 4);
        let b = generate_scenario(&cfg, 7).unwrap();
        assert_eq!(a.to_json().unwrap(), b.to_json().unwrap());
        let c = generate_scenario(&cfg, 8).unwrap();
        assert_ne!(a.devices, c.devices);
        let back = Scenario::from_json(a.to_json().unwrap().as_bytes()).unwrap();
        assert_eq!(back, a);
        back.environment(&cfg, 0.0).unwrap();
    }

    #[test]
    fn full_scale_capacity() {
        let mut cfg = ExperimentConfig::desk();
        cfg.grid = GridSpec::default();
        cfg.scenario.devices = 100;
        cfg.physics.cluster_rate = 25e6;
        let s = generate_scenario(&cfg, 1).unwrap();
        assert_eq!(s.assignment.capacity, 20);
        assert_eq!(s.assignment.len(), 5);
        cfg.scenario.devices = 1;
        assert_eq!(generate_scenario(&cfg, 1).unwrap().assignment.len(), 1);
    }

    #[test]
    fn random_weights_sum_to_one() {
        let mut cfg = ExperimentConfig::desk();
        cfg.scenario.weights = WeightMode::Random;
        let d = place_devices(&cfg, 3);
        let total: f64 = d.iter().map(|d| d.weight).sum();
        assert!((total - 1.0).abs() < 1e-12);
        assert!(d.iter().all(|d| d.weight > 0.0));
    }

    #[test]
    fn decoder_rejects_tampering() {
        let cfg = ExperimentConfig::desk();
        let s = generate_scenario(&cfg, 7).unwrap();
        let mut bad = s.clone();
        bad.devices[3].id = 9;
        assert!(Scenario::from_json(bad.to_json().unwrap().as_bytes()).is_err());
        let mut bad = s.clone();
        bad.assignment.members[0].pop();
        assert!(Scenario::from_json(bad.to_json().unwrap().as_bytes()).is_err());
        let mut bad = s;
        bad.devices[0].xy = [1e6, 0.0];
        assert!(Scenario::from_json(bad.to_json().unwrap().as_bytes()).is_err());
        assert!(Scenario::from_json(b"{}").is_err());
    }
}
