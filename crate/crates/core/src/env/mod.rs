//! Episodic grid-world MDP.
//!
//! One centralized agent picks a joint action (a move and a cluster to
//! schedule for every UAV). All UAVs share the reward
//! `-sum_k delta_k A_k(t+1) - (lambda/K) sum_k P_k(t)`. An episode ends as soon
//! as any UAV's battery margin drops to zero or the slot cap is reached.

mod action;
mod grid;

pub use action::{ActionSpace, JointAction, Move, UavAction};
pub use grid::{apply_move, Cell, GridSpec};

use serde::{Deserialize, Serialize};

use crate::clustering::{ClusterAssignment, Device};
use crate::error::{Error, Result};
use crate::physics::{self, EnergyQuanta, SystemParams};

/// Unit in which device power enters the reward's power penalty.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
pub enum PowerUnit {
    #[default]
    W,
    #[serde(rename = "mW")]
    MilliW,
    #[serde(rename = "uW")]
    MicroW,
    #[serde(rename = "nW")]
    NanoW,
}

impl PowerUnit {
    /// Multiplier from watts to this unit.
    pub fn per_watt(self) -> f64 {
        match self {
            PowerUnit::W => 1.0,
            PowerUnit::MilliW => 1e3,
            PowerUnit::MicroW => 1e6,
            PowerUnit::NanoW => 1e9,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct EnvConfig {
    /// Hard cap on episode length, slots.
    pub max_slots: u32,
    /// Charge relay energy once per served device instead of once per slot.
    pub relay_per_device: bool,
    pub reward_power_unit: PowerUnit,
}

impl Default for EnvConfig {
    fn default() -> Self {
        Self { max_slots: 200, relay_per_device: false, reward_power_unit: PowerUnit::W }
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct UavState {
    pub cell: Cell,
    /// Battery, quanta. May dip below zero only on a terminal slot.
    pub battery: i64,
    pub home_depot: usize,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EnvState {
    pub uavs: Vec<UavState>,
    /// Per-cluster age, slots.
    pub aoi: Vec<u32>,
    /// Per-UAV battery margin over the return reserve, quanta.
    pub beta: Vec<i64>,
    pub t: u32,
    pub done: bool,
}

impl EnvState {
    pub fn min_beta(&self) -> i64 {
        self.beta.iter().copied().min().unwrap_or(i64::MAX)
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct StepInfo {
    /// Schedules after conflict resolution, 0 = none.
    pub schedules: Vec<usize>,
    /// 1-based ids of clusters served this slot, ascending.
    pub served: Vec<usize>,
    /// Which moves ran into the grid boundary and were executed as hover.
    pub clamped: Vec<bool>,
    /// Per-device transmit power this slot, W (0 for unscheduled devices),
    /// indexed like the device list.
    pub device_power: Vec<f64>,
    /// `sum_k P_k(t)`, W.
    pub power_sum: f64,
    /// `sum_k delta_k A_k(t+1)`.
    pub weighted_age: f64,
    /// Unweighted mean device age after the step.
    pub mean_age: f64,
    /// Integer battery quanta consumed per UAV.
    pub consumed: Vec<i64>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct StepOutcome {
    pub next_state: EnvState,
    pub reward: f64,
    pub done: bool,
    pub info: StepInfo,
}

/// Immutable episode definition: grid, devices, clusters and physics.
#[derive(Debug, Clone)]
pub struct Environment {
    grid: GridSpec,
    params: SystemParams,
    config: EnvConfig,
    devices: Vec<Device>,
    assignment: ClusterAssignment,
    uav_count: usize,
    /// Device indices (into `devices`) per cluster.
    cluster_devices: Vec<Vec<usize>>,
    /// Sum of member importance per cluster.
    cluster_weight: Vec<f64>,
    hover_q: EnergyQuanta,
    move_q: EnergyQuanta,
    relay_max_q: EnergyQuanta,
}

impl Environment {
    pub fn new(
        grid: GridSpec,
        params: SystemParams,
        config: EnvConfig,
        devices: Vec<Device>,
        assignment: ClusterAssignment,
        uav_count: usize,
    ) -> Result<Self> {
        grid.validate()?;
        params.validate()?;
        if grid.cell_side != params.cell_side {
            return Err(Error::InvalidParams(format!(
                "grid cell side {} differs from physics cell side {}",
                grid.cell_side, params.cell_side
            )));
        }
        if uav_count == 0 {
            return Err(Error::Config("at least one UAV is required".into()));
        }
        if uav_count > grid.depots().len() {
            return Err(Error::Config(format!("{uav_count} UAVs but only {} distinct depots", grid.depots().len())));
        }
        if config.max_slots == 0 {
            return Err(Error::Config("max_slots must be >= 1".into()));
        }
        assignment.validate(&devices)?;
        if devices.iter().any(|d| !(d.weight.is_finite() && d.weight >= 0.0)) {
            return Err(Error::InvalidParams("device weights must be finite and >= 0".into()));
        }

        let cluster_devices: Vec<Vec<usize>> = assignment
            .members
            .iter()
            .map(|ids| ids.iter().map(|id| devices.iter().position(|d| d.id == *id).expect("validated")).collect())
            .collect();
        let cluster_weight = cluster_devices.iter().map(|idx| idx.iter().map(|&i| devices[i].weight).sum()).collect();

        let corner = grid.center_m(grid.depots()[2]);
        let mut relay_max_q = physics::relay_energy_quanta(corner, &params)?;
        if config.relay_per_device {
            let largest = assignment.members.iter().map(Vec::len).max().unwrap_or(0);
            relay_max_q = relay_max_q * largest as f64;
        }

        Ok(Self {
            hover_q: physics::flight_energy_quanta(0.0, &params),
            move_q: physics::flight_energy_quanta(params.speed, &params),
            relay_max_q,
            grid,
            params,
            config,
            devices,
            assignment,
            uav_count,
            cluster_devices,
            cluster_weight,
        })
    }

    pub fn grid(&self) -> &GridSpec {
        &self.grid
    }

    pub fn params(&self) -> &SystemParams {
        &self.params
    }

    pub fn config(&self) -> &EnvConfig {
        &self.config
    }

    pub fn devices(&self) -> &[Device] {
        &self.devices
    }

    pub fn assignment(&self) -> &ClusterAssignment {
        &self.assignment
    }

    pub fn uav_count(&self) -> usize {
        self.uav_count
    }

    pub fn cluster_count(&self) -> usize {
        self.assignment.len()
    }

    pub fn action_space(&self) -> ActionSpace {
        ActionSpace::new(self.uav_count, self.cluster_count())
    }

    /// Length of [`Environment::encode_state`] vectors: `3U + L`.
    pub fn state_dim(&self) -> usize {
        3 * self.uav_count + self.cluster_count()
    }

    pub fn hover_quanta(&self) -> EnergyQuanta {
        self.hover_q
    }

    pub fn move_quanta(&self) -> EnergyQuanta {
        self.move_q
    }

    /// Quantized energy needed to fly back to the nearest depot from `cell`
    /// while relaying in every slot.
    pub fn reserve(&self, cell: Cell) -> i64 {
        let hops = f64::from(self.grid.depot_distance(cell));
        (hops * (self.move_q + self.relay_max_q).value()).ceil() as i64
    }

    /// Battery margin over the return reserve.
    pub fn compute_beta(&self, uav: &UavState) -> i64 {
        uav.battery - self.reserve(uav.cell)
    }

    /// Every UAV at its own depot with a full battery, all ages 1.
    pub fn reset(&self) -> EnvState {
        let depots = self.grid.depots();
        let uavs: Vec<UavState> = (0..self.uav_count)
            .map(|u| {
                let home = u % depots.len();
                UavState { cell: depots[home], battery: i64::from(self.params.battery_quanta), home_depot: home }
            })
            .collect();
        let beta = uavs.iter().map(|u| self.compute_beta(u)).collect();
        EnvState { uavs, aoi: vec![1; self.cluster_count()], beta, t: 0, done: false }
    }

    /// Resolve conflicting schedules: the lowest-index UAV keeps a cluster
    /// claimed by several UAVs, the others idle.
    pub fn resolve_schedules(&self, action: &JointAction) -> Vec<usize> {
        let mut taken = vec![false; self.cluster_count() + 1];
        action
            .0
            .iter()
            .map(|a| {
                if a.schedule == 0 || taken[a.schedule] {
                    0
                } else {
                    taken[a.schedule] = true;
                    a.schedule
                }
            })
            .collect()
    }

    pub fn step(&self, state: &EnvState, action: &JointAction) -> Result<StepOutcome> {
        if state.done {
            return Err(Error::EpisodeDone { t: state.t });
        }
        if action.0.len() != self.uav_count {
            return Err(Error::InvalidAction(format!(
                "expected {} UAV actions, got {}",
                self.uav_count,
                action.0.len()
            )));
        }
        if let Some(a) = action.0.iter().find(|a| a.schedule > self.cluster_count()) {
            return Err(Error::InvalidAction(format!(
                "schedule {} exceeds cluster count {}",
                a.schedule,
                self.cluster_count()
            )));
        }

        let schedules = self.resolve_schedules(action);

        // Uplink grants go out at the start of the slot, so devices transmit
        // towards the UAV's current position.
        let mut device_power = vec![0.0; self.devices.len()];
        let mut served_mask = vec![false; self.cluster_count()];
        for (uav, &sched) in state.uavs.iter().zip(&schedules) {
            if sched == 0 {
                continue;
            }
            served_mask[sched - 1] = true;
            let pos = self.grid.center_m(uav.cell);
            for &k in &self.cluster_devices[sched - 1] {
                let d = self.devices[k].xy;
                let dist = (d[0] - pos[0]).hypot(d[1] - pos[1]);
                device_power[k] = physics::device_tx_power(dist, &self.params)?;
            }
        }

        let mut uavs = Vec::with_capacity(self.uav_count);
        let mut clamped = Vec::with_capacity(self.uav_count);
        let mut consumed = Vec::with_capacity(self.uav_count);
        for ((uav, a), &sched) in state.uavs.iter().zip(&action.0).zip(&schedules) {
            let (cell, hit_edge) = apply_move(uav.cell, a.mv, &self.grid);
            let flight = if a.mv == Move::Hover || hit_edge { self.hover_q } else { self.move_q };
            let relay = if sched > 0 {
                let q = physics::relay_energy_quanta(self.grid.center_m(uav.cell), &self.params)?;
                if self.config.relay_per_device {
                    q * self.cluster_devices[sched - 1].len() as f64
                } else {
                    q
                }
            } else {
                EnergyQuanta::ZERO
            };
            let spent = physics::consumed_quanta(sched > 0, relay, flight);
            consumed.push(spent);
            clamped.push(hit_edge);
            uavs.push(UavState { cell, battery: uav.battery - spent, home_depot: uav.home_depot });
        }

        let aoi = physics::aoi_step(&state.aoi, &served_mask, self.params.max_age);
        let weighted_age: f64 = aoi.iter().zip(&self.cluster_weight).map(|(&a, &w)| w * f64::from(a)).sum();
        let mean_age =
            aoi.iter().zip(&self.cluster_devices).map(|(&a, idx)| f64::from(a) * idx.len() as f64).sum::<f64>()
                / self.devices.len() as f64;
        let power_sum: f64 = device_power.iter().sum();
        let k = self.devices.len() as f64;
        let reward = -weighted_age - self.params.lambda / k * power_sum * self.config.reward_power_unit.per_watt();

        let beta: Vec<i64> = uavs.iter().map(|u| self.compute_beta(u)).collect();
        let t = state.t + 1;
        let done = beta.iter().any(|&b| b <= 0) || t >= self.config.max_slots;

        let served = served_mask.iter().enumerate().filter(|(_, s)| **s).map(|(l, _)| l + 1).collect();

        Ok(StepOutcome {
            next_state: EnvState { uavs, aoi, beta, t, done },
            reward,
            done,
            info: StepInfo { schedules, served, clamped, device_power, power_sum, weighted_age, mean_age, consumed },
        })
    }

    /// Network input: per UAV the cell position scaled to `[-1, 1]`, per
    /// cluster `age / A_max`, per UAV `beta / battery_quanta`.
    pub fn encode_state(&self, state: &EnvState) -> Vec<f64> {
        let mut out = Vec::with_capacity(self.state_dim());
        self.encode_state_into(state, &mut out);
        out
    }

    pub fn encode_state_into(&self, state: &EnvState, out: &mut Vec<f64>) {
        out.clear();
        let h = f64::from(self.grid.half_cells());
        for u in &state.uavs {
            out.push(f64::from(u.cell.x) / h);
            out.push(f64::from(u.cell.y) / h);
        }
        let a_max = f64::from(self.params.max_age);
        out.extend(state.aoi.iter().map(|&a| f64::from(a) / a_max));
        let n = f64::from(self.params.battery_quanta);
        out.extend(state.beta.iter().map(|&b| b as f64 / n));
    }
}
