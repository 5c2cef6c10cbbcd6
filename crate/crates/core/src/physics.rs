//! Closed-form channel, energy and age models.
//!
//! Everything here is a pure function of its arguments. Battery levels are
//! integer counts of energy quanta; one quantum is `battery_capacity_j /
//! battery_quanta` joules.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Convert a gain in dB to linear scale.
pub fn db_to_linear(db: f64) -> f64 {
    10f64.powf(db / 10.0)
}

/// Convert a power in dBm to watts.
pub fn dbm_to_watts(dbm: f64) -> f64 {
    10f64.powf((dbm - 30.0) / 10.0)
}

/// Rotary-wing propulsion model coefficients.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct PropulsionParams {
    /// Blade profile power at hover, W.
    pub blade_profile_w: f64,
    /// Induced power at hover, W.
    pub induced_w: f64,
    /// Rotor blade tip speed, m/s.
    pub tip_speed: f64,
    /// Mean rotor induced velocity at hover, m/s.
    pub induced_velocity: f64,
    /// Fuselage drag ratio.
    pub fuselage_drag_ratio: f64,
    /// Air density, kg/m^3.
    pub air_density: f64,
    /// Rotor solidity.
    pub rotor_solidity: f64,
    /// Rotor disk area.
    pub rotor_disk_area: f64,
}

impl Default for PropulsionParams {
    fn default() -> Self {
        Self {
            blade_profile_w: 99.66,
            induced_w: 120.16,
            tip_speed: 120.0,
            induced_velocity: 0.002,
            fuselage_drag_ratio: 0.48,
            air_density: 1.225,
            rotor_solidity: 0.0001,
            rotor_disk_area: 0.5,
        }
    }
}

impl PropulsionParams {
    pub fn validate(&self) -> Result<()> {
        let fields = [
            ("blade_profile_w", self.blade_profile_w),
            ("induced_w", self.induced_w),
            ("tip_speed", self.tip_speed),
            ("induced_velocity", self.induced_velocity),
            ("fuselage_drag_ratio", self.fuselage_drag_ratio),
            ("air_density", self.air_density),
            ("rotor_solidity", self.rotor_solidity),
            ("rotor_disk_area", self.rotor_disk_area),
        ];
        for (name, value) in fields {
            if !(value.is_finite() && value > 0.0) {
                return Err(Error::InvalidParams(format!("propulsion.{name} must be finite and > 0, got {value}")));
            }
        }
        Ok(())
    }
}

/// Physical system constants, all in linear SI units.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SystemParams {
    /// Reference channel gain at 1 m (linear).
    pub g0: f64,
    /// UAV altitude, m.
    pub uav_altitude: f64,
    /// Base station antenna height, m.
    pub bs_height: f64,
    /// Signal bandwidth, Hz.
    pub bandwidth: f64,
    /// Update packet size, bits.
    pub packet_bits: f64,
    /// Noise power, W.
    pub noise_power: f64,
    /// Battery capacity, J.
    pub battery_capacity_j: f64,
    /// Number of energy quanta in a full battery.
    pub battery_quanta: u32,
    /// Cell side length, m.
    pub cell_side: f64,
    /// Cruise speed, m/s.
    pub speed: f64,
    /// Age cap, slots.
    pub max_age: u32,
    pub propulsion: PropulsionParams,
    /// Age/power trade-off weight.
    pub lambda: f64,
    /// Fixed per-cluster uplink rate, bits/s.
    pub cluster_rate: f64,
}

impl Default for SystemParams {
    fn default() -> Self {
        Self {
            g0: db_to_linear(30.0),
            uav_altitude: 100.0,
            bs_height: 15.0,
            bandwidth: 1e6,
            packet_bits: 5e6,
            noise_power: dbm_to_watts(-100.0),
            battery_capacity_j: 10_000.0,
            battery_quanta: 200,
            cell_side: 100.0,
            speed: 25.0,
            max_age: 30,
            propulsion: PropulsionParams::default(),
            lambda: 0.0,
            cluster_rate: 25e6,
        }
    }
}

impl SystemParams {
    pub fn validate(&self) -> Result<()> {
        let positive = [
            ("g0", self.g0),
            ("uav_altitude", self.uav_altitude),
            ("bs_height", self.bs_height),
            ("bandwidth", self.bandwidth),
            ("packet_bits", self.packet_bits),
            ("noise_power", self.noise_power),
            ("battery_capacity_j", self.battery_capacity_j),
            ("cell_side", self.cell_side),
            ("speed", self.speed),
            ("cluster_rate", self.cluster_rate),
        ];
        for (name, value) in positive {
            if !(value.is_finite() && value > 0.0) {
                return Err(Error::InvalidParams(format!("{name} must be finite and > 0, got {value}")));
            }
        }
        if self.battery_quanta < 1 {
            return Err(Error::InvalidParams("battery_quanta must be >= 1".into()));
        }
        if self.max_age < 1 {
            return Err(Error::InvalidParams("max_age must be >= 1".into()));
        }
        if !(self.lambda.is_finite() && self.lambda >= 0.0) {
            return Err(Error::InvalidParams(format!("lambda must be finite and >= 0, got {}", self.lambda)));
        }
        self.propulsion.validate()?;
        self.snr_factor()?;
        Ok(())
    }

    /// Slot duration: time to fly between adjacent cell centres, s.
    pub fn slot_duration(&self) -> f64 {
        self.cell_side / self.speed
    }

    /// Quanta per joule.
    pub fn quanta_per_joule(&self) -> f64 {
        f64::from(self.battery_quanta) / self.battery_capacity_j
    }

    /// `2^(M/B) - 1`, the SNR needed to push one packet through in one second.
    pub fn snr_factor(&self) -> Result<f64> {
        let exponent = self.packet_bits / self.bandwidth;
        let factor = exponent.exp2() - 1.0;
        if !factor.is_finite() || !exponent.is_finite() {
            return Err(Error::Overflow(format!("2^(M/B) is not finite for M/B = {exponent}")));
        }
        Ok(factor)
    }
}

/// Non-negative amount of battery energy expressed in quanta.
#[derive(Debug, Clone, Copy, PartialEq, PartialOrd, Default, Serialize, Deserialize)]
pub struct EnergyQuanta(f64);

impl EnergyQuanta {
    pub const ZERO: EnergyQuanta = EnergyQuanta(0.0);

    pub fn new(value: f64) -> Result<Self> {
        if value.is_nan() || value < 0.0 {
            return Err(Error::InvalidParams(format!("energy quanta must be >= 0, got {value}")));
        }
        Ok(Self(value))
    }

    pub fn from_joules(joules: f64, params: &SystemParams) -> Self {
        Self(joules * params.quanta_per_joule())
    }

    pub fn value(self) -> f64 {
        self.0
    }
}

impl std::ops::Add for EnergyQuanta {
    type Output = EnergyQuanta;

    fn add(self, rhs: Self) -> Self {
        EnergyQuanta(self.0 + rhs.0)
    }
}

impl std::ops::Mul<f64> for EnergyQuanta {
    type Output = EnergyQuanta;

    fn mul(self, rhs: f64) -> Self {
        EnergyQuanta(self.0 * rhs)
    }
}

/// Line-of-sight channel gain between a UAV at planar position `uav_xy` and
/// the base station at the origin.
pub fn channel_gain_to_bs(uav_xy: [f64; 2], params: &SystemParams) -> f64 {
    let dh = params.uav_altitude - params.bs_height;
    let planar = uav_xy[0] * uav_xy[0] + uav_xy[1] * uav_xy[1];
    params.g0 / (dh * dh + planar)
}

/// Transmit power a device needs to deliver one packet to a UAV at
/// horizontal distance `dist` within the slot.
pub fn device_tx_power(dist: f64, params: &SystemParams) -> Result<f64> {
    let factor = params.snr_factor()?;
    Ok(factor * params.noise_power / params.g0 * (dist * dist + params.uav_altitude * params.uav_altitude))
}

/// `(sqrt(1 + a^2) - a)^(1/2)`, evaluated without cancellation for large `a`.
pub fn induced_power_factor(a: f64) -> f64 {
    let root = 1f64.hypot(a);
    if a > 1.0 {
        (1.0 / (root + a)).sqrt()
    } else {
        (root - a).sqrt()
    }
}

/// The cancellation-prone textbook form of [`induced_power_factor`].
pub fn induced_power_factor_naive(a: f64) -> f64 {
    ((1.0 + a * a).sqrt() - a).sqrt()
}

/// Rotary-wing power draw at speed `v` (m/s), W.
pub fn propulsion_power(v: f64, pp: &PropulsionParams) -> f64 {
    let v2 = v * v;
    let blade = pp.blade_profile_w * (1.0 + 3.0 * v2 / (pp.tip_speed * pp.tip_speed));
    let a = v2 / (2.0 * pp.induced_velocity * pp.induced_velocity);
    let induced = pp.induced_w * induced_power_factor(a);
    let parasite = 0.5 * pp.fuselage_drag_ratio * pp.air_density * pp.rotor_solidity * pp.rotor_disk_area * v2 * v;
    blade + induced + parasite
}

/// Battery quanta spent flying (or hovering, `v = 0`) for one slot.
pub fn flight_energy_quanta(v: f64, params: &SystemParams) -> EnergyQuanta {
    EnergyQuanta::from_joules(propulsion_power(v, &params.propulsion) * params.slot_duration(), params)
}

/// Battery quanta spent relaying one packet to the base station from `uav_xy`.
pub fn relay_energy_quanta(uav_xy: [f64; 2], params: &SystemParams) -> Result<EnergyQuanta> {
    let factor = params.snr_factor()?;
    let joules = params.noise_power / channel_gain_to_bs(uav_xy, params) * factor;
    Ok(EnergyQuanta::from_joules(joules, params))
}

/// Battery level after one slot. The ceiling is taken once, on the total.
/// The result may be negative; callers detect depletion.
pub fn battery_step(battery: i64, scheduled: bool, relay: EnergyQuanta, flight: EnergyQuanta) -> i64 {
    battery - consumed_quanta(scheduled, relay, flight)
}

/// Integer quanta removed from the battery in one slot.
pub fn consumed_quanta(scheduled: bool, relay: EnergyQuanta, flight: EnergyQuanta) -> i64 {
    let spent = if scheduled { relay + flight } else { flight };
    spent.value().ceil() as i64
}

/// Advance ages by one slot: served clusters reset to 1, the rest grow by one
/// and saturate at `max_age`.
pub fn aoi_step(ages: &[u32], served: &[bool], max_age: u32) -> Vec<u32> {
    debug_assert_eq!(ages.len(), served.len());
    ages.iter().zip(served).map(|(&age, &hit)| if hit { 1 } else { (age + 1).min(max_age) }).collect()
}

#[cfg(test)]
mod tests {
    use super::*;

    fn rel(a: f64, b: f64) -> f64 {
        (a - b).abs() / b.abs().max(f64::MIN_POSITIVE)
    }

    #[test]
    fn db_conversions() {
        assert_eq!(db_to_linear(30.0), 1000.0);
        assert!(rel(dbm_to_watts(-100.0), 1e-13) < 1e-12);
    }

    #[test]
    fn channel_gain_examples() {
        let p = SystemParams::default();
        assert!(rel(channel_gain_to_bs([0.0, 0.0], &p), 1000.0 / 7225.0) < 1e-12);
        assert!(rel(channel_gain_to_bs([500.0, 500.0], &p), 1000.0 / 507_225.0) < 1e-12);
        assert!((channel_gain_to_bs([500.0, 500.0], &p) - 1.9715e-3).abs() < 1e-7);

        let flat = SystemParams { bs_height: 100.0, ..p };
        assert!(rel(channel_gain_to_bs([100.0, 0.0], &flat), 1000.0 / 10_000.0) < 1e-12);
    }

    #[test]
    fn device_power_examples() {
        let p = SystemParams::default();
        assert!(rel(device_tx_power(0.0, &p).unwrap(), 3.1e-11) < 1e-12);
        assert!(rel(device_tx_power(500.0, &p).unwrap(), 8.06e-10) < 1e-12);
        let silent = SystemParams { packet_bits: 0.0, ..p };
        assert_eq!(device_tx_power(321.0, &silent).unwrap(), 0.0);
    }

    #[test]
    fn device_power_overflow() {
        let p = SystemParams { packet_bits: 5e9, ..SystemParams::default() };
        assert!(matches!(device_tx_power(1.0, &p), Err(Error::Overflow(_))));
        assert!(p.validate().is_err());
    }

    #[test]
    fn propulsion_examples() {
        let pp = PropulsionParams::default();
        assert!(rel(propulsion_power(0.0, &pp), 219.82) < 1e-12);
        assert!((propulsion_power(25.0, &pp) - 112.88).abs() < 0.01);
        let bare = PropulsionParams { blade_profile_w: 0.0, induced_w: 0.0, fuselage_drag_ratio: 0.0, ..pp };
        assert_eq!(propulsion_power(1e4, &bare), 0.0);
    }

    #[test]
    fn flight_energy_examples() {
        let p = SystemParams::default();
        assert_eq!(p.slot_duration(), 4.0);
        assert!(rel(flight_energy_quanta(0.0, &p).value(), 17.5856) < 1e-12);
        assert!((flight_energy_quanta(25.0, &p).value() - 9.030).abs() < 1e-3);

        // 1 J quanta, P * tau = 1 J
        let unit = SystemParams {
            battery_capacity_j: 200.0,
            cell_side: 1.0,
            speed: 1.0,
            propulsion: PropulsionParams { blade_profile_w: 0.5, induced_w: 0.5, ..PropulsionParams::default() },
            ..p
        };
        assert!(rel(flight_energy_quanta(0.0, &unit).value(), 1.0) < 1e-15);
    }

    #[test]
    fn relay_energy_examples() {
        let p = SystemParams::default();
        let at_bs = relay_energy_quanta([0.0, 0.0], &p).unwrap().value();
        assert!(rel(at_bs, 0.02 * 1e-13 * 7225.0 / 1000.0 * 31.0) < 1e-12);
        assert!((at_bs - 4.48e-13).abs() < 1e-15);
        let far = relay_energy_quanta([500.0, 500.0], &p).unwrap().value();
        assert!((far - 3.14e-11).abs() < 1e-13);
        let silent = SystemParams { packet_bits: 0.0, ..p };
        assert_eq!(relay_energy_quanta([10.0, 10.0], &silent).unwrap().value(), 0.0);
    }

    #[test]
    fn battery_examples() {
        let q = |v| EnergyQuanta::new(v).unwrap();
        assert_eq!(battery_step(100, true, q(0.5), q(9.03)), 90);
        assert_eq!(battery_step(100, false, q(0.5), q(17.5856)), 82);
        assert_eq!(battery_step(5, false, q(3.0), q(0.0)), 5);
        // ceiling applies to the sum, not per term
        assert_eq!(battery_step(10, true, q(0.4), q(0.4)), 9);
    }

    #[test]
    fn energy_quanta_rejects_negative() {
        assert!(EnergyQuanta::new(-1e-9).is_err());
        assert!(EnergyQuanta::new(f64::NAN).is_err());
    }

    #[test]
    fn aoi_examples() {
        assert_eq!(aoi_step(&[5, 1, 30], &[false, true, false], 30), vec![6, 1, 30]);
        assert_eq!(aoi_step(&[5, 1, 30], &[true, false, false], 30), vec![1, 2, 30]);
        assert_eq!(aoi_step(&[30, 30], &[false, false], 30), vec![30, 30]);
        assert_eq!(aoi_step(&[1, 1], &[true, true], 30), vec![1, 1]);
    }

    #[test]
    fn validate_rejects_non_positive() {
        let mut p = SystemParams::default();
        assert!(p.validate().is_ok());
        p.speed = 0.0;
        assert!(p.validate().is_err());
        let mut p = SystemParams::default();
        p.propulsion.air_density = -1.0;
        assert!(p.validate().is_err());
    }
}
