//! Independent reference implementations used by the integration and
//! acceptance tests. Nothing here calls the code it checks, except to read
//! inputs or outputs.
#![allow(dead_code)]

use ndarray::{array, Array2};
use num_bigint::BigInt;
use num_traits::{One, Signed, ToPrimitive, Zero};
use rand::Rng;
use uav_aoi::clustering::Device;
use uav_aoi::nn::{tabular_q_update, td_targets, Dense, Gradients, Loss, Minibatch, Mlp};
use uav_aoi::physics::PropulsionParams;
use uav_aoi::rng::stream;
use uav_aoi::trajectory::EpisodeLog;

/// Binary fixed point with `SCALE` fractional bits over arbitrary-precision
/// integers. Every finite f64 of moderate exponent converts exactly.
#[derive(Clone, Debug, PartialEq)]
pub struct Fixed(BigInt);

const SCALE: u32 = 400;

impl Fixed {
    pub fn from_f64(x: f64) -> Self {
        assert!(x.is_finite());
        if x == 0.0 {
            return Fixed(BigInt::zero());
        }
        let bits = x.to_bits();
        let sign = if bits >> 63 == 1 { -1 } else { 1 };
        let exp = ((bits >> 52) & 0x7ff) as i64;
        let frac = bits & ((1u64 << 52) - 1);
        let (mant, e) = if exp == 0 { (frac, -1074) } else { (frac | (1u64 << 52), exp - 1075) };
        // x = mant * 2^e, so x * 2^SCALE = mant * 2^(e + SCALE)
        let shift = e + SCALE as i64;
        assert!(shift >= 0, "value too small for the fixed-point scale");
        Fixed(BigInt::from(sign) * (BigInt::from(mant) << shift as usize))
    }

    pub fn int(n: i64) -> Self {
        Fixed(BigInt::from(n) << SCALE as usize)
    }

    pub fn to_f64(&self) -> f64 {
        // keep 80 significant bits above the binary point before converting
        let bits = self.0.bits() as i64;
        let drop = (bits - 80).max(0);
        let head = (&self.0 >> drop as usize).to_f64().unwrap();
        head * 2f64.powi((drop - SCALE as i64) as i32)
    }

    pub fn add(&self, o: &Fixed) -> Fixed {
        Fixed(&self.0 + &o.0)
    }

    pub fn sub(&self, o: &Fixed) -> Fixed {
        Fixed(&self.0 - &o.0)
    }

    pub fn mul(&self, o: &Fixed) -> Fixed {
        Fixed((&self.0 * &o.0) >> SCALE as usize)
    }

    pub fn div(&self, o: &Fixed) -> Fixed {
        assert!(!o.0.is_zero());
        Fixed((&self.0 << SCALE as usize) / &o.0)
    }

    pub fn sqrt(&self) -> Fixed {
        assert!(!self.0.is_negative());
        Fixed(isqrt(&(&self.0 << SCALE as usize)))
    }
}

/// Floor square root by Newton iteration on integers.
fn isqrt(n: &BigInt) -> BigInt {
    if n.is_zero() {
        return BigInt::zero();
    }
    let mut x = BigInt::one() << ((n.bits() / 2 + 1) as usize);
    loop {
        let y = (&x + n / &x) >> 1usize;
        if y >= x {
            return x;
        }
        x = y;
    }
}

/// `(sqrt(1 + a^2) - a)^(1/2)` in fixed point, with `a = v^2 / (2 s0^2)`.
pub fn induced_factor_oracle(v: f64, s0: f64) -> f64 {
    let v = Fixed::from_f64(v);
    let s0 = Fixed::from_f64(s0);
    let a = v.mul(&v).div(&Fixed::int(2).mul(&s0).mul(&s0));
    Fixed::int(1).add(&a.mul(&a)).sqrt().sub(&a).sqrt().to_f64()
}

/// Rotary-wing power in fixed point, straight from the model's definition.
pub fn propulsion_oracle(v: f64, p: &PropulsionParams) -> f64 {
    let f = Fixed::from_f64;
    let vv = f(v).mul(&f(v));
    let tip2 = f(p.tip_speed).mul(&f(p.tip_speed));
    let blade = f(p.blade_profile_w).mul(&Fixed::int(1).add(&Fixed::int(3).mul(&vv).div(&tip2)));
    let s0 = f(p.induced_velocity);
    let a = vv.div(&Fixed::int(2).mul(&s0).mul(&s0));
    let induced = f(p.induced_w).mul(&Fixed::int(1).add(&a.mul(&a)).sqrt().sub(&a).sqrt());
    let parasite = f(p.fuselage_drag_ratio)
        .mul(&f(p.air_density))
        .mul(&f(p.rotor_solidity))
        .mul(&f(p.rotor_disk_area))
        .mul(&vv)
        .mul(&f(v))
        .div(&Fixed::int(2));
    blade.add(&induced).add(&parasite).to_f64()
}

/// Mean squared error on the taken actions, recomputed from a forward pass.
pub fn mse_loss(net: &Mlp, x: &Array2<f64>, actions: &[usize], targets: &[f64]) -> f64 {
    let q = net.forward(x.view()).unwrap();
    let n = actions.len() as f64;
    actions.iter().zip(targets).enumerate().map(|(i, (&a, &y))| (q[[i, a]] - y).powi(2)).sum::<f64>() / n
}

/// Central finite differences of [`mse_loss`] for every parameter, in layer
/// order (weights row-major, then bias).
pub fn fd_gradients(net: &Mlp, x: &Array2<f64>, actions: &[usize], targets: &[f64], h: f64) -> Vec<f64> {
    let mut out = Vec::new();
    let mut probe = net.clone();
    for l in 0..net.layers().len() {
        let (rows, cols) = net.layers()[l].weights.dim();
        for r in 0..rows {
            for c in 0..cols {
                let w0 = net.layers()[l].weights[[r, c]];
                probe.layers_mut()[l].weights[[r, c]] = w0 + h;
                let up = mse_loss(&probe, x, actions, targets);
                probe.layers_mut()[l].weights[[r, c]] = w0 - h;
                let down = mse_loss(&probe, x, actions, targets);
                probe.layers_mut()[l].weights[[r, c]] = w0;
                out.push((up - down) / (2.0 * h));
            }
        }
        for c in 0..net.layers()[l].bias.len() {
            let b0 = net.layers()[l].bias[c];
            probe.layers_mut()[l].bias[c] = b0 + h;
            let up = mse_loss(&probe, x, actions, targets);
            probe.layers_mut()[l].bias[c] = b0 - h;
            let down = mse_loss(&probe, x, actions, targets);
            probe.layers_mut()[l].bias[c] = b0;
            out.push((up - down) / (2.0 * h));
        }
    }
    out
}

fn cluster_cost(points: &[[f64; 2]]) -> f64 {
    if points.is_empty() {
        return 0.0;
    }
    let n = points.len() as f64;
    let cx = points.iter().map(|p| p[0]).sum::<f64>() / n;
    let cy = points.iter().map(|p| p[1]).sum::<f64>() / n;
    points.iter().map(|p| (p[0] - cx).powi(2) + (p[1] - cy).powi(2)).sum()
}

/// Smallest within-cluster squared error over all partitions into exactly
/// `clusters` non-empty groups of at most `capacity` points.
pub fn exhaustive_min_cost(points: &[[f64; 2]], capacity: usize, clusters: usize) -> f64 {
    fn rec(
        i: usize,
        points: &[[f64; 2]],
        labels: &mut Vec<usize>,
        used: usize,
        capacity: usize,
        clusters: usize,
        best: &mut f64,
    ) {
        let n = points.len();
        // not enough points left to open the remaining clusters
        if clusters - used > n - i {
            return;
        }
        if i == n {
            let cost: f64 = (0..clusters)
                .map(|c| {
                    let g: Vec<[f64; 2]> = (0..n).filter(|&k| labels[k] == c).map(|k| points[k]).collect();
                    cluster_cost(&g)
                })
                .sum();
            *best = best.min(cost);
            return;
        }
        for c in 0..(used + 1).min(clusters) {
            if labels.iter().filter(|&&l| l == c).count() >= capacity {
                continue;
            }
            labels.push(c);
            rec(i + 1, points, labels, used.max(c + 1), capacity, clusters, best);
            labels.pop();
        }
    }
    let mut best = f64::INFINITY;
    rec(0, points, &mut Vec::new(), 0, capacity, clusters, &mut best);
    best
}

/// Ergodic age and power straight from slot logs: per episode, average the
/// per-slot device-mean age and device-mean power; then average episodes.
pub fn ergodic_from_logs(logs: &[EpisodeLog], devices: &[Device], members: &[Vec<usize>]) -> (f64, f64) {
    let k = devices.len() as f64;
    let mut age = 0.0;
    let mut power = 0.0;
    for log in logs {
        let mut a = 0.0;
        let mut p = 0.0;
        for s in &log.slots {
            let mut per_device = vec![0.0; devices.len()];
            for (l, m) in members.iter().enumerate() {
                for &i in m {
                    per_device[i] = f64::from(s.aoi[l]);
                }
            }
            a += per_device.iter().sum::<f64>() / k;
            p += s.power_sum / k;
        }
        let n = log.slots.len() as f64;
        age += a / n;
        power += p / n;
    }
    (age / logs.len() as f64, power / logs.len() as f64)
}

/// Pearson chi-squared statistic against a uniform distribution.
pub fn chi_squared_uniform(counts: &[usize]) -> f64 {
    let total: usize = counts.iter().sum();
    let e = total as f64 / counts.len() as f64;
    counts.iter().map(|&c| (c as f64 - e).powi(2) / e).sum()
}

/// Upper 0.1% quantile of chi-squared with `df` degrees of freedom
/// (Wilson-Hilferty approximation).
pub fn chi_squared_crit(df: usize) -> f64 {
    let k = df as f64;
    let z = 3.090_232_306_167_813;
    k * (1.0 - 2.0 / (9.0 * k) + z * (2.0 / (9.0 * k)).sqrt()).powi(3)
}

fn flatten(grads: &Gradients) -> Vec<f64> {
    grads.iter().flat_map(|g| g.weights.iter().copied().chain(g.bias.iter().copied()).collect::<Vec<_>>()).collect()
}

/// Max relative error of analytic vs central-difference gradients over ten
/// random 4-8-3 networks.
pub fn gradient_check_max_error() -> f64 {
    let mut worst: f64 = 0.0;
    for seed in 0..10u64 {
        let mut rng = stream(seed, 99);
        let net = Mlp::new(&[4, 8, 3], &mut rng).unwrap();
        let n = 6;
        let x = Array2::from_shape_fn((n, 4), |_| rng.random_range(-1.0..1.0));
        let actions: Vec<usize> = (0..n).map(|_| rng.random_range(0..3)).collect();
        let targets: Vec<f64> = (0..n).map(|_| rng.random_range(-2.0..2.0)).collect();
        let (_, grads) = net.loss_and_gradients(x.view(), &actions, &targets, Loss::MeanSquared).unwrap();
        let analytic = flatten(&grads);
        let numeric = fd_gradients(&net, &x, &actions, &targets, 1e-5);
        assert_eq!(analytic.len(), numeric.len());
        for (a, n) in analytic.iter().zip(&numeric) {
            let denom = a.abs().max(n.abs());
            if denom > 1e-7 {
                worst = worst.max((a - n).abs() / denom);
            } else {
                worst = worst.max((a - n).abs());
            }
        }
    }
    worst
}

/// Dyadic inputs keep every f64 operation exact, so the closed forms can be
/// checked with integer arithmetic.
pub fn td_and_tabular_exact(cases: usize, seed: u64) -> usize {
    let mut rng = stream(seed, 7);
    let mut ok = 0;
    for _ in 0..cases {
        let r_n: i64 = rng.random_range(-64..=64); // r = r_n / 8
        let g_n: i64 = rng.random_range(0..16); // gamma = g_n / 16
        let q_n: [i64; 3] = [rng.random_range(-32..=32), rng.random_range(-32..=32), rng.random_range(-32..=32)];
        let cur_n: i64 = rng.random_range(-32..=32); // q = cur_n / 4
        let a_n: i64 = rng.random_range(0..=8); // alpha = a_n / 8
        let done: bool = rng.random_bool(0.2);
        let r = r_n as f64 / 8.0;
        let gamma = g_n as f64 / 16.0;
        let net = Mlp::from_layers(vec![Dense {
            weights: array![[0.0, 0.0, 0.0]],
            bias: array![q_n[0] as f64 / 4.0, q_n[1] as f64 / 4.0, q_n[2] as f64 / 4.0],
        }])
        .unwrap();
        let batch = Minibatch {
            states: Array2::zeros((1, 1)),
            actions: vec![0],
            rewards: vec![r],
            next_states: Array2::ones((1, 1)),
            dones: vec![done],
        };
        let y = td_targets(&batch, &net, gamma).unwrap()[0];
        // y * 512 = r_n * 64 + g_n * max_q_n * 8  (common denominator 512)
        let max_n = *q_n.iter().max().unwrap();
        let y_512 = r_n * 64 + if done { 0 } else { g_n * max_n * 8 };
        let alpha = a_n as f64 / 8.0;
        let q = cur_n as f64 / 4.0;
        let updated = tabular_q_update(q, alpha, r, gamma, max_n as f64 / 4.0);
        // q + alpha (r + gamma m - q), denominator 4096
        let target_512 = r_n * 64 + g_n * max_n * 8;
        let upd_4096 = cur_n * 1024 + a_n * (target_512 - cur_n * 128);
        if y * 512.0 == y_512 as f64 && updated * 4096.0 == upd_4096 as f64 {
            ok += 1;
        }
    }
    ok
}

/// Result of the clustering acceptance suite.
pub struct ClusteringReport {
    pub large_ok: usize,
    pub small_within_25pct: usize,
}

/// 100 random K = 100 instances at capacity 20 (checks partition, capacity
/// and L = 5), then 100 random K <= 8 instances against exhaustive search.
pub fn clustering_suite(seed: u64) -> ClusteringReport {
    use uav_aoi::clustering::kmeans_capacitated;
    let mut rng = stream(seed, 11);
    let mut large_ok = 0;
    for i in 0..100u64 {
        let pts: Vec<[f64; 2]> =
            (0..100).map(|_| [rng.random_range(-550.0..550.0), rng.random_range(-550.0..550.0)]).collect();
        let devices = Device::uniform(&pts);
        let a = kmeans_capacitated(&devices, 20, i, 100).unwrap();
        let mut seen = vec![0usize; 100];
        for m in &a.members {
            for &k in m {
                seen[k] += 1;
            }
        }
        let partition = seen.iter().all(|&c| c == 1);
        let capacity = a.members.iter().all(|m| !m.is_empty() && m.len() <= 20);
        if partition && capacity && a.members.len() == 5 && a.validate(&devices).is_ok() {
            large_ok += 1;
        }
    }
    let mut small_within_25pct = 0;
    for i in 0..100u64 {
        let k = rng.random_range(2..=8usize);
        let capacity = rng.random_range(1..=k.min(4));
        let clusters = k.div_ceil(capacity);
        let pts: Vec<[f64; 2]> =
            (0..k).map(|_| [rng.random_range(-550.0..550.0), rng.random_range(-550.0..550.0)]).collect();
        let devices = Device::uniform(&pts);
        let a = kmeans_capacitated(&devices, capacity, 1000 + i, 100).unwrap();
        let cost = a.within_cluster_sse(&devices);
        let best = exhaustive_min_cost(&pts, capacity, clusters);
        if a.members.len() == clusters && cost <= 1.25 * best + 1e-9 {
            small_within_25pct += 1;
        }
    }
    ClusteringReport { large_ok, small_within_25pct }
}

/// Reward of one logged slot recomputed from first principles: weighted
/// post-step ages plus the closed-form device transmit power
/// `(2^(M/B) - 1) sigma^2 / g0 * (d^2 + h^2)` at the serving UAV's start cell.
pub fn slot_reward_oracle(
    slot: &uav_aoi::trajectory::SlotRecord,
    scenario: &uav_aoi::harness::scenario::Scenario,
    params: &uav_aoi::physics::SystemParams,
    per_watt: f64,
) -> f64 {
    let grid = scenario.grid;
    let mut age = 0.0;
    for (l, m) in scenario.assignment.members.iter().enumerate() {
        for &i in m {
            age += scenario.devices[i].weight * f64::from(slot.aoi[l]);
        }
    }
    let snr = 2f64.powf(params.packet_bits / params.bandwidth) - 1.0;
    let mut power = 0.0;
    for (cell, &sched) in slot.cells.iter().zip(&slot.schedules) {
        if sched == 0 {
            continue;
        }
        let cx = f64::from(cell.x) * grid.cell_side;
        let cy = f64::from(cell.y) * grid.cell_side;
        for &i in &scenario.assignment.members[sched - 1] {
            let [x, y] = scenario.devices[i].xy;
            let d2 = (x - cx).powi(2) + (y - cy).powi(2);
            power += snr * params.noise_power / params.g0 * (d2 + params.uav_altitude.powi(2));
        }
    }
    -age - params.lambda / scenario.devices.len() as f64 * power * per_watt
}

#[derive(Debug, Default)]
pub struct EnvReport {
    pub steps: usize,
    pub aoi_violations: usize,
    pub battery_violations: usize,
    pub beta_violations: usize,
    pub max_reward_error: f64,
    pub replay_mismatches: usize,
}

/// Random environments driven by uniform random actions until `steps`
/// slots have been taken.
pub fn env_property_suite(steps: usize, seed: u64) -> EnvReport {
    use uav_aoi::env::PowerUnit;
    use uav_aoi::harness::config::ExperimentConfig;
    use uav_aoi::harness::scenario::generate_scenario;
    use uav_aoi::policy::{run_episode, Policy};
    use uav_aoi::rng::derive_seed;

    let mut rng = stream(seed, 12);
    let mut report = EnvReport::default();
    let mut instance = 0u64;
    while report.steps < steps {
        instance += 1;
        let mut cfg = ExperimentConfig::desk();
        cfg.grid.cells_per_side = [3, 5, 7, 11][rng.random_range(0..4)];
        cfg.scenario.uavs = rng.random_range(1..=4);
        cfg.scenario.devices = rng.random_range(1..=30);
        cfg.physics.cluster_rate = [6.25e6, 12.5e6, 25e6][rng.random_range(0..3)];
        cfg.env.max_slots = rng.random_range(1..=80);
        cfg.env.relay_per_device = rng.random_bool(0.3);
        cfg.env.reward_power_unit = [PowerUnit::W, PowerUnit::NanoW][rng.random_range(0..2)];
        let lambda = [0.0, 10.0, 100.0][rng.random_range(0..3)];
        let scenario = generate_scenario(&cfg, instance).unwrap();
        let env = scenario.environment(&cfg, lambda).unwrap();
        let max_age = env.params().max_age;
        let per_watt = cfg.env.reward_power_unit.per_watt();

        let ep_seed = derive_seed(seed, instance);
        let mut log = Vec::new();
        run_episode(&env, &Policy::Rw, 0, &mut stream(ep_seed, 4), Some(&mut log)).unwrap();
        let mut again = Vec::new();
        run_episode(&env, &Policy::Rw, 0, &mut stream(ep_seed, 4), Some(&mut again)).unwrap();
        if log != again {
            report.replay_mismatches += 1;
        }

        let start = env.reset();
        let mut battery: Vec<i64> = start.uavs.iter().map(|u| u.battery).collect();
        for s in &log {
            report.steps += 1;
            if s.aoi.iter().any(|&a| a < 1 || a > max_age) {
                report.aoi_violations += 1;
            }
            for ((&before, &used), &after) in battery.iter().zip(&s.consumed).zip(&s.battery) {
                if before - used != after || used < 0 {
                    report.battery_violations += 1;
                }
            }
            battery = s.battery.clone();
            if !s.done && s.beta.iter().any(|&b| b <= 0) {
                report.beta_violations += 1;
            }
            let oracle = slot_reward_oracle(s, &scenario, env.params(), per_watt);
            let err = (oracle - s.reward).abs() / oracle.abs().max(1.0);
            report.max_reward_error = report.max_reward_error.max(err);
        }
    }
    report
}
