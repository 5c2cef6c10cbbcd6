//! Cluster capacity and capacity-constrained k-means.
//!
//! The base station groups devices so that one UAV can collect a whole
//! cluster within a single movement slot. The number of devices a cluster
//! may hold follows from the per-cluster uplink rate, the slot duration and
//! the packet size.

use std::cmp::Ordering;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::physics::SystemParams;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Device {
    pub id: usize,
    /// Planar position, m.
    pub xy: [f64; 2],
    /// Importance weight.
    pub weight: f64,
}

impl Device {
    /// Devices with uniform importance `1/K`.
    pub fn uniform(positions: &[[f64; 2]]) -> Vec<Device> {
        let w = 1.0 / positions.len().max(1) as f64;
        positions.iter().enumerate().map(|(id, &xy)| Device { id, xy, weight: w }).collect()
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ClusterAssignment {
    /// Maximum members per cluster.
    pub capacity: usize,
    pub centroids: Vec<[f64; 2]>,
    /// Device ids per cluster, ascending.
    pub members: Vec<Vec<usize>>,
}

impl ClusterAssignment {
    pub fn len(&self) -> usize {
        self.centroids.len()
    }

    pub fn is_empty(&self) -> bool {
        self.centroids.is_empty()
    }

    pub fn device_count(&self) -> usize {
        self.members.iter().map(Vec::len).sum()
    }

    /// Check the partition and capacity invariants against a device list.
    pub fn validate(&self, devices: &[Device]) -> Result<()> {
        if self.members.len() != self.centroids.len() {
            return Err(Error::Format("members/centroids length mismatch".into()));
        }
        if self.capacity == 0 {
            return Err(Error::Format("cluster capacity must be >= 1".into()));
        }
        let expected = devices.len().div_ceil(self.capacity);
        if self.len() != expected {
            return Err(Error::Format(format!(
                "expected {expected} clusters for {} devices at capacity {}, found {}",
                devices.len(),
                self.capacity,
                self.len()
            )));
        }
        let mut seen = vec![false; devices.len()];
        for (l, members) in self.members.iter().enumerate() {
            if members.len() > self.capacity {
                return Err(Error::Format(format!(
                    "cluster {l} holds {} devices, capacity {}",
                    members.len(),
                    self.capacity
                )));
            }
            for &id in members {
                let idx = devices
                    .iter()
                    .position(|d| d.id == id)
                    .ok_or_else(|| Error::Format(format!("unknown device id {id}")))?;
                if std::mem::replace(&mut seen[idx], true) {
                    return Err(Error::Format(format!("device {id} assigned twice")));
                }
            }
        }
        if let Some(idx) = seen.iter().position(|s| !s) {
            return Err(Error::Format(format!("device {} unassigned", devices[idx].id)));
        }
        if self.centroids.iter().flatten().any(|c| !c.is_finite()) {
            return Err(Error::Format("non-finite centroid".into()));
        }
        Ok(())
    }

    /// Sum of squared distances from each device to its cluster's member mean.
    pub fn within_cluster_sse(&self, devices: &[Device]) -> f64 {
        self.members
            .iter()
            .map(|ids| {
                let pts: Vec<[f64; 2]> =
                    ids.iter().filter_map(|id| devices.iter().find(|d| d.id == *id).map(|d| d.xy)).collect();
                sse(&pts)
            })
            .sum()
    }
}

/// Sum of squared distances of `points` to their mean.
pub fn sse(points: &[[f64; 2]]) -> f64 {
    if points.is_empty() {
        return 0.0;
    }
    let c = mean(points.iter().copied());
    points.iter().map(|p| dist2(*p, c)).sum()
}

/// Maximum devices per cluster: `floor(R_b * d_g / (M * v))`.
pub fn cluster_capacity(params: &SystemParams) -> Result<usize> {
    let ratio = params.cluster_rate * params.cell_side / (params.packet_bits * params.speed);
    if !ratio.is_finite() {
        return Err(Error::InvalidParams(format!("cluster capacity ratio is {ratio}")));
    }
    let n = ratio.floor();
    if n < 1.0 {
        return Err(Error::InfeasibleRate { ratio });
    }
    Ok(n as usize)
}

fn dist2(a: [f64; 2], b: [f64; 2]) -> f64 {
    let dx = a[0] - b[0];
    let dy = a[1] - b[1];
    dx * dx + dy * dy
}

fn mean(points: impl Iterator<Item = [f64; 2]>) -> [f64; 2] {
    let (mut sx, mut sy, mut n) = (0.0, 0.0, 0usize);
    for p in points {
        sx += p[0];
        sy += p[1];
        n += 1;
    }
    [sx / n as f64, sy / n as f64]
}

fn kmeans_pp_init(points: &[[f64; 2]], k: usize, rng: &mut ChaCha8Rng) -> Vec<[f64; 2]> {
    let mut centroids = Vec::with_capacity(k);
    centroids.push(points[rng.random_range(0..points.len())]);
    let mut closest: Vec<f64> = points.iter().map(|p| dist2(*p, centroids[0])).collect();
    while centroids.len() < k {
        let total: f64 = closest.iter().sum();
        let pick = if total > 0.0 {
            let mut target = rng.random::<f64>() * total;
            let mut chosen = points.len() - 1;
            for (i, &d) in closest.iter().enumerate() {
                if target < d {
                    chosen = i;
                    break;
                }
                target -= d;
            }
            chosen
        } else {
            rng.random_range(0..points.len())
        };
        let c = points[pick];
        centroids.push(c);
        for (d, p) in closest.iter_mut().zip(points) {
            *d = d.min(dist2(*p, c));
        }
    }
    centroids
}

/// Greedy capacity-respecting assignment: (device, centroid) pairs are taken
/// in ascending distance order, each device going to its nearest cluster
/// that still has room.
fn assign(points: &[[f64; 2]], centroids: &[[f64; 2]], capacity: usize) -> Vec<usize> {
    let mut pairs: Vec<(f64, usize, usize)> = Vec::with_capacity(points.len() * centroids.len());
    for (i, p) in points.iter().enumerate() {
        for (l, c) in centroids.iter().enumerate() {
            pairs.push((dist2(*p, *c), i, l));
        }
    }
    pairs.sort_by(|a, b| a.0.partial_cmp(&b.0).unwrap_or(Ordering::Equal).then(a.1.cmp(&b.1)).then(a.2.cmp(&b.2)));
    let mut label = vec![usize::MAX; points.len()];
    let mut load = vec![0usize; centroids.len()];
    let mut placed = 0;
    for (_, i, l) in pairs {
        if label[i] == usize::MAX && load[l] < capacity {
            label[i] = l;
            load[l] += 1;
            placed += 1;
            if placed == points.len() {
                break;
            }
        }
    }
    label
}

/// Number of independently seeded k-means runs; the lowest-cost run wins.
pub const KMEANS_RESTARTS: usize = 10;

/// Partition devices into `ceil(K / capacity)` clusters of at most
/// `capacity` members each.
///
/// Each run uses k-means++ seeding followed by alternating greedy
/// capacity-respecting assignment and centroid updates, until the assignment
/// stops changing or `max_iter` rounds have run. A cluster that ends up empty
/// is re-seeded at the device farthest from its own centroid. Of
/// [`KMEANS_RESTARTS`] runs drawn from one seeded stream, the one with the
/// smallest within-cluster squared distance is returned (earliest on ties),
/// so the result is deterministic for a fixed seed.
pub fn kmeans_capacitated(
    devices: &[Device],
    capacity: usize,
    seed: u64,
    max_iter: usize,
) -> Result<ClusterAssignment> {
    if devices.is_empty() {
        return Err(Error::InvalidParams("clustering needs at least one device".into()));
    }
    if capacity == 0 {
        return Err(Error::InvalidParams("cluster capacity must be >= 1".into()));
    }
    let points: Vec<[f64; 2]> = devices.iter().map(|d| d.xy).collect();
    if points.iter().flatten().any(|v| !v.is_finite()) {
        return Err(Error::InvalidParams("device positions must be finite".into()));
    }
    let k = points.len().div_ceil(capacity);
    let mut rng = ChaCha8Rng::seed_from_u64(seed);

    let mut best: Option<(f64, Vec<usize>)> = None;
    for _ in 0..KMEANS_RESTARTS {
        let labels = lloyd_capacitated(&points, k, capacity, max_iter, &mut rng);
        let cost = labelled_sse(&points, &labels, k);
        if best.as_ref().is_none_or(|(c, _)| cost < *c) {
            best = Some((cost, labels));
        }
    }
    let (_, labels) = best.expect("at least one restart");

    let mut members = vec![Vec::new(); k];
    let mut centroids = vec![[0.0, 0.0]; k];
    for (l, c) in centroids.iter_mut().enumerate() {
        if labels.contains(&l) {
            *c = mean(labels.iter().zip(&points).filter(|(x, _)| **x == l).map(|(_, p)| *p));
        }
    }
    for (i, &l) in labels.iter().enumerate() {
        members[l].push(devices[i].id);
    }
    for m in &mut members {
        m.sort_unstable();
    }
    Ok(ClusterAssignment { capacity, centroids, members })
}

fn labelled_sse(points: &[[f64; 2]], labels: &[usize], k: usize) -> f64 {
    (0..k)
        .map(|l| {
            let pts: Vec<[f64; 2]> = labels.iter().zip(points).filter(|(x, _)| **x == l).map(|(_, p)| *p).collect();
            sse(&pts)
        })
        .sum()
}

fn lloyd_capacitated(
    points: &[[f64; 2]],
    k: usize,
    capacity: usize,
    max_iter: usize,
    rng: &mut ChaCha8Rng,
) -> Vec<usize> {
    let mut centroids = kmeans_pp_init(points, k, rng);
    let mut labels = assign(points, &centroids, capacity);

    for _ in 0..max_iter.max(1) {
        let mut empty = Vec::new();
        for (l, c) in centroids.iter_mut().enumerate() {
            let mut it = labels.iter().zip(points).filter(|(lab, _)| **lab == l).map(|(_, p)| *p).peekable();
            if it.peek().is_some() {
                *c = mean(it);
            } else {
                empty.push(l);
            }
        }
        for l in empty {
            let far = (0..points.len())
                .max_by(|&a, &b| {
                    let da = dist2(points[a], centroids[labels[a]]);
                    let db = dist2(points[b], centroids[labels[b]]);
                    da.partial_cmp(&db).unwrap_or(Ordering::Equal).then(b.cmp(&a))
                })
                .expect("non-empty device list");
            centroids[l] = points[far];
        }
        let next = assign(points, &centroids, capacity);
        if next == labels {
            break;
        }
        labels = next;
    }
    labels
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn capacity_examples() {
        let mut p = SystemParams { cluster_rate: 25e6, ..Default::default() };
        assert_eq!(cluster_capacity(&p).unwrap(), 20);
        p.cluster_rate = 5e6;
        assert_eq!(cluster_capacity(&p).unwrap(), 4);
        // R_b * d_g == M * v
        p.cluster_rate = 5e6 * 25.0 / 100.0;
        assert_eq!(cluster_capacity(&p).unwrap(), 1);
        p.cluster_rate = 1e6;
        assert!(matches!(cluster_capacity(&p), Err(Error::InfeasibleRate { .. })));
    }

    #[test]
    fn singleton() {
        let devs = Device::uniform(&[[12.0, -7.0]]);
        let a = kmeans_capacitated(&devs, 1, 3, 50).unwrap();
        assert_eq!(a.len(), 1);
        assert_eq!(a.centroids[0], [12.0, -7.0]);
        assert_eq!(a.members, vec![vec![0]]);
    }

    #[test]
    fn square_corners_pair_adjacent() {
        // 10 x 4 rectangle: the short-side pairing is the unique optimum
        let devs = Device::uniform(&[[0.0, 0.0], [10.0, 0.0], [10.0, 4.0], [0.0, 4.0]]);
        for seed in 0..20 {
            let a = kmeans_capacitated(&devs, 2, seed, 100).unwrap();
            a.validate(&devs).unwrap();
            let mut m = a.members.clone();
            m.sort();
            assert_eq!(m, vec![vec![0, 3], vec![1, 2]], "seed {seed}");
        }
    }

    #[test]
    fn non_divisible_count_uses_ceiling() {
        let pts: Vec<[f64; 2]> = (0..7).map(|i| [i as f64, 0.0]).collect();
        let devs = Device::uniform(&pts);
        let a = kmeans_capacitated(&devs, 3, 1, 100).unwrap();
        assert_eq!(a.len(), 3);
        a.validate(&devs).unwrap();
    }

    #[test]
    fn rejects_empty_and_zero_capacity() {
        assert!(kmeans_capacitated(&[], 2, 0, 10).is_err());
        let devs = Device::uniform(&[[0.0, 0.0]]);
        assert!(kmeans_capacitated(&devs, 0, 0, 10).is_err());
    }

    #[test]
    fn coincident_devices() {
        let devs = Device::uniform(&[[5.0, 5.0]; 6]);
        let a = kmeans_capacitated(&devs, 2, 9, 20).unwrap();
        a.validate(&devs).unwrap();
        assert_eq!(a.within_cluster_sse(&devs), 0.0);
    }

    #[test]
    fn validate_catches_violations() {
        let devs = Device::uniform(&[[0.0, 0.0], [1.0, 0.0], [2.0, 0.0]]);
        let mut a = kmeans_capacitated(&devs, 2, 0, 10).unwrap();
        a.validate(&devs).unwrap();
        let stolen = a.members[1][0];
        a.members[0].push(stolen);
        assert!(a.validate(&devs).is_err());
    }
}
