//! Heuristic reference policies.

use rand::Rng;

use crate::env::{Cell, EnvState, Environment, JointAction, Move, UavAction};
use crate::error::Result;

/// Uniform over the whole joint action space.
pub fn rw_select<R: Rng + ?Sized>(action_count: usize, rng: &mut R) -> usize {
    if action_count <= 1 {
        0
    } else {
        rng.random_range(0..action_count)
    }
}

/// Clusters ordered by descending age, lower id first on ties (0-based).
fn clusters_by_age(aoi: &[u32]) -> Vec<usize> {
    let mut order: Vec<usize> = (0..aoi.len()).collect();
    order.sort_by(|&a, &b| aoi[b].cmp(&aoi[a]).then(a.cmp(&b)));
    order
}

/// One step towards `target` along the Manhattan metric, x-axis first.
pub fn step_towards(from: Cell, target: Cell) -> Move {
    if target.x > from.x {
        Move::East
    } else if target.x < from.x {
        Move::West
    } else if target.y > from.y {
        Move::North
    } else if target.y < from.y {
        Move::South
    } else {
        Move::Hover
    }
}

/// Greedy age: UAV `u` takes the `u`-th oldest cluster, schedules it and
/// heads for the cell under its centroid. UAVs left without a cluster hover
/// idle.
pub fn ga_action(env: &Environment, state: &EnvState) -> JointAction {
    let order = clusters_by_age(&state.aoi);
    let centroids = &env.assignment().centroids;
    JointAction(
        state
            .uavs
            .iter()
            .enumerate()
            .map(|(u, uav)| match order.get(u) {
                Some(&l) => UavAction { mv: step_towards(uav.cell, env.grid().cell_at(centroids[l])), schedule: l + 1 },
                None => UavAction { mv: Move::Hover, schedule: 0 },
            })
            .collect(),
    )
}

pub fn ga_select(env: &Environment, state: &EnvState) -> Result<usize> {
    env.action_space().encode(&ga_action(env, state))
}

/// Nearest centroid to a cell centre, lower id first on ties (0-based).
pub fn nearest_cluster(env: &Environment, cell: Cell) -> usize {
    let p = env.grid().center_m(cell);
    let d2 = |c: &[f64; 2]| (c[0] - p[0]).powi(2) + (c[1] - p[1]).powi(2);
    let centroids = &env.assignment().centroids;
    let mut best = 0;
    for (l, c) in centroids.iter().enumerate().skip(1) {
        if d2(c) < d2(&centroids[best]) {
            best = l;
        }
    }
    best
}

/// Nearest neighbour: schedule the closest cluster, move at random.
pub fn nn_action<R: Rng + ?Sized>(env: &Environment, state: &EnvState, rng: &mut R) -> JointAction {
    JointAction(
        state
            .uavs
            .iter()
            .map(|uav| UavAction {
                mv: Move::ALL[rng.random_range(0..Move::ALL.len())],
                schedule: nearest_cluster(env, uav.cell) + 1,
            })
            .collect(),
    )
}

pub fn nn_select<R: Rng + ?Sized>(env: &Environment, state: &EnvState, rng: &mut R) -> Result<usize> {
    env.action_space().encode(&nn_action(env, state, rng))
}
