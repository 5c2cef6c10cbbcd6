use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum Move {
    North,
    South,
    East,
    West,
    Hover,
}

impl Move {
    pub const ALL: [Move; 5] = [Move::North, Move::South, Move::East, Move::West, Move::Hover];

    pub fn index(self) -> usize {
        match self {
            Move::North => 0,
            Move::South => 1,
            Move::East => 2,
            Move::West => 3,
            Move::Hover => 4,
        }
    }

    pub fn from_index(i: usize) -> Option<Move> {
        Move::ALL.get(i).copied()
    }

    /// Cell offset `(dx, dy)`.
    pub fn delta(self) -> (i32, i32) {
        match self {
            Move::North => (0, 1),
            Move::South => (0, -1),
            Move::East => (1, 0),
            Move::West => (-1, 0),
            Move::Hover => (0, 0),
        }
    }
}

/// One UAV's choice for a slot. `schedule` is 0 for "no cluster" or a
/// 1-based cluster id.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct UavAction {
    #[serde(rename = "move")]
    pub mv: Move,
    pub schedule: usize,
}

#[derive(Debug, Clone, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct JointAction(pub Vec<UavAction>);

/// Mixed-radix indexing of the joint action space `(5 * (L + 1))^U`.
/// UAV 0 occupies the least significant digit; within a digit the schedule
/// varies fastest.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct ActionSpace {
    pub uavs: usize,
    pub clusters: usize,
}

impl ActionSpace {
    pub fn new(uavs: usize, clusters: usize) -> Self {
        Self { uavs, clusters }
    }

    pub fn per_uav(&self) -> usize {
        Move::ALL.len() * (self.clusters + 1)
    }

    pub fn count(&self) -> usize {
        self.per_uav().pow(self.uavs as u32)
    }

    pub fn encode(&self, action: &JointAction) -> Result<usize> {
        if action.0.len() != self.uavs {
            return Err(Error::InvalidAction(format!("expected {} UAV actions, got {}", self.uavs, action.0.len())));
        }
        let base = self.per_uav();
        let mut index = 0;
        for a in action.0.iter().rev() {
            if a.schedule > self.clusters {
                return Err(Error::InvalidAction(format!(
                    "schedule {} exceeds cluster count {}",
                    a.schedule, self.clusters
                )));
            }
            index = index * base + a.mv.index() * (self.clusters + 1) + a.schedule;
        }
        Ok(index)
    }

    pub fn decode(&self, index: usize) -> Result<JointAction> {
        let count = self.count();
        if index >= count {
            return Err(Error::ActionOutOfRange { index, count });
        }
        let base = self.per_uav();
        let mut rest = index;
        let mut out = Vec::with_capacity(self.uavs);
        for _ in 0..self.uavs {
            let digit = rest % base;
            rest /= base;
            out.push(UavAction {
                mv: Move::from_index(digit / (self.clusters + 1)).expect("digit < 5 * (L + 1)"),
                schedule: digit % (self.clusters + 1),
            });
        }
        Ok(JointAction(out))
    }
}
