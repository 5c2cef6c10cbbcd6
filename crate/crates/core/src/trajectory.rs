//! Per-slot episode logs, serialized as line-delimited JSON.
//!
//! The first line is a header carrying provenance; every following line is
//! one slot.

use std::io::{BufRead, Write};

use serde::{Deserialize, Serialize};

use crate::env::{Cell, Move};
use crate::error::{Error, Result};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct EpisodeHeader {
    pub config_hash: String,
    pub seed: u64,
    pub policy: String,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub lambda: Option<f64>,
    pub episode: usize,
    pub uavs: usize,
    pub clusters: usize,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SlotRecord {
    pub t: u32,
    /// UAV cells at the start of the slot.
    pub cells: Vec<Cell>,
    /// UAV cells at the end of the slot.
    pub next_cells: Vec<Cell>,
    pub action: usize,
    pub moves: Vec<Move>,
    /// Schedules as chosen by the policy (0 = none, else 1-based cluster).
    pub requested: Vec<usize>,
    /// Schedules after conflict resolution.
    pub schedules: Vec<usize>,
    pub served: Vec<usize>,
    pub reward: f64,
    /// Batteries at the end of the slot, quanta.
    pub battery: Vec<i64>,
    pub consumed: Vec<i64>,
    /// Cluster ages at the end of the slot.
    pub aoi: Vec<u32>,
    pub beta: Vec<i64>,
    /// Sum of device transmit powers, W.
    pub power_sum: f64,
    pub done: bool,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
enum Line {
    Header(EpisodeHeader),
    Slot(SlotRecord),
}

#[derive(Debug, Clone, PartialEq)]
pub struct EpisodeLog {
    pub header: EpisodeHeader,
    pub slots: Vec<SlotRecord>,
}

impl EpisodeLog {
    pub fn write_jsonl<W: Write>(&self, mut w: W) -> Result<()> {
        serde_json::to_writer(&mut w, &Line::Header(self.header.clone()))?;
        w.write_all(b"\n")?;
        for s in &self.slots {
            serde_json::to_writer(&mut w, &Line::Slot(s.clone()))?;
            w.write_all(b"\n")?;
        }
        Ok(())
    }

    pub fn to_jsonl(&self) -> Vec<u8> {
        let mut out = Vec::new();
        self.write_jsonl(&mut out).expect("writing to a Vec cannot fail");
        out
    }

    /// Parse a log, checking that slots are consecutive from 0, that vector
    /// lengths agree with the header, and that only the last slot is
    /// terminal.
    pub fn read_jsonl<R: BufRead>(r: R) -> Result<Self> {
        let mut header = None;
        let mut slots: Vec<SlotRecord> = Vec::new();
        for (n, line) in r.lines().enumerate() {
            let line = line?;
            if line.trim().is_empty() {
                continue;
            }
            let parsed: Line =
                serde_json::from_str(&line).map_err(|e| Error::Format(format!("trajectory line {}: {e}", n + 1)))?;
            match (parsed, &header) {
                (Line::Header(h), None) => header = Some(h),
                (Line::Header(_), Some(_)) => {
                    return Err(Error::Format(format!("trajectory line {}: second header", n + 1)))
                }
                (Line::Slot(_), None) => return Err(Error::Format("trajectory slot before header".into())),
                (Line::Slot(s), Some(h)) => {
                    check_slot(&s, h, slots.len())?;
                    if slots.last().is_some_and(|p| p.done) {
                        return Err(Error::Format(format!("slot {} follows a terminal slot", s.t)));
                    }
                    slots.push(s);
                }
            }
        }
        let header = header.ok_or_else(|| Error::Format("empty trajectory log".into()))?;
        Ok(Self { header, slots })
    }

    pub fn from_slice(bytes: &[u8]) -> Result<Self> {
        Self::read_jsonl(bytes)
    }
}

fn check_slot(s: &SlotRecord, h: &EpisodeHeader, index: usize) -> Result<()> {
    if s.t as usize != index {
        return Err(Error::Format(format!("slot t = {} at position {index}", s.t)));
    }
    let per_uav = [
        s.cells.len(),
        s.next_cells.len(),
        s.moves.len(),
        s.requested.len(),
        s.schedules.len(),
        s.battery.len(),
        s.consumed.len(),
        s.beta.len(),
    ];
    if per_uav.iter().any(|&n| n != h.uavs) || s.aoi.len() != h.clusters {
        return Err(Error::Format(format!("slot {}: vector lengths disagree with header", s.t)));
    }
    if s.served.iter().chain(&s.schedules).chain(&s.requested).any(|&c| c > h.clusters) || s.served.contains(&0) {
        return Err(Error::Format(format!("slot {}: cluster id out of range", s.t)));
    }
    if !s.reward.is_finite() || !s.power_sum.is_finite() {
        return Err(Error::Format(format!("slot {}: non-finite value", s.t)));
    }
    Ok(())
}
