use serde::{Deserialize, Serialize};

use super::action::Move;
use crate::error::{Error, Result};

/// Integer cell coordinates; the base station cell is `(0, 0)`.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct Cell {
    pub x: i32,
    pub y: i32,
}

impl Cell {
    pub const fn new(x: i32, y: i32) -> Self {
        Self { x, y }
    }

    pub fn manhattan(self, other: Cell) -> u32 {
        self.x.abs_diff(other.x) + self.y.abs_diff(other.y)
    }
}

/// Square grid with an odd number of cells per side, the base station at the
/// centre cell and a charging depot in each corner cell.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct GridSpec {
    pub cells_per_side: u32,
    /// Cell side, m.
    pub cell_side: f64,
}

impl Default for GridSpec {
    fn default() -> Self {
        Self { cells_per_side: 11, cell_side: 100.0 }
    }
}

impl GridSpec {
    pub fn new(cells_per_side: u32, cell_side: f64) -> Result<Self> {
        let g = Self { cells_per_side, cell_side };
        g.validate()?;
        Ok(g)
    }

    pub fn validate(&self) -> Result<()> {
        if self.cells_per_side < 3 || self.cells_per_side.is_multiple_of(2) {
            return Err(Error::InvalidParams(format!(
                "cells_per_side must be odd and >= 3, got {}",
                self.cells_per_side
            )));
        }
        if !(self.cell_side.is_finite() && self.cell_side > 0.0) {
            return Err(Error::InvalidParams(format!("cell_side must be > 0, got {}", self.cell_side)));
        }
        Ok(())
    }

    /// Largest cell coordinate along either axis.
    pub fn half_cells(&self) -> i32 {
        (self.cells_per_side / 2) as i32
    }

    /// Half the side length of the covered area, m.
    pub fn half_extent(&self) -> f64 {
        f64::from(self.cells_per_side) * self.cell_side / 2.0
    }

    pub fn contains(&self, cell: Cell) -> bool {
        let h = self.half_cells();
        cell.x.abs() <= h && cell.y.abs() <= h
    }

    /// Depot cells in order south-west, south-east, north-east, north-west.
    pub fn depots(&self) -> [Cell; 4] {
        let h = self.half_cells();
        [Cell::new(-h, -h), Cell::new(h, -h), Cell::new(h, h), Cell::new(-h, h)]
    }

    pub fn center_m(&self, cell: Cell) -> [f64; 2] {
        [f64::from(cell.x) * self.cell_side, f64::from(cell.y) * self.cell_side]
    }

    /// Cell whose centre is closest to a planar point, clamped to the grid.
    pub fn cell_at(&self, xy: [f64; 2]) -> Cell {
        let h = self.half_cells();
        let snap = |v: f64| ((v / self.cell_side).round() as i64).clamp(-h as i64, h as i64) as i32;
        Cell::new(snap(xy[0]), snap(xy[1]))
    }

    pub fn depot_distance(&self, cell: Cell) -> u32 {
        self.depots().iter().map(|d| d.manhattan(cell)).min().expect("four depots")
    }

    /// Cells in row-major order from the south-west corner.
    pub fn cells(&self) -> impl Iterator<Item = Cell> + '_ {
        let h = self.half_cells();
        (-h..=h).flat_map(move |y| (-h..=h).map(move |x| Cell::new(x, y)))
    }
}

/// Apply a move. An off-grid move leaves the UAV where it is and reports
/// `clamped = true`.
pub fn apply_move(cell: Cell, mv: Move, grid: &GridSpec) -> (Cell, bool) {
    let (dx, dy) = mv.delta();
    let next = Cell::new(cell.x + dx, cell.y + dy);
    if grid.contains(next) {
        (next, false)
    } else {
        (cell, true)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn moves() {
        let g = GridSpec::default();
        assert_eq!(apply_move(Cell::new(0, 0), Move::North, &g), (Cell::new(0, 1), false));
        assert_eq!(g.center_m(Cell::new(0, 1)), [0.0, 100.0]);
        assert_eq!(apply_move(Cell::new(0, 0), Move::South, &g), (Cell::new(0, -1), false));
        assert_eq!(apply_move(Cell::new(0, 0), Move::East, &g), (Cell::new(1, 0), false));
        assert_eq!(apply_move(Cell::new(0, 0), Move::West, &g), (Cell::new(-1, 0), false));
        let corner = Cell::new(-5, -5);
        assert_eq!(apply_move(corner, Move::West, &g), (corner, true));
        assert_eq!(apply_move(corner, Move::South, &g), (corner, true));
        assert_eq!(apply_move(Cell::new(3, 2), Move::Hover, &g), (Cell::new(3, 2), false));
    }

    #[test]
    fn depots_and_extent() {
        let g = GridSpec::default();
        assert_eq!(g.center_m(g.depots()[0]), [-500.0, -500.0]);
        assert_eq!(g.center_m(g.depots()[1]), [500.0, -500.0]);
        assert_eq!(g.half_extent(), 550.0);
        assert_eq!(g.depot_distance(Cell::new(0, 0)), 10);
        assert_eq!(g.depot_distance(Cell::new(5, 5)), 0);
        assert_eq!(g.cells().count(), 121);
    }

    #[test]
    fn cell_snapping() {
        let g = GridSpec::default();
        assert_eq!(g.cell_at([149.0, -151.0]), Cell::new(1, -2));
        assert_eq!(g.cell_at([549.0, 549.0]), Cell::new(5, 5));
    }

    #[test]
    fn rejects_even_grid() {
        assert!(GridSpec::new(10, 100.0).is_err());
        assert!(GridSpec::new(1, 100.0).is_err());
        assert!(GridSpec::new(5, 0.0).is_err());
    }
}
