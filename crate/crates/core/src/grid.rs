//! Rectangular discretization of the pitch into Markov states.
//!
//! The pitch is the 120 × 80 rectangle of the open event data. A grid of
//! `nx × ny` cells is indexed row-major: `id = row * nx + col`, where `col`
//! runs along the pitch length (x) and `row` along its width (y). The upper
//! boundaries belong to the last column/row.

use serde::{Deserialize, Serialize};

use crate::error::{invalid, Result};

/// Pitch length in provider units.
pub const PITCH_LENGTH: f64 = 120.0;
/// Pitch width in provider units.
pub const PITCH_WIDTH: f64 = 80.0;

/// Index of a grid cell in `[0, M)`.
pub type StateId = usize;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct Grid {
    nx: usize,
    ny: usize,
}

impl Grid {
    pub fn new(nx: usize, ny: usize) -> Result<Self> {
        if nx == 0 || ny == 0 {
            return Err(invalid(format!("grid dimensions must be positive, got {nx}x{ny}")));
        }
        Ok(Grid { nx, ny })
    }

    pub fn nx(&self) -> usize {
        self.nx
    }

    pub fn ny(&self) -> usize {
        self.ny
    }

    /// Number of states `M = nx * ny`.
    pub fn m(&self) -> usize {
        self.nx * self.ny
    }

    /// State containing the point `(x, y)`.
    pub fn cell_of(&self, x: f64, y: f64) -> Result<StateId> {
        if !(0.0..=PITCH_LENGTH).contains(&x) || !(0.0..=PITCH_WIDTH).contains(&y) {
            return Err(invalid(format!("point ({x}, {y}) lies outside the pitch")));
        }
        let col = ((x * self.nx as f64 / PITCH_LENGTH).floor() as usize).min(self.nx - 1);
        let row = ((y * self.ny as f64 / PITCH_WIDTH).floor() as usize).min(self.ny - 1);
        Ok(row * self.nx + col)
    }

    /// `(col, row)` of a state.
    pub fn coords(&self, s: StateId) -> (usize, usize) {
        (s % self.nx, s / self.nx)
    }

    /// Centre of a cell in pitch coordinates.
    pub fn center(&self, s: StateId) -> (f64, f64) {
        let (col, row) = self.coords(s);
        let w = PITCH_LENGTH / self.nx as f64;
        let h = PITCH_WIDTH / self.ny as f64;
        ((col as f64 + 0.5) * w, (row as f64 + 0.5) * h)
    }
}

impl std::fmt::Display for Grid {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        write!(f, "{}x{}", self.nx, self.ny)
    }
}

impl std::str::FromStr for Grid {
    type Err = crate::Error;

    /// Parses `NXxNY`, e.g. `16x12`.
    fn from_str(s: &str) -> Result<Self> {
        let (a, b) = s
            .trim()
            .split_once(['x', 'X'])
            .ok_or_else(|| invalid(format!("grid `{s}` is not of the form NXxNY")))?;
        let nx = a
            .parse::<usize>()
            .map_err(|_| invalid(format!("bad grid width in `{s}`")))?;
        let ny = b
            .parse::<usize>()
            .map_err(|_| invalid(format!("bad grid height in `{s}`")))?;
        Grid::new(nx, ny)
    }
}

/// Shorthand for [`Grid::new`].
pub fn make_grid(nx: usize, ny: usize) -> Result<Grid> {
    Grid::new(nx, ny)
}
