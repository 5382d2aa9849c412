//! Uniform cell-centered grid over the truncated plane [-L, L]^2.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Square grid of `n x n` cells covering `[-L, L]^2` with spacing `h = 2L/n`.
///
/// Cell centers sit at `x_i = -L + (i + 1/2) h`; the quadrature of any field
/// is the midpoint rule `h^2 * sum(values)`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Grid {
    half_width: f64,
    n: usize,
}

impl Grid {
    pub fn new(half_width: f64, n: usize) -> Result<Self> {
        if !(half_width > 0.0) || !half_width.is_finite() {
            return Err(Error::InvalidConfig(format!(
                "grid half width must be positive and finite, got {half_width}"
            )));
        }
        if n < 16 || n % 2 != 0 {
            return Err(Error::InvalidConfig(format!(
                "grid size must be even and >= 16, got {n}"
            )));
        }
        Ok(Grid { half_width, n })
    }

    /// Default laboratory grid: L = 12, 256 points per axis.
    pub fn default_lab() -> Self {
        Grid {
            half_width: 12.0,
            n: 256,
        }
    }

    #[inline]
    pub fn half_width(&self) -> f64 {
        self.half_width
    }

    #[inline]
    pub fn n(&self) -> usize {
        self.n
    }

    #[inline]
    pub fn spacing(&self) -> f64 {
        2.0 * self.half_width / self.n as f64
    }

    #[inline]
    pub fn cell_count(&self) -> usize {
        self.n * self.n
    }

    /// Cell area, the midpoint quadrature weight.
    #[inline]
    pub fn cell_area(&self) -> f64 {
        let h = self.spacing();
        h * h
    }

    /// Coordinate of cell center `i` along one axis.
    #[inline]
    pub fn coord(&self, i: usize) -> f64 {
        -self.half_width + (i as f64 + 0.5) * self.spacing()
    }

    /// Flat row-major index of cell `(ix, iy)`.
    #[inline]
    pub fn idx(&self, ix: usize, iy: usize) -> usize {
        iy * self.n + ix
    }

    /// Position of the cell with flat index `k`.
    #[inline]
    pub fn position(&self, k: usize) -> [f64; 2] {
        let ix = k % self.n;
        let iy = k / self.n;
        [self.coord(ix), self.coord(iy)]
    }

    /// Midpoint quadrature of a cell-sampled field.
    pub fn integrate(&self, values: &[f64]) -> f64 {
        debug_assert_eq!(values.len(), self.cell_count());
        self.cell_area() * values.iter().sum::<f64>()
    }

    /// Cell index range of the outermost ring of cells.
    pub fn boundary_cells(&self) -> impl Iterator<Item = usize> + '_ {
        let n = self.n;
        (0..n * n).filter(move |k| {
            let ix = k % n;
            let iy = k / n;
            ix == 0 || iy == 0 || ix == n - 1 || iy == n - 1
        })
    }
}
