//! Uniform cell-centred partition of a truncated line `[-L, L]`.

use crate::error::{Error, Result};

/// Cell-centred grid on `[-L, L]` with an even number of cells, so that the
/// mesh is symmetric about the origin and `x = 0` falls on the middle face.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct Grid {
    half_width: f64,
    n_cells: usize,
    dx: f64,
}

impl Grid {
    pub fn new(half_width: f64, n_cells: usize) -> Result<Self> {
        if !(half_width.is_finite() && half_width > 0.0) {
            return Err(Error::InvalidArgument(format!(
                "half width must be positive and finite, got {half_width}"
            )));
        }
        if n_cells < 4 || !n_cells.is_multiple_of(2) {
            return Err(Error::InvalidArgument(format!(
                "n_cells must be even and at least 4, got {n_cells}"
            )));
        }
        Ok(Self {
            half_width,
            n_cells,
            dx: 2.0 * half_width / n_cells as f64,
        })
    }

    #[inline]
    pub fn half_width(&self) -> f64 {
        self.half_width
    }

    #[inline]
    pub fn n_cells(&self) -> usize {
        self.n_cells
    }

    #[inline]
    pub fn dx(&self) -> f64 {
        self.dx
    }

    /// Centre of cell `i`. Computed as `(i + 1/2 - n/2) dx` so that mirrored
    /// cells have exactly negated centres.
    #[inline]
    pub fn center(&self, i: usize) -> f64 {
        (i as f64 + 0.5 - (self.n_cells / 2) as f64) * self.dx
    }

    pub fn centers(&self) -> Vec<f64> {
        (0..self.n_cells).map(|i| self.center(i)).collect()
    }

    /// Index of the cell mirrored through `x = 0`.
    #[inline]
    pub fn mirror(&self, i: usize) -> usize {
        self.n_cells - 1 - i
    }

    /// Same mesh, bitwise.
    pub fn same_as(&self, other: &Grid) -> bool {
        self.n_cells == other.n_cells && self.half_width.to_bits() == other.half_width.to_bits()
    }

    pub(crate) fn ensure_same(&self, other: &Grid) -> Result<()> {
        if self.same_as(other) {
            Ok(())
        } else {
            Err(Error::InvalidArgument(format!(
                "grid mismatch: (L = {}, n = {}) vs (L = {}, n = {})",
                self.half_width, self.n_cells, other.half_width, other.n_cells
            )))
        }
    }
}

/// `make_grid(L, n)`.
pub fn make_grid(half_width: f64, n_cells: usize) -> Result<Grid> {
    Grid::new(half_width, n_cells)
}
