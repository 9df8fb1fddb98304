//! Rectangular grids used for binning empirical measures and discretizing
//! kernels into finite chains.

use crate::error::{Error, Result};
use crate::point::Point;
use crate::scalar::Scalar;

/// Axis-aligned box partitioned into equal cells per dimension.
#[derive(Debug, Clone, PartialEq)]
pub struct GridSpec<T> {
    lower: Vec<T>,
    upper: Vec<T>,
    cells: Vec<usize>,
}

impl<T: Scalar> GridSpec<T> {
    pub fn new(lower: Vec<T>, upper: Vec<T>, cells: Vec<usize>) -> Result<Self> {
        if lower.len() != upper.len() || lower.len() != cells.len() || lower.is_empty() {
            return Err(Error::DimensionMismatch("grid bounds/cells lengths differ".into()));
        }
        for d in 0..lower.len() {
            if !lower[d].is_finite() || !upper[d].is_finite() || lower[d] >= upper[d] {
                return Err(Error::InvalidParameter("grid bounds must be finite with lower < upper".into()));
            }
            if cells[d] < 2 {
                return Err(Error::InvalidParameter("grid needs at least 2 cells per dimension".into()));
            }
        }
        Ok(GridSpec { lower, upper, cells })
    }

    pub fn dim(&self) -> usize {
        self.lower.len()
    }

    pub fn lower(&self) -> &[T] {
        &self.lower
    }

    pub fn upper(&self) -> &[T] {
        &self.upper
    }

    pub fn cells_per_dim(&self) -> &[usize] {
        &self.cells
    }

    pub fn n_cells(&self) -> usize {
        self.cells.iter().product()
    }

    fn width(&self, d: usize) -> T {
        (self.upper[d] - self.lower[d]) / T::of(self.cells[d] as f64)
    }

    /// Flat index of the cell containing `x`; points outside the box are
    /// clamped to the nearest boundary cell so that binned measures keep
    /// total mass one.
    pub fn cell_index(&self, x: &Point<T>) -> usize {
        let mut flat = 0usize;
        for d in 0..self.dim() {
            let w = self.width(d);
            let raw = ((x.coords()[d] - self.lower[d]) / w).floor();
            let idx = if raw < T::zero() {
                0
            } else {
                (raw.as_f64() as usize).min(self.cells[d] - 1)
            };
            flat = flat * self.cells[d] + idx;
        }
        flat
    }

    /// Center of the cell with the given flat index.
    pub fn cell_center(&self, mut flat: usize) -> Point<T> {
        let dim = self.dim();
        let mut idx = vec![0usize; dim];
        for d in (0..dim).rev() {
            idx[d] = flat % self.cells[d];
            flat /= self.cells[d];
        }
        let coords = (0..dim)
            .map(|d| self.lower[d] + self.width(d) * (T::of(idx[d] as f64) + T::of(0.5)))
            .collect();
        Point(coords)
    }

    /// Per-dimension interval of the cell (only meaningful in d = 1 for the
    /// quadrature-based discretizer).
    pub fn cell_bounds_1d(&self, flat: usize) -> (T, T) {
        debug_assert_eq!(self.dim(), 1);
        let w = self.width(0);
        let lo = self.lower[0] + w * T::of(flat as f64);
        (lo, lo + w)
    }

    /// Radius of the largest origin-centered ball contained in the box,
    /// used for conservative target-coverage checks.
    pub fn inscribed_radius(&self) -> T {
        let mut r = T::infinity();
        for d in 0..self.dim() {
            r = r.min(-self.lower[d]).min(self.upper[d]);
        }
        r
    }
}
