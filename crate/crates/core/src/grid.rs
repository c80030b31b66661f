//! Uniform interior-node grid of the unit square.
//!
//! Unknowns live on the `n × n` interior nodes `(h·i, h·j)`, `i, j ∈ 1..=n`,
//! with `h = 1/(n+1)`; the zero Dirichlet boundary is eliminated. Linear
//! indices are row-major with x fastest: `idx = (j-1)·n + (i-1)`.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Smallest admissible number of nodes per side.
pub const MIN_NODES: usize = 8;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct GridSpec {
    n: usize,
}

impl GridSpec {
    pub fn new(n: usize) -> Result<Self> {
        if n < MIN_NODES {
            return Err(Error::GridTooSmall(n));
        }
        Ok(Self { n })
    }

    /// Grid with `n = round(4k)` nodes per side, the resolution used for the
    /// benchmark tables (k = 6, 12, 24 give N = 576, 2304, 9216).
    pub fn for_wavenumber(k: f64) -> Result<Self> {
        if !k.is_finite() || k <= 2.0 {
            return Err(Error::ResolutionTooCoarse { k });
        }
        Self::new((4.0 * k).round() as usize)
    }

    /// Nodes per side.
    pub fn n(&self) -> usize {
        self.n
    }

    /// Total number of unknowns `n²`.
    pub fn len(&self) -> usize {
        self.n * self.n
    }

    pub fn is_empty(&self) -> bool {
        self.n == 0
    }

    /// Mesh width `1/(n+1)`.
    pub fn h(&self) -> f64 {
        1.0 / (self.n as f64 + 1.0)
    }

    /// Column and row (both zero based) of a linear index.
    pub fn ij(&self, idx: usize) -> (usize, usize) {
        (idx % self.n, idx / self.n)
    }

    pub fn index(&self, i: usize, j: usize) -> usize {
        j * self.n + i
    }

    pub fn coords(&self, idx: usize) -> Result<(f64, f64)> {
        if idx >= self.len() {
            return Err(Error::IndexOutOfRange { idx, len: self.len() });
        }
        Ok(self.coords_unchecked(idx))
    }

    pub(crate) fn coords_unchecked(&self, idx: usize) -> (f64, f64) {
        let (i, j) = self.ij(idx);
        let h = self.h();
        (h * (i + 1) as f64, h * (j + 1) as f64)
    }

    /// Linear index of the node nearest to `(x, y)`, if it lies inside the
    /// interior grid.
    pub fn nearest_index(&self, x: f64, y: f64) -> Option<usize> {
        let h = self.h();
        let i = (x / h).round() as isize - 1;
        let j = (y / h).round() as isize - 1;
        let n = self.n as isize;
        if (0..n).contains(&i) && (0..n).contains(&j) {
            Some(self.index(i as usize, j as usize))
        } else {
            None
        }
    }

    /// Iterator over `(idx, x, y)` for every node in index order.
    pub fn nodes(&self) -> impl Iterator<Item = (usize, f64, f64)> + '_ {
        (0..self.len()).map(move |idx| {
            let (x, y) = self.coords_unchecked(idx);
            (idx, x, y)
        })
    }
}

/// Convenience wrapper for [`GridSpec::for_wavenumber`].
pub fn grid_for_wavenumber(k: f64) -> Result<GridSpec> {
    GridSpec::for_wavenumber(k)
}

/// Convenience wrapper for [`GridSpec::coords`].
pub fn node_coords(grid: &GridSpec, idx: usize) -> Result<(f64, f64)> {
    grid.coords(idx)
}
