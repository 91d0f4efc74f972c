//! Uniform space-time lattice shared by every field, path, and solver.
//!
//! A [`Grid`] covers the rectangle `[x_min, x_max] × [0, horizon]` with
//! `nx` space nodes and `nt` time steps:
//!
//! ```text
//! x_i = x_min + i·dx,  dx = (x_max − x_min)/(nx − 1),  i = 0..nx−1
//! t_n = n·dt,          dt = horizon/nt,                n = 0..nt
//! ```
//!
//! The equations this crate discretizes live on the whole real line; the
//! truncation to `[x_min, x_max]` is an artifact of the implementation, so
//! quantitative results are reported on an [`interior window`](Grid::interior)
//! that drops a buffer fraction of the domain on each side where boundary
//! effects accumulate.

use crate::error::{Error, Result};
use alloc::vec::Vec;
use core::ops::Range;

/// Fraction of the domain width excluded on *each* side by default when
/// reporting residuals, gaps, and norms. With the default `0.2`, the reported
/// window is the central 60% of the domain.
pub const DEFAULT_BUFFER_FRACTION: f64 = 0.2;

/// Uniform space-time lattice.
///
/// Construction validates the invariants once; afterwards the grid is a plain
/// `Copy` value and all accessors are infallible.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct Grid {
    x_min: f64,
    x_max: f64,
    nx: usize,
    horizon: f64,
    nt: usize,
}

impl Grid {
    /// Creates a lattice on `[x_min, x_max] × [0, horizon]`.
    ///
    /// # Arguments
    ///
    /// * `x_min`, `x_max` - spatial extent, `x_min < x_max`
    /// * `nx` - number of space nodes, at least 3
    /// * `horizon` - terminal time, strictly positive
    /// * `nt` - number of time steps, at least 1
    ///
    /// # Errors
    ///
    /// [`Error::InvalidGrid`] if the extent is not ordered or not finite, and
    /// [`Error::GridTooSmall`] if `nx < 3`.
    pub fn new(x_min: f64, x_max: f64, nx: usize, horizon: f64, nt: usize) -> Result<Self> {
        if !(x_min.is_finite() && x_max.is_finite() && horizon.is_finite()) {
            return Err(Error::InvalidGrid {
                reason: "extent and horizon must be finite",
            });
        }
        if x_min >= x_max {
            return Err(Error::InvalidGrid {
                reason: "x_min must be strictly below x_max",
            });
        }
        if horizon <= 0.0 {
            return Err(Error::InvalidGrid {
                reason: "horizon must be strictly positive",
            });
        }
        if nt == 0 {
            return Err(Error::InvalidGrid {
                reason: "nt must be at least 1",
            });
        }
        if nx < 3 {
            return Err(Error::GridTooSmall {
                what: "grid",
                min: 3,
                got: nx,
            });
        }
        Ok(Self {
            x_min,
            x_max,
            nx,
            horizon,
            nt,
        })
    }

    /// Left end of the spatial domain.
    pub fn x_min(&self) -> f64 {
        self.x_min
    }

    /// Right end of the spatial domain.
    pub fn x_max(&self) -> f64 {
        self.x_max
    }

    /// Number of space nodes.
    pub fn nx(&self) -> usize {
        self.nx
    }

    /// Terminal time.
    pub fn horizon(&self) -> f64 {
        self.horizon
    }

    /// Number of time steps (`nt + 1` time nodes).
    pub fn nt(&self) -> usize {
        self.nt
    }

    /// Spatial mesh width `(x_max − x_min)/(nx − 1)`.
    pub fn dx(&self) -> f64 {
        (self.x_max - self.x_min) / (self.nx - 1) as f64
    }

    /// Time step `horizon/nt`.
    pub fn dt(&self) -> f64 {
        self.horizon / self.nt as f64
    }

    /// Coordinate of space node `i`.
    pub fn x(&self, i: usize) -> f64 {
        self.x_min + i as f64 * self.dx()
    }

    /// Coordinate of time node `n`.
    pub fn t(&self, n: usize) -> f64 {
        n as f64 * self.dt()
    }

    /// All space-node coordinates, length `nx`.
    pub fn axis(&self) -> Vec<f64> {
        (0..self.nx).map(|i| self.x(i)).collect()
    }

    /// All time-node coordinates, length `nt + 1`.
    pub fn times(&self) -> Vec<f64> {
        (0..=self.nt).map(|n| self.t(n)).collect()
    }

    /// Index range of the interior reporting window: nodes whose coordinate
    /// lies in `[x_min + b·L, x_max − b·L]` with `L = x_max − x_min` and
    /// `b = buffer_fraction` clamped to `[0, 0.49]`.
    ///
    /// The window is never empty: it always contains the central node(s).
    pub fn interior(&self, buffer_fraction: f64) -> Range<usize> {
        let b = buffer_fraction.clamp(0.0, 0.49);
        let width = self.x_max - self.x_min;
        let lo = self.x_min + b * width;
        let hi = self.x_max - b * width;
        // Round inward, with a tiny slack so nodes sitting exactly on the
        // window edge are kept despite floating-point rounding.
        let eps = 1e-12 * width;
        let start = (0..self.nx)
            .find(|&i| self.x(i) >= lo - eps)
            .unwrap_or(self.nx / 2);
        let end = (0..self.nx)
            .rev()
            .find(|&i| self.x(i) <= hi + eps)
            .map(|i| i + 1)
            .unwrap_or(self.nx / 2 + 1);
        start..end.max(start + 1)
    }

    /// Refined lattice that keeps every node of `self`: the mesh width is
    /// divided by `space_factor` (so `nx − 1` is multiplied) and the step
    /// count is multiplied by `time_factor`.
    ///
    /// # Errors
    ///
    /// [`Error::InvalidParameter`] if either factor is zero.
    pub fn refine(&self, space_factor: usize, time_factor: usize) -> Result<Self> {
        if space_factor == 0 || time_factor == 0 {
            return Err(Error::InvalidParameter {
                what: "refinement factor",
                reason: "factors must be at least 1",
            });
        }
        Self::new(
            self.x_min,
            self.x_max,
            (self.nx - 1) * space_factor + 1,
            self.horizon,
            self.nt * time_factor,
        )
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_relative_eq;

    #[test]
    fn spacing_matches_definition() {
        let g = Grid::new(-2.0, 6.0, 17, 0.5, 25).unwrap();
        assert_relative_eq!(g.dx(), 0.5);
        assert_relative_eq!(g.dt(), 0.02);
        assert_relative_eq!(g.x(0), -2.0);
        assert_relative_eq!(g.x(16), 6.0);
        assert_relative_eq!(g.t(25), 0.5);
        assert_eq!(g.axis().len(), 17);
        assert_eq!(g.times().len(), 26);
    }

    #[test]
    fn rejects_degenerate_extent() {
        assert!(matches!(
            Grid::new(1.0, 1.0, 11, 1.0, 10),
            Err(Error::InvalidGrid { .. })
        ));
        assert!(matches!(
            Grid::new(0.0, 1.0, 2, 1.0, 10),
            Err(Error::GridTooSmall { got: 2, .. })
        ));
        assert!(matches!(
            Grid::new(0.0, 1.0, 11, 0.0, 10),
            Err(Error::InvalidGrid { .. })
        ));
        assert!(matches!(
            Grid::new(0.0, 1.0, 11, 1.0, 0),
            Err(Error::InvalidGrid { .. })
        ));
        assert!(matches!(
            Grid::new(f64::NAN, 1.0, 11, 1.0, 10),
            Err(Error::InvalidGrid { .. })
        ));
    }

    #[test]
    fn interior_window_drops_the_buffer() {
        let g = Grid::new(-1.0, 1.0, 11, 1.0, 10).unwrap();
        // 20% of width 2 is 0.4 per side: keep x in [-0.6, 0.6] = nodes 2..=8.
        let w = g.interior(DEFAULT_BUFFER_FRACTION);
        assert_eq!(w, 2..9);
        // Zero buffer keeps everything.
        assert_eq!(g.interior(0.0), 0..11);
        // Absurd buffer still leaves at least one node.
        assert!(!g.interior(10.0).is_empty());
    }

    #[test]
    fn refine_keeps_shared_nodes() {
        let g = Grid::new(0.0, 1.0, 5, 1.0, 4).unwrap();
        let f = g.refine(2, 4).unwrap();
        assert_eq!(f.nx(), 9);
        assert_eq!(f.nt(), 16);
        assert_relative_eq!(f.dx(), g.dx() / 2.0);
        assert_relative_eq!(f.dt(), g.dt() / 4.0);
        for i in 0..g.nx() {
            assert_relative_eq!(f.x(2 * i), g.x(i), max_relative = 1e-15);
        }
        assert!(g.refine(0, 1).is_err());
    }
}
