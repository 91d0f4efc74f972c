//! Brownian path sampling on the time lattice, and left-endpoint Itô
//! integration along a sampled path.
//!
//! A path stores both the increments `Δw_k` (the primary data — every
//! stochastic integral is a sum over them) and the running values
//! `w_n = Σ_{k<n} Δw_k`, kept consistent by construction. Refinement studies
//! coarsen a fine path by summing blocks of increments, so all levels share
//! the same underlying realization.

use crate::error::{Error, Result};
use crate::grid::Grid;
use crate::rng::CounterRng;
use alloc::vec::Vec;

/// One sampled Brownian path on a grid's time lattice.
#[derive(Clone, Debug, PartialEq)]
pub struct BrownianPath {
    grid: Grid,
    w: Vec<f64>,
    dw: Vec<f64>,
    seed: u64,
    stream: u64,
}

impl BrownianPath {
    /// Samples a path from the counter-based generator: increment `k` is
    /// `sqrt(dt)` times the `k`-th normal of stream `stream` under `seed`.
    pub fn sample(seed: u64, stream: u64, grid: Grid) -> Self {
        let rng = CounterRng::new(seed, stream);
        let scale = libm::sqrt(grid.dt());
        let dw: Vec<f64> = (0..grid.nt())
            .map(|k| scale * rng.normal(k as u64))
            .collect();
        Self::assemble(grid, dw, seed, stream)
    }

    /// Wraps explicit increments (for tests and deterministic constructions).
    ///
    /// # Errors
    ///
    /// [`Error::ShapeMismatch`] when the increment count is not `nt`.
    pub fn from_increments(grid: Grid, dw: Vec<f64>, seed: u64, stream: u64) -> Result<Self> {
        if dw.len() != grid.nt() {
            return Err(Error::ShapeMismatch {
                what: "brownian increments must have length nt",
            });
        }
        Ok(Self::assemble(grid, dw, seed, stream))
    }

    fn assemble(grid: Grid, dw: Vec<f64>, seed: u64, stream: u64) -> Self {
        let mut w = Vec::with_capacity(grid.nt() + 1);
        let mut acc = 0.0;
        w.push(0.0);
        for &d in &dw {
            acc += d;
            w.push(acc);
        }
        Self {
            grid,
            w,
            dw,
            seed,
            stream,
        }
    }

    /// The time lattice this path is sampled on.
    pub fn grid(&self) -> Grid {
        self.grid
    }

    /// Running values `w_0 = 0, …, w_nt`.
    pub fn w(&self) -> &[f64] {
        &self.w
    }

    /// Increments `Δw_0, …, Δw_{nt-1}`.
    pub fn dw(&self) -> &[f64] {
        &self.dw
    }

    /// Path value at time node `n`.
    #[inline]
    pub fn value(&self, n: usize) -> f64 {
        self.w[n]
    }

    /// Increment over `[t_n, t_{n+1}]`.
    #[inline]
    pub fn increment(&self, n: usize) -> f64 {
        self.dw[n]
    }

    /// The seed the path was sampled with.
    pub fn seed(&self) -> u64 {
        self.seed
    }

    /// The stream id the path was sampled with.
    pub fn stream_id(&self) -> u64 {
        self.stream
    }

    /// Coarsens the path by an integer time factor: blocks of `factor`
    /// increments are summed, so the coarse path is the restriction of this
    /// one to the coarse lattice, exactly.
    ///
    /// # Errors
    ///
    /// [`Error::NonDivisibleFactor`] when `factor` is zero or does not divide
    /// the step count.
    pub fn coarsen(&self, factor: usize) -> Result<Self> {
        let nt = self.grid.nt();
        if factor == 0 || nt % factor != 0 {
            return Err(Error::NonDivisibleFactor { factor, nt });
        }
        let coarse_grid = Grid::new(
            self.grid.x_min(),
            self.grid.x_max(),
            self.grid.nx(),
            self.grid.horizon(),
            nt / factor,
        )?;
        let dw: Vec<f64> = self
            .dw
            .chunks_exact(factor)
            .map(|block| block.iter().sum())
            .collect();
        Ok(Self::assemble(coarse_grid, dw, self.seed, self.stream))
    }
}

/// Left-endpoint Itô integral of a sampled integrand along a path:
/// `H_n = Σ_{k<n} f_k Δw_k`, with `H_0 = 0`.
///
/// The integrand must be sampled on at least the path's time nodes (only the
/// first `nt` entries — the left endpoints — are read, so `nt` or `nt + 1`
/// entries both work).
///
/// # Errors
///
/// [`Error::ShapeMismatch`] when the integrand has fewer than `nt` entries.
pub fn ito_integral(integrand: &[f64], path: &BrownianPath) -> Result<Vec<f64>> {
    let nt = path.grid().nt();
    if integrand.len() < nt {
        return Err(Error::ShapeMismatch {
            what: "ito integrand needs one entry per time step",
        });
    }
    let mut out = Vec::with_capacity(nt + 1);
    let mut acc = 0.0;
    out.push(0.0);
    for (k, &weight) in integrand.iter().take(nt).enumerate() {
        acc += weight * path.increment(k);
        out.push(acc);
    }
    Ok(out)
}
