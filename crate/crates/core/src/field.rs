//! Containers for sampled random fields and processes.
//!
//! All containers store one realization (one `ω`) on a shared [`Grid`]:
//!
//! - [`Field`] - a space-time field `F(t_n, x_i)`, row-major in time;
//! - [`Process`] - a time-only process `σ(t_n)`, optionally with its
//!   semimartingale decomposition parts;
//! - [`SemimartingaleField`] - a field together with its decomposition
//!   `F = F(0) + ∫ A_F ds + ∫ Ψ_F dW`, optionally extended by the
//!   decomposition of `Ψ_F` itself (the *second level*), which the
//!   constraint checkers need.
//!
//! Naming convention for decomposition parts, used across the whole crate:
//! `drift` is the finite-variation density `A_F`, `vol` is the martingale
//! density `Ψ_F`, `vol_drift` is `A_{Ψ_F}`, and `vol_vol` is `Ψ_{Ψ_F}`.

use crate::error::{Error, Result};
use crate::grid::Grid;
use alloc::vec;
use alloc::vec::Vec;

/// One sampled space-time field on a uniform lattice, `(nt + 1) × nx`
/// row-major with the time index outermost.
#[derive(Clone, Debug, PartialEq)]
pub struct Field {
    grid: Grid,
    values: Vec<f64>,
}

impl Field {
    /// Zero-filled field.
    pub fn zeros(grid: Grid) -> Self {
        Self {
            grid,
            values: vec![0.0; (grid.nt() + 1) * grid.nx()],
        }
    }

    /// Constant-valued field.
    pub fn constant(grid: Grid, value: f64) -> Self {
        Self {
            grid,
            values: vec![value; (grid.nt() + 1) * grid.nx()],
        }
    }

    /// Field sampled from a function of `(t, x)`.
    pub fn from_fn(grid: Grid, mut f: impl FnMut(f64, f64) -> f64) -> Self {
        let mut values = Vec::with_capacity((grid.nt() + 1) * grid.nx());
        for n in 0..=grid.nt() {
            let t = grid.t(n);
            for i in 0..grid.nx() {
                values.push(f(t, grid.x(i)));
            }
        }
        Self { grid, values }
    }

    /// Wraps raw row-major values.
    ///
    /// # Errors
    ///
    /// [`Error::ShapeMismatch`] when the length is not `(nt + 1) · nx`.
    pub fn from_values(grid: Grid, values: Vec<f64>) -> Result<Self> {
        if values.len() != (grid.nt() + 1) * grid.nx() {
            return Err(Error::ShapeMismatch {
                what: "field values must have length (nt + 1) * nx",
            });
        }
        Ok(Self { grid, values })
    }

    /// The lattice this field lives on.
    pub fn grid(&self) -> Grid {
        self.grid
    }

    /// Value at time node `step`, space node `node`.
    #[inline]
    pub fn at(&self, step: usize, node: usize) -> f64 {
        self.values[step * self.grid.nx() + node]
    }

    /// Mutable value at time node `step`, space node `node`.
    #[inline]
    pub fn at_mut(&mut self, step: usize, node: usize) -> &mut f64 {
        &mut self.values[step * self.grid.nx() + node]
    }

    /// Time slice `F(t_n, ·)` as a contiguous row.
    pub fn slice(&self, step: usize) -> &[f64] {
        let nx = self.grid.nx();
        &self.values[step * nx..(step + 1) * nx]
    }

    /// Mutable time slice.
    pub fn slice_mut(&mut self, step: usize) -> &mut [f64] {
        let nx = self.grid.nx();
        &mut self.values[step * nx..(step + 1) * nx]
    }

    /// All values, row-major.
    pub fn values(&self) -> &[f64] {
        &self.values
    }

    /// Pointwise map.
    pub fn map(&self, f: impl Fn(f64) -> f64) -> Self {
        Self {
            grid: self.grid,
            values: self.values.iter().map(|&v| f(v)).collect(),
        }
    }

    /// Pointwise combination of two fields on the same lattice.
    ///
    /// # Errors
    ///
    /// [`Error::GridMismatch`] when the lattices differ.
    pub fn zip_with(&self, other: &Self, f: impl Fn(f64, f64) -> f64) -> Result<Self> {
        if self.grid != other.grid {
            return Err(Error::GridMismatch { what: "zip_with" });
        }
        Ok(Self {
            grid: self.grid,
            values: self
                .values
                .iter()
                .zip(&other.values)
                .map(|(&a, &b)| f(a, b))
                .collect(),
        })
    }

    /// Verifies that every entry is finite.
    ///
    /// # Errors
    ///
    /// [`Error::NonFinite`] naming the first offending `(step, node)`.
    pub fn ensure_finite(&self, what: &'static str) -> Result<()> {
        let nx = self.grid.nx();
        for (idx, v) in self.values.iter().enumerate() {
            if !v.is_finite() {
                return Err(Error::NonFinite {
                    what,
                    step: idx / nx,
                    node: idx % nx,
                });
            }
        }
        Ok(())
    }
}

/// One sampled time-only process, with optional decomposition parts.
///
/// The value sequence has length `nt + 1`; each optional part, when present,
/// has the same length. [`Process::constant`] attaches all-zero parts because
/// a constant is exactly decomposed by zero densities, so constant
/// coefficients work with every checker without further ceremony.
#[derive(Clone, Debug, PartialEq)]
pub struct Process {
    grid: Grid,
    values: Vec<f64>,
    drift: Option<Vec<f64>>,
    vol: Option<Vec<f64>>,
    vol_drift: Option<Vec<f64>>,
    vol_vol: Option<Vec<f64>>,
}

impl Process {
    /// Constant process with exact (zero) decomposition parts.
    pub fn constant(grid: Grid, value: f64) -> Self {
        let len = grid.nt() + 1;
        Self {
            grid,
            values: vec![value; len],
            drift: Some(vec![0.0; len]),
            vol: Some(vec![0.0; len]),
            vol_drift: Some(vec![0.0; len]),
            vol_vol: Some(vec![0.0; len]),
        }
    }

    /// Deterministic differentiable process `t ↦ f(t)`: the drift part is the
    /// time derivative and every martingale part is zero.
    pub fn deterministic(grid: Grid, f: impl Fn(f64) -> f64, df: impl Fn(f64) -> f64) -> Self {
        let len = grid.nt() + 1;
        Self {
            grid,
            values: (0..len).map(|n| f(grid.t(n))).collect(),
            drift: Some((0..len).map(|n| df(grid.t(n))).collect()),
            vol: Some(vec![0.0; len]),
            vol_drift: Some(vec![0.0; len]),
            vol_vol: Some(vec![0.0; len]),
        }
    }

    /// Wraps a raw value sequence with no decomposition parts.
    ///
    /// # Errors
    ///
    /// [`Error::ShapeMismatch`] when the length is not `nt + 1`.
    pub fn from_values(grid: Grid, values: Vec<f64>) -> Result<Self> {
        if values.len() != grid.nt() + 1 {
            return Err(Error::ShapeMismatch {
                what: "process values must have length nt + 1",
            });
        }
        Ok(Self {
            grid,
            values,
            drift: None,
            vol: None,
            vol_drift: None,
            vol_vol: None,
        })
    }

    /// Attaches decomposition parts (any subset; pass `None` to leave one out).
    ///
    /// # Errors
    ///
    /// [`Error::ShapeMismatch`] when a provided part's length is not `nt + 1`.
    pub fn with_parts(
        mut self,
        drift: Option<Vec<f64>>,
        vol: Option<Vec<f64>>,
        vol_drift: Option<Vec<f64>>,
        vol_vol: Option<Vec<f64>>,
    ) -> Result<Self> {
        let len = self.values.len();
        for part in [&drift, &vol, &vol_drift, &vol_vol].into_iter().flatten() {
            if part.len() != len {
                return Err(Error::ShapeMismatch {
                    what: "process part length must match the value sequence",
                });
            }
        }
        self.drift = drift;
        self.vol = vol;
        self.vol_drift = vol_drift;
        self.vol_vol = vol_vol;
        Ok(self)
    }

    /// The lattice this process lives on.
    pub fn grid(&self) -> Grid {
        self.grid
    }

    /// Number of time nodes (`nt + 1`).
    pub fn len(&self) -> usize {
        self.values.len()
    }

    /// Whether the process has zero length (never true for a valid grid).
    pub fn is_empty(&self) -> bool {
        self.values.is_empty()
    }

    /// Value at time node `n`.
    #[inline]
    pub fn value(&self, n: usize) -> f64 {
        self.values[n]
    }

    /// The raw value sequence.
    pub fn values(&self) -> &[f64] {
        &self.values
    }

    /// Scales the process and every attached decomposition part by a
    /// constant (linearity of the decomposition makes this exact).
    pub fn scale(&self, factor: f64) -> Self {
        let scale_vec =
            |v: &Option<Vec<f64>>| v.as_ref().map(|p| p.iter().map(|&x| factor * x).collect());
        Self {
            grid: self.grid,
            values: self.values.iter().map(|&x| factor * x).collect(),
            drift: scale_vec(&self.drift),
            vol: scale_vec(&self.vol),
            vol_drift: scale_vec(&self.vol_drift),
            vol_vol: scale_vec(&self.vol_vol),
        }
    }

    /// Drift part `A` at node `n`, if attached.
    pub fn drift(&self, n: usize) -> Option<f64> {
        self.drift.as_ref().map(|p| p[n])
    }

    /// Martingale part `Ψ` at node `n`, if attached.
    pub fn vol(&self, n: usize) -> Option<f64> {
        self.vol.as_ref().map(|p| p[n])
    }

    /// Second-level drift part `A_Ψ` at node `n`, if attached.
    pub fn vol_drift(&self, n: usize) -> Option<f64> {
        self.vol_drift.as_ref().map(|p| p[n])
    }

    /// Second-level martingale part `Ψ_Ψ` at node `n`, if attached.
    pub fn vol_vol(&self, n: usize) -> Option<f64> {
        self.vol_vol.as_ref().map(|p| p[n])
    }

    /// Drift part or a [`Error::MissingPart`] naming the operation.
    pub fn require_drift(&self, op: &'static str, n: usize) -> Result<f64> {
        self.drift(n)
            .ok_or(Error::MissingPart { op, part: "drift" })
    }

    /// Martingale part or a [`Error::MissingPart`] naming the operation.
    pub fn require_vol(&self, op: &'static str, n: usize) -> Result<f64> {
        self.vol(n).ok_or(Error::MissingPart { op, part: "vol" })
    }

    /// Verifies that the values (and any parts) are finite and that the value
    /// sequence stays away from zero, which every transform dividing by the
    /// volatility requires.
    ///
    /// # Errors
    ///
    /// [`Error::DegenerateVolatility`] naming the first step where the
    /// magnitude drops below `floor`.
    pub fn ensure_nonzero(&self, floor: f64) -> Result<()> {
        for (n, &v) in self.values.iter().enumerate() {
            if !v.is_finite() || v.abs() < floor {
                return Err(Error::DegenerateVolatility { step: n, value: v });
            }
        }
        Ok(())
    }
}

/// A field together with its semimartingale decomposition.
///
/// The martingale density `vol` is always present (it is what backward
/// equations solve *for*); the finite-variation density and the second level
/// are optional. Checkers that need an absent drift part reconstruct it from
/// one-step time differences along the driving path.
#[derive(Clone, Debug, PartialEq)]
pub struct SemimartingaleField {
    value: Field,
    vol: Field,
    drift: Option<Field>,
    vol_drift: Option<Field>,
    vol_vol: Option<Field>,
}

impl SemimartingaleField {
    /// Pairs a field with its martingale density.
    ///
    /// # Errors
    ///
    /// [`Error::GridMismatch`] when the two fields live on different lattices.
    pub fn new(value: Field, vol: Field) -> Result<Self> {
        if value.grid() != vol.grid() {
            return Err(Error::GridMismatch {
                what: "semimartingale field",
            });
        }
        Ok(Self {
            value,
            vol,
            drift: None,
            vol_drift: None,
            vol_vol: None,
        })
    }

    /// Attaches the finite-variation density `A_F`.
    ///
    /// # Errors
    ///
    /// [`Error::GridMismatch`] on lattice disagreement.
    pub fn with_drift(mut self, drift: Field) -> Result<Self> {
        if drift.grid() != self.value.grid() {
            return Err(Error::GridMismatch {
                what: "semimartingale drift part",
            });
        }
        self.drift = Some(drift);
        Ok(self)
    }

    /// Attaches the second-level decomposition `(A_{Ψ_F}, Ψ_{Ψ_F})`. Both are
    /// required together: second-level checks need the pair.
    ///
    /// # Errors
    ///
    /// [`Error::GridMismatch`] on lattice disagreement.
    pub fn with_second_level(mut self, vol_drift: Field, vol_vol: Field) -> Result<Self> {
        if vol_drift.grid() != self.value.grid() || vol_vol.grid() != self.value.grid() {
            return Err(Error::GridMismatch {
                what: "semimartingale second level",
            });
        }
        self.vol_drift = Some(vol_drift);
        self.vol_vol = Some(vol_vol);
        Ok(self)
    }

    /// The lattice all parts share.
    pub fn grid(&self) -> Grid {
        self.value.grid()
    }

    /// The field itself.
    pub fn value(&self) -> &Field {
        &self.value
    }

    /// Martingale density `Ψ_F`.
    pub fn vol(&self) -> &Field {
        &self.vol
    }

    /// Finite-variation density `A_F`, if attached.
    pub fn drift(&self) -> Option<&Field> {
        self.drift.as_ref()
    }

    /// Second-level drift `A_{Ψ_F}`, if attached.
    pub fn vol_drift(&self) -> Option<&Field> {
        self.vol_drift.as_ref()
    }

    /// Second-level martingale density `Ψ_{Ψ_F}`, if attached.
    pub fn vol_vol(&self) -> Option<&Field> {
        self.vol_vol.as_ref()
    }

    /// Second-level martingale density or [`Error::MissingPart`].
    pub fn require_vol_vol(&self, op: &'static str) -> Result<&Field> {
        self.vol_vol.as_ref().ok_or(Error::MissingPart {
            op,
            part: "vol_vol",
        })
    }
}
