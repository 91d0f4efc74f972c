//! Pathwise forward-backward triplets read off a solved field.
//!
//! The backward equations in this crate are verified in their pathwise,
//! Markovian form: a forward state follows
//!
//! ```text
//! dX = k dt + σ(t) dW,
//! ```
//!
//! and a solved field `F` with martingale density `Ψ_F` induces the triplet
//!
//! ```text
//! Y(t) = F(t, X(t)),      Z(t) = σ(t) ∂x F + Ψ_F     (at (t, X(t))),
//! ```
//!
//! which must satisfy the one-step relation `ΔY ≈ driver·Δt + Z·ΔW` for the
//! equation's driver. For the nonlinear (Burgers-side) field the driver is
//! `σYZ + eY + mZ + f`; for the linear (heat-side) field it is `cy + dz`.
//! [`bsde_residual`] measures the worst one-step defect; it shrinks like
//! `Δt` for a true solution.
//!
//! When the field carries its second level, the triplet also exposes the
//! control's own martingale density
//!
//! ```text
//! h = Ψ_{Ψ_F} + σ² ∂xx F + Ψ_σ ∂x F + 2 σ ∂x Ψ_F     (at (t, X(t))),
//! ```
//!
//! which the pointwise transform identities consume.

use crate::brownian::BrownianPath;
use crate::coeffs::CoefficientSet;
use crate::cole_hopf::DENOMINATOR_TOLERANCE;
use crate::error::{Error, Result};
use crate::field::{Process, SemimartingaleField};
use crate::grid::{Grid, DEFAULT_BUFFER_FRACTION};
use crate::stencil;
use alloc::vec::Vec;

/// A sampled forward-backward triplet along one path.
#[derive(Clone, Debug)]
pub struct FbsdeTriplet {
    grid: Grid,
    state: Vec<f64>,
    value: Vec<f64>,
    control: Vec<f64>,
    control_vol: Option<Vec<f64>>,
    exited_window: bool,
}

impl FbsdeTriplet {
    /// The lattice the triplet was sampled on.
    pub fn grid(&self) -> Grid {
        self.grid
    }

    /// Forward state `X(t_n)`.
    pub fn state(&self) -> &[f64] {
        &self.state
    }

    /// Backward value `Y(t_n)`.
    pub fn value(&self) -> &[f64] {
        &self.value
    }

    /// Control `Z(t_n)`.
    pub fn control(&self) -> &[f64] {
        &self.control
    }

    /// Martingale density of the control, when the field carried its
    /// second level.
    pub fn control_vol(&self) -> Option<&[f64]> {
        self.control_vol.as_deref()
    }

    /// True when the state left the interior reporting window at any time,
    /// in which case sampled values lean on constant extension and the
    /// triplet should be treated as a warning, not a verdict.
    pub fn exited_window(&self) -> bool {
        self.exited_window
    }
}

/// Simulates the forward state `X(t_{n+1}) = X(t_n) + k Δt + σ(t_n) ΔW_n`.
///
/// # Errors
///
/// - [`Error::GridMismatch`] when `sigma` and `path` disagree;
/// - [`Error::NonFinite`] when the state leaves the finite range.
pub fn simulate_forward_state(
    x0: f64,
    sigma: &Process,
    drift: Option<f64>,
    path: &BrownianPath,
) -> Result<Vec<f64>> {
    let grid = path.grid();
    if sigma.grid() != grid {
        return Err(Error::GridMismatch {
            what: "forward state inputs",
        });
    }
    let k = drift.unwrap_or(0.0);
    let mut state = Vec::with_capacity(grid.nt() + 1);
    let mut x = x0;
    state.push(x);
    for n in 0..grid.nt() {
        x += k * grid.dt() + sigma.value(n) * path.increment(n);
        if !x.is_finite() {
            return Err(Error::NonFinite {
                what: "forward state",
                step: n + 1,
                node: 0,
            });
        }
        state.push(x);
    }
    Ok(state)
}

/// Reads the Markovian triplet `(X, Y, Z)` off a solved field along a given
/// state path, attaching the control's martingale density when the field
/// carries its second level.
///
/// # Errors
///
/// - [`Error::GridMismatch`] / [`Error::ShapeMismatch`] on malformed inputs;
/// - [`Error::MissingPart`] when the field has a second level but `sigma`
///   lacks its martingale part;
/// - stencil errors when the lattice is too small to differentiate.
pub fn markovian_triplet(
    field: &SemimartingaleField,
    sigma: &Process,
    state: &[f64],
) -> Result<FbsdeTriplet> {
    let grid = field.grid();
    if sigma.grid() != grid {
        return Err(Error::GridMismatch {
            what: "markovian triplet inputs",
        });
    }
    if state.len() != grid.nt() + 1 {
        return Err(Error::ShapeMismatch {
            what: "state path must have one entry per time node",
        });
    }
    let value_x = stencil::central_derivative(field.value(), 1)?;
    let second_level = field.vol_vol().is_some();
    let (value_xx, vol_x) = if second_level {
        (
            Some(stencil::central_derivative(field.value(), 2)?),
            Some(stencil::central_derivative(field.vol(), 1)?),
        )
    } else {
        (None, None)
    };

    let window = grid.interior(DEFAULT_BUFFER_FRACTION);
    let (window_lo, window_hi) = (grid.x(window.start), grid.x(window.end - 1));
    let mut exited_window = false;

    let mut value = Vec::with_capacity(grid.nt() + 1);
    let mut control = Vec::with_capacity(grid.nt() + 1);
    let mut control_vol = second_level.then(|| Vec::with_capacity(grid.nt() + 1));
    for (n, &x) in state.iter().enumerate() {
        exited_window |= x < window_lo || x > window_hi;
        let s = sigma.value(n);
        let y = stencil::sample_shifted(field.value().slice(n), &grid, x);
        let fx = stencil::sample_shifted(value_x.slice(n), &grid, x);
        let psi = stencil::sample_shifted(field.vol().slice(n), &grid, x);
        value.push(y);
        control.push(s * fx + psi);
        if let Some(h) = control_vol.as_mut() {
            let sv = sigma.require_vol("control martingale density", n)?;
            let psi_psi = stencil::sample_shifted(
                field
                    .require_vol_vol("control martingale density")?
                    .slice(n),
                &grid,
                x,
            );
            let fxx = stencil::sample_shifted(
                value_xx.as_ref().expect("second level present").slice(n),
                &grid,
                x,
            );
            let psi_x = stencil::sample_shifted(
                vol_x.as_ref().expect("second level present").slice(n),
                &grid,
                x,
            );
            h.push(psi_psi + s * s * fxx + sv * fx + 2.0 * s * psi_x);
        }
    }
    Ok(FbsdeTriplet {
        grid,
        state: state.to_vec(),
        value,
        control,
        control_vol,
        exited_window,
    })
}

/// Driver of the nonlinear (Burgers-side) backward equation,
/// `σYZ + eY + mZ + f`, sampling the coefficient fields along the state.
///
/// The returned closure takes `(step, state, value, control)`.
pub fn burgers_driver(coeffs: &CoefficientSet) -> impl Fn(usize, f64, f64, f64) -> f64 + '_ {
    let grid = coeffs.grid();
    move |n, x, y, z| {
        let e = stencil::sample_shifted(coeffs.e().slice(n), &grid, x);
        let m = stencil::sample_shifted(coeffs.m().slice(n), &grid, x);
        let f = stencil::sample_shifted(coeffs.f().slice(n), &grid, x);
        coeffs.sigma().value(n) * y * z + e * y + m * z + f
    }
}

/// Driver of the linear (heat-side) backward equation, `c y + d z`.
///
/// The returned closure takes `(step, state, value, control)`.
pub fn heat_driver(coeffs: &CoefficientSet) -> impl Fn(usize, f64, f64, f64) -> f64 + '_ {
    let grid = coeffs.grid();
    move |n, x, y, z| {
        let c = stencil::sample_shifted(coeffs.c().slice(n), &grid, x);
        let d = stencil::sample_shifted(coeffs.d().slice(n), &grid, x);
        c * y + d * z
    }
}

/// Worst one-step defect `max_n |ΔY − driver·Δt − Z ΔW|` of a triplet
/// against a driver; `O(Δt)` for a true solution.
///
/// # Errors
///
/// [`Error::GridMismatch`] when the triplet and path lattices differ.
pub fn bsde_residual(
    triplet: &FbsdeTriplet,
    path: &BrownianPath,
    driver: impl Fn(usize, f64, f64, f64) -> f64,
) -> Result<f64> {
    let grid = triplet.grid();
    if path.grid() != grid {
        return Err(Error::GridMismatch {
            what: "one-step residual inputs",
        });
    }
    let mut worst = 0.0f64;
    for n in 0..grid.nt() {
        let (x, y, z) = (triplet.state[n], triplet.value[n], triplet.control[n]);
        let predicted = driver(n, x, y, z) * grid.dt() + z * path.increment(n);
        worst = worst.max((triplet.value[n + 1] - y - predicted).abs());
    }
    Ok(worst)
}

/// Worst gap in the pathwise transform identity `Y + z/(σ y) = 0` linking
/// the nonlinear triplet `(Y, Z)` to the linear one `(y, z)` along the same
/// state.
///
/// # Errors
///
/// - [`Error::GridMismatch`] when the triplets disagree;
/// - [`Error::SingularDenominator`] when `σ y` is too small to divide by.
pub fn transform_identity_gap(
    burgers: &FbsdeTriplet,
    heat: &FbsdeTriplet,
    sigma: &Process,
) -> Result<f64> {
    let grid = burgers.grid();
    if heat.grid() != grid || sigma.grid() != grid {
        return Err(Error::GridMismatch {
            what: "transform identity inputs",
        });
    }
    let mut worst = 0.0f64;
    for n in 0..=grid.nt() {
        let denominator = sigma.value(n) * heat.value[n];
        if denominator.abs() < DENOMINATOR_TOLERANCE {
            return Err(Error::SingularDenominator {
                what: "transform identity denominator",
                value: denominator,
            });
        }
        worst = worst.max((burgers.value[n] + heat.control[n] / denominator).abs());
    }
    Ok(worst)
}
