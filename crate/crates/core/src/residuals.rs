//! Constraint checkers for the backward (terminal-value) theory.
//!
//! Each checker compares a *provided* finite-variation density against the
//! algebraic drift the corresponding equation dictates, pointwise on the
//! lattice, and reports the worst interior defect:
//!
//! ```text
//! max_{n < nt, i interior} | A_provided(t_n, x_i) − drift_formula(t_n, x_i) |.
//! ```
//!
//! Measuring the *density* defect (rather than a one-step time difference)
//! is what gives the checks teeth: a candidate built from the wrong
//! coefficients keeps an O(1) density defect at every resolution, while a
//! correct candidate's defect is pure stencil truncation and decays at
//! second order in `dx`. When a field arrives without its drift part, the
//! checker reconstructs it from one-step differences,
//! `A ≈ (ΔF − Ψ_F Δw)/dt`, which adds an O(dt^{1/2}) reconstruction error
//! for genuinely stochastic fields but keeps the same separation between
//! right and wrong coefficients.
//!
//! The four checks, in increasing depth:
//!
//! - [`backward_heat_residual`] - the linear terminal-value equation for `V`;
//! - [`noise_constraint_residual`] - the equation the martingale density
//!   `Ψ_V` must itself satisfy for the transform to close;
//! - [`kernel_bspde_residual`] - the backward equation for the auxiliary
//!   kernel field `r`;
//! - [`coupling_constraint_residual`] - the compatibility identity tying
//!   `r` and `Ψ_V` together; at `r ≡ 0` it degenerates to `σ` times the
//!   noise-constraint defect, which makes a sharp cross-check.

use crate::brownian::BrownianPath;
use crate::coeffs::{CoefficientKind, CoefficientSet};
use crate::cole_hopf::TransformKernel;
use crate::error::{Error, Result};
use crate::field::{Field, SemimartingaleField};
use crate::grid::DEFAULT_BUFFER_FRACTION;
use crate::stencil;

/// The provided drift part, or its one-step reconstruction along the path.
fn effective_drift(
    value: &Field,
    vol: &Field,
    provided: Option<&Field>,
    path: &BrownianPath,
) -> Field {
    if let Some(drift) = provided {
        return drift.clone();
    }
    let grid = value.grid();
    let dt = grid.dt();
    let mut out = Field::zeros(grid);
    for n in 0..grid.nt() {
        let dw = path.increment(n);
        for i in 0..grid.nx() {
            *out.at_mut(n, i) = (value.at(n + 1, i) - value.at(n, i) - vol.at(n, i) * dw) / dt;
        }
    }
    out
}

fn check_backward_inputs(
    grid: crate::grid::Grid,
    coeffs: &CoefficientSet,
    path: &BrownianPath,
) -> Result<()> {
    if coeffs.kind() != CoefficientKind::Backward {
        return Err(Error::InvalidParameter {
            what: "coefficient set",
            reason: "constraint checks need a backward-constructed coefficient set",
        });
    }
    if coeffs.grid() != grid || path.grid() != grid {
        return Err(Error::GridMismatch {
            what: "constraint check inputs",
        });
    }
    Ok(())
}

/// Worst interior defect of a candidate `(V, Ψ_V, A_V)` in the linear
/// terminal-value equation
///
/// ```text
/// A_V = −½σ² ∂ₓₓV + σm ∂ₓV − σ ∂ₓΨ_V + m Ψ_V + c V.
/// ```
///
/// # Errors
///
/// - [`Error::InvalidParameter`] for a non-backward coefficient set;
/// - [`Error::GridMismatch`] on lattice disagreements.
pub fn backward_heat_residual(
    v: &SemimartingaleField,
    coeffs: &CoefficientSet,
    path: &BrownianPath,
) -> Result<f64> {
    let grid = v.grid();
    check_backward_inputs(grid, coeffs, path)?;
    let value = v.value();
    let vol = v.vol();
    let v_x = stencil::central_derivative(value, 1)?;
    let v_xx = stencil::central_derivative(value, 2)?;
    let vol_x = stencil::central_derivative(vol, 1)?;
    let drift = effective_drift(value, vol, v.drift(), path);

    let interior = grid.interior(DEFAULT_BUFFER_FRACTION);
    let mut worst = 0.0f64;
    for n in 0..grid.nt() {
        let sigma = coeffs.sigma().value(n);
        for i in interior.clone() {
            let m = coeffs.m().at(n, i);
            let formula = -0.5 * sigma * sigma * v_xx.at(n, i) + sigma * m * v_x.at(n, i)
                - sigma * vol_x.at(n, i)
                + m * vol.at(n, i)
                + coeffs.c().at(n, i) * value.at(n, i);
            worst = worst.max((drift.at(n, i) - formula).abs());
        }
    }
    Ok(worst)
}

/// Worst interior defect of the constraint the martingale density must
/// satisfy for the transform to close:
///
/// ```text
/// A_{Ψ_V} = −½σ² ∂ₓₓΨ_V + (σm + Ψ_σ) ∂ₓΨ_V
///           + (A_σ/σ − (Ψ_σ/σ) m + c − Ψ_σ²/σ²) Ψ_V
///           − σ ∂ₓΨ_{Ψ_V} + (Ψ_σ/σ + m) Ψ_{Ψ_V}.
/// ```
///
/// # Errors
///
/// - [`Error::MissingPart`] when `V` lacks its second level or `σ` lacks
///   its decomposition parts;
/// - otherwise as [`backward_heat_residual`].
pub fn noise_constraint_residual(
    v: &SemimartingaleField,
    coeffs: &CoefficientSet,
    path: &BrownianPath,
) -> Result<f64> {
    let grid = v.grid();
    check_backward_inputs(grid, coeffs, path)?;
    let vol = v.vol();
    let vol_vol = v.require_vol_vol("noise constraint")?;
    let psi_x = stencil::central_derivative(vol, 1)?;
    let psi_xx = stencil::central_derivative(vol, 2)?;
    let psi2_x = stencil::central_derivative(vol_vol, 1)?;
    let drift = effective_drift(vol, vol_vol, v.vol_drift(), path);

    let interior = grid.interior(DEFAULT_BUFFER_FRACTION);
    let mut worst = 0.0f64;
    for n in 0..grid.nt() {
        let sigma = coeffs.sigma().value(n);
        let sigma_vol = coeffs.sigma().require_vol("noise constraint", n)?;
        let sigma_drift = coeffs.sigma().require_drift("noise constraint", n)?;
        for i in interior.clone() {
            let m = coeffs.m().at(n, i);
            let zeroth = sigma_drift / sigma - (sigma_vol / sigma) * m + coeffs.c().at(n, i)
                - sigma_vol * sigma_vol / (sigma * sigma);
            let formula = -0.5 * sigma * sigma * psi_xx.at(n, i)
                + (sigma * m + sigma_vol) * psi_x.at(n, i)
                + zeroth * vol.at(n, i)
                - sigma * psi2_x.at(n, i)
                + (sigma_vol / sigma + m) * vol_vol.at(n, i);
            worst = worst.max((drift.at(n, i) - formula).abs());
        }
    }
    Ok(worst)
}

/// Worst interior defect of the auxiliary kernel field's backward equation:
///
/// ```text
/// A_r = −½σ² ∂ₓₓr + (Ψ_σ + σm) ∂ₓr
///       + (σc − Ψ_σ m − Ψ_σ²/σ + A_σ)(r/σ)
///       − σ ∂ₓΨ_r + (Ψ_σ/σ + m) Ψ_r.
/// ```
///
/// # Errors
///
/// - [`Error::InvalidParameter`] when the kernel's volatility disagrees
///   with the coefficient set's;
/// - otherwise as [`noise_constraint_residual`].
pub fn kernel_bspde_residual(
    kernel: &TransformKernel,
    coeffs: &CoefficientSet,
    path: &BrownianPath,
) -> Result<f64> {
    let r = kernel.r();
    let grid = r.grid();
    check_backward_inputs(grid, coeffs, path)?;
    if kernel.sigma() != coeffs.sigma() {
        return Err(Error::InvalidParameter {
            what: "transform kernel",
            reason: "kernel volatility must match the coefficient set",
        });
    }
    let value = r.value();
    let vol = r.vol();
    let r_x = stencil::central_derivative(value, 1)?;
    let r_xx = stencil::central_derivative(value, 2)?;
    let vol_x = stencil::central_derivative(vol, 1)?;
    let drift = effective_drift(value, vol, r.drift(), path);

    let interior = grid.interior(DEFAULT_BUFFER_FRACTION);
    let mut worst = 0.0f64;
    for n in 0..grid.nt() {
        let sigma = coeffs.sigma().value(n);
        let sigma_vol = coeffs.sigma().require_vol("kernel constraint", n)?;
        let sigma_drift = coeffs.sigma().require_drift("kernel constraint", n)?;
        for i in interior.clone() {
            let m = coeffs.m().at(n, i);
            let zeroth =
                sigma * coeffs.c().at(n, i) - sigma_vol * m - sigma_vol * sigma_vol / sigma
                    + sigma_drift;
            let formula = -0.5 * sigma * sigma * r_xx.at(n, i)
                + (sigma_vol + sigma * m) * r_x.at(n, i)
                + zeroth * value.at(n, i) / sigma
                - sigma * vol_x.at(n, i)
                + (sigma_vol / sigma + m) * vol.at(n, i);
            worst = worst.max((drift.at(n, i) - formula).abs());
        }
    }
    Ok(worst)
}

/// Worst interior defect of the coupling identity between the auxiliary
/// kernel field and the linear solution's martingale density. The identity
/// is a fourteen-term sum that must vanish; at `r ≡ 0` the surviving terms
/// are exactly `σ` times the noise-constraint defect.
///
/// # Errors
///
/// As [`noise_constraint_residual`], with the kernel checks of
/// [`kernel_bspde_residual`].
pub fn coupling_constraint_residual(
    kernel: &TransformKernel,
    v: &SemimartingaleField,
    coeffs: &CoefficientSet,
    path: &BrownianPath,
) -> Result<f64> {
    let r = kernel.r();
    let grid = r.grid();
    check_backward_inputs(grid, coeffs, path)?;
    if v.grid() != grid {
        return Err(Error::GridMismatch {
            what: "coupling constraint inputs",
        });
    }
    if kernel.sigma() != coeffs.sigma() {
        return Err(Error::InvalidParameter {
            what: "transform kernel",
            reason: "kernel volatility must match the coefficient set",
        });
    }
    let r_value = r.value();
    let r_vol = r.vol();
    let r_vol_vol = r.require_vol_vol("coupling constraint")?;
    let v_vol = v.vol();
    let v_vol_vol = v.require_vol_vol("coupling constraint")?;

    let r_x = stencil::central_derivative(r_value, 1)?;
    let r_vol_x = stencil::central_derivative(r_vol, 1)?;
    let r_vol_xx = stencil::central_derivative(r_vol, 2)?;
    let r_vol_vol_x = stencil::central_derivative(r_vol_vol, 1)?;
    let v_vol_x = stencil::central_derivative(v_vol, 1)?;
    let v_vol_xx = stencil::central_derivative(v_vol, 2)?;
    let v_vol_vol_x = stencil::central_derivative(v_vol_vol, 1)?;

    let r_vol_drift = effective_drift(r_vol, r_vol_vol, r.vol_drift(), path);
    let v_vol_drift = effective_drift(v_vol, v_vol_vol, v.vol_drift(), path);

    let interior = grid.interior(DEFAULT_BUFFER_FRACTION);
    let mut worst = 0.0f64;
    for n in 0..grid.nt() {
        let s = coeffs.sigma().value(n);
        let sv = coeffs.sigma().require_vol("coupling constraint", n)?;
        let sa = coeffs.sigma().require_drift("coupling constraint", n)?;
        let svv = coeffs.sigma().vol_vol(n).ok_or(Error::MissingPart {
            op: "coupling constraint",
            part: "vol_vol",
        })?;
        let sva = coeffs.sigma().vol_drift(n).ok_or(Error::MissingPart {
            op: "coupling constraint",
            part: "vol_drift",
        })?;
        for i in interior.clone() {
            let m = coeffs.m().at(n, i);
            let c = coeffs.c().at(n, i);
            let sum = (-2.0 * sv * sv / s + svv) * r_x.at(n, i)
                + (5.0 * sv * sv * sv / (s * s) - 3.0 * svv * sv / s - svv * m
                    + 2.0 * sv * sv * m / s
                    - 2.0 * sa * sv / s
                    + sva)
                    * (r_value.at(n, i) / s)
                - 0.5 * s * s * r_vol_xx.at(n, i)
                + (2.0 * sv + s * m) * r_vol_x.at(n, i)
                + (2.0 * sa / s - 5.0 * sv * sv / (s * s) + svv / s + c - 2.0 * sv * m / s)
                    * r_vol.at(n, i)
                - s * r_vol_vol_x.at(n, i)
                + (2.0 * sv / s + m) * r_vol_vol.at(n, i)
                + 0.5 * s * s * s * v_vol_xx.at(n, i)
                - s * (s * m + sv) * v_vol_x.at(n, i)
                - (sa - sv * m + s * c - sv * sv / s) * v_vol.at(n, i)
                + s * v_vol_drift.at(n, i)
                + s * s * v_vol_vol_x.at(n, i)
                - (s * m + sv) * v_vol_vol.at(n, i)
                - r_vol_drift.at(n, i);
            worst = worst.max(sum.abs());
        }
    }
    Ok(worst)
}
