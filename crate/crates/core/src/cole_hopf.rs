//! Logarithmic-gradient transforms connecting positive linear solutions to
//! quadratic-convection solutions, in three generality tiers:
//!
//! 1. the classical transform `U = −∂ₓ ln V` for deterministic problems;
//! 2. the generalized transform `U = −∂ₓ ln V − Ψ_V / (σV)` for linear
//!    solutions with a nontrivial martingale density, together with the
//!    matching density `Ψ_U`;
//! 3. a pointwise kernel family `𝒴(t, x, y, z)` built from an auxiliary
//!    field `r`, which recovers tier 2 as `r ≡ 0` and feeds the state-space
//!    (triplet) view of the same correspondence.
//!
//! The reference kernel `𝒴 = −z/(σy)` is checked against its characteristic
//! quasilinear equation by [`pde_residual`]; the associated control reads
//! off as [`auxiliary_control`].

use alloc::vec;

use crate::error::{Error, Result};
use crate::field::{Field, Process, SemimartingaleField};
use crate::grid::{Grid, DEFAULT_BUFFER_FRACTION};
use crate::stencil;

/// Relative tolerance below which transform denominators count as singular.
pub const DENOMINATOR_TOLERANCE: f64 = 1e-8;

/// Verifies strict positivity, naming the first offending node.
fn ensure_positive(v: &Field, what: &'static str) -> Result<()> {
    let nx = v.grid().nx();
    for (idx, &value) in v.values().iter().enumerate() {
        if value <= 0.0 || !value.is_finite() {
            return Err(Error::NonPositiveField {
                what,
                step: idx / nx,
                node: idx % nx,
                value,
            });
        }
    }
    Ok(())
}

/// Classical transform `U = −∂ₓV / V` of a positive field.
///
/// # Errors
///
/// [`Error::NonPositiveField`] naming the first non-positive node.
pub fn forward_transform(v: &Field) -> Result<Field> {
    ensure_positive(v, "transform input")?;
    let grid = v.grid();
    let mut out = Field::zeros(grid);
    let mut slope = vec![0.0; grid.nx()];
    for n in 0..=grid.nt() {
        let row = v.slice(n);
        stencil::derivative_into(row, grid.dx(), 1, &mut slope)?;
        for ((slot, &value), &s) in out.slice_mut(n).iter_mut().zip(row).zip(&slope) {
            *slot = -s / value;
        }
    }
    Ok(out)
}

/// Generalized transform `U = −∂ₓV / V − Ψ_V / (σV)`.
///
/// Reduces to [`forward_transform`] when the martingale density vanishes.
///
/// # Errors
///
/// - [`Error::NonPositiveField`] on a non-positive input node;
/// - [`Error::GridMismatch`] when the density lives on another lattice;
/// - [`Error::DegenerateVolatility`] when `σ` comes too close to zero.
pub fn generalized_transform(v: &Field, psi_v: &Field, sigma: &Process) -> Result<Field> {
    let grid = v.grid();
    if psi_v.grid() != grid || sigma.grid() != grid {
        return Err(Error::GridMismatch {
            what: "generalized transform inputs",
        });
    }
    ensure_positive(v, "transform input")?;
    sigma.ensure_nonzero(crate::coeffs::VOLATILITY_FLOOR)?;
    let v_x = stencil::central_derivative(v, 1)?;
    let mut out = Field::zeros(grid);
    for n in 0..=grid.nt() {
        let sigma_n = sigma.value(n);
        for i in 0..grid.nx() {
            *out.at_mut(n, i) =
                -v_x.at(n, i) / v.at(n, i) - psi_v.at(n, i) / (sigma_n * v.at(n, i));
        }
    }
    Ok(out)
}

/// Martingale density of the transformed field, from the linear solution's
/// first and second decomposition levels:
///
/// ```text
/// Ψ_U = −Ψ_{Ψ_V}/(σV) + Ψ_V²/(σV²) + Ψ_σ Ψ_V/(σ²V) − ∂ₓΨ_V/V + Ψ_V ∂ₓV/V².
/// ```
///
/// # Errors
///
/// - [`Error::NonPositiveField`] / [`Error::GridMismatch`] /
///   [`Error::DegenerateVolatility`] as for [`generalized_transform`];
/// - [`Error::MissingPart`] when `σ` carries no martingale part.
pub fn psi_u_from_v(v: &Field, psi_v: &Field, psi_psi_v: &Field, sigma: &Process) -> Result<Field> {
    let grid = v.grid();
    if psi_v.grid() != grid || psi_psi_v.grid() != grid || sigma.grid() != grid {
        return Err(Error::GridMismatch {
            what: "transform density inputs",
        });
    }
    ensure_positive(v, "transform input")?;
    sigma.ensure_nonzero(crate::coeffs::VOLATILITY_FLOOR)?;
    let v_x = stencil::central_derivative(v, 1)?;
    let psi_x = stencil::central_derivative(psi_v, 1)?;
    let mut out = Field::zeros(grid);
    for n in 0..=grid.nt() {
        let s = sigma.value(n);
        let s_vol = sigma.require_vol("transform density", n)?;
        for i in 0..grid.nx() {
            let (value, psi, psi2) = (v.at(n, i), psi_v.at(n, i), psi_psi_v.at(n, i));
            *out.at_mut(n, i) = -psi2 / (s * value)
                + psi * psi / (s * value * value)
                + s_vol * psi / (s * s * value)
                - psi_x.at(n, i) / value
                + psi * v_x.at(n, i) / (value * value);
        }
    }
    Ok(out)
}

/// Largest interior defect of the terminal matching condition
/// `p = −∂ₓ ln q − Ψ_V(T, ·)/(σ(T) q)` between prescribed terminal data `p`
/// for the convection equation and terminal data `q` for its linearization.
///
/// # Errors
///
/// - [`Error::ShapeMismatch`] when the rows disagree with the lattice;
/// - [`Error::NonPositiveField`] when `q` has a non-positive node;
/// - [`Error::DegenerateVolatility`] when `σ(T)` is too close to zero.
pub fn terminal_compatibility_residual(
    p: &[f64],
    q: &[f64],
    psi_v_terminal: &[f64],
    sigma_terminal: f64,
    grid: &Grid,
) -> Result<f64> {
    let nx = grid.nx();
    if p.len() != nx || q.len() != nx || psi_v_terminal.len() != nx {
        return Err(Error::ShapeMismatch {
            what: "terminal rows must have one entry per space node",
        });
    }
    for (i, &value) in q.iter().enumerate() {
        if value <= 0.0 || !value.is_finite() {
            return Err(Error::NonPositiveField {
                what: "terminal data",
                step: grid.nt(),
                node: i,
                value,
            });
        }
    }
    if sigma_terminal.abs() < crate::coeffs::VOLATILITY_FLOOR {
        return Err(Error::DegenerateVolatility {
            step: grid.nt(),
            value: sigma_terminal,
        });
    }
    let q_x = stencil::derivative(q, grid.dx(), 1)?;
    Ok(grid
        .interior(DEFAULT_BUFFER_FRACTION)
        .map(|i| (p[i] + q_x[i] / q[i] + psi_v_terminal[i] / (sigma_terminal * q[i])).abs())
        .fold(0.0, f64::max))
}

/// Residual of the reference kernel `𝒴(x, y, z) = −z/(σy)` in its
/// characteristic quasilinear equation at one state point:
///
/// ```text
/// ½σ²𝒴ₓₓ + ½z²𝒴ᵧᵧ + ½h²𝒴_zz + σz𝒴ₓᵧ + hz𝒴ᵧ_z + σh𝒴ₓ_z
///   − σ²𝒴𝒴ₓ − σz𝒴𝒴ᵧ − σh𝒴𝒴_z,
/// ```
///
/// evaluated with the kernel's closed-form partial derivatives. The kernel
/// does not depend on the first coordinate (all `x`-derivatives vanish);
/// the argument is kept so call sites can sweep full state points.
///
/// # Errors
///
/// [`Error::SingularDenominator`] when `σy` is too close to zero.
pub fn pde_residual(sigma: f64, _x: f64, y: f64, z: f64, h: f64) -> Result<f64> {
    let denom = sigma * y;
    if denom.abs() < DENOMINATOR_TOLERANCE * (1.0 + denom.abs()) {
        return Err(Error::SingularDenominator {
            what: "reference kernel denominator",
            value: denom,
        });
    }
    let kernel = -z / denom;
    let d_y = z / (denom * y);
    let d_z = -1.0 / denom;
    let d_yy = -2.0 * z / (denom * y * y);
    let d_yz = 1.0 / (denom * y);
    Ok(0.5 * z * z * d_yy + h * z * d_yz - sigma * z * kernel * d_y - sigma * h * kernel * d_z)
}

/// The control read off from the reference kernel,
/// `σ𝒴ₓ + z𝒴ᵧ + h𝒴_z = z²/(σy²) − h/(σy)`.
///
/// # Errors
///
/// [`Error::SingularDenominator`] when `σy` is too close to zero.
pub fn auxiliary_control(sigma: f64, y: f64, z: f64, h: f64) -> Result<f64> {
    let denom = sigma * y;
    if denom.abs() < DENOMINATOR_TOLERANCE * (1.0 + denom.abs()) {
        return Err(Error::SingularDenominator {
            what: "reference kernel denominator",
            value: denom,
        });
    }
    Ok(z * z / (denom * y) - h / denom)
}

/// Pointwise transform kernel built from an auxiliary field `r`:
///
/// ```text
/// 𝒴 = −z/(σy − r) + Ψ_σ/σ² + (σ ∂ₓr − Ψ_σ y + Ψ_r) / (σ(σy − r)),
/// ```
///
/// which collapses to the reference kernel `−z/(σy)` when `r ≡ 0` (the
/// `Ψ_σ` contributions cancel identically).
#[derive(Clone, Debug)]
pub struct TransformKernel {
    r: SemimartingaleField,
    r_x: Field,
    sigma: Process,
}

impl TransformKernel {
    /// Builds a kernel from the auxiliary field and the volatility.
    ///
    /// # Errors
    ///
    /// - [`Error::GridMismatch`] when the lattices disagree;
    /// - [`Error::DegenerateVolatility`] when `σ` comes too close to zero.
    pub fn new(r: SemimartingaleField, sigma: Process) -> Result<Self> {
        if sigma.grid() != r.grid() {
            return Err(Error::GridMismatch {
                what: "transform kernel inputs",
            });
        }
        sigma.ensure_nonzero(crate::coeffs::VOLATILITY_FLOOR)?;
        let r_x = stencil::central_derivative(r.value(), 1)?;
        Ok(Self { r, r_x, sigma })
    }

    /// The auxiliary field.
    pub fn r(&self) -> &SemimartingaleField {
        &self.r
    }

    /// The volatility process.
    pub fn sigma(&self) -> &Process {
        &self.sigma
    }

    /// Evaluates the kernel at lattice point `(step, node)` and state
    /// `(y, z)`.
    ///
    /// # Errors
    ///
    /// - [`Error::MissingPart`] when `σ` carries no martingale part;
    /// - [`Error::SingularDenominator`] when `σy − r` falls below the
    ///   relative tolerance `1e-8 · (1 + |σy|)`.
    pub fn evaluate(&self, step: usize, node: usize, y: f64, z: f64) -> Result<f64> {
        let sigma = self.sigma.value(step);
        let sigma_vol = self.sigma.require_vol("transform kernel", step)?;
        let r = self.r.value().at(step, node);
        let r_vol = self.r.vol().at(step, node);
        let r_x = self.r_x.at(step, node);
        let denom = sigma * y - r;
        if denom.abs() < DENOMINATOR_TOLERANCE * (1.0 + (sigma * y).abs()) {
            return Err(Error::SingularDenominator {
                what: "transform kernel denominator",
                value: denom,
            });
        }
        Ok(-z / denom
            + sigma_vol / (sigma * sigma)
            + (sigma * r_x - sigma_vol * y + r_vol) / (sigma * denom))
    }
}
