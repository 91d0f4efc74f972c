//! Direct solvers and residual checks for the quadratic-convection
//! equations themselves (as opposed to their linearizations).
//!
//! The forward initial-value equation under the admissible noise loading
//! `ℓ = −2σ` reads
//!
//! ```text
//! dU = { (5/2)σ² ∂ₓₓU − σ² U ∂ₓU + k ∂ₓU + e U + f } dt + ℓ ∂ₓU dW,
//! U(0, ·) = p,
//! ```
//!
//! and is integrated here by an explicit Euler-Maruyama scheme with mirror
//! ghost nodes at the boundary. The terminal-value (backward) equation
//!
//! ```text
//! dU = { −½σ² ∂ₓₓU + σ² U ∂ₓU + σ U Ψ_U + σ m ∂ₓU + e U − σ ∂ₓΨ_U
//!        + m Ψ_U + f } dt + Ψ_U dW,
//! U(T, ·) = p,
//! ```
//!
//! is never time-stepped directly — its solutions arrive through the
//! logarithmic transform — but [`backward_residual`] verifies a candidate
//! decomposition `(U, Ψ_U)` against it, one time difference at a time.

use crate::brownian::BrownianPath;
use crate::coeffs::{validate_noise_loading, CoefficientKind, CoefficientSet};
use crate::error::{Error, Result};
use crate::field::{Field, SemimartingaleField};
use crate::grid::DEFAULT_BUFFER_FRACTION;
use crate::{heat, stencil};
use alloc::vec::Vec;

/// Safety factor applied to the explicit diffusion stability limit.
const CFL_SAFETY: f64 = 0.2;

/// Magnitude at which the explicit scheme declares blow-up.
const BLOW_UP_THRESHOLD: f64 = 1e6;

/// Integrates the forward equation along one noise path.
///
/// Returns the solution with its martingale density `ℓ ∂ₓU` attached (the
/// returned density uses the one-sided boundary stencils; the mirror ghosts
/// are internal to the stepping).
///
/// # Errors
///
/// - [`Error::InvalidParameter`] when the coefficient set is not
///   forward-constructed;
/// - [`Error::ShapeMismatch`] / [`Error::GridMismatch`] on lattice
///   disagreements;
/// - [`Error::StabilityBound`] when `dt` exceeds the diffusion limit
///   `0.2 dx² / ((5/2) max σ²)` or the advection limit `dx / max|k|`;
/// - [`Error::BlowUp`] / [`Error::NonFinite`] when the scheme escapes.
pub fn solve_forward(
    initial: &[f64],
    coeffs: &CoefficientSet,
    path: &BrownianPath,
) -> Result<SemimartingaleField> {
    if coeffs.kind() != CoefficientKind::Forward {
        return Err(Error::InvalidParameter {
            what: "coefficient set",
            reason: "the forward solver needs a forward-constructed coefficient set",
        });
    }
    let grid = coeffs.grid();
    if path.grid() != grid {
        return Err(Error::GridMismatch {
            what: "noise path for the forward solver",
        });
    }
    if initial.len() != grid.nx() {
        return Err(Error::ShapeMismatch {
            what: "initial data must have one entry per space node",
        });
    }
    validate_noise_loading(coeffs.sigma(), coeffs.ell())?;

    let (nx, nt, dx, dt) = (grid.nx(), grid.nt(), grid.dx(), grid.dt());
    let max_sigma_sq = (0..=nt).map(|n| coeffs.sigma_sq(n)).fold(0.0f64, f64::max);
    let diffusion_bound = CFL_SAFETY * dx * dx / (2.5 * max_sigma_sq);
    if dt > diffusion_bound {
        return Err(Error::StabilityBound {
            scheme: "explicit diffusion step",
            dt,
            bound: diffusion_bound,
        });
    }
    let max_speed = coeffs
        .k()
        .values()
        .iter()
        .fold(0.0f64, |acc, &k| acc.max(k.abs()));
    if max_speed > 0.0 && dt > dx / max_speed {
        return Err(Error::StabilityBound {
            scheme: "explicit advection step",
            dt,
            bound: dx / max_speed,
        });
    }

    let mut u = Field::zeros(grid);
    u.slice_mut(0).copy_from_slice(initial);
    let mut next = Vec::with_capacity(nx);
    for n in 0..nt {
        let sigma_sq = coeffs.sigma_sq(n);
        let ell_n = coeffs.ell().value(n);
        let dw = path.increment(n);
        let current = u.slice(n);
        let k_row = coeffs.k().slice(n);
        let e_row = coeffs.e().slice(n);
        let f_row = coeffs.f().slice(n);
        next.clear();
        for i in 0..nx {
            // Mirror ghosts: the slope vanishes at the boundary and the
            // curvature folds back symmetrically.
            let left = current[if i == 0 { 1 } else { i - 1 }];
            let right = current[if i == nx - 1 { nx - 2 } else { i + 1 }];
            let slope = (right - left) / (2.0 * dx);
            let curvature = (left - 2.0 * current[i] + right) / (dx * dx);
            let drift = 2.5 * sigma_sq * curvature - sigma_sq * current[i] * slope
                + k_row[i] * slope
                + e_row[i] * current[i]
                + f_row[i];
            let value = current[i] + dt * drift + ell_n * slope * dw;
            if !value.is_finite() {
                return Err(Error::NonFinite {
                    what: "forward solution",
                    step: n + 1,
                    node: i,
                });
            }
            if value.abs() > BLOW_UP_THRESHOLD {
                return Err(Error::BlowUp { step: n + 1, value });
            }
            next.push(value);
        }
        u.slice_mut(n + 1).copy_from_slice(&next);
    }
    let vol = heat::gradient_noise(&u, coeffs.ell())?;
    SemimartingaleField::new(u, vol)
}

/// Largest one-step defect of a candidate pair `(U, Ψ_U)` against the
/// backward equation, over left time endpoints and the interior window:
///
/// ```text
/// max |ΔU − (backward drift at t_n) dt − Ψ_U(t_n) Δw_n|.
/// ```
///
/// For an exact solution this shrinks with both lattice spacings; a pair
/// that satisfies the equation with the wrong coefficients keeps a defect
/// proportional to `dt` times the coefficient error.
///
/// # Errors
///
/// - [`Error::InvalidParameter`] when the coefficient set is not
///   backward-constructed;
/// - [`Error::GridMismatch`] on lattice disagreements.
pub fn backward_residual(
    u: &SemimartingaleField,
    coeffs: &CoefficientSet,
    path: &BrownianPath,
) -> Result<f64> {
    if coeffs.kind() != CoefficientKind::Backward {
        return Err(Error::InvalidParameter {
            what: "coefficient set",
            reason: "the backward residual needs a backward-constructed coefficient set",
        });
    }
    let grid = coeffs.grid();
    if u.grid() != grid || path.grid() != grid {
        return Err(Error::GridMismatch {
            what: "backward residual inputs",
        });
    }
    let value = u.value();
    let vol = u.vol();
    let u_x = stencil::central_derivative(value, 1)?;
    let u_xx = stencil::central_derivative(value, 2)?;
    let vol_x = stencil::central_derivative(vol, 1)?;

    let dt = grid.dt();
    let interior = grid.interior(DEFAULT_BUFFER_FRACTION);
    let mut worst = 0.0f64;
    for n in 0..grid.nt() {
        let sigma = coeffs.sigma().value(n);
        let sigma_sq = sigma * sigma;
        let dw = path.increment(n);
        for i in interior.clone() {
            let m = coeffs.m().at(n, i);
            let bracket = -0.5 * sigma_sq * u_xx.at(n, i)
                + sigma_sq * value.at(n, i) * u_x.at(n, i)
                + sigma * value.at(n, i) * vol.at(n, i)
                + sigma * m * u_x.at(n, i)
                + coeffs.e().at(n, i) * value.at(n, i)
                - sigma * vol_x.at(n, i)
                + m * vol.at(n, i)
                + coeffs.f().at(n, i);
            let defect = value.at(n + 1, i) - value.at(n, i) - bracket * dt - vol.at(n, i) * dw;
            worst = worst.max(defect.abs());
        }
    }
    Ok(worst)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::field::Process;
    use crate::grid::Grid;
    use approx::assert_relative_eq;

    fn forward_set(grid: Grid, b: Field, m: Field, f: Field) -> CoefficientSet {
        CoefficientSet::forward(
            Process::constant(grid, 1.0),
            b,
            m,
            f,
            Process::constant(grid, 0.0),
        )
        .unwrap()
    }

    #[test]
    fn zero_data_stays_zero_and_constants_persist() {
        let grid = Grid::new(0.0, 1.0, 11, 0.5, 1000).unwrap();
        let coeffs = forward_set(
            grid,
            Field::zeros(grid),
            Field::zeros(grid),
            Field::zeros(grid),
        );
        let path = BrownianPath::sample(3, 0, grid);
        let zero = solve_forward(&[0.0; 11], &coeffs, &path).unwrap();
        assert!(zero.value().values().iter().all(|&v| v == 0.0));
        assert!(zero.vol().values().iter().all(|&v| v == 0.0));
        let flat = solve_forward(&[0.7; 11], &coeffs, &path).unwrap();
        assert!(flat.value().values().iter().all(|&v| v == 0.7));
    }

    #[test]
    fn constant_source_integrates_linearly() {
        // With flat data every space term vanishes, so U(t) = f₀ t exactly.
        let grid = Grid::new(0.0, 1.0, 11, 0.5, 1000).unwrap();
        let coeffs = forward_set(
            grid,
            Field::zeros(grid),
            Field::zeros(grid),
            Field::constant(grid, 0.3),
        );
        let path = BrownianPath::sample(17, 0, grid);
        let u = solve_forward(&[0.0; 11], &coeffs, &path).unwrap();
        for n in 0..=grid.nt() {
            for i in 0..grid.nx() {
                assert_relative_eq!(u.value().at(n, i), 0.3 * grid.t(n), epsilon = 1e-12);
            }
        }
    }

    #[test]
    fn zeroth_order_term_grows_at_first_order_in_dt() {
        // b = x gives e = 1, so flat data obeys U' = U; the explicit step
        // reproduces (1 + dt)^n with an O(dt) global error that halves
        // under time refinement.
        let mut errors = Vec::new();
        for &nt in &[1024usize, 2048] {
            let grid = Grid::new(0.0, 1.0, 11, 0.5, nt).unwrap();
            let coeffs = forward_set(
                grid,
                Field::from_fn(grid, |_, x| x),
                Field::zeros(grid),
                Field::zeros(grid),
            );
            let path = BrownianPath::sample(9, 0, grid);
            let u = solve_forward(&[1.0; 11], &coeffs, &path).unwrap();
            errors.push((u.value().at(nt, 5) - libm::exp(0.5)).abs());
        }
        assert!(errors[0] <= 5e-4, "coarse error {}", errors[0]);
        let ratio = errors[0] / errors[1];
        assert!((1.9..=2.1).contains(&ratio), "refinement ratio {ratio}");
    }

    #[test]
    fn stability_bounds_are_enforced_up_front() {
        let grid = Grid::new(0.0, 1.0, 11, 0.5, 10).unwrap();
        let coeffs = forward_set(
            grid,
            Field::zeros(grid),
            Field::zeros(grid),
            Field::zeros(grid),
        );
        let path = BrownianPath::sample(1, 0, grid);
        assert!(matches!(
            solve_forward(&[0.0; 11], &coeffs, &path),
            Err(Error::StabilityBound {
                scheme: "explicit diffusion step",
                ..
            })
        ));
    }

    #[test]
    fn runaway_growth_reports_blow_up() {
        // b = 30x gives e = 30; flat data grows like exp(30 t) and crosses
        // the guard long before the horizon.
        let grid = Grid::new(0.0, 1.0, 11, 1.0, 1250).unwrap();
        let coeffs = forward_set(
            grid,
            Field::from_fn(grid, |_, x| 30.0 * x),
            Field::zeros(grid),
            Field::zeros(grid),
        );
        let path = BrownianPath::sample(2, 0, grid);
        assert!(matches!(
            solve_forward(&[1.0; 11], &coeffs, &path),
            Err(Error::BlowUp { .. })
        ));
    }

    #[test]
    fn forward_solver_rejects_backward_sets() {
        let grid = Grid::new(0.0, 1.0, 11, 0.5, 1000).unwrap();
        let backward = CoefficientSet::backward(
            Process::constant(grid, 1.0),
            Field::zeros(grid),
            Field::zeros(grid),
        )
        .unwrap();
        let path = BrownianPath::sample(1, 0, grid);
        assert!(matches!(
            solve_forward(&[1.0; 11], &backward, &path),
            Err(Error::InvalidParameter { .. })
        ));
    }

    #[test]
    fn flat_candidates_have_zero_backward_residual() {
        // With m = c = 0 a constant profile with zero martingale density
        // solves the backward equation exactly, at every lattice size.
        let grid = Grid::new(-1.0, 1.0, 21, 0.5, 16).unwrap();
        let coeffs = CoefficientSet::backward(
            Process::constant(grid, 1.0),
            Field::zeros(grid),
            Field::zeros(grid),
        )
        .unwrap();
        let path = BrownianPath::sample(5, 0, grid);
        let u = SemimartingaleField::new(Field::constant(grid, -1.0), Field::zeros(grid)).unwrap();
        assert_eq!(backward_residual(&u, &coeffs, &path).unwrap(), 0.0);
    }

    #[test]
    fn stationary_profile_residual_decays_at_second_order_in_space() {
        // Choosing the potential c = U²/2 − ∂ₓU/2 makes the stationary
        // profile U an exact deterministic solution of the backward
        // equation (σ = 1, m = 0, Ψ_U = 0), so the residual is pure
        // stencil truncation and shrinks ~4x when the mesh halves.
        let profile = |x: f64| 0.3 * libm::sin(x);
        let slope = |x: f64| 0.3 * libm::cos(x);
        let mut residuals = Vec::new();
        for &nx in &[41usize, 81] {
            let grid = Grid::new(-1.0, 1.0, nx, 0.25, 16).unwrap();
            let coeffs = CoefficientSet::backward(
                Process::constant(grid, 1.0),
                Field::zeros(grid),
                Field::from_fn(grid, |_, x| 0.5 * profile(x) * profile(x) - 0.5 * slope(x)),
            )
            .unwrap();
            let path = BrownianPath::sample(23, 0, grid);
            let u = SemimartingaleField::new(
                Field::from_fn(grid, |_, x| profile(x)),
                Field::zeros(grid),
            )
            .unwrap();
            residuals.push(backward_residual(&u, &coeffs, &path).unwrap());
        }
        let ratio = residuals[0] / residuals[1];
        assert!(
            ratio >= 3.0,
            "expected second-order decay, got ratio {ratio} from {residuals:?}"
        );
    }
}
