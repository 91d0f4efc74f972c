//! Pathwise linear heat solver with advection, potential, and a stochastic
//! coordinate shift.
//!
//! The forward pipeline linearizes the convection equation into
//!
//! ```text
//! dV = { (5/2)σ² ∂ₓₓV + k ∂ₓV − c V } dt + ℓ ∂ₓV dW,      V(0, ·) = q > 0,
//! ```
//!
//! and removes the noise term by the change of variables
//! `V(t, x) = G(t, x + H(t))` with `H = ∫ ℓ dW`: for the admissible loading
//! `ℓ = −2σ` the Itô correction `½ℓ²∂ₓₓ` eats exactly `2σ²` of the diffusion,
//! leaving the **pathwise deterministic** problem
//!
//! ```text
//! ∂ₜG = ½σ² ∂ₓₓG + k(t, x − H(t)) ∂ₓG − c(t, x − H(t)) G,   G(0, ·) = q,
//! ```
//!
//! which this module solves. The scheme is semi-implicit: diffusion by
//! Crank-Nicolson with reflecting (mirror) boundary rows and a Thomas solve,
//! advection and reaction explicit, coefficients frozen at the left time
//! endpoint. Space accuracy is second order, time accuracy first order
//! (the splitting dominates). The reflecting boundary is artificial, so
//! conclusions should be read on the interior window
//! ([`Grid::interior`]); the advection step requires `dt ≤ dx / max|k|`,
//! enforced up front.

use crate::error::{Error, Result};
use crate::field::{Field, Process};
use crate::stencil;
use alloc::vec;
use alloc::vec::Vec;

/// One linear heat problem in the shifted frame.
#[derive(Clone, Debug)]
pub struct HeatProblem {
    initial: Vec<f64>,
    sigma: Process,
    advection: Field,
    potential: Field,
    shift: Vec<f64>,
}

impl HeatProblem {
    /// Assembles and validates a problem.
    ///
    /// `advection` and `potential` are given in the *unshifted* frame; the
    /// solver samples them at `x − shift[n]` each step. `shift` holds the
    /// accumulated noise integral at every time node (use an all-zero vector
    /// for a deterministic problem).
    ///
    /// # Errors
    ///
    /// - [`Error::ShapeMismatch`] / [`Error::GridMismatch`] on disagreeing
    ///   shapes;
    /// - [`Error::NonPositiveField`] naming the first non-positive initial
    ///   node;
    /// - [`Error::DegenerateVolatility`] when `σ` comes too close to zero;
    /// - [`Error::StabilityBound`] when the explicit advection step cannot
    ///   resolve the advection speed.
    pub fn new(
        initial: Vec<f64>,
        sigma: Process,
        advection: Field,
        potential: Field,
        shift: Vec<f64>,
    ) -> Result<Self> {
        let grid = sigma.grid();
        if initial.len() != grid.nx() {
            return Err(Error::ShapeMismatch {
                what: "initial data must have one entry per space node",
            });
        }
        if shift.len() != grid.nt() + 1 {
            return Err(Error::ShapeMismatch {
                what: "shift must have one entry per time node",
            });
        }
        if advection.grid() != grid || potential.grid() != grid {
            return Err(Error::GridMismatch {
                what: "heat problem coefficients",
            });
        }
        for (i, &q) in initial.iter().enumerate() {
            if q <= 0.0 || !q.is_finite() {
                return Err(Error::NonPositiveField {
                    what: "initial data",
                    step: 0,
                    node: i,
                    value: q,
                });
            }
        }
        sigma.ensure_nonzero(crate::coeffs::VOLATILITY_FLOOR)?;
        let max_speed = advection
            .values()
            .iter()
            .fold(0.0f64, |acc, &k| acc.max(k.abs()));
        if max_speed > 0.0 {
            let bound = grid.dx() / max_speed;
            if grid.dt() > bound {
                return Err(Error::StabilityBound {
                    scheme: "explicit advection step",
                    dt: grid.dt(),
                    bound,
                });
            }
        }
        Ok(Self {
            initial,
            sigma,
            advection,
            potential,
            shift,
        })
    }

    /// Runs the scheme over the whole lattice.
    ///
    /// # Errors
    ///
    /// - [`Error::PositivityLost`] naming the first node where the solution
    ///   stops being strictly positive (the logarithmic transform downstream
    ///   needs positivity);
    /// - [`Error::NonFinite`] if a step produces a non-finite value.
    pub fn solve(&self) -> Result<Field> {
        let grid = self.sigma.grid();
        let (nx, nt, dx, dt) = (grid.nx(), grid.nt(), grid.dx(), grid.dt());
        let mut out = Field::zeros(grid);
        out.slice_mut(0).copy_from_slice(&self.initial);

        // Identically-zero coefficients contribute exactly nothing to the
        // right-hand side, so their per-step resampling is skipped outright.
        let adv_zero = self.advection.values().iter().all(|&v| v == 0.0);
        let pot_zero = self.potential.values().iter().all(|&v| v == 0.0);

        let mut rhs = vec![0.0; nx];
        let mut next = vec![0.0; nx];
        let mut sweep = vec![0.0; nx];
        let mut adv = vec![0.0; nx];
        let mut pot = vec![0.0; nx];
        let mut slope = vec![0.0; nx];
        let mut factored: Option<ReflectingTridiagonal> = None;
        for n in 0..nt {
            let sigma_n = self.sigma.value(n);
            let beta = sigma_n * sigma_n * dt / (4.0 * dx * dx);
            // The implicit matrix depends only on beta; for
            // time-independent volatility it is factored exactly once.
            if factored.as_ref().map_or(true, |f| f.beta != beta) {
                factored = Some(ReflectingTridiagonal::new(beta, nx));
            }
            let solver = factored.as_ref().expect("factored above");

            if !adv_zero {
                stencil::interpolate_shifted_into(
                    self.advection.slice(n),
                    &grid,
                    -self.shift[n],
                    &mut adv,
                );
            }
            if !pot_zero {
                stencil::interpolate_shifted_into(
                    self.potential.slice(n),
                    &grid,
                    -self.shift[n],
                    &mut pot,
                );
            }
            let current = out.slice(n);
            if !adv_zero {
                stencil::derivative_into(current, dx, 1, &mut slope)?;
            }

            // Right-hand side: explicit half of the diffusion plus the
            // frozen advection and reaction terms.
            rhs[0] = current[0] + beta * (2.0 * current[1] - 2.0 * current[0]);
            for i in 1..nx - 1 {
                let second = current[i - 1] - 2.0 * current[i] + current[i + 1];
                rhs[i] = current[i] + beta * second;
            }
            rhs[nx - 1] = current[nx - 1] + beta * (2.0 * current[nx - 2] - 2.0 * current[nx - 1]);
            match (adv_zero, pot_zero) {
                (false, false) => {
                    for i in 0..nx {
                        rhs[i] += dt * (adv[i] * slope[i] - pot[i] * current[i]);
                    }
                }
                (false, true) => {
                    for i in 0..nx {
                        rhs[i] += dt * (adv[i] * slope[i]);
                    }
                }
                (true, false) => {
                    for i in 0..nx {
                        rhs[i] -= dt * (pot[i] * current[i]);
                    }
                }
                (true, true) => {}
            }

            solver.solve(&rhs, &mut sweep, &mut next);

            for (i, &value) in next.iter().enumerate() {
                if !value.is_finite() {
                    return Err(Error::NonFinite {
                        what: "heat solution",
                        step: n + 1,
                        node: i,
                    });
                }
                if value <= 0.0 {
                    return Err(Error::PositivityLost {
                        step: n + 1,
                        node: i,
                        value,
                    });
                }
            }
            out.slice_mut(n + 1).copy_from_slice(&next);
        }
        Ok(out)
    }
}

/// Factored Thomas solve of `(I − β D₂) x = rhs` where `D₂` is the
/// second-difference matrix with mirror (reflecting) boundary rows. The
/// matrix is strictly diagonally dominant for `β > 0`, so no pivoting is
/// needed, and it depends only on `β` — the forward-sweep coefficients are
/// computed once and reused across time steps.
struct ReflectingTridiagonal {
    beta: f64,
    /// Normalized upper-diagonal after elimination, zero in the last row.
    upper: Vec<f64>,
    /// Reciprocal pivots of the forward sweep.
    inv_pivot: Vec<f64>,
}

impl ReflectingTridiagonal {
    fn new(beta: f64, n: usize) -> Self {
        let diag = 1.0 + 2.0 * beta;
        let off = -beta;
        let mut upper = vec![0.0; n];
        let mut inv_pivot = vec![0.0; n];
        // The two boundary rows carry a doubled off-diagonal.
        upper[0] = 2.0 * off / diag;
        inv_pivot[0] = 1.0 / diag;
        for i in 1..n {
            let lower = if i == n - 1 { 2.0 * off } else { off };
            let pivot = diag - lower * upper[i - 1];
            upper[i] = if i < n - 1 { off / pivot } else { 0.0 };
            inv_pivot[i] = 1.0 / pivot;
        }
        Self {
            beta,
            upper,
            inv_pivot,
        }
    }

    /// Runs the two sweeps; `sweep` is scratch of the same length.
    fn solve(&self, rhs: &[f64], sweep: &mut [f64], x: &mut [f64]) {
        let n = rhs.len();
        let off = -self.beta;
        sweep[0] = rhs[0] * self.inv_pivot[0];
        for i in 1..n - 1 {
            sweep[i] = (rhs[i] - off * sweep[i - 1]) * self.inv_pivot[i];
        }
        sweep[n - 1] = (rhs[n - 1] - 2.0 * off * sweep[n - 2]) * self.inv_pivot[n - 1];
        x[n - 1] = sweep[n - 1];
        for i in (0..n - 1).rev() {
            x[i] = sweep[i] - self.upper[i] * x[i + 1];
        }
    }
}

/// Undoes the change of variables: `V(t_n, x_i) = G(t_n, x_i + shift[n])`,
/// resampling each row by linear interpolation with constant extension.
///
/// # Errors
///
/// [`Error::ShapeMismatch`] when `shift` does not have one entry per time
/// node.
pub fn compose_shift(g: &Field, shift: &[f64]) -> Result<Field> {
    let grid = g.grid();
    if shift.len() != grid.nt() + 1 {
        return Err(Error::ShapeMismatch {
            what: "shift must have one entry per time node",
        });
    }
    let mut out = Field::zeros(grid);
    let mut row = vec![0.0; grid.nx()];
    for (n, &offset) in shift.iter().enumerate() {
        stencil::interpolate_shifted_into(g.slice(n), &grid, offset, &mut row);
        out.slice_mut(n).copy_from_slice(&row);
    }
    Ok(out)
}

/// Martingale density of a gradient-noise solution: `Ψ = ℓ ∂ₓV`.
///
/// # Errors
///
/// [`Error::GridMismatch`] when the loading lives on a different lattice.
pub fn gradient_noise(v: &Field, ell: &Process) -> Result<Field> {
    if ell.grid() != v.grid() {
        return Err(Error::GridMismatch {
            what: "gradient-noise loading",
        });
    }
    let grid = v.grid();
    let mut out = Field::zeros(grid);
    let mut gradient = vec![0.0; grid.nx()];
    for n in 0..=grid.nt() {
        stencil::derivative_into(v.slice(n), grid.dx(), 1, &mut gradient)?;
        let ell_n = ell.value(n);
        for (slot, &g) in out.slice_mut(n).iter_mut().zip(&gradient) {
            *slot = ell_n * g;
        }
    }
    Ok(out)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::grid::Grid;
    use approx::assert_relative_eq;

    fn constant_problem(grid: Grid, q: f64) -> HeatProblem {
        HeatProblem::new(
            vec![q; grid.nx()],
            Process::constant(grid, 1.0),
            Field::zeros(grid),
            Field::zeros(grid),
            vec![0.0; grid.nt() + 1],
        )
        .unwrap()
    }

    #[test]
    fn constant_data_is_a_fixed_point() {
        let grid = Grid::new(-2.0, 2.0, 41, 0.5, 50).unwrap();
        let g = constant_problem(grid, 1.0).solve().unwrap();
        for n in 0..=50 {
            for i in 0..41 {
                assert_relative_eq!(g.at(n, i), 1.0, epsilon = 1e-13);
            }
        }
    }

    #[test]
    fn gaussian_data_matches_the_closed_form() {
        // ∂ₜG = ½∂ₓₓG with G(0, x) = exp(−x²/2) spreads to
        // G(t, x) = exp(−x²/(2(1+t))) / sqrt(1+t).
        let grid = Grid::new(-8.0, 8.0, 401, 0.25, 4000).unwrap();
        let problem = HeatProblem::new(
            (0..grid.nx())
                .map(|i| libm::exp(-0.5 * grid.x(i) * grid.x(i)))
                .collect(),
            Process::constant(grid, 1.0),
            Field::zeros(grid),
            Field::zeros(grid),
            vec![0.0; grid.nt() + 1],
        )
        .unwrap();
        let g = problem.solve().unwrap();
        let t = 0.25;
        let err = grid
            .interior(crate::grid::DEFAULT_BUFFER_FRACTION)
            .map(|i| {
                let x = grid.x(i);
                let exact = libm::exp(-x * x / (2.0 * (1.0 + t))) / libm::sqrt(1.0 + t);
                (g.at(grid.nt(), i) - exact).abs()
            })
            .fold(0.0f64, f64::max);
        assert!(err <= 5e-4, "max interior error {err}");
    }

    #[test]
    fn constant_potential_discounts_the_heat_solution() {
        let grid = Grid::new(-8.0, 8.0, 401, 0.25, 4000).unwrap();
        let initial: Vec<f64> = (0..grid.nx())
            .map(|i| libm::exp(-0.5 * grid.x(i) * grid.x(i)))
            .collect();
        let sigma = Process::constant(grid, 1.0);
        let zeros = vec![0.0; grid.nt() + 1];
        let plain = HeatProblem::new(
            initial.clone(),
            sigma.clone(),
            Field::zeros(grid),
            Field::zeros(grid),
            zeros.clone(),
        )
        .unwrap()
        .solve()
        .unwrap();
        let discounted = HeatProblem::new(
            initial,
            sigma,
            Field::zeros(grid),
            Field::constant(grid, 1.0),
            zeros,
        )
        .unwrap()
        .solve()
        .unwrap();
        let t = 0.25;
        let err = grid
            .interior(crate::grid::DEFAULT_BUFFER_FRACTION)
            .map(|i| (discounted.at(grid.nt(), i) - libm::exp(-t) * plain.at(grid.nt(), i)).abs())
            .fold(0.0f64, f64::max);
        assert!(err <= 5e-4, "max interior error {err}");
    }

    #[test]
    fn pure_diffusion_conserves_trapezoid_mass() {
        let grid = Grid::new(-8.0, 8.0, 201, 0.5, 500).unwrap();
        let problem = HeatProblem::new(
            (0..grid.nx())
                .map(|i| libm::exp(-0.5 * grid.x(i) * grid.x(i)) + 0.1)
                .collect(),
            Process::constant(grid, 1.3),
            Field::zeros(grid),
            Field::zeros(grid),
            vec![0.0; grid.nt() + 1],
        )
        .unwrap();
        let g = problem.solve().unwrap();
        let mass0 = stencil::trapezoid(g.slice(0), grid.dx());
        for n in 1..=grid.nt() {
            let mass = stencil::trapezoid(g.slice(n), grid.dx());
            assert!(
                ((mass - mass0) / mass0).abs() <= 1e-10,
                "mass drifted to {mass} from {mass0} at step {n}"
            );
        }
    }

    #[test]
    fn space_error_decays_at_second_order() {
        let t = 0.25;
        let mut errs = Vec::new();
        for &nx in &[51usize, 101] {
            let grid = Grid::new(-8.0, 8.0, nx, t, 2000).unwrap();
            let problem = HeatProblem::new(
                (0..nx)
                    .map(|i| libm::exp(-0.5 * grid.x(i) * grid.x(i)))
                    .collect(),
                Process::constant(grid, 1.0),
                Field::zeros(grid),
                Field::zeros(grid),
                vec![0.0; grid.nt() + 1],
            )
            .unwrap();
            let g = problem.solve().unwrap();
            let err = grid
                .interior(crate::grid::DEFAULT_BUFFER_FRACTION)
                .map(|i| {
                    let x = grid.x(i);
                    let exact = libm::exp(-x * x / (2.0 * (1.0 + t))) / libm::sqrt(1.0 + t);
                    (g.at(grid.nt(), i) - exact).abs()
                })
                .fold(0.0f64, f64::max);
            errs.push(err);
        }
        let ratio = errs[0] / errs[1];
        assert!(ratio > 3.0, "refinement ratio {ratio}, errors {errs:?}");
    }

    #[test]
    fn invalid_problems_are_rejected_up_front() {
        let grid = Grid::new(0.0, 1.0, 11, 1.0, 10).unwrap();
        // Non-positive initial node.
        let mut initial = vec![1.0; 11];
        initial[4] = 0.0;
        let err = HeatProblem::new(
            initial,
            Process::constant(grid, 1.0),
            Field::zeros(grid),
            Field::zeros(grid),
            vec![0.0; 11],
        )
        .unwrap_err();
        assert!(matches!(
            err,
            Error::NonPositiveField {
                node: 4,
                step: 0,
                ..
            }
        ));
        // Advection too fast for the step size: dt = 0.1 > dx / |k| = 0.01.
        let err = HeatProblem::new(
            vec![1.0; 11],
            Process::constant(grid, 1.0),
            Field::constant(grid, 10.0),
            Field::zeros(grid),
            vec![0.0; 11],
        )
        .unwrap_err();
        assert!(matches!(err, Error::StabilityBound { .. }));
        // Shift sampled on the wrong lattice.
        let err = HeatProblem::new(
            vec![1.0; 11],
            Process::constant(grid, 1.0),
            Field::zeros(grid),
            Field::zeros(grid),
            vec![0.0; 3],
        )
        .unwrap_err();
        assert!(matches!(err, Error::ShapeMismatch { .. }));
    }

    #[test]
    fn a_violent_potential_loses_positivity_with_a_named_node() {
        let grid = Grid::new(0.0, 1.0, 11, 1.0, 10).unwrap();
        let problem = HeatProblem::new(
            vec![1.0; 11],
            Process::constant(grid, 1.0),
            Field::zeros(grid),
            Field::constant(grid, 1000.0),
            vec![0.0; 11],
        )
        .unwrap();
        assert!(matches!(
            problem.solve(),
            Err(Error::PositivityLost { step: 1, .. })
        ));
    }

    #[test]
    fn compose_shift_resamples_rows() {
        let grid = Grid::new(-2.0, 2.0, 81, 1.0, 2).unwrap();
        let g = Field::from_fn(grid, |_, x| libm::exp(x));
        // Zero shift is the identity up to resampling rounding (the lattice
        // spacing is not dyadic, so interpolation weights carry ulps).
        let same = compose_shift(&g, &[0.0; 3]).unwrap();
        for (a, b) in same.values().iter().zip(g.values()) {
            assert_relative_eq!(a, b, max_relative = 1e-13);
        }
        // A constant shift multiplies the exponential inside the lattice.
        let shifted = compose_shift(&g, &[0.0, 0.5, 0.5]).unwrap();
        for i in 0..81 {
            let x = grid.x(i);
            if x + 0.5 <= 2.0 {
                assert_relative_eq!(shifted.at(1, i), libm::exp(x + 0.5), max_relative = 2e-4);
            }
        }
        assert!(compose_shift(&g, &[0.0; 2]).is_err());
    }

    #[test]
    fn gradient_noise_scales_the_slope() {
        let grid = Grid::new(-1.0, 1.0, 401, 1.0, 2).unwrap();
        let v = Field::from_fn(grid, |_, x| libm::exp(x));
        let zero = gradient_noise(&v, &Process::constant(grid, 0.0)).unwrap();
        assert!(zero.values().iter().all(|&p| p == 0.0));
        let psi = gradient_noise(&v, &Process::constant(grid, -2.0)).unwrap();
        for i in 0..401 {
            assert_relative_eq!(
                psi.at(1, i),
                -2.0 * libm::exp(grid.x(i)),
                max_relative = 1e-4
            );
        }
    }
}
