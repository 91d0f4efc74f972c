//! Coefficient sets for the quadratic-convection equations and their
//! linearizations.
//!
//! Both pipelines share one bundle of coefficient data, but derive it
//! differently:
//!
//! - the **forward** constructor starts from the primitive inputs
//!   `(σ, b, m, f, c̄)` and derives the noise loading `ℓ = −2σ`, the
//!   zeroth-order coefficient `e = ∂ₓb + ℓ ∂ₓm`, the linearized advection
//!   `k = b + ℓ m`, and the linearized potential
//!   `c(t, x) = ∫_{x_min}^x f(t, ξ) dξ + c̄(t)`;
//! - the **backward** constructor starts from `(σ, m, c)` and derives
//!   `e = σ ∂ₓm`, the source `f = −∂ₓc`, and the gauge `c̄(t) = c(t, x_min)`
//!   (for the backward convention the potential is
//!   `c = −∫ f dx + c̄`, hence the sign of the derivative).
//!
//! Of the two roots the linearization admits for the noise loading, only
//! `ℓ = −2σ` keeps the effective diffusion positive; the other root is
//! rejected by [`validate_noise_loading`].

use crate::error::{Error, Result};
use crate::field::{Field, Process};
use crate::grid::Grid;
use crate::stencil;
use alloc::vec::Vec;

/// Smallest admissible volatility magnitude; transforms divide by `σ`.
pub const VOLATILITY_FLOOR: f64 = 1e-12;

/// Which pipeline a coefficient set was derived for.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum CoefficientKind {
    /// Initial-value convection equation driven by `ℓ ∂ₓU dW`.
    Forward,
    /// Terminal-value equation with free martingale part.
    Backward,
}

/// Coefficients of one equation instance, primitive and derived together.
#[derive(Clone, Debug)]
pub struct CoefficientSet {
    kind: CoefficientKind,
    sigma: Process,
    ell: Process,
    c_bar: Process,
    b: Field,
    m: Field,
    f: Field,
    e: Field,
    c: Field,
    k: Field,
}

impl CoefficientSet {
    /// Builds a forward coefficient set from the primitive inputs.
    ///
    /// # Errors
    ///
    /// - [`Error::GridMismatch`] when the inputs disagree on the lattice;
    /// - [`Error::DegenerateVolatility`] when `σ` comes too close to zero;
    /// - [`Error::NonFinite`] when a derived field fails to be finite.
    pub fn forward(sigma: Process, b: Field, m: Field, f: Field, c_bar: Process) -> Result<Self> {
        let grid = sigma.grid();
        if b.grid() != grid || m.grid() != grid || f.grid() != grid || c_bar.grid() != grid {
            return Err(Error::GridMismatch {
                what: "forward coefficient inputs",
            });
        }
        sigma.ensure_nonzero(VOLATILITY_FLOOR)?;
        let ell = sigma.scale(-2.0);

        let b_x = stencil::central_derivative(&b, 1)?;
        let m_x = stencil::central_derivative(&m, 1)?;
        let mut e = Field::zeros(grid);
        let mut k = Field::zeros(grid);
        let mut c = Field::zeros(grid);
        for n in 0..=grid.nt() {
            let ell_n = ell.value(n);
            let anti = stencil::cumulative_antiderivative(f.slice(n), grid.dx());
            let c_bar_n = c_bar.value(n);
            for (i, &anti_i) in anti.iter().enumerate() {
                *e.at_mut(n, i) = b_x.at(n, i) + ell_n * m_x.at(n, i);
                *k.at_mut(n, i) = b.at(n, i) + ell_n * m.at(n, i);
                *c.at_mut(n, i) = anti_i + c_bar_n;
            }
        }
        e.ensure_finite("zeroth-order coefficient")?;
        c.ensure_finite("linearized potential")?;
        k.ensure_finite("linearized advection")?;
        Ok(Self {
            kind: CoefficientKind::Forward,
            sigma,
            ell,
            c_bar,
            b,
            m,
            f,
            e,
            c,
            k,
        })
    }

    /// Builds a backward coefficient set from `(σ, m, c)`.
    ///
    /// The noise loading and linearized advection are forward-pipeline
    /// quantities; they are filled by the same formulas (with `b ≡ 0`) for
    /// uniformity, and the backward pipeline never reads them.
    ///
    /// # Errors
    ///
    /// Same conditions as [`CoefficientSet::forward`].
    pub fn backward(sigma: Process, m: Field, c: Field) -> Result<Self> {
        let grid = sigma.grid();
        if m.grid() != grid || c.grid() != grid {
            return Err(Error::GridMismatch {
                what: "backward coefficient inputs",
            });
        }
        sigma.ensure_nonzero(VOLATILITY_FLOOR)?;
        let ell = sigma.scale(-2.0);
        let b = Field::zeros(grid);

        let m_x = stencil::central_derivative(&m, 1)?;
        let c_x = stencil::central_derivative(&c, 1)?;
        let mut e = Field::zeros(grid);
        let mut k = Field::zeros(grid);
        let mut f = Field::zeros(grid);
        let mut c_bar_values = Vec::with_capacity(grid.nt() + 1);
        for n in 0..=grid.nt() {
            let sigma_n = sigma.value(n);
            let ell_n = ell.value(n);
            c_bar_values.push(c.at(n, 0));
            for i in 0..grid.nx() {
                *e.at_mut(n, i) = sigma_n * m_x.at(n, i);
                *f.at_mut(n, i) = -c_x.at(n, i);
                *k.at_mut(n, i) = ell_n * m.at(n, i);
            }
        }
        e.ensure_finite("zeroth-order coefficient")?;
        f.ensure_finite("source term")?;
        let c_bar = Process::from_values(grid, c_bar_values)?;
        Ok(Self {
            kind: CoefficientKind::Backward,
            sigma,
            ell,
            c_bar,
            b,
            m,
            f,
            e,
            c,
            k,
        })
    }

    /// Which constructor built this set.
    pub fn kind(&self) -> CoefficientKind {
        self.kind
    }

    /// The shared lattice.
    pub fn grid(&self) -> Grid {
        self.sigma.grid()
    }

    /// Volatility process `σ`.
    pub fn sigma(&self) -> &Process {
        &self.sigma
    }

    /// Squared volatility at time node `n`.
    pub fn sigma_sq(&self, n: usize) -> f64 {
        let s = self.sigma.value(n);
        s * s
    }

    /// Gradient-noise loading `ℓ = −2σ`.
    pub fn ell(&self) -> &Process {
        &self.ell
    }

    /// Spatially constant part of the potential.
    pub fn c_bar(&self) -> &Process {
        &self.c_bar
    }

    /// First-order coefficient `b`.
    pub fn b(&self) -> &Field {
        &self.b
    }

    /// First-order coefficient `m` (also the loading on the martingale part).
    pub fn m(&self) -> &Field {
        &self.m
    }

    /// Source term `f`.
    pub fn f(&self) -> &Field {
        &self.f
    }

    /// Zeroth-order coefficient `e`.
    pub fn e(&self) -> &Field {
        &self.e
    }

    /// Linearized potential `c`.
    pub fn c(&self) -> &Field {
        &self.c
    }

    /// Linearized advection `k = b + ℓ m` (forward pipeline only).
    pub fn k(&self) -> &Field {
        &self.k
    }

    /// Loading on the martingale part in the linear terminal-value equation;
    /// coincides with `m`.
    pub fn d(&self) -> &Field {
        &self.m
    }
}

/// Checks that a noise loading sits on the admissible root `ℓ = −2σ`.
///
/// # Errors
///
/// - [`Error::ShapeMismatch`] when the processes have different lengths;
/// - [`Error::UnsupportedNoiseBranch`] naming the first step where the
///   loading leaves the admissible root (in particular, the root `ℓ = σ`
///   of the same quadratic, which makes the linearized diffusion
///   ill-posed, is rejected).
pub fn validate_noise_loading(sigma: &Process, ell: &Process) -> Result<()> {
    if sigma.len() != ell.len() {
        return Err(Error::ShapeMismatch {
            what: "noise loading must share the volatility lattice",
        });
    }
    for n in 0..sigma.len() {
        let expected = -2.0 * sigma.value(n);
        let got = ell.value(n);
        if (got - expected).abs() > 1e-10 * (1.0 + expected.abs()) {
            return Err(Error::UnsupportedNoiseBranch {
                step: n,
                ell: got,
                expected,
            });
        }
    }
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_relative_eq;

    fn grid() -> Grid {
        Grid::new(0.0, 1.0, 11, 0.5, 4).unwrap()
    }

    #[test]
    fn forward_derives_the_admissible_noise_loading() {
        let g = grid();
        let set = CoefficientSet::forward(
            Process::constant(g, 1.0),
            Field::zeros(g),
            Field::zeros(g),
            Field::zeros(g),
            Process::constant(g, 0.0),
        )
        .unwrap();
        assert_eq!(set.kind(), CoefficientKind::Forward);
        for n in 0..=g.nt() {
            assert_relative_eq!(set.ell().value(n), -2.0, epsilon = 1e-15);
            assert_relative_eq!(set.sigma_sq(n), 1.0, epsilon = 1e-15);
        }
        validate_noise_loading(set.sigma(), set.ell()).unwrap();
    }

    #[test]
    fn forward_zeroth_order_coefficient_on_affine_inputs() {
        // b ≡ 0, m = x, σ ≡ 1: e = ℓ ∂ₓm = −2 and k = −2x, exactly
        // (the stencils are exact on affine rows).
        let g = grid();
        let set = CoefficientSet::forward(
            Process::constant(g, 1.0),
            Field::zeros(g),
            Field::from_fn(g, |_, x| x),
            Field::zeros(g),
            Process::constant(g, 0.0),
        )
        .unwrap();
        for n in 0..=g.nt() {
            for i in 0..g.nx() {
                assert_relative_eq!(set.e().at(n, i), -2.0, epsilon = 1e-12);
                assert_relative_eq!(set.k().at(n, i), -2.0 * g.x(i), epsilon = 1e-12);
            }
        }
    }

    #[test]
    fn forward_potential_integrates_the_source() {
        // f = 2x on [0, 1] with c̄ = 0.25: c = x² + 0.25, exactly
        // (trapezoid quadrature is exact on affine integrands).
        let g = grid();
        let set = CoefficientSet::forward(
            Process::constant(g, 1.0),
            Field::zeros(g),
            Field::zeros(g),
            Field::from_fn(g, |_, x| 2.0 * x),
            Process::constant(g, 0.25),
        )
        .unwrap();
        for i in 0..g.nx() {
            let x = g.x(i);
            assert_relative_eq!(set.c().at(0, i), x * x + 0.25, epsilon = 1e-12);
        }
        // Zero source and gauge give an identically zero potential.
        let trivial = CoefficientSet::forward(
            Process::constant(g, 1.0),
            Field::zeros(g),
            Field::zeros(g),
            Field::zeros(g),
            Process::constant(g, 0.0),
        )
        .unwrap();
        assert!(trivial.c().values().iter().all(|&v| v == 0.0));
    }

    #[test]
    fn backward_derivation_matches_hand_values() {
        // m = x, c = x² with σ ≡ 2 on [0, 1]:
        // e = σ ∂ₓm = 2, f = −∂ₓc = −2x, c̄ = c(·, 0) = 0, d = m.
        let g = grid();
        let set = CoefficientSet::backward(
            Process::constant(g, 2.0),
            Field::from_fn(g, |_, x| x),
            Field::from_fn(g, |_, x| x * x),
        )
        .unwrap();
        assert_eq!(set.kind(), CoefficientKind::Backward);
        for n in 0..=g.nt() {
            assert_relative_eq!(set.c_bar().value(n), 0.0, epsilon = 1e-12);
            for i in 0..g.nx() {
                assert_relative_eq!(set.e().at(n, i), 2.0, epsilon = 1e-12);
                assert_relative_eq!(set.f().at(n, i), -2.0 * g.x(i), epsilon = 1e-10);
                assert_relative_eq!(set.d().at(n, i), g.x(i), epsilon = 1e-15);
            }
        }
    }

    #[test]
    fn degenerate_volatility_is_rejected() {
        let g = grid();
        let err = CoefficientSet::forward(
            Process::constant(g, 0.0),
            Field::zeros(g),
            Field::zeros(g),
            Field::zeros(g),
            Process::constant(g, 0.0),
        )
        .unwrap_err();
        assert!(matches!(err, Error::DegenerateVolatility { step: 0, .. }));
    }

    #[test]
    fn grid_mismatch_is_rejected() {
        let g = grid();
        let other = Grid::new(0.0, 1.0, 7, 0.5, 4).unwrap();
        let err = CoefficientSet::forward(
            Process::constant(g, 1.0),
            Field::zeros(other),
            Field::zeros(g),
            Field::zeros(g),
            Process::constant(g, 0.0),
        )
        .unwrap_err();
        assert!(matches!(err, Error::GridMismatch { .. }));
    }

    #[test]
    fn the_other_noise_root_is_refused() {
        let g = grid();
        let sigma = Process::constant(g, 1.5);
        // ℓ = +σ solves the same quadratic but breaks well-posedness.
        let wrong = sigma.clone();
        let err = validate_noise_loading(&sigma, &wrong).unwrap_err();
        assert_eq!(
            err,
            Error::UnsupportedNoiseBranch {
                step: 0,
                ell: 1.5,
                expected: -3.0
            }
        );
        // The admissible root passes for any σ.
        validate_noise_loading(&sigma, &sigma.scale(-2.0)).unwrap();
    }
}
