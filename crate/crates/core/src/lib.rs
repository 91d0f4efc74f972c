//! Pathwise numerics for viscous Burgers equations driven by Brownian
//! gradient noise, linearized through logarithmic-derivative (Cole-Hopf type)
//! transformations.
//!
//! # Overview
//!
//! The crate works with random fields `F(t, x, ω)` sampled one noise
//! realization (one `ω`) at a time on a shared uniform space-time lattice.
//! Each field may carry its semimartingale decomposition
//!
//! ```text
//! F(t,x) = F(0,x) + ∫₀ᵗ A_F(s,x) ds + ∫₀ᵗ Ψ_F(s,x) dW(s),
//! ```
//!
//! split into a finite-variation density `A_F` (here called the *drift part*)
//! and a martingale density `Ψ_F` (the *vol part*), optionally together with
//! the decomposition of `Ψ_F` itself (the *second level*: `A_{Ψ_F}`, `Ψ_{Ψ_F}`).
//! On top of that representation the crate provides:
//!
//! - reproducible counter-based Brownian paths and Itô integrals ([`rng`],
//!   [`brownian`]),
//! - a pathwise Crank-Nicolson/IMEX solver for the linear heat-type equation
//!   produced by the forward linearization, plus the noise-shift change of
//!   frame ([`heat`]),
//! - an explicit Euler-Maruyama solver for the forward Burgers equation with
//!   gradient noise `ℓ(t)U_x dW` and the coefficient bookkeeping that makes it
//!   linearizable ([`coeffs`], [`burgers`]),
//! - the classical and generalized Cole-Hopf maps `U = -∂ₓ ln V - Ψ_V/(σV)`
//!   together with algebraic residual checkers for every constraint equation
//!   the transform must satisfy ([`cole_hopf`], [`residuals`]),
//! - two exactly solvable backward families and their pointwise 2×2
//!   coefficient solves ([`families`]),
//! - FBSDE triplets `(X, Y, Z)` sampled along the forward state, BSDE
//!   residuals, and Monte Carlo Feynman-Kac estimators for the linearized
//!   equations ([`fbsde`], [`feynman_kac`]).
//!
//! # Conventions
//!
//! - Index `[n][i]` means time node `t_n = n·dt`, space node `x_i = x_min + i·dx`;
//!   fields are stored row-major with the time index outermost.
//! - Itô integrals and one-step residuals evaluate integrands at the *left*
//!   endpoint of each step.
//! - Truncation to a finite domain uses homogeneous Neumann boundaries for
//!   solvers and constant extension for shifted sampling; quantitative checks
//!   are reported on an interior window that excludes a buffer
//!   ([`grid::DEFAULT_BUFFER_FRACTION`]) on each side.
//! - The crate is `no_std` (with `alloc`); all transcendentals come from
//!   [`libm`], so results are bit-reproducible across platforms with IEEE-754
//!   doubles.
//!
//! # Example
//!
//! Sample a Brownian path and integrate a constant against it:
//!
//! ```
//! use sburgers_core::{brownian::BrownianPath, grid::Grid};
//!
//! let grid = Grid::new(-1.0, 1.0, 11, 1.0, 100).unwrap();
//! let path = BrownianPath::sample(42, 0, grid);
//! let ito = sburgers_core::brownian::ito_integral(&[2.0; 101], &path).unwrap();
//! assert!((ito[100] - 2.0 * path.w()[100]).abs() < 1e-12);
//! ```

#![no_std]
#![forbid(unsafe_code)]

extern crate alloc;
#[cfg(test)]
extern crate std;

pub mod brownian;
pub mod burgers;
pub mod coeffs;
pub mod cole_hopf;
pub mod error;
pub mod families;
pub mod fbsde;
pub mod feynman_kac;
pub mod field;
pub mod grid;
pub mod heat;
pub mod residuals;
pub mod rng;
pub mod stencil;

pub use error::{Error, Result};
pub use field::{Field, Process, SemimartingaleField};
pub use grid::Grid;
