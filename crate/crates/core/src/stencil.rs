//! Finite-difference stencils, quadrature, and lattice interpolation.
//!
//! Everything here is second-order accurate on a uniform lattice: central
//! stencils in the interior, one-sided rows of matching order at the two
//! boundary nodes, trapezoid quadrature for antiderivatives, and piecewise
//! linear interpolation with constant extension outside the lattice.

use crate::error::{Error, Result};
use crate::field::Field;
use crate::grid::Grid;
use alloc::vec;
use alloc::vec::Vec;

/// Differentiates a row of samples with spacing `dx`.
///
/// `order` selects the first, second, or third spatial derivative. All three
/// use second-order central stencils in the interior and second-order
/// one-sided rows at the edges, so the result converges at `O(dx²)`
/// uniformly.
///
/// # Errors
///
/// - [`Error::InvalidParameter`] for an unsupported order or non-positive
///   spacing;
/// - [`Error::GridTooSmall`] when the row is too short for the one-sided
///   rows (`order + 2` interior points minimum; the third derivative needs
///   five).
pub fn derivative(values: &[f64], dx: f64, order: u8) -> Result<Vec<f64>> {
    let mut out = vec![0.0; values.len()];
    derivative_into(values, dx, order, &mut out)?;
    Ok(out)
}

/// [`derivative`] writing into a caller-owned buffer, for hot loops that
/// differentiate row after row without reallocating.
///
/// # Errors
///
/// The [`derivative`] errors, plus [`Error::ShapeMismatch`] when the buffer
/// length differs from the input length.
pub fn derivative_into(values: &[f64], dx: f64, order: u8, out: &mut [f64]) -> Result<()> {
    if !(dx.is_finite() && dx > 0.0) {
        return Err(Error::InvalidParameter {
            what: "dx",
            reason: "spacing must be finite and positive",
        });
    }
    let n = values.len();
    if out.len() != n {
        return Err(Error::ShapeMismatch {
            what: "derivative buffer must match the input length",
        });
    }
    let min = match order {
        1 => 3,
        2 => 4,
        3 => 5,
        _ => {
            return Err(Error::InvalidParameter {
                what: "order",
                reason: "supported derivative orders are 1, 2, and 3",
            })
        }
    };
    if n < min {
        return Err(Error::GridTooSmall {
            what: "derivative stencil",
            min,
            got: n,
        });
    }
    let f = values;
    match order {
        1 => {
            let h2 = 2.0 * dx;
            out[0] = (-3.0 * f[0] + 4.0 * f[1] - f[2]) / h2;
            for i in 1..n - 1 {
                out[i] = (f[i + 1] - f[i - 1]) / h2;
            }
            out[n - 1] = (3.0 * f[n - 1] - 4.0 * f[n - 2] + f[n - 3]) / h2;
        }
        2 => {
            let h2 = dx * dx;
            out[0] = (2.0 * f[0] - 5.0 * f[1] + 4.0 * f[2] - f[3]) / h2;
            for i in 1..n - 1 {
                out[i] = (f[i + 1] - 2.0 * f[i] + f[i - 1]) / h2;
            }
            out[n - 1] = (2.0 * f[n - 1] - 5.0 * f[n - 2] + 4.0 * f[n - 3] - f[n - 4]) / h2;
        }
        3 => {
            let h3 = 2.0 * dx * dx * dx;
            out[0] = (-5.0 * f[0] + 18.0 * f[1] - 24.0 * f[2] + 14.0 * f[3] - 3.0 * f[4]) / h3;
            out[1] = (-3.0 * f[0] + 10.0 * f[1] - 12.0 * f[2] + 6.0 * f[3] - f[4]) / h3;
            for i in 2..n - 2 {
                out[i] = (-f[i - 2] + 2.0 * f[i - 1] - 2.0 * f[i + 1] + f[i + 2]) / h3;
            }
            out[n - 2] = (3.0 * f[n - 1] - 10.0 * f[n - 2] + 12.0 * f[n - 3] - 6.0 * f[n - 4]
                + f[n - 5])
                / h3;
            out[n - 1] = (5.0 * f[n - 1] - 18.0 * f[n - 2] + 24.0 * f[n - 3] - 14.0 * f[n - 4]
                + 3.0 * f[n - 5])
                / h3;
        }
        _ => unreachable!(),
    }
    Ok(())
}

/// Differentiates every time slice of a field in space.
///
/// # Errors
///
/// Propagates [`derivative`] errors.
pub fn central_derivative(field: &Field, order: u8) -> Result<Field> {
    let grid = field.grid();
    let mut out = Field::zeros(grid);
    for n in 0..=grid.nt() {
        let row = derivative(field.slice(n), grid.dx(), order)?;
        out.slice_mut(n).copy_from_slice(&row);
    }
    Ok(out)
}

/// Cumulative trapezoid antiderivative gauged to zero at the first node:
/// `F[i] = ∫_{x_0}^{x_i} f`, so `F[0] = 0`.
pub fn cumulative_antiderivative(values: &[f64], dx: f64) -> Vec<f64> {
    let mut out = Vec::with_capacity(values.len());
    let mut acc = 0.0;
    out.push(0.0);
    for pair in values.windows(2) {
        acc += 0.5 * dx * (pair[0] + pair[1]);
        out.push(acc);
    }
    out
}

/// Trapezoid quadrature over the whole row.
pub fn trapezoid(values: &[f64], dx: f64) -> f64 {
    if values.len() < 2 {
        return 0.0;
    }
    let interior: f64 = values[1..values.len() - 1].iter().sum();
    dx * (0.5 * (values[0] + values[values.len() - 1]) + interior)
}

/// Samples a lattice row at an arbitrary point by linear interpolation,
/// extending constantly outside `[x_min, x_max]`.
pub fn sample_shifted(values: &[f64], grid: &Grid, x: f64) -> f64 {
    let n = values.len();
    if x <= grid.x_min() {
        return values[0];
    }
    if x >= grid.x_max() {
        return values[n - 1];
    }
    let s = (x - grid.x_min()) / grid.dx();
    let i = (s as usize).min(n - 2);
    let frac = s - i as f64;
    values[i] * (1.0 - frac) + values[i + 1] * frac
}

/// Evaluates `f(x + shift)` at every lattice node, i.e. resamples the row on
/// a shifted lattice with constant extension at the ends.
pub fn interpolate_shifted(values: &[f64], grid: &Grid, shift: f64) -> Vec<f64> {
    let mut out = vec![0.0; values.len()];
    interpolate_shifted_into(values, grid, shift, &mut out);
    out
}

/// [`interpolate_shifted`] writing into a caller-owned buffer, for hot loops
/// that resample row after row without reallocating. The buffer and input
/// lengths must agree.
pub fn interpolate_shifted_into(values: &[f64], grid: &Grid, shift: f64, out: &mut [f64]) {
    assert_eq!(values.len(), out.len(), "resampling buffer length");
    for (i, slot) in out.iter_mut().enumerate() {
        *slot = sample_shifted(values, grid, grid.x(i) + shift);
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_relative_eq;

    #[test]
    fn first_derivative_is_exact_on_quadratics() {
        let dx = 0.1;
        let xs: Vec<f64> = (0..11).map(|i| i as f64 * dx).collect();
        let f: Vec<f64> = xs.iter().map(|x| 3.0 * x * x - 2.0 * x + 1.0).collect();
        let d = derivative(&f, dx, 1).unwrap();
        for (i, &x) in xs.iter().enumerate() {
            assert_relative_eq!(d[i], 6.0 * x - 2.0, max_relative = 1e-12, epsilon = 1e-12);
        }
    }

    #[test]
    fn second_derivative_is_exact_on_cubics() {
        let dx = 0.25;
        let xs: Vec<f64> = (0..9).map(|i| -1.0 + i as f64 * dx).collect();
        let f: Vec<f64> = xs.iter().map(|x| x * x * x).collect();
        let d = derivative(&f, dx, 2).unwrap();
        for (i, &x) in xs.iter().enumerate() {
            assert_relative_eq!(d[i], 6.0 * x, max_relative = 1e-11, epsilon = 1e-11);
        }
    }

    #[test]
    fn third_derivative_is_exact_on_quartics() {
        let dx = 0.2;
        let xs: Vec<f64> = (0..11).map(|i| -1.0 + i as f64 * dx).collect();
        let f: Vec<f64> = xs.iter().map(|x| x * x * x * x).collect();
        let d = derivative(&f, dx, 3).unwrap();
        for (i, &x) in xs.iter().enumerate() {
            assert_relative_eq!(d[i], 24.0 * x, max_relative = 1e-9, epsilon = 1e-9);
        }
    }

    #[test]
    fn derivatives_converge_at_second_order_on_sine() {
        let mut errs = Vec::new();
        for &nx in &[101usize, 201, 401] {
            let dx = 2.0 / (nx - 1) as f64;
            let xs: Vec<f64> = (0..nx).map(|i| -1.0 + i as f64 * dx).collect();
            let f: Vec<f64> = xs.iter().map(|x| libm::sin(3.0 * x)).collect();
            let d = derivative(&f, dx, 1).unwrap();
            let err = xs
                .iter()
                .enumerate()
                .map(|(i, &x)| (d[i] - 3.0 * libm::cos(3.0 * x)).abs())
                .fold(0.0f64, f64::max);
            errs.push(err);
        }
        // Second order: the error should shrink ~4x per halving of dx.
        assert!(errs[0] / errs[1] > 3.5, "ratio {}", errs[0] / errs[1]);
        assert!(errs[1] / errs[2] > 3.5, "ratio {}", errs[1] / errs[2]);
    }

    #[test]
    fn short_rows_and_bad_orders_are_rejected() {
        assert!(matches!(
            derivative(&[1.0, 2.0], 0.1, 1),
            Err(Error::GridTooSmall { min: 3, got: 2, .. })
        ));
        assert!(matches!(
            derivative(&[1.0; 4], 0.1, 3),
            Err(Error::GridTooSmall { min: 5, .. })
        ));
        assert!(matches!(
            derivative(&[1.0; 8], 0.1, 4),
            Err(Error::InvalidParameter { what: "order", .. })
        ));
        assert!(derivative(&[1.0; 8], -0.1, 1).is_err());
    }

    #[test]
    fn antiderivative_is_exact_on_affine_rows() {
        let dx = 0.125;
        let xs: Vec<f64> = (0..9).map(|i| i as f64 * dx).collect();
        let f: Vec<f64> = xs.iter().map(|x| 3.0 * x + 0.5).collect();
        let anti = cumulative_antiderivative(&f, dx);
        assert_eq!(anti[0], 0.0);
        for (i, &x) in xs.iter().enumerate() {
            assert_relative_eq!(anti[i], 1.5 * x * x + 0.5 * x, epsilon = 1e-14);
        }
    }

    #[test]
    fn antiderivative_converges_on_smooth_rows() {
        let nx = 1001;
        let dx = 1.0 / (nx - 1) as f64;
        let f: Vec<f64> = (0..nx).map(|i| 2.0 * i as f64 * dx).collect();
        let anti = cumulative_antiderivative(&f, dx);
        let err = (0..nx)
            .map(|i| {
                let x = i as f64 * dx;
                (anti[i] - x * x).abs()
            })
            .fold(0.0f64, f64::max);
        assert!(err <= 1e-6, "max error {err}");
    }

    #[test]
    fn derivative_recovers_antiderivative_integrand() {
        let nx = 401;
        let dx = 2.0 / (nx - 1) as f64;
        let f: Vec<f64> = (0..nx)
            .map(|i| libm::cos(2.0 * (-1.0 + i as f64 * dx)))
            .collect();
        let anti = cumulative_antiderivative(&f, dx);
        let back = derivative(&anti, dx, 1).unwrap();
        let err = f
            .iter()
            .zip(&back)
            .map(|(a, b)| (a - b).abs())
            .fold(0.0f64, f64::max);
        assert!(err < 5e-4, "max error {err}");
    }

    #[test]
    fn trapezoid_matches_closed_forms() {
        let dx = 0.01;
        let f: Vec<f64> = (0..101).map(|i| i as f64 * dx).collect();
        assert_relative_eq!(trapezoid(&f, dx), 0.5, epsilon = 1e-12);
        assert_eq!(trapezoid(&[1.0], dx), 0.0);
    }

    #[test]
    fn zero_shift_is_the_identity() {
        let grid = Grid::new(-1.0, 1.0, 21, 1.0, 1).unwrap();
        let f: Vec<f64> = (0..21).map(|i| libm::sin(grid.x(i))).collect();
        let shifted = interpolate_shifted(&f, &grid, 0.0);
        for (a, b) in f.iter().zip(&shifted) {
            assert_relative_eq!(a, b, epsilon = 1e-14);
        }
    }

    #[test]
    fn lattice_shift_moves_rows_exactly() {
        let grid = Grid::new(0.0, 1.0, 11, 1.0, 1).unwrap();
        let f: Vec<f64> = (0..11).map(|i| (i * i) as f64).collect();
        let shifted = interpolate_shifted(&f, &grid, grid.dx());
        for i in 0..10 {
            assert_relative_eq!(shifted[i], f[i + 1], epsilon = 1e-12);
        }
        // Constant extension beyond the right edge.
        assert_relative_eq!(shifted[10], f[10], epsilon = 1e-12);
    }

    #[test]
    fn affine_rows_interpolate_exactly_inside() {
        let grid = Grid::new(-2.0, 2.0, 17, 1.0, 1).unwrap();
        let f: Vec<f64> = (0..17).map(|i| 3.0 * (grid.x(i) + 0.37)).collect();
        for &x in &[-1.9, -0.33, 0.0, 0.71, 1.95] {
            assert_relative_eq!(
                sample_shifted(&f, &grid, x),
                3.0 * (x + 0.37),
                epsilon = 1e-12
            );
        }
        // Outside the lattice the extension is constant.
        assert_relative_eq!(sample_shifted(&f, &grid, 5.0), f[16], epsilon = 1e-14);
        assert_relative_eq!(sample_shifted(&f, &grid, -5.0), f[0], epsilon = 1e-14);
    }
}
