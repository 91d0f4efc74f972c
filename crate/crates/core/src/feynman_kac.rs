//! Monte Carlo stochastic-representation estimators for the linear
//! equations, with deterministic counter-based sampling.
//!
//! Three estimators are provided:
//!
//! - [`forward_estimate`]: for constant coefficients `(σ, k, c̄)` the
//!   shifted forward solution and its gradient are plain Gaussian averages
//!
//!   ```text
//!   G(t, x)   = e^{−c̄ t} E[ q(x + k t + σ√t ζ) ],     ζ ~ N(0, 1),
//!   ∂ₓG(t, x) = e^{−c̄ t} E[ q'(x + k t + σ√t ζ) ],
//!   ```
//!
//!   returned together with the transformed value `−∂ₓG/G`;
//!
//! - [`backward_value`]: the drift-free backward value
//!   `y(t, x) = E[ q(x_T, w_T) e^{−∫ c(s, x_s) ds} ]` along simulated
//!   states `dx = σ(s) dW`, where the terminal data may depend on the
//!   accumulated driving noise;
//!
//! - [`backward_control`]: the matching control estimator, whose samples
//!   combine a discounted terminal part `−σ(T) p(x_T, w_T) q(x_T, w_T)`
//!   with a pathwise source integral that needs the value function along
//!   the path — supplied either in closed form or by nested Monte Carlo
//!   on reserved sample streams.
//!
//! Every sample `i` draws from its own counter stream (`stream = i`), so
//! estimates are reproducible bit for bit and embarrassingly parallel in
//! principle; nested estimates use streams offset by
//! [`NESTED_STREAM_OFFSET`] to stay disjoint from outer ones.

use crate::error::{Error, Result};
use crate::field::{Field, Process};
use crate::grid::Grid;
use crate::rng::CounterRng;
use crate::stencil;

/// Stream offset reserving the upper half of the stream space for nested
/// (inner) estimates.
pub const NESTED_STREAM_OFFSET: u64 = 1 << 63;

/// A Monte Carlo estimate with its standard error.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct McEstimate {
    /// Sample mean.
    pub value: f64,
    /// Standard error of the mean.
    pub std_error: f64,
    /// Number of samples averaged.
    pub n_samples: u64,
}

/// How [`backward_control`] evaluates the value function inside its source
/// integral.
pub enum InnerValue<'a> {
    /// A closed-form value function of `(step, state, accumulated noise)`.
    ClosedForm(&'a dyn Fn(usize, f64, f64) -> f64),
    /// Nested Monte Carlo with this many inner samples per evaluation,
    /// drawn from streams above [`NESTED_STREAM_OFFSET`].
    Nested {
        /// Inner samples per evaluation.
        n_samples: u64,
    },
}

/// Online mean/variance accumulator (Welford), deterministic in sample
/// order.
struct RunningMoments {
    n: u64,
    mean: f64,
    m2: f64,
}

impl RunningMoments {
    fn new() -> Self {
        Self {
            n: 0,
            mean: 0.0,
            m2: 0.0,
        }
    }

    fn push(&mut self, x: f64) {
        self.n += 1;
        let delta = x - self.mean;
        self.mean += delta / self.n as f64;
        self.m2 += delta * (x - self.mean);
    }

    fn estimate(&self) -> McEstimate {
        let variance = if self.n > 1 {
            self.m2 / (self.n - 1) as f64
        } else {
            0.0
        };
        McEstimate {
            value: self.mean,
            std_error: libm::sqrt(variance / self.n as f64),
            n_samples: self.n,
        }
    }

    fn scaled(&self, factor: f64) -> McEstimate {
        let base = self.estimate();
        McEstimate {
            value: factor * base.value,
            std_error: factor.abs() * base.std_error,
            n_samples: base.n_samples,
        }
    }
}

/// Estimates the constant-coefficient forward solution, its gradient, and
/// the transformed value `−∂ₓG/G` at one point by plain Gaussian averaging.
///
/// # Errors
///
/// - [`Error::InvalidParameter`] for a negative time;
/// - [`Error::EmptySample`] for fewer than two samples;
/// - [`Error::NonFinite`] when a terminal sample is not finite;
/// - [`Error::NoisyDenominator`] when the solution estimate is not
///   statistically distinguishable from zero (within three standard
///   errors), so the ratio would be noise.
#[allow(clippy::too_many_arguments)]
pub fn forward_estimate(
    t: f64,
    x: f64,
    drift: f64,
    sigma: f64,
    gauge: f64,
    q: impl Fn(f64) -> f64,
    q_x: impl Fn(f64) -> f64,
    n_samples: u64,
    seed: u64,
) -> Result<(McEstimate, McEstimate, f64)> {
    if t < 0.0 || !t.is_finite() {
        return Err(Error::InvalidParameter {
            what: "t",
            reason: "the estimator runs forward from a nonnegative time",
        });
    }
    if n_samples < 2 {
        return Err(Error::EmptySample);
    }
    let spread = sigma * libm::sqrt(t);
    let center = x + drift * t;
    let mut g = RunningMoments::new();
    let mut g_x = RunningMoments::new();
    for i in 0..n_samples {
        let zeta = CounterRng::new(seed, i).normal(0);
        let x_t = center + spread * zeta;
        let (value, slope) = (q(x_t), q_x(x_t));
        if !value.is_finite() || !slope.is_finite() {
            return Err(Error::NonFinite {
                what: "forward estimator sample",
                step: i as usize,
                node: 0,
            });
        }
        g.push(value);
        g_x.push(slope);
    }
    let discount = libm::exp(-gauge * t);
    let g = g.scaled(discount);
    let g_x = g_x.scaled(discount);
    if g.value.abs() <= 3.0 * g.std_error {
        return Err(Error::NoisyDenominator {
            value: g.value,
            std_error: g.std_error,
        });
    }
    let ratio = -g_x.value / g.value;
    Ok((g, g_x, ratio))
}

fn check_backward_inputs(
    grid: &Grid,
    t_index: usize,
    sigma: &Process,
    potential: &Field,
    n_samples: u64,
) -> Result<()> {
    if sigma.grid() != *grid || potential.grid() != *grid {
        return Err(Error::GridMismatch {
            what: "backward estimator inputs",
        });
    }
    if t_index > grid.nt() {
        return Err(Error::InvalidParameter {
            what: "t_index",
            reason: "the start node must lie on the time lattice",
        });
    }
    if n_samples < 2 {
        return Err(Error::EmptySample);
    }
    Ok(())
}

#[allow(clippy::too_many_arguments)]
fn backward_value_with_base(
    grid: &Grid,
    t_index: usize,
    x: f64,
    sigma: &Process,
    potential: &Field,
    terminal: &dyn Fn(f64, f64) -> f64,
    n_samples: u64,
    seed: u64,
    stream_base: u64,
) -> Result<McEstimate> {
    check_backward_inputs(grid, t_index, sigma, potential, n_samples)?;
    let (dt, root_dt) = (grid.dt(), libm::sqrt(grid.dt()));
    let mut moments = RunningMoments::new();
    for i in 0..n_samples {
        let rng = CounterRng::new(seed, stream_base + i);
        let (mut state, mut noise, mut integral) = (x, 0.0, 0.0);
        let mut left = stencil::sample_shifted(potential.slice(t_index), grid, state);
        for n in t_index..grid.nt() {
            let dw = root_dt * rng.normal(n as u64);
            state += sigma.value(n) * dw;
            noise += dw;
            let right = stencil::sample_shifted(potential.slice(n + 1), grid, state);
            integral += 0.5 * (left + right) * dt;
            left = right;
        }
        let sample = terminal(state, noise) * libm::exp(-integral);
        if !sample.is_finite() {
            return Err(Error::NonFinite {
                what: "backward estimator sample",
                step: i as usize,
                node: 0,
            });
        }
        moments.push(sample);
    }
    Ok(moments.estimate())
}

/// Estimates the drift-free backward value
/// `y(t, x) = E[ q(x_T, w_T) e^{−∫ c(s, x_s) ds} ]`, simulating the state
/// with one Euler-Maruyama path per sample and accumulating the potential
/// integral by the trapezoid rule. The terminal closure receives the
/// terminal state and the driving noise accumulated **from `t_index`**.
///
/// # Errors
///
/// - [`Error::GridMismatch`] / [`Error::InvalidParameter`] /
///   [`Error::EmptySample`] on malformed inputs;
/// - [`Error::NonFinite`] when a sample leaves the finite range.
#[allow(clippy::too_many_arguments)]
pub fn backward_value(
    grid: &Grid,
    t_index: usize,
    x: f64,
    sigma: &Process,
    potential: &Field,
    terminal: &dyn Fn(f64, f64) -> f64,
    n_samples: u64,
    seed: u64,
) -> Result<McEstimate> {
    backward_value_with_base(
        grid, t_index, x, sigma, potential, terminal, n_samples, seed, 0,
    )
}

/// Estimates the matching control
///
/// ```text
/// z(t, x) = E[ −e^{−∫ (A_σ/σ + c)} σ(T) p(x_T, w_T) q(x_T, w_T)
///              + ∫ e^{−∫ (A_σ/σ + c)} σ(s) f(s, x_s) y(s, x_s) ds ],
/// ```
///
/// where `q` is the linear terminal data, `p` the transformed terminal
/// data, `f` the source field, and `y` the value function along the path,
/// evaluated per [`InnerValue`]. Nested evaluations shift the terminal
/// closure by the outer accumulated noise and draw from reserved streams,
/// so outer and inner samples never overlap.
///
/// # Errors
///
/// - [`Error::GridMismatch`] / [`Error::InvalidParameter`] /
///   [`Error::EmptySample`] on malformed inputs;
/// - [`Error::MissingPart`] when `σ` carries no drift part (the discount
///   rate needs it);
/// - [`Error::NonFinite`] when a sample leaves the finite range.
#[allow(clippy::too_many_arguments)]
pub fn backward_control(
    grid: &Grid,
    t_index: usize,
    x: f64,
    sigma: &Process,
    potential: &Field,
    source: &Field,
    linear_terminal: &dyn Fn(f64, f64) -> f64,
    transformed_terminal: &dyn Fn(f64, f64) -> f64,
    inner: &InnerValue,
    n_samples: u64,
    seed: u64,
) -> Result<McEstimate> {
    check_backward_inputs(grid, t_index, sigma, potential, n_samples)?;
    if source.grid() != *grid {
        return Err(Error::GridMismatch {
            what: "backward estimator inputs",
        });
    }
    let has_source = source.values().iter().any(|&v| v != 0.0);
    let (dt, root_dt) = (grid.dt(), libm::sqrt(grid.dt()));
    let rate = |n: usize, state: f64| -> Result<f64> {
        Ok(
            sigma.require_drift("control estimator discount", n)? / sigma.value(n)
                + stencil::sample_shifted(potential.slice(n), grid, state),
        )
    };
    let value_at = |step: usize, state: f64, noise: f64, outer: u64| -> Result<f64> {
        match inner {
            InnerValue::ClosedForm(f) => Ok(f(step, state, noise)),
            InnerValue::Nested { n_samples: inner_n } => {
                let shifted = |x_t: f64, w_t: f64| linear_terminal(x_t, noise + w_t);
                let base =
                    NESTED_STREAM_OFFSET + (outer * (grid.nt() as u64 + 1) + step as u64) * inner_n;
                Ok(backward_value_with_base(
                    grid, step, state, sigma, potential, &shifted, *inner_n, seed, base,
                )?
                .value)
            }
        }
    };
    let mut moments = RunningMoments::new();
    for i in 0..n_samples {
        let rng = CounterRng::new(seed, i);
        let (mut state, mut noise, mut integral, mut source_integral) = (x, 0.0, 0.0, 0.0);
        let mut left_rate = rate(t_index, state)?;
        let mut left_source = if has_source {
            sigma.value(t_index)
                * stencil::sample_shifted(source.slice(t_index), grid, state)
                * value_at(t_index, state, 0.0, i)?
        } else {
            0.0
        };
        for n in t_index..grid.nt() {
            let dw = root_dt * rng.normal(n as u64);
            state += sigma.value(n) * dw;
            noise += dw;
            let right_rate = rate(n + 1, state)?;
            integral += 0.5 * (left_rate + right_rate) * dt;
            left_rate = right_rate;
            if has_source {
                let right_source = sigma.value(n + 1)
                    * stencil::sample_shifted(source.slice(n + 1), grid, state)
                    * value_at(n + 1, state, noise, i)?
                    * libm::exp(-integral);
                source_integral += 0.5 * (left_source + right_source) * dt;
                left_source = right_source;
            }
        }
        let terminal_part = -libm::exp(-integral)
            * sigma.value(grid.nt())
            * transformed_terminal(state, noise)
            * linear_terminal(state, noise);
        let sample = terminal_part + source_integral;
        if !sample.is_finite() {
            return Err(Error::NonFinite {
                what: "backward estimator sample",
                step: i as usize,
                node: 0,
            });
        }
        moments.push(sample);
    }
    Ok(moments.estimate())
}
