//! Error type shared by every module of the crate.
//!
//! Variants are grouped by failure class: construction/validation errors
//! (sizing, shape, parameter domains), numerical-scheme contract violations
//! (stability bounds, positivity, blow-up), and evaluation errors (singular
//! denominators, missing decomposition parts, degenerate linear systems).
//! Indices in payloads always refer to lattice coordinates `(step, node)` so a
//! failure names the first offending `(t, x)` location.

use thiserror::Error;

/// Crate-wide result alias.
pub type Result<T> = core::result::Result<T, Error>;

/// All failure modes surfaced by this crate.
#[derive(Debug, Clone, PartialEq, Error)]
pub enum Error {
    /// A grid or slice has too few nodes for the requested operation.
    #[error("{what} needs at least {min} space nodes, got {got}")]
    GridTooSmall {
        /// Operation that was attempted.
        what: &'static str,
        /// Minimum number of space nodes required.
        min: usize,
        /// Number of nodes provided.
        got: usize,
    },

    /// A grid parameter violates its domain (ordering, positivity, finiteness).
    #[error("invalid grid: {reason}")]
    InvalidGrid {
        /// Which invariant failed.
        reason: &'static str,
    },

    /// Two containers that must share a lattice do not.
    #[error("grid mismatch in {what}")]
    GridMismatch {
        /// Operation that required the shared lattice.
        what: &'static str,
    },

    /// A container's dimensions disagree with its grid.
    #[error("shape mismatch: {what}")]
    ShapeMismatch {
        /// Description of the offending container.
        what: &'static str,
    },

    /// A scalar argument is outside its documented domain.
    #[error("invalid parameter {what}: {reason}")]
    InvalidParameter {
        /// Parameter name.
        what: &'static str,
        /// Which constraint failed.
        reason: &'static str,
    },

    /// A value that must be finite is NaN or infinite.
    #[error("non-finite value in {what} at (step {step}, node {node})")]
    NonFinite {
        /// Container or field name.
        what: &'static str,
        /// Time index of the first offending entry.
        step: usize,
        /// Space index of the first offending entry.
        node: usize,
    },

    /// The volatility process touches zero (every transform divides by it).
    #[error("volatility must stay away from zero: |sigma| = {value:e} at step {step}")]
    DegenerateVolatility {
        /// Time index where the minimum is attained.
        step: usize,
        /// Offending magnitude.
        value: f64,
    },

    /// The gradient-noise loading is not the linearizable branch `ell = -2*sigma`.
    #[error(
        "unsupported noise loading at step {step}: ell = {ell:e} but -2*sigma = {expected:e}; \
             the branch ell = sigma is ill-posed and every other loading is outside the \
             linearizable family"
    )]
    UnsupportedNoiseBranch {
        /// Time index of the first mismatch.
        step: usize,
        /// Provided loading value.
        ell: f64,
        /// Required loading value.
        expected: f64,
    },

    /// An explicit or IMEX scheme was asked to step faster than its contract allows.
    #[error("time step {dt:e} violates the {scheme} stability bound {bound:e}")]
    StabilityBound {
        /// Scheme whose contract failed.
        scheme: &'static str,
        /// Requested step.
        dt: f64,
        /// Maximum admissible step.
        bound: f64,
    },

    /// A solution that must stay positive crossed zero.
    #[error("positivity lost at (step {step}, node {node}): value {value:e}")]
    PositivityLost {
        /// Time index of the first non-positive entry.
        step: usize,
        /// Space index of the first non-positive entry.
        node: usize,
        /// The offending value.
        value: f64,
    },

    /// A field that feeds a logarithmic derivative is not strictly positive.
    #[error(
        "field {what} must be strictly positive: value {value:e} at (step {step}, node {node})"
    )]
    NonPositiveField {
        /// Field name.
        what: &'static str,
        /// Time index of the first offending entry.
        step: usize,
        /// Space index of the first offending entry.
        node: usize,
        /// The offending value.
        value: f64,
    },

    /// A trajectory left the admissible range (divergence of an explicit solve).
    #[error("solution blew up at step {step}: max |value| = {value:e}")]
    BlowUp {
        /// Time index at which divergence was detected.
        step: usize,
        /// Magnitude that tripped the detector.
        value: f64,
    },

    /// A denominator came within tolerance of zero at an evaluation point.
    #[error("singular denominator in {what}: |{what}| = {value:e} below tolerance")]
    SingularDenominator {
        /// Name of the denominator expression.
        what: &'static str,
        /// Its magnitude at the evaluation point.
        value: f64,
    },

    /// A pointwise 2x2 coefficient system is singular and inconsistent.
    #[error(
        "coefficient system at (step {step}, node {node}) is singular and inconsistent \
             (row residual {residual:e})"
    )]
    InconsistentSystem {
        /// Time index of the offending solve.
        step: usize,
        /// Space index of the offending solve.
        node: usize,
        /// Residual of the unsatisfiable row.
        residual: f64,
    },

    /// A pinned slope disagrees with a non-degenerate coefficient system.
    #[error(
        "pinned slope {pinned:e} conflicts with the unique solution {solved:e} at \
             (step {step}, node {node})"
    )]
    ConflictingPin {
        /// Time index of the offending solve.
        step: usize,
        /// Space index of the offending solve.
        node: usize,
        /// The caller's pinned value.
        pinned: f64,
        /// The system's unique solution.
        solved: f64,
    },

    /// A decomposition part required by an operation was not supplied.
    #[error("{op} requires the {part} decomposition part")]
    MissingPart {
        /// Operation that needed the part.
        op: &'static str,
        /// Which part is missing.
        part: &'static str,
    },

    /// A coarsening factor must divide the step count.
    #[error("coarsening factor {factor} does not divide nt = {nt}")]
    NonDivisibleFactor {
        /// Requested factor.
        factor: usize,
        /// Number of time steps on the fine lattice.
        nt: usize,
    },

    /// A Monte Carlo denominator is statistically indistinguishable from zero.
    #[error(
        "monte carlo estimate {value:e} is within 3 standard errors ({std_error:e}) of zero; \
             refusing the division"
    )]
    NoisyDenominator {
        /// The estimate.
        value: f64,
        /// Its standard error.
        std_error: f64,
    },

    /// An estimator was asked for zero samples.
    #[error("sample count must be positive")]
    EmptySample,
}

#[cfg(test)]
mod tests {
    use super::*;
    use alloc::string::ToString;

    #[test]
    fn messages_name_the_offending_location() {
        let err = Error::PositivityLost {
            step: 7,
            node: 12,
            value: -1.5e-3,
        };
        let text = err.to_string();
        assert!(text.contains("step 7"), "{text}");
        assert!(text.contains("node 12"), "{text}");
    }

    #[test]
    fn error_trait_is_implemented() {
        fn assert_error<E: core::error::Error>() {}
        assert_error::<Error>();
    }
}
