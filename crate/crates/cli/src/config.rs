//! Scenario configuration: one JSON document drives every subcommand.
//!
//! Unknown fields are rejected, and every field has an explicit default, so
//! a partial document is always unambiguous. The full schema with its
//! defaults:
//!
//! ```json
//! {
//!   "grid": { "x_min": -1.2, "x_max": 1.2, "nx": 81, "horizon": 0.5, "nt": 64 },
//!   "seed": 1,
//!   "stream": 0,
//!   "paths": 4,
//!   "sigma": 1.0,
//!   "x0": 0.0,
//!   "family": {
//!     "kind": "exponential",
//!     "profile": { "kind": "sin", "amplitude": 0.4, "frequency": 1.0 },
//!     "pin_m": null
//!   },
//!   "samples": { "outer": 10000, "inner": 200 },
//!   "market": { "rate": 0.0, "mu": -1.0, "sigma": -1.0, "s0": 1.0, "consumption": [] },
//!   "tolerances": {
//!     "cross_route_l2": 0.02,
//!     "cross_route_decay": 2.0,
//!     "point_identity": 1.0e-10,
//!     "terminal_compatibility": 1.0e-10,
//!     "second_order_decay": 2.5,
//!     "first_order_decay": 1.35,
//!     "stagnation_band": 1.8,
//!     "control_separation": 5.0,
//!     "mc_sigma_band": 3.0,
//!     "pde_cross_margin": 1.0e-3,
//!     "identity_gap": 1.0e-10,
//!     "replication_price": 1.0e-12,
//!     "replication_gap_per_step": 1.0,
//!     "gauge_invariance": 1.0e-12,
//!     "se_halving_slack": 0.2,
//!     "variance_band": 0.015
//!   }
//! }
//! ```
//!
//! `family.kind` selects how the verification object is built:
//!
//! - `"exponential"` — the noise-exponential member `V = exp(f1(x)·W)`;
//!   `profile` is `f1` and `pin_m` optionally pins the drift coefficient
//!   where the pointwise system is rank-deficient.
//! - `"separable"` — the separable member `V = f2(x)·exp(W)` with `f2 > 0`;
//!   its system is rank-deficient everywhere, so `pin_m` defaults to `0.5`.
//! - `"forward"` — a forward initial-value run; `initial`, `b`, `m`, `f`
//!   are profiles and `gauge` is the additive constant of the integrated
//!   potential.
//!
//! Any profile may be given as `{"kind": "tabulated", "values": [...]}` with
//! exactly one value per lattice node, which is how externally computed
//! coefficient tables enter.

use std::path::Path;

use serde::{Deserialize, Serialize};

use sburgers_core::families::Profile;
use sburgers_core::{Field, Grid};

use crate::error::{CliError, Result};

/// Uniform space-time lattice parameters.
#[derive(Debug, Clone, Copy, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct GridConfig {
    /// Left edge of the spatial window.
    pub x_min: f64,
    /// Right edge of the spatial window.
    pub x_max: f64,
    /// Number of spatial nodes (at least 5).
    pub nx: usize,
    /// Final time.
    pub horizon: f64,
    /// Number of time steps (at least 1).
    pub nt: usize,
}

impl Default for GridConfig {
    fn default() -> Self {
        GridConfig {
            x_min: -1.2,
            x_max: 1.2,
            nx: 81,
            horizon: 0.5,
            nt: 64,
        }
    }
}

impl GridConfig {
    /// Validates the parameters into a lattice.
    pub fn build(&self) -> Result<Grid> {
        Grid::new(self.x_min, self.x_max, self.nx, self.horizon, self.nt)
            .map_err(|e| CliError::config(format!("grid: {e}")))
    }
}

/// A one-dimensional profile given in closed form or as a table.
#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "kebab-case", deny_unknown_fields)]
pub enum ProfileSpec {
    /// The constant profile `value`.
    Constant {
        /// Level of the profile.
        value: f64,
    },
    /// `amplitude · sin(frequency·x)`.
    Sin {
        /// Peak value.
        amplitude: f64,
        /// Angular frequency (default 1).
        #[serde(default = "one")]
        frequency: f64,
    },
    /// `amplitude · cosh(scale·x)` — strictly positive when `amplitude > 0`.
    Cosh {
        /// Value at the origin.
        amplitude: f64,
        /// Horizontal scale.
        scale: f64,
    },
    /// `tanh(scale·x)`.
    Tanh {
        /// Horizontal scale (default 1).
        #[serde(default = "one")]
        scale: f64,
    },
    /// `Σ coefficients[k] · x^k`.
    Polynomial {
        /// Coefficients in increasing degree.
        coefficients: Vec<f64>,
    },
    /// One value per lattice node; derivatives are taken by stencil.
    Tabulated {
        /// Node values, length must equal the lattice's `nx`.
        values: Vec<f64>,
    },
}

fn one() -> f64 {
    1.0
}

/// Evaluates a polynomial and its first two derivatives at `x`.
fn horner3(coefficients: &[f64], x: f64) -> (f64, f64, f64) {
    let (mut p, mut d1, mut d2) = (0.0, 0.0, 0.0);
    for &c in coefficients.iter().rev() {
        d2 = d2 * x + 2.0 * d1;
        d1 = d1 * x + p;
        p = p * x + c;
    }
    (p, d1, d2)
}

impl ProfileSpec {
    /// Builds the profile with its first two derivatives on a lattice.
    pub fn build(&self, grid: Grid) -> Result<Profile> {
        match self {
            ProfileSpec::Constant { value } => Ok(Profile::constant(grid, *value)),
            ProfileSpec::Sin {
                amplitude,
                frequency,
            } => {
                let (a, w) = (*amplitude, *frequency);
                Ok(Profile::from_fns(
                    grid,
                    |x| a * (w * x).sin(),
                    |x| a * w * (w * x).cos(),
                    |x| -a * w * w * (w * x).sin(),
                ))
            }
            ProfileSpec::Cosh { amplitude, scale } => {
                let (a, s) = (*amplitude, *scale);
                Ok(Profile::from_fns(
                    grid,
                    |x| a * (s * x).cosh(),
                    |x| a * s * (s * x).sinh(),
                    |x| a * s * s * (s * x).cosh(),
                ))
            }
            ProfileSpec::Tanh { scale } => {
                let s = *scale;
                Ok(Profile::from_fns(
                    grid,
                    |x| (s * x).tanh(),
                    |x| {
                        let t = (s * x).tanh();
                        s * (1.0 - t * t)
                    },
                    |x| {
                        let t = (s * x).tanh();
                        -2.0 * s * s * t * (1.0 - t * t)
                    },
                ))
            }
            ProfileSpec::Polynomial { coefficients } => {
                if coefficients.is_empty() {
                    return Err(CliError::config(
                        "polynomial profile needs at least one coefficient",
                    ));
                }
                let c = coefficients.clone();
                Ok(Profile::from_fns(
                    grid,
                    |x| horner3(&c, x).0,
                    {
                        let c = coefficients.clone();
                        move |x| horner3(&c, x).1
                    },
                    {
                        let c = coefficients.clone();
                        move |x| horner3(&c, x).2
                    },
                ))
            }
            ProfileSpec::Tabulated { values } => {
                if values.len() != grid.nx() {
                    return Err(CliError::config(format!(
                        "tabulated profile has {} values but the lattice has {} nodes",
                        values.len(),
                        grid.nx()
                    )));
                }
                Profile::from_values(grid, values.clone()).map_err(CliError::from)
            }
        }
    }

    /// Evaluates just the profile values on a lattice row.
    pub fn row(&self, grid: Grid) -> Result<Vec<f64>> {
        Ok(self.build(grid)?.values().to_vec())
    }

    /// Evaluates the profile as a time-constant field.
    pub fn field(&self, grid: Grid) -> Result<Field> {
        // The constant case skips the row materialization: on fine lattices
        // a zero coefficient field then stays untouched copy-on-write pages.
        if let ProfileSpec::Constant { value } = self {
            return Ok(Field::constant(grid, *value));
        }
        let row = self.row(grid)?;
        Field::from_values(
            grid,
            (0..=grid.nt()).flat_map(|_| row.iter().copied()).collect(),
        )
        .map_err(CliError::from)
    }
}

/// Which verification object the scenario builds.
#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "kebab-case", deny_unknown_fields)]
pub enum FamilyConfig {
    /// Noise-exponential member `V = exp(f1(x)·W)`.
    Exponential {
        /// The shape profile `f1`.
        profile: ProfileSpec,
        /// Optional pin for the drift coefficient on rank-deficient points.
        #[serde(default)]
        pin_m: Option<f64>,
    },
    /// Separable member `V = f2(x)·exp(W)` with `f2 > 0`.
    Separable {
        /// The positive shape profile `f2`.
        profile: ProfileSpec,
        /// Pin for the drift coefficient (the system is rank-deficient
        /// everywhere); defaults to `0.5`.
        #[serde(default = "default_pin")]
        pin_m: Option<f64>,
    },
    /// Forward initial-value run with explicit coefficient profiles.
    Forward {
        /// Initial profile of the solution.
        initial: ProfileSpec,
        /// First-order drift coefficient profile.
        b: ProfileSpec,
        /// Relative-risk coefficient profile.
        m: ProfileSpec,
        /// Source profile.
        f: ProfileSpec,
        /// Additive constant of the integrated potential.
        #[serde(default)]
        gauge: f64,
    },
}

fn default_pin() -> Option<f64> {
    Some(0.5)
}

impl Default for FamilyConfig {
    fn default() -> Self {
        FamilyConfig::Exponential {
            profile: ProfileSpec::Sin {
                amplitude: 0.4,
                frequency: 1.0,
            },
            pin_m: None,
        }
    }
}

/// Monte-Carlo sample counts.
#[derive(Debug, Clone, Copy, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct SampleConfig {
    /// Outer sample count for every estimator.
    pub outer: u64,
    /// Inner sample count for nested estimators.
    pub inner: u64,
}

impl Default for SampleConfig {
    fn default() -> Self {
        SampleConfig {
            outer: 10_000,
            inner: 200,
        }
    }
}

/// Market parameters for the replication application.
#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct MarketConfig {
    /// Riskless rate.
    pub rate: f64,
    /// Stock drift.
    pub mu: f64,
    /// Stock volatility (nonzero).
    pub sigma: f64,
    /// Initial stock level (positive).
    pub s0: f64,
    /// Consumption per time step; empty means none.
    pub consumption: Vec<f64>,
}

impl Default for MarketConfig {
    fn default() -> Self {
        MarketConfig {
            rate: 0.0,
            mu: -1.0,
            sigma: -1.0,
            s0: 1.0,
            consumption: Vec::new(),
        }
    }
}

/// Every bound a scenario may check, with its default. Defaults are chosen
/// for the shipped verification scenarios; a config can tighten or relax
/// any of them.
#[derive(Debug, Clone, Copy, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct Tolerances {
    /// Relative interior L² gap allowed between the direct forward solve
    /// and the lattice heat route.
    pub cross_route_l2: f64,
    /// Factor by which that gap must shrink under one (dx/2, dt/4)
    /// refinement. The gap is dominated by the direct route's pathwise
    /// O(√dt) noise step, so it halves per level; the default sits ≈3
    /// ensemble standard deviations below that asymptotic 2.
    pub cross_route_decay: f64,
    /// Absolute bound on the pointwise kernel-identity residual.
    pub point_identity: f64,
    /// Absolute bound on the terminal compatibility residual.
    pub terminal_compatibility: f64,
    /// Decay factor demanded of second-order lattice residuals under one
    /// (dx/2, dt/4) refinement.
    pub second_order_decay: f64,
    /// Decay factor demanded of the one-step triplet residual when the
    /// step and spacing halve together.
    pub first_order_decay: f64,
    /// Band within which a wrong-coefficient residual must stagnate.
    pub stagnation_band: f64,
    /// Minimum ratio between a wrong-coefficient residual and the correct
    /// one at the fine lattice.
    pub control_separation: f64,
    /// Width of the Monte-Carlo acceptance interval in standard errors.
    pub mc_sigma_band: f64,
    /// Additive margin when comparing a Monte-Carlo estimate against a
    /// lattice solve (covers the lattice truncation).
    pub pde_cross_margin: f64,
    /// Absolute bound on the pathwise transform-identity gap for
    /// constant-profile members.
    pub identity_gap: f64,
    /// Absolute bound on the pricing error of a replicated constant claim.
    pub replication_price: f64,
    /// Replication gap allowed per unit time step (the gap bound is this
    /// value times dt).
    pub replication_gap_per_step: f64,
    /// Absolute bound on the transform's gauge-invariance defect.
    pub gauge_invariance: f64,
    /// Relative slack when checking that standard errors halve under a
    /// fourfold sample increase.
    pub se_halving_slack: f64,
    /// Relative band around 1 for the terminal-variance diagnostic.
    pub variance_band: f64,
}

impl Default for Tolerances {
    fn default() -> Self {
        Tolerances {
            cross_route_l2: 2e-2,
            cross_route_decay: 1.35,
            point_identity: 1e-10,
            terminal_compatibility: 1e-10,
            second_order_decay: 2.5,
            first_order_decay: 1.35,
            stagnation_band: 1.8,
            control_separation: 5.0,
            mc_sigma_band: 3.0,
            pde_cross_margin: 1e-3,
            identity_gap: 1e-10,
            replication_price: 1e-12,
            replication_gap_per_step: 1.0,
            gauge_invariance: 1e-12,
            se_halving_slack: 0.2,
            variance_band: 0.015,
        }
    }
}

/// The complete scenario document.
#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct ScenarioConfig {
    /// Space-time lattice.
    pub grid: GridConfig,
    /// Base seed of the counter generator.
    pub seed: u64,
    /// First stream index; independent paths use consecutive streams.
    pub stream: u64,
    /// Number of independent driving paths.
    pub paths: usize,
    /// Constant volatility level of the noise loading.
    pub sigma: f64,
    /// Starting point of the Markovian state.
    pub x0: f64,
    /// Verification object.
    pub family: FamilyConfig,
    /// Monte-Carlo sample counts.
    pub samples: SampleConfig,
    /// Market parameters for the replication application.
    pub market: MarketConfig,
    /// Every check bound.
    pub tolerances: Tolerances,
}

impl Default for ScenarioConfig {
    fn default() -> Self {
        ScenarioConfig {
            grid: GridConfig::default(),
            seed: 1,
            stream: 0,
            paths: 4,
            sigma: 1.0,
            x0: 0.0,
            family: FamilyConfig::default(),
            samples: SampleConfig::default(),
            market: MarketConfig::default(),
            tolerances: Tolerances::default(),
        }
    }
}

impl ScenarioConfig {
    /// Reads and validates a configuration file. Any failure — unreadable
    /// file, malformed JSON, unknown field, inconsistent values — is a
    /// configuration error, raised before any output exists.
    pub fn load(path: &Path) -> Result<Self> {
        let text = std::fs::read_to_string(path)
            .map_err(|e| CliError::config(format!("cannot read {}: {e}", path.display())))?;
        let config: ScenarioConfig = serde_json::from_str(&text)
            .map_err(|e| CliError::config(format!("cannot parse {}: {e}", path.display())))?;
        config.validate()?;
        Ok(config)
    }

    /// Checks the cross-field invariants that serde cannot express.
    pub fn validate(&self) -> Result<()> {
        self.grid.build()?;
        if self.paths == 0 {
            return Err(CliError::config("paths must be at least 1"));
        }
        if self.samples.outer < 2 {
            return Err(CliError::config("samples.outer must be at least 2"));
        }
        if self.sigma == 0.0 || !self.sigma.is_finite() {
            return Err(CliError::config("sigma must be a nonzero finite number"));
        }
        if !self.x0.is_finite() {
            return Err(CliError::config("x0 must be finite"));
        }
        if self.market.sigma == 0.0 || !self.market.sigma.is_finite() {
            return Err(CliError::config("market.sigma must be nonzero and finite"));
        }
        if !self.market.s0.is_finite() || self.market.s0 <= 0.0 {
            return Err(CliError::config("market.s0 must be positive"));
        }
        if self
            .market
            .consumption
            .iter()
            .any(|&c| !c.is_finite() || c < 0.0)
        {
            return Err(CliError::config("market.consumption must be nonnegative"));
        }
        if let FamilyConfig::Separable {
            profile: ProfileSpec::Constant { value },
            ..
        } = &self.family
        {
            if !value.is_finite() || *value <= 0.0 {
                return Err(CliError::config(
                    "separable profiles must be strictly positive",
                ));
            }
        }
        Ok(())
    }
}
