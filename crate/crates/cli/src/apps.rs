//! Applications of verified closed-form solutions: steering a diffusion to a
//! terminal profile with explicit feedback controls, and replicating a
//! constant financial claim with a self-financing hedge.
//!
//! Both applications work on the nonlinear side of the transform. The
//! controllability report reads the two control fields directly off a
//! closed-form member — the noise loading of the transformed solution and
//! its spatial gradient — and measures how far the terminal profile lands
//! from the requested target. The pricing report builds the solution triplet
//! along the Markovian state, reads the hedge ratio from the
//! control-to-value quotient, integrates the wealth dynamics
//!
//! ```text
//! dw = [π(μ − r)w + πσ²w² − C] dt + πσw dW,
//! ```
//!
//! and compares terminal wealth against the claim payoff.

use sburgers_core::brownian::BrownianPath;
use sburgers_core::cole_hopf::{self, DENOMINATOR_TOLERANCE};
use sburgers_core::families::{self, Profile, SolutionFamily};
use sburgers_core::fbsde;
use sburgers_core::stencil;
use sburgers_core::{Field, Grid, Process, SemimartingaleField};

use crate::config::MarketConfig;
use crate::error::{CliError, Result};

/// A one-stock market with deterministic coefficients.
#[derive(Debug, Clone)]
pub struct MarketModel {
    rate: f64,
    mu: f64,
    sigma: f64,
    s0: f64,
    consumption: Vec<f64>,
}

impl MarketModel {
    /// Validates the market parameters: the volatility must be nonzero, the
    /// initial stock level positive, and consumption nonnegative.
    pub fn new(rate: f64, mu: f64, sigma: f64, s0: f64, consumption: Vec<f64>) -> Result<Self> {
        if sigma == 0.0 || !sigma.is_finite() {
            return Err(CliError::config("market volatility must be nonzero"));
        }
        if !s0.is_finite() || s0 <= 0.0 {
            return Err(CliError::config("initial stock level must be positive"));
        }
        if consumption.iter().any(|&c| !c.is_finite() || c < 0.0) {
            return Err(CliError::config("consumption must be nonnegative"));
        }
        Ok(MarketModel {
            rate,
            mu,
            sigma,
            s0,
            consumption,
        })
    }

    /// Builds a market from its configuration section.
    pub fn from_config(config: &MarketConfig) -> Result<Self> {
        MarketModel::new(
            config.rate,
            config.mu,
            config.sigma,
            config.s0,
            config.consumption.clone(),
        )
    }

    /// Riskless rate.
    pub fn rate(&self) -> f64 {
        self.rate
    }

    /// Stock drift.
    pub fn mu(&self) -> f64 {
        self.mu
    }

    /// Stock volatility.
    pub fn sigma(&self) -> f64 {
        self.sigma
    }

    /// Initial stock level.
    pub fn s0(&self) -> f64 {
        self.s0
    }

    /// Consumption per step.
    pub fn consumption(&self) -> &[f64] {
        &self.consumption
    }

    /// The relative risk premium `(μ − r)/σ`, which is the drift
    /// coefficient of the backward equation the claim solves.
    pub fn relative_risk(&self) -> f64 {
        (self.mu - self.rate) / self.sigma
    }
}

/// Output of the steering application.
#[derive(Debug, Clone)]
pub struct ControllabilityReport {
    /// Profile the controls steer from (the transformed solution at time 0).
    pub initial_profile: Vec<f64>,
    /// First control field: the noise loading of the transformed solution.
    pub control_density: Field,
    /// Second control field: the spatial gradient of the first.
    pub control_gradient: Field,
    /// Worst distance between the achieved terminal profile and the target.
    pub terminal_gap: f64,
}

/// Builds the two feedback controls of a closed-form member and measures the
/// terminal steering error against `target`.
///
/// # Errors
///
/// Engine errors propagate; the target must have one value per node.
pub fn controllability_report(
    family: SolutionFamily,
    profile: &Profile,
    sigma_level: f64,
    path: &BrownianPath,
    target: &[f64],
) -> Result<ControllabilityReport> {
    let grid = profile.grid();
    if target.len() != grid.nx() {
        return Err(CliError::config(format!(
            "target profile has {} values but the lattice has {} nodes",
            target.len(),
            grid.nx()
        )));
    }
    let sigma = Process::constant(grid, sigma_level);
    let v = families::family_solution(family, profile, path)?;
    let u = cole_hopf::generalized_transform(v.value(), v.vol(), &sigma)?;
    let control_density = cole_hopf::psi_u_from_v(
        v.value(),
        v.vol(),
        v.require_vol_vol("control density")?,
        &sigma,
    )?;
    let control_gradient = stencil::central_derivative(&control_density, 1)?;

    let terminal_gap = (0..grid.nx())
        .map(|i| (u.at(grid.nt(), i) - target[i]).abs())
        .fold(0.0, f64::max);

    Ok(ControllabilityReport {
        initial_profile: u.slice(0).to_vec(),
        control_density,
        control_gradient,
        terminal_gap,
    })
}

/// Output of the replication application.
#[derive(Debug, Clone)]
pub struct PricingReport {
    /// Value of the claim at time 0.
    pub price: f64,
    /// Hedge ratio along the path, one value per time node.
    pub hedge: Vec<f64>,
    /// Self-financing wealth along the path, one value per time node.
    pub wealth: Vec<f64>,
    /// Claim payoff at the terminal state.
    pub payoff: f64,
    /// |terminal wealth − payoff|.
    pub replication_gap: f64,
}

/// Prices a constant claim of the given family and integrates the hedge.
///
/// The claim level is the constant profile level of the family member; a
/// zero level denotes the trivial claim, which prices to zero with no
/// position at all (the hedge ratio is undefined there, so the report takes
/// the zero-wealth shortcut).
///
/// # Errors
///
/// - configuration errors for a level/market combination outside the
///   replicable regime (nonpositive level with nonzero claim, positive
///   market volatility, consumption not matching the lattice);
/// - [`sburgers_core::Error::SingularDenominator`] when the claim value
///   touches zero along the path.
pub fn pricing_report(
    market: &MarketModel,
    family: SolutionFamily,
    level: f64,
    x0: f64,
    grid: Grid,
    seed: u64,
    stream: u64,
) -> Result<PricingReport> {
    let nt = grid.nt();
    if !(market.consumption.is_empty() || market.consumption.len() == nt) {
        return Err(CliError::config(format!(
            "consumption has {} entries but the lattice has {} steps",
            market.consumption.len(),
            nt
        )));
    }
    if level == 0.0 {
        return Ok(PricingReport {
            price: 0.0,
            hedge: vec![0.0; nt + 1],
            wealth: vec![0.0; nt + 1],
            payoff: 0.0,
            replication_gap: 0.0,
        });
    }

    let (_, claim_level, _) = families::constant_family_parameters(family, level, market.sigma)
        .map_err(|e| CliError::config(format!("claim outside the replicable regime: {e}")))?;

    let path = BrownianPath::sample(seed, stream, grid);
    let sigma = Process::constant(grid, market.sigma);
    let profile = Profile::constant(grid, level);
    let v = families::family_solution(family, &profile, &path)?;
    let u = cole_hopf::generalized_transform(v.value(), v.vol(), &sigma)?;
    let psi_u = cole_hopf::psi_u_from_v(
        v.value(),
        v.vol(),
        v.require_vol_vol("hedge density")?,
        &sigma,
    )?;
    let u = SemimartingaleField::new(u, psi_u)?;
    let state = fbsde::simulate_forward_state(x0, &sigma, None, &path)?;
    let triplet = fbsde::markovian_triplet(&u, &sigma, &state)?;

    let price = triplet.value()[0];
    let mut hedge = Vec::with_capacity(nt + 1);
    for n in 0..=nt {
        let y = triplet.value()[n];
        let denom = market.sigma * y;
        if denom.abs() < DENOMINATOR_TOLERANCE * (1.0 + denom.abs()) {
            return Err(sburgers_core::Error::SingularDenominator {
                what: "claim value in the hedge ratio",
                value: y,
            }
            .into());
        }
        hedge.push(triplet.control()[n] / denom);
    }

    let dt = grid.dt();
    let excess = market.mu - market.rate;
    let sigma_sq = market.sigma * market.sigma;
    let mut wealth = Vec::with_capacity(nt + 1);
    wealth.push(price);
    for n in 0..nt {
        let w = wealth[n];
        let pi = hedge[n];
        let consumption = market.consumption.get(n).copied().unwrap_or(0.0);
        let drift = pi * excess * w + pi * sigma_sq * w * w - consumption;
        wealth.push(w + drift * dt + pi * market.sigma * w * path.increment(n));
    }

    let payoff = claim_level;
    let replication_gap = (wealth[nt] - payoff).abs();
    Ok(PricingReport {
        price,
        hedge,
        wealth,
        payoff,
        replication_gap,
    })
}
