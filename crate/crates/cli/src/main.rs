//! Verification and application driver for the stochastic Burgers toolkit.

use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Parser, Subcommand};

use sburgers_cli::scenarios::{self, Scenario};
use sburgers_cli::{ScenarioConfig, EXIT_TOLERANCE};

/// Builds, transforms, and verifies solutions of stochastic Burgers
/// equations with random coefficients.
#[derive(Parser, Debug)]
#[command(name = "sburgers", version, about)]
struct Cli {
    /// Configuration file (JSON). Replaces the command's tuned defaults;
    /// fields left out fall back to the generic schema defaults.
    #[arg(long, global = true)]
    config: Option<PathBuf>,

    /// Seed of the driving noise. Overrides the configuration file.
    #[arg(long, global = true)]
    seed: Option<u64>,

    /// Output root; each command writes into its own subdirectory.
    #[arg(long, global = true, default_value = "out")]
    out: PathBuf,

    /// Extra lattice refinement levels for the decay measurements.
    #[arg(long, global = true, default_value_t = 1)]
    refine: usize,

    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand, Debug)]
enum Command {
    /// Solve the forward equation directly and cross-check the solution at
    /// sampled times against the linearizing-transform route.
    SimulateForward,
    /// Check the transform kernel pointwise, terminal compatibility of the
    /// constant members, and the gauge freedom of the transform.
    VerifyColehopf,
    /// Measure residual decay of both closed-form families under lattice
    /// refinement, with wrong-coefficient negative controls.
    VerifyConstraints,
    /// Run the Monte-Carlo estimators against closed oracles and the
    /// lattice solve.
    FeynmanKac,
    /// Measure one-step residuals of the solution triplets and the
    /// pathwise transform identity.
    FbsdeCheck,
    /// Steer constant members to their terminal targets.
    Controllability,
    /// Price and replicate constant claims in the market model.
    PriceClaim,
    /// Run every scenario plus determinism and sampling diagnostics.
    Suite,
    /// Write a gnuplot script that renders the scenario tables.
    PlotScript,
}

impl Command {
    fn scenario(&self) -> Option<Scenario> {
        match self {
            Command::SimulateForward => Some(Scenario::SimulateForward),
            Command::VerifyColehopf => Some(Scenario::VerifyColehopf),
            Command::VerifyConstraints => Some(Scenario::VerifyConstraints),
            Command::FeynmanKac => Some(Scenario::FeynmanKac),
            Command::FbsdeCheck => Some(Scenario::FbsdeCheck),
            Command::Controllability => Some(Scenario::Controllability),
            Command::PriceClaim => Some(Scenario::PriceClaim),
            Command::Suite => Some(Scenario::Suite),
            Command::PlotScript => None,
        }
    }
}

fn run(cli: &Cli) -> sburgers_cli::Result<bool> {
    let Some(scenario) = cli.command.scenario() else {
        let path = scenarios::write_plot_script(&cli.out)?;
        println!("wrote {}", path.display());
        return Ok(true);
    };

    // The configuration is loaded and validated before any output path is
    // touched, so a rejected run leaves no partial output tree behind.
    let mut config = match &cli.config {
        Some(path) => ScenarioConfig::load(path)?,
        None => scenario.default_config(),
    };
    if let Some(seed) = cli.seed {
        config.seed = seed;
    }
    config.validate()?;

    let report = scenario.run(&config, &cli.out, cli.refine)?;
    print!("{}", report.render_text());
    Ok(report.all_passed())
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    match run(&cli) {
        Ok(true) => ExitCode::SUCCESS,
        Ok(false) => ExitCode::from(EXIT_TOLERANCE),
        Err(err) => {
            eprintln!("error: {err}");
            ExitCode::from(err.exit_code())
        }
    }
}
