//! End-to-end acceptance suite: nine numbered criteria, each printing one
//! pass/fail line. Criteria run sequentially inside a single test so the
//! wall-clock budgets are not distorted by parallel test scheduling.
//! Run with `cargo test --test acceptance -- --nocapture` to see the lines.

use std::path::PathBuf;
use std::time::{Duration, Instant};

use sburgers_cli::config::{FamilyConfig, ProfileSpec};
use sburgers_cli::scenarios::{self, Scenario};
use sburgers_cli::{Report, Result};

use sburgers_core::brownian::BrownianPath;
use sburgers_core::cole_hopf;
use sburgers_core::families::{self, Profile, SolutionFamily};
use sburgers_core::rng::CounterRng;
use sburgers_core::Grid;

/// Outcome of one criterion.
struct Criterion {
    number: usize,
    name: &'static str,
    passed: bool,
    detail: String,
    elapsed: Duration,
}

/// Runs one criterion body, folding errors into an honest failure line.
fn run_criterion(
    number: usize,
    name: &'static str,
    budget: Option<Duration>,
    body: impl FnOnce() -> Result<(bool, String)>,
) -> Criterion {
    let start = Instant::now();
    let (mut passed, mut detail) = match body() {
        Ok(outcome) => outcome,
        Err(err) => (false, format!("aborted: {err}")),
    };
    let elapsed = start.elapsed();
    if let Some(budget) = budget {
        if elapsed > budget {
            passed = false;
            detail = format!(
                "{detail}; exceeded {:.0}s budget (took {:.1}s)",
                budget.as_secs_f64(),
                elapsed.as_secs_f64()
            );
        }
    }
    Criterion {
        number,
        name,
        passed,
        detail,
        elapsed,
    }
}

fn check_passed(report: &Report, name: &str) -> bool {
    report.checks().iter().any(|c| c.name == name && c.passed)
}

fn scalar(report: &Report, name: &str) -> f64 {
    report.scalars().get(name).copied().unwrap_or(f64::NAN)
}

/// Summarizes a scenario report into one criterion outcome. Every listed
/// check must exist and pass; any other failing check also fails the
/// criterion.
fn from_report(report: &Report, required: &[&str]) -> (bool, String) {
    let missing: Vec<&str> = required
        .iter()
        .copied()
        .filter(|name| !report.checks().iter().any(|c| c.name == *name))
        .collect();
    let mut problems: Vec<String> = report
        .checks()
        .iter()
        .filter(|c| !c.passed)
        .map(|c| format!("{}={:.3e}", c.name, c.measured))
        .collect();
    problems.extend(missing.iter().map(|name| format!("{name} missing")));
    if problems.is_empty() {
        (true, format!("{} checks passed", report.checks().len()))
    } else {
        (false, format!("failed: {}", problems.join(", ")))
    }
}

fn secs(s: u64) -> Option<Duration> {
    Some(Duration::from_secs(s))
}

#[test]
fn acceptance_criteria() {
    let out_root = std::env::temp_dir().join(format!("sburgers-acceptance-{}", std::process::id()));
    let out = |tag: &str| -> PathBuf { out_root.join(tag) };
    let mut results: Vec<Criterion> = Vec::new();

    // 1. The direct forward solve and the transform route agree on the
    //    terminal profile, and their gap shrinks under refinement.
    results.push(run_criterion(
        1,
        "forward cross-route agreement",
        secs(60),
        || {
            let config = Scenario::SimulateForward.default_config();
            let report = scenarios::run_simulate_forward(&config, &out("c1"), 1)?;
            Ok(from_report(
                &report,
                &["l2_relative_error", "cross_route_decay_level0"],
            ))
        },
    ));

    // 2. The transform kernel satisfies its characteristic equation at a
    //    thousand random state points, fast.
    results.push(run_criterion(
        2,
        "pointwise kernel identity",
        secs(1),
        || {
            let rng = CounterRng::new(12, 345);
            let mut worst = 0.0f64;
            for k in 0..1000u64 {
                let draw = |j: u64| rng.uniform(4 * k + j);
                let signed = |u: f64| {
                    let sign = if u < 0.5 { -1.0 } else { 1.0 };
                    sign * (0.1 + 1.9 * (2.0 * u - 1.0).abs())
                };
                let sigma = signed(draw(0));
                let y = signed(draw(1));
                let z = 4.0 * draw(2) - 2.0;
                let h = 4.0 * draw(3) - 2.0;
                worst = worst.max(cole_hopf::pde_residual(sigma, 0.0, y, z, h)?.abs());
            }
            Ok((worst <= 1e-10, format!("max residual {worst:.3e}")))
        },
    ));

    // 3. Both closed-form families pass the residual checkers at
    //    second-order decay, and perturbed coefficients are caught.
    results.push(run_criterion(3, "family residual decay", secs(120), || {
        let config = Scenario::VerifyConstraints.default_config();
        let report = scenarios::run_verify_constraints(&config, &out("c3"), 1)?;
        Ok(from_report(
            &report,
            &[
                "exponential_burgers_decay_level0",
                "separable_burgers_decay_level0",
                "exponential_linear_control_separation",
                "separable_noise_control_separation",
            ],
        ))
    }));

    // 4. Terminal compatibility holds for the constant members of both
    //    families: the claim matches the transformed terminal state.
    results.push(run_criterion(4, "terminal compatibility", None, || {
        let grid = Grid::new(-1.0, 1.0, 41, 0.5, 32)?;
        let path = BrownianPath::sample(3, 0, grid);
        let mut worst = 0.0f64;
        for (family, level, claim) in [
            (SolutionFamily::Exponential, 2.0, 2.0),
            (SolutionFamily::Separable, 1.0, 1.0),
        ] {
            let sigma = -1.0;
            let derived = families::constant_family_parameters(family, level, sigma)?.1;
            if (derived - claim).abs() > 0.0 {
                return Ok((false, format!("claim level {derived} instead of {claim}")));
            }
            let profile = Profile::constant(grid, level);
            let v = families::family_solution(family, &profile, &path)?;
            let p = vec![claim; grid.nx()];
            let residual = cole_hopf::terminal_compatibility_residual(
                &p,
                v.value().slice(grid.nt()),
                v.vol().slice(grid.nt()),
                sigma,
                &grid,
            )?;
            worst = worst.max(residual);
        }
        Ok((worst <= 1e-10, format!("max residual {worst:.3e}")))
    }));

    // 5. The forward Monte-Carlo estimate matches the Gaussian moment
    //    oracle within three standard errors, and the lattice solve within
    //    three standard errors plus a discretization margin.
    results.push(run_criterion(
        5,
        "forward sampling oracle",
        secs(30),
        || {
            let config = Scenario::FeynmanKac.default_config();
            let report = scenarios::run_feynman_kac(&config, &out("c5"))?;
            let oracle = scalar(&report, "forward_oracle");
            if (oracle - (0.10625f64).exp()).abs() > 1e-15 {
                return Ok((false, format!("oracle drifted to {oracle:.17}")));
            }
            Ok(from_report(
                &report,
                &["forward_oracle_gap", "forward_lattice_gap"],
            ))
        },
    ));

    // 6. The backward estimators recover the closed growth of the constant
    //    separable member and the claim level of the constant exponential
    //    member, within their sampling bands.
    results.push(run_criterion(
        6,
        "backward sampling oracles",
        secs(60),
        || {
            let config = Scenario::FeynmanKac.default_config();
            let report = scenarios::run_feynman_kac(&config, &out("c6"))?;
            let oracle = scalar(&report, "backward_value_oracle");
            if (oracle - 2.0 * (0.25f64).exp()).abs() > 1e-15 {
                return Ok((false, format!("oracle drifted to {oracle:.17}")));
            }
            Ok(from_report(
                &report,
                &["backward_value_gap", "backward_quotient_gap"],
            ))
        },
    ));

    // 7. One-step residuals of both solution triplets shrink with the
    //    step, and the pathwise transform identity holds on a constant
    //    member.
    results.push(run_criterion(7, "triplet consistency", None, || {
        let config = Scenario::FbsdeCheck.default_config();
        let report = scenarios::run_fbsde_check(&config, &out("c7"), 1)?;
        Ok(from_report(
            &report,
            &[
                "linear_onestep_decay_level0",
                "nonlinear_onestep_decay_level0",
                "transform_identity_gap",
            ],
        ))
    }));

    // 8. The steering and replication applications hit their targets: zero
    //    terminal gaps, exact constant-claim prices, and a replication gap
    //    that vanishes with the step.
    results.push(run_criterion(8, "steering and replication", None, || {
        let steering = scenarios::run_controllability(
            &Scenario::Controllability.default_config(),
            &out("c8"),
        )?;
        let pricing =
            scenarios::run_price_claim(&Scenario::PriceClaim.default_config(), &out("c8"))?;
        let (steer_ok, steer_detail) = from_report(&steering, &["separable_unit_terminal_gap"]);
        let (price_ok, price_detail) = from_report(
            &pricing,
            &[
                "exponential_price_error",
                "separable_price_error",
                "replication_gap_halved",
            ],
        );
        Ok((
            steer_ok && price_ok,
            format!("steering: {steer_detail}; pricing: {price_detail}"),
        ))
    }));

    // 9. Reruns are byte-identical, standard errors halve when samples
    //    quadruple, and the transform ignores gauge rescalings.
    results.push(run_criterion(9, "determinism and sampling", None, || {
        let config = Scenario::VerifyColehopf.default_config();
        let report_a = scenarios::run_verify_colehopf(&config, &out("c9-a"))?;
        let report_b = scenarios::run_verify_colehopf(&config, &out("c9-b"))?;
        let summaries_match = sburgers_cli::export::render_summary_json(&report_a)
            == sburgers_cli::export::render_summary_json(&report_b);
        let csv_a = std::fs::read(out("c9-a").join("verify-colehopf/transformed_field.csv"))
            .map_err(|e| sburgers_cli::CliError::io("c9-a csv", e))?;
        let csv_b = std::fs::read(out("c9-b").join("verify-colehopf/transformed_field.csv"))
            .map_err(|e| sburgers_cli::CliError::io("c9-b csv", e))?;
        if !(summaries_match && csv_a == csv_b) {
            return Ok((false, "reruns differ".to_string()));
        }
        if !check_passed(&report_a, "gauge_invariance_gap") {
            return Ok((false, "gauge invariance failed".to_string()));
        }
        let mc = scenarios::run_feynman_kac(&Scenario::FeynmanKac.default_config(), &out("c9-mc"))?;
        let (ok, detail) = from_report(&mc, &["se_halving_deviation"]);
        Ok((ok, format!("byte-identical reruns; gauge ok; {detail}")))
    }));

    let mut all_passed = true;
    for item in &results {
        let verdict = if item.passed { "PASS" } else { "FAIL" };
        println!(
            "[acceptance] criterion {} ({}): {} — {} [{:.1}s]",
            item.number,
            item.name,
            verdict,
            item.detail,
            item.elapsed.as_secs_f64()
        );
        all_passed &= item.passed;
    }
    let _ = std::fs::remove_dir_all(&out_root);
    assert!(
        all_passed,
        "acceptance criteria failed: {}",
        results
            .iter()
            .filter(|c| !c.passed)
            .map(|c| format!("criterion {} ({}): {}", c.number, c.name, c.detail))
            .collect::<Vec<_>>()
            .join("; ")
    );
}

// Keep the configuration types exercised from the acceptance surface too:
// the default forward family must be the benchmark the first criterion pins.
#[test]
fn the_forward_default_is_the_tanh_benchmark() {
    let config = Scenario::SimulateForward.default_config();
    assert_eq!(config.paths, 8);
    assert_eq!(config.grid.nx, 401);
    assert_eq!(config.grid.nt, 16000);
    match config.family {
        FamilyConfig::Forward {
            initial: ProfileSpec::Tanh { scale },
            gauge,
            ..
        } => {
            assert_eq!(scale, 1.0);
            assert_eq!(gauge, 0.0);
        }
        other => panic!("unexpected default family: {other:?}"),
    }
}
