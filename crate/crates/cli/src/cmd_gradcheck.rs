//! `smelt gradcheck`: finite-difference verification of every backward rule.

use std::io::Write;
use std::path::PathBuf;

use clap::Args;
use smelt::gradcheck::run_gradcheck;
use smelt::model::ModelConfig;
use smelt::Result;

use crate::util::read_model_config;

/// Check every differentiable component against the central-difference
/// oracle and print each component's worst relative error. Exits 0 only
/// if every component clears the tolerance.
#[derive(Args)]
pub struct GradcheckArgs {
    /// Model configuration JSON; omitted, a built-in tiny model is used.
    #[arg(long, value_name = "FILE")]
    config: Option<PathBuf>,
    /// Worst acceptable relative error.
    #[arg(long, default_value_t = 1e-4)]
    tolerance: f64,
    /// Corrupt one named component's analytic gradient before checking
    /// (a self-test hook proving broken backward rules are caught).
    #[arg(long, hide = true, value_name = "COMPONENT")]
    sabotage: Option<String>,
}

pub fn run(args: GradcheckArgs) -> Result<()> {
    let cfg = match &args.config {
        Some(path) => read_model_config(path)?,
        None => ModelConfig::tiny(),
    };
    let report = run_gradcheck(&cfg, args.tolerance, args.sabotage.as_deref())?;

    for check in &report.components {
        let status = if check.passes(report.tolerance) {
            "ok"
        } else {
            "FAIL"
        };
        println!(
            "{}: worst rel err {:.3e} {status}",
            check.name, check.worst_rel_err
        );
    }

    let failures = report.failures();
    if failures.is_empty() {
        println!(
            "gradient check passed: {} components within {:e}",
            report.components.len(),
            report.tolerance
        );
        Ok(())
    } else {
        eprintln!("gradient check failed: {}", failures.join(", "));
        std::io::stdout().flush()?;
        std::process::exit(1);
    }
}
