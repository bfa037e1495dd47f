use std::fmt::Write as _;
use std::fs;
use std::io::Write;
use std::path::{Path, PathBuf};
use std::str::FromStr;

use serde::Serialize;

use super::output::{run_scenario, RunOutput};
use super::scenario::{LoadError, ScenarioFile};
use super::{EXIT_FAILURE, EXIT_OK, EXIT_PHYSICS, EXIT_SCHEMA};
use crate::verify::{
    run_demonstration, sweep_holography_mimic, sweep_oracle, sweep_product_mimic, sweep_unitary_reference,
    SweepConfig, SweepReport, SEED_MIXING,
};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum Format {
    #[default]
    Json,
    Csv,
}

impl FromStr for Format {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s {
            "json" => Ok(Self::Json),
            "csv" => Ok(Self::Csv),
            other => Err(format!("unknown format '{other}' (expected json or csv)")),
        }
    }
}

/// Runs one scenario file. With `expect`, the fresh output must match the
/// given JSON file byte for byte.
pub fn cmd_run(
    scenario_path: &Path,
    out_path: Option<&Path>,
    format: Format,
    expect: Option<&Path>,
    stdout: &mut dyn Write,
    stderr: &mut dyn Write,
) -> i32 {
    let text = match fs::read_to_string(scenario_path) {
        Ok(t) => t,
        Err(e) => {
            let _ = writeln!(stderr, "error: {}", LoadError::Io(format!("{}: {e}", scenario_path.display())));
            return EXIT_SCHEMA;
        }
    };
    let scenario = match ScenarioFile::from_json(&text).and_then(|f| f.load()) {
        Ok(s) => s,
        Err(e) => {
            let _ = writeln!(stderr, "error: {e}");
            return match e {
                LoadError::Physics { .. } => EXIT_PHYSICS,
                _ => EXIT_SCHEMA,
            };
        }
    };
    let output = match run_scenario(&scenario) {
        Ok(o) => o,
        Err(e) => {
            let _ = writeln!(stderr, "error: {e}");
            return EXIT_PHYSICS;
        }
    };
    let rendered = match format {
        Format::Json => output.to_json(),
        Format::Csv => output.to_csv(),
    };
    let written = match out_path {
        Some(p) => fs::write(p, &rendered).map_err(|e| format!("{}: {e}", p.display())),
        None => stdout.write_all(rendered.as_bytes()).map_err(|e| e.to_string()),
    };
    if let Err(e) = written {
        let _ = writeln!(stderr, "error: cannot write output: {e}");
        return EXIT_FAILURE;
    }

    if let Some(expect) = expect {
        let expected = match fs::read_to_string(expect) {
            Ok(t) => t,
            Err(e) => {
                let _ = writeln!(stderr, "error: cannot read {}: {e}", expect.display());
                return EXIT_SCHEMA;
            }
        };
        let parsed = match RunOutput::from_json(&expected) {
            Ok(p) => p,
            Err(e) => {
                let _ = writeln!(stderr, "error: expected-values file {}: {e}", expect.display());
                return EXIT_SCHEMA;
            }
        };
        if parsed.to_json() != output.to_json() {
            let _ = writeln!(stderr, "mismatch: output differs from {}", expect.display());
            return EXIT_FAILURE;
        }
    }
    EXIT_OK
}

#[derive(Debug, Clone, PartialEq, Default)]
pub struct VerifyOptions {
    pub config: SweepConfig,
    /// Writes every sweep report as a JSON array.
    pub json_out: Option<PathBuf>,
}

/// Oracle sweeps get half as many trials per dimension pair as the theorem sweeps.
pub fn oracle_config(cfg: &SweepConfig) -> SweepConfig {
    SweepConfig { trials: (cfg.trials / 2).max(1), ..*cfg }
}

/// Runs every sweep and prints a summary table. Exit 0 iff all pass.
pub fn cmd_verify(opts: &VerifyOptions, stdout: &mut dyn Write, stderr: &mut dyn Write) -> i32 {
    let cfg = opts.config;
    let results = [
        sweep_unitary_reference(&cfg),
        sweep_holography_mimic(&cfg),
        sweep_product_mimic(&cfg),
        sweep_oracle(&oracle_config(&cfg)),
    ];
    let mut reports = Vec::new();
    for r in results {
        match r {
            Ok(rep) => reports.push(rep),
            Err(e) => {
                let _ = writeln!(stderr, "error: {e}");
                return EXIT_SCHEMA;
            }
        }
    }
    let _ = stdout.write_all(verify_table(&cfg, &reports).as_bytes());

    if let Some(path) = &opts.json_out {
        if let Err(e) = fs::write(path, to_pretty_json(&reports)) {
            let _ = writeln!(stderr, "error: cannot write {}: {e}", path.display());
            return EXIT_FAILURE;
        }
    }
    if reports.iter().all(|r| r.passed) {
        EXIT_OK
    } else {
        EXIT_FAILURE
    }
}

fn to_pretty_json<T: Serialize>(v: &T) -> String {
    let mut s = serde_json::to_string_pretty(v).expect("report serialization cannot fail");
    s.push('\n');
    s
}

/// Deterministic text summary of a set of sweep reports.
pub fn verify_table(cfg: &SweepConfig, reports: &[SweepReport]) -> String {
    let mut s = String::new();
    let _ = writeln!(
        s,
        "biphoton verify  seed={} trials={} dims={}..{} tol={:e} algebraic_tol={:e}",
        cfg.seed,
        cfg.trials,
        cfg.dims.0,
        cfg.dims.1,
        cfg.tol,
        cfg.algebraic_tol()
    );
    let _ = writeln!(s, "{SEED_MIXING}");
    let _ = writeln!(s);
    let _ = writeln!(
        s,
        "{:<20} {:>7} {:>14} {:>14} {:>9} {:>9}  status",
        "sweep", "trials", "max deviation", "loss identity", "skipped", "failures"
    );
    for r in reports {
        let executed = if r.name == "oracle_agreement" {
            // trials per dimension pair
            format!("{}/pair", r.trials)
        } else {
            r.trials.to_string()
        };
        let _ = writeln!(
            s,
            "{:<20} {:>7} {:>14.3e} {:>14.3e} {:>9} {:>9}  {}",
            r.name,
            executed,
            r.max_deviation,
            r.max_loss_identity_deviation,
            r.out_of_contract,
            r.failures.len(),
            if r.passed { "PASS" } else { "FAIL" }
        );
    }

    let controls: Vec<_> = reports.iter().flat_map(|r| r.controls.iter().map(move |c| (r, c))).collect();
    if !controls.is_empty() {
        let _ = writeln!(s);
        let _ = writeln!(s, "expected failures (controls outside the theorem's preconditions):");
        for (r, c) in controls {
            let _ = writeln!(
                s,
                "  {}/{}: deviation {:.3e}  {}  [{}]",
                r.name,
                c.name,
                c.deviation,
                if c.confirmed { "confirmed" } else { "NOT CONFIRMED" },
                c.expectation
            );
        }
    }

    let failing: Vec<_> = reports.iter().filter(|r| !r.failures.is_empty()).collect();
    if !failing.is_empty() {
        let _ = writeln!(s);
        let _ = writeln!(s, "unexpected failures:");
        for r in failing {
            for f in r.failures.iter().take(5) {
                let _ = writeln!(
                    s,
                    "  {} trial {}: {} = {:.3e} > {:.1e}",
                    r.name, f.trial, f.check, f.deviation, f.tolerance
                );
            }
            if r.failures.len() > 5 {
                let _ = writeln!(s, "  {} ... and {} more", r.name, r.failures.len() - 5);
            }
        }
    }
    s
}

/// Runs the four-mode demonstration and prints its tables.
pub fn cmd_demo(json_out: Option<&Path>, stdout: &mut dyn Write, stderr: &mut dyn Write) -> i32 {
    match run_demonstration() {
        Ok(rep) => {
            let _ = stdout.write_all(rep.summary().as_bytes());
            if let Some(p) = json_out {
                let mut text = rep.to_json();
                text.push('\n');
                if let Err(e) = fs::write(p, text) {
                    let _ = writeln!(stderr, "error: cannot write {}: {e}", p.display());
                    return EXIT_FAILURE;
                }
            }
            EXIT_OK
        }
        Err(e) => {
            let _ = writeln!(stderr, "demonstration failed: {e}");
            EXIT_FAILURE
        }
    }
}
