use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Parser, Subcommand};

use biphoton::cli::{cmd_demo, cmd_run, cmd_verify, Format, VerifyOptions, DEFAULT_SEED, SEED_ENV};
use biphoton::verify::SweepConfig;
use biphoton::THEOREM_TOL;

#[derive(Debug, Parser)]
#[command(name = "biphoton", version, about = "Two-photon imaging with bucket detection: scenarios, sweeps, demo")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Debug, Subcommand)]
enum Command {
    /// Evaluate a scenario file.
    Run {
        scenario: PathBuf,
        /// Write results here instead of stdout.
        #[arg(long)]
        out: Option<PathBuf>,
        #[arg(long, default_value = "json")]
        format: Format,
        /// Compare against a previous JSON output; exit 1 on any difference.
        #[arg(long)]
        expect: Option<PathBuf>,
    },
    /// Run the randomized equivalence sweeps and the oracle comparison.
    Verify {
        #[arg(long, default_value_t = 200)]
        trials: usize,
        /// Inclusive mode-count range, e.g. 2..6.
        #[arg(long, default_value = "2..6", value_parser = parse_dims)]
        dims: (usize, usize),
        #[arg(long, env = SEED_ENV, default_value_t = DEFAULT_SEED)]
        seed: u64,
        #[arg(long, default_value_t = THEOREM_TOL)]
        tol: f64,
        /// Write all sweep reports as JSON.
        #[arg(long)]
        json: Option<PathBuf>,
    },
    /// Four-mode entangled-state demonstration.
    Demo {
        #[arg(long)]
        json: Option<PathBuf>,
    },
}

fn parse_dims(s: &str) -> Result<(usize, usize), String> {
    let (a, b) = s
        .split_once("..")
        .ok_or_else(|| format!("expected A..B, got '{s}'"))?;
    let lo: usize = a.trim().parse().map_err(|e| format!("bad lower bound: {e}"))?;
    let hi: usize = b.trim().trim_start_matches('=').parse().map_err(|e| format!("bad upper bound: {e}"))?;
    if lo == 0 || lo > hi {
        return Err(format!("need 1 <= A <= B, got {lo}..{hi}"));
    }
    Ok((lo, hi))
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    let mut stdout = std::io::stdout().lock();
    let mut stderr = std::io::stderr().lock();
    let code = match cli.command {
        Command::Run { scenario, out, format, expect } => {
            cmd_run(&scenario, out.as_deref(), format, expect.as_deref(), &mut stdout, &mut stderr)
        }
        Command::Verify { trials, dims, seed, tol, json } => {
            let opts = VerifyOptions { config: SweepConfig { trials, dims, seed, tol }, json_out: json };
            cmd_verify(&opts, &mut stdout, &mut stderr)
        }
        Command::Demo { json } => cmd_demo(json.as_deref(), &mut stdout, &mut stderr),
    };
    ExitCode::from(code as u8)
}
