//! Scenario files, output formats, and the `run` / `verify` / `demo` commands.

pub mod commands;
pub mod output;
pub mod scenario;

pub use commands::{cmd_demo, cmd_run, cmd_verify, Format, VerifyOptions};
pub use output::{run_scenario, RunOutput};
pub use scenario::{Analysis, LoadError, Scenario, ScenarioFile};

/// Success.
pub const EXIT_OK: i32 = 0;
/// A check or sweep failed.
pub const EXIT_FAILURE: i32 = 1;
/// Unreadable or schema-invalid input.
pub const EXIT_SCHEMA: i32 = 2;
/// Input parsed but violates a physical constraint.
pub const EXIT_PHYSICS: i32 = 3;

/// Environment variable overriding the default sweep seed.
pub const SEED_ENV: &str = "BIPHOTON_SEED";
pub const DEFAULT_SEED: u64 = 42;
