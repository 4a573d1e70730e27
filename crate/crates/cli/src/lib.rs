//! IO layer for the mutualism toolkit: configuration, CSV/JSON output, the
//! command implementations and the replicate worker pool. Everything here is
//! deterministic end to end — identical configs produce identical output
//! bytes, regardless of worker count.

pub mod commands;
pub mod config;
pub mod manifest;
pub mod output;
pub mod parallel;

use std::fmt;

use config::ConfigError;
use mutualism_core::CoreError;

/// Top-level failure modes, mapped onto the exit-code contract:
/// 1 validation, 2 numerical/runtime, 3 verification (via `Ok(3)`, not an
/// error).
#[derive(Debug)]
pub enum CliError {
    Usage(String),
    Config(ConfigError),
    Core(CoreError),
    Io { path: String, detail: String },
}

impl CliError {
    pub fn exit_code(&self) -> i32 {
        match self {
            CliError::Usage(_) | CliError::Config(_) => 1,
            CliError::Core(_) | CliError::Io { .. } => 2,
        }
    }

    /// Machine-readable error report, printed to stderr.
    pub fn to_json(&self) -> String {
        let body = match self {
            CliError::Usage(msg) => serde_json::json!({
                "kind": "usage",
                "message": msg,
            }),
            CliError::Config(e) => serde_json::json!({
                "kind": e.kind(),
                "key": e.key(),
                "where": e.location(),
                "message": e.to_string(),
            }),
            CliError::Core(e) => serde_json::json!({
                "kind": "numerical",
                "message": e.to_string(),
            }),
            CliError::Io { path, detail } => serde_json::json!({
                "kind": "io",
                "path": path,
                "message": detail,
            }),
        };
        serde_json::to_string(&serde_json::json!({ "error": body })).expect("static json")
    }
}

impl fmt::Display for CliError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            CliError::Usage(m) => write!(f, "{m}"),
            CliError::Config(e) => write!(f, "{e}"),
            CliError::Core(e) => write!(f, "{e}"),
            CliError::Io { path, detail } => write!(f, "{path}: {detail}"),
        }
    }
}

impl From<ConfigError> for CliError {
    fn from(e: ConfigError) -> Self {
        CliError::Config(e)
    }
}

impl From<CoreError> for CliError {
    fn from(e: CoreError) -> Self {
        CliError::Core(e)
    }
}

pub const USAGE: &str = "usage: mutualism <command> [--config FILE] [--workers N] [--KEY VALUE]...

commands:
  classify          print the regime classification as JSON to stdout
  equilibria        solve for all equilibria and write equilibria.json
  simulate          integrate one trajectory and write trajectory.csv
  ensemble          run a replicate ensemble; write replicates.csv + summary.json
  verify-envelopes  check the pathwise envelope sandwich; exit 3 on violation
  converge          strong-convergence study on the geometric reduction; exit 3 if orders are off
  figure            run the four preset panels and write panel_[a-d].csv + panels.json

KEY is any config key (r1, r2, b1, b2, k1, k2, eps1, eps2, alpha1, alpha2,
x0, y0, scheme, dt, t_end, t_burn, seed, replicates, k_list, epsilon,
out_dir); flags override file values.";

/// Parses argv (program name already stripped) and runs the command.
pub fn run_main(args: &[String]) -> Result<i32, CliError> {
    let cli = config::parse_args(args)?;
    commands::dispatch(&cli)
}
