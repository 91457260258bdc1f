//! Command-line front end: every library capability as a JSON report.
//!
//! Exit codes: 0 computed, 1 a check returned `NotGuaranteed`, 2 usage or
//! parse error, 3 numerical domain error.

pub mod args;
pub mod commands;
pub mod config;
pub mod error;

use std::ffi::OsString;
use std::fs;

use clap::error::ErrorKind as ClapKind;
use clap::Parser;
use serde_json::{json, Value};

pub use args::Cli;
pub use commands::{fill_defaults, read_config, resolve, run, Output, Status};
pub use config::RunConfig;
pub use error::{CliError, ErrorKind};

pub const SCHEMA: &str = sobolev::SCHEMA_VERSION;

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Outcome {
    pub code: i32,
    pub stdout: String,
}

/// `{schema, command, status, config, report}` with an optional trace.
pub fn envelope(config: &RunConfig, output: &Output, pretty: bool) -> Value {
    let mut v = json!({
        "schema": SCHEMA,
        "command": config.command_name(),
        "status": match output.status {
            Status::Computed => "computed",
            Status::NotGuaranteed => "not-guaranteed",
        },
        "config": config,
        "report": output.report,
    });
    if pretty {
        if let Some(trace) = &output.trace {
            v["trace"] = json!(trace);
        }
    }
    v
}

pub fn error_envelope(command: Option<&str>, error: &CliError) -> Value {
    let mut v = json!({ "schema": SCHEMA, "error": error });
    if let Some(c) = command {
        v["command"] = json!(c);
    }
    v
}

fn render(v: &Value, pretty: bool) -> String {
    let text = if pretty {
        serde_json::to_string_pretty(v)
    } else {
        serde_json::to_string(v)
    };
    text.unwrap_or_else(|e| format!("{{\"schema\":\"{SCHEMA}\",\"error\":{{\"kind\":\"numerical\",\"message\":\"{e}\"}}}}"))
}

/// Parses `argv` (program name first), runs the command and renders the report.
pub fn execute<I, T>(argv: I) -> Outcome
where
    I: IntoIterator<Item = T>,
    T: Into<OsString> + Clone,
{
    let cli = match Cli::try_parse_from(argv) {
        Ok(cli) => cli,
        Err(e) if matches!(e.kind(), ClapKind::DisplayHelp | ClapKind::DisplayVersion) => {
            return Outcome {
                code: 0,
                stdout: e.to_string(),
            }
        }
        Err(e) => {
            let err = CliError::usage(e.to_string().trim_end());
            return Outcome {
                code: err.kind.exit_code(),
                stdout: render(&error_envelope(None, &err), false) + "\n",
            };
        }
    };
    let pretty = cli.pretty;
    let (code, value) = match resolve(cli.command) {
        Err(e) => (e.kind.exit_code(), error_envelope(None, &e)),
        Ok(config) => match run(&config) {
            Ok(out) => (out.status.exit_code(), envelope(&config, &out, pretty)),
            Err(e) => (e.kind.exit_code(), error_envelope(Some(config.command_name()), &e)),
        },
    };
    let text = render(&value, pretty) + "\n";
    if let Some(path) = &cli.output {
        if let Err(e) = fs::write(path, &text) {
            let err = CliError::usage(format!("cannot write {}: {e}", path.display()));
            return Outcome {
                code: err.kind.exit_code(),
                stdout: render(&error_envelope(None, &err), pretty) + "\n",
            };
        }
    }
    Outcome { code, stdout: text }
}
