//! Command-line pipeline for multi-perspective code search: normalize a
//! snippet corpus, build transform-focused pair datasets, train encoder
//! and ensemble scorers, and rank snippets for natural-language queries.
//!
//! Every command takes its configuration from explicit flags (or an
//! `@file` holding one argument per line) — no environment variables —
//! and records a run manifest with input/output hashes on success.
//! Failures print one machine-parsable JSON line on standard error and
//! exit with a code identifying the failure class: 10 for I/O problems,
//! 11 for contract violations (malformed inputs, hash mismatches), 12
//! for aborted divergent training runs.

pub mod argfile;
pub mod artifact;
pub mod commands;
pub mod error;
pub mod formats;
pub mod manifest;

use clap::Parser;

use commands::Cli;
use error::CliError;

/// Parses and runs one invocation; returns the process exit code.
/// `raw` includes the program name (`argv[0]`).
pub fn run<I: IntoIterator<Item = String>>(raw: I) -> i32 {
    let argv = match argfile::expand(raw) {
        Ok(argv) => argv,
        Err(err) => return report(&err),
    };
    let cli = match Cli::try_parse_from(&argv) {
        Ok(cli) => cli,
        Err(err) => {
            // clap handles --help/--version (exit 0) and usage errors
            // (exit 2) with its own rendering.
            let _ = err.print();
            return err.exit_code();
        }
    };
    match commands::dispatch(cli, &argv[1..]) {
        Ok(()) => 0,
        Err(err) => report(&err),
    }
}

/// Prints the one-line machine-parsable error record.
fn report(err: &CliError) -> i32 {
    let line = serde_json::json!({
        "error": err.class(),
        "message": err.to_string(),
    });
    eprintln!("{line}");
    err.exit_code()
}
