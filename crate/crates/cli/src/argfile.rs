//! `@file` argument expansion.
//!
//! Any argument of the form `@path` is replaced by the arguments listed in
//! that file, one per line; blank lines and `#` comments are skipped. Lines
//! may themselves name further files, up to a small nesting bound. A
//! literal leading `@` can be passed as `@@`.

use crate::error::{io_at, CliError};
use std::path::Path;

const MAX_DEPTH: usize = 8;

/// Expands `@file` references in a raw argument list.
pub fn expand<I>(args: I) -> Result<Vec<String>, CliError>
where
    I: IntoIterator<Item = String>,
{
    let mut out = Vec::new();
    for arg in args {
        push_expanded(&arg, 0, &mut out)?;
    }
    Ok(out)
}

fn push_expanded(arg: &str, depth: usize, out: &mut Vec<String>) -> Result<(), CliError> {
    if let Some(rest) = arg.strip_prefix("@@") {
        out.push(format!("@{rest}"));
        return Ok(());
    }
    let Some(path) = arg.strip_prefix('@') else {
        out.push(String::from(arg));
        return Ok(());
    };
    if depth >= MAX_DEPTH {
        return Err(CliError::contract(format!(
            "flags files nest deeper than {MAX_DEPTH} at {path}"
        )));
    }
    let path = Path::new(path);
    let text = io_at(std::fs::read_to_string(path), "reading flags file", path)?;
    for line in text.lines() {
        let line = line.trim();
        if line.is_empty() || line.starts_with('#') {
            continue;
        }
        push_expanded(line, depth + 1, out)?;
    }
    Ok(())
}
