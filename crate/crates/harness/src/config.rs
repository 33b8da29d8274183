//! `key=value` config files whose entries stand in for command-line flags.
//!
//! ```text
//! # sweep.conf
//! algo=linucb alpha=1 ridge=1
//! sizes=1000,2000,5000,10000
//! seeds=20
//! force=false
//! ```
//!
//! Each entry becomes `--key value` placed before the flags given on the
//! command line, so explicit flags win.

use std::fs;
use std::path::Path;

use crate::error::{HarnessError, Result};

/// Flags that take no value.
const SWITCHES: &[&str] = &["force"];
/// Flags whose value is a whitespace-separated list of tokens.
const MULTI: &[&str] = &["algo"];

pub fn parse_config(text: &str) -> Result<Vec<String>> {
    let mut args = Vec::new();
    for (i, line) in text.lines().enumerate() {
        let line = line.trim();
        if line.is_empty() || line.starts_with('#') {
            continue;
        }
        let (key, value) = line.split_once('=').ok_or_else(|| {
            HarnessError::Spec(format!("config line {}: expected key=value", i + 1))
        })?;
        let (key, value) = (key.trim(), value.trim());
        if key.is_empty() {
            return Err(HarnessError::Spec(format!(
                "config line {}: empty key",
                i + 1
            )));
        }
        let flag = format!("--{key}");
        if SWITCHES.contains(&key) {
            match value {
                "true" | "1" | "yes" => args.push(flag),
                "false" | "0" | "no" => {}
                other => {
                    return Err(HarnessError::Spec(format!(
                        "config line {}: `{other}` is not a boolean",
                        i + 1
                    )))
                }
            }
        } else if MULTI.contains(&key) {
            args.push(flag);
            args.extend(value.split_whitespace().map(str::to_string));
        } else {
            args.push(flag);
            args.push(value.to_string());
        }
    }
    Ok(args)
}

/// Removes `--config FILE` from `argv` and splices the file's flags in right
/// after the subcommand.
pub fn expand_config(argv: Vec<String>) -> Result<Vec<String>> {
    let Some(pos) = argv
        .iter()
        .position(|a| a == "--config" || a.starts_with("--config="))
    else {
        return Ok(argv);
    };
    let mut argv = argv;
    let path = if let Some(p) = argv[pos].strip_prefix("--config=") {
        let p = p.to_string();
        argv.remove(pos);
        p
    } else {
        if pos + 1 >= argv.len() {
            return Err(HarnessError::Spec("--config needs a file".into()));
        }
        let p = argv.remove(pos + 1);
        argv.remove(pos);
        p
    };
    let extra = load_config(&path)?;
    let insert_at = argv
        .iter()
        .skip(1)
        .position(|a| !a.starts_with('-'))
        .map(|i| i + 2)
        .unwrap_or(argv.len());
    let insert_at = insert_at.min(argv.len());
    argv.splice(insert_at..insert_at, extra);
    Ok(argv)
}

pub fn load_config(path: impl AsRef<Path>) -> Result<Vec<String>> {
    parse_config(&fs::read_to_string(path)?)
}
