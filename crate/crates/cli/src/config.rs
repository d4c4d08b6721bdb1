//! `--config` files: flat `key = value` lines whose keys are long flag names.
//! Entries are spliced into the argument list right after the subcommand, so
//! flags given on the command line take precedence.

use std::ffi::OsString;
use std::fs;

use clap::{ArgAction, Command};

#[derive(Debug, PartialEq)]
pub struct ConfigError(pub String);

/// Parses config text into `(key, value)` pairs; `#` starts a comment line.
pub fn parse(text: &str) -> Result<Vec<(String, String)>, ConfigError> {
    let mut entries = Vec::new();
    for (lineno, raw) in text.lines().enumerate() {
        let line = raw.trim();
        if line.is_empty() || line.starts_with('#') {
            continue;
        }
        let Some((key, value)) = line.split_once('=') else {
            return Err(ConfigError(format!("config line {}: expected 'key = value'", lineno + 1)));
        };
        let key = key.trim().trim_start_matches("--").replace('_', "-");
        let value = value.trim().trim_matches('"').to_string();
        if key.is_empty() {
            return Err(ConfigError(format!("config line {}: empty key", lineno + 1)));
        }
        entries.push((key, value));
    }
    Ok(entries)
}

fn config_path(argv: &[OsString]) -> Option<OsString> {
    let mut it = argv.iter().skip(1);
    while let Some(arg) = it.next() {
        let s = arg.to_string_lossy();
        if s == "--" {
            return None;
        }
        if s == "--config" {
            return it.next().cloned();
        }
        if let Some(path) = s.strip_prefix("--config=") {
            return Some(path.into());
        }
    }
    None
}

fn mentions_flag(user_args: &[OsString], key: &str) -> bool {
    let flag = format!("--{key}");
    let with_value = format!("--{key}=");
    user_args.iter().any(|a| {
        let s = a.to_string_lossy();
        s == flag.as_str() || s.starts_with(&with_value)
    })
}

/// Returns `argv` with the entries of the `--config` file (if any) inserted
/// after the subcommand name.
pub fn expand(argv: Vec<OsString>, cmd: &Command) -> Result<Vec<OsString>, ConfigError> {
    let Some(path) = config_path(&argv) else {
        return Ok(argv);
    };
    let text = fs::read_to_string(&path)
        .map_err(|e| ConfigError(format!("cannot read config file {}: {e}", path.to_string_lossy())))?;
    let entries = parse(&text)?;

    let Some(pos) = argv.iter().position(|a| cmd.find_subcommand(a).is_some()) else {
        return Ok(argv);
    };
    let sub = cmd.find_subcommand(&argv[pos]).expect("position found above");
    let known_elsewhere =
        |key: &str| cmd.get_subcommands().any(|s| s.get_arguments().any(|a| a.get_long() == Some(key)));

    let mut injected = Vec::new();
    for (key, value) in entries {
        if key == "config" {
            continue;
        }
        let Some(arg) = sub.get_arguments().find(|a| a.get_long() == Some(key.as_str())) else {
            if known_elsewhere(&key) {
                continue;
            }
            return Err(ConfigError(format!("unknown config key '{key}'")));
        };
        if mentions_flag(&argv[pos + 1..], &key) {
            continue;
        }
        if matches!(arg.get_action(), ArgAction::SetTrue) {
            match value.to_ascii_lowercase().as_str() {
                "true" | "yes" | "1" | "on" => injected.push(OsString::from(format!("--{key}"))),
                "false" | "no" | "0" | "off" => {}
                _ => return Err(ConfigError(format!("config key '{key}' expects true or false, got '{value}'"))),
            }
        } else {
            injected.push(OsString::from(format!("--{key}={value}")));
        }
    }

    let mut out = argv;
    out.splice(pos + 1..pos + 1, injected);
    Ok(out)
}
