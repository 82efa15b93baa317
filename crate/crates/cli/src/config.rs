//! `--config` files.
//!
//! A config file is either a JSON object or `key = value` lines (`#` starts a
//! comment). Keys are long flag names without the dashes; `_` and `-` are
//! interchangeable. `true` turns a switch on, `false` leaves it off, and JSON
//! arrays are joined with commas. A `command` key supplies the subcommand when
//! the command line has none.
//!
//! The file's flags are spliced in right after the subcommand, so anything
//! given explicitly on the command line overrides them.

use std::fs;

use crate::CliError;

pub(crate) const SUBCOMMANDS: [&str; 4] = ["evaluate", "optimize", "sweep", "simulate"];

fn normalize_key(key: &str) -> String {
    key.trim().trim_start_matches("--").replace('_', "-")
}

fn push_flag(tokens: &mut Vec<String>, key: &str, value: &str) {
    match value {
        "true" => tokens.push(format!("--{key}")),
        "false" => {}
        _ => {
            tokens.push(format!("--{key}"));
            tokens.push(value.to_string());
        }
    }
}

fn json_value(v: &serde_json::Value) -> Result<String, String> {
    use serde_json::Value;
    match v {
        Value::Bool(b) => Ok(b.to_string()),
        Value::Number(n) => Ok(n.to_string()),
        Value::String(s) => Ok(s.clone()),
        Value::Array(items) => Ok(items
            .iter()
            .map(json_value)
            .collect::<Result<Vec<_>, _>>()?
            .join(",")),
        other => Err(format!("unsupported value {other}")),
    }
}

/// Parses a config file body into `(command, flag tokens)`.
pub(crate) fn parse(text: &str) -> Result<(Option<String>, Vec<String>), String> {
    let mut pairs: Vec<(String, String)> = Vec::new();
    if text.trim_start().starts_with(['{', '[']) {
        let value: serde_json::Value = serde_json::from_str(text).map_err(|e| e.to_string())?;
        let object = value.as_object().ok_or("top level must be an object")?;
        for (k, v) in object {
            pairs.push((
                normalize_key(k),
                json_value(v).map_err(|e| format!("{k}: {e}"))?,
            ));
        }
    } else {
        for (lineno, raw) in text.lines().enumerate() {
            let line = raw.split('#').next().unwrap_or("").trim();
            if line.is_empty() {
                continue;
            }
            let (k, v) = match line.split_once('=') {
                Some((k, v)) => (k, v.trim().trim_matches('"')),
                None => (line, "true"),
            };
            let key = normalize_key(k);
            if key.is_empty() {
                return Err(format!("line {}: missing key", lineno + 1));
            }
            pairs.push((key, v.to_string()));
        }
    }

    let mut command = None;
    let mut tokens = Vec::new();
    for (key, value) in pairs {
        if key == "command" {
            command = Some(value);
        } else if key == "config" {
            return Err("config files cannot include other config files".into());
        } else {
            push_flag(&mut tokens, &key, &value);
        }
    }
    Ok((command, tokens))
}

/// Replaces `--config PATH` in `args` with the file's flags.
pub(crate) fn expand(mut args: Vec<String>) -> Result<Vec<String>, CliError> {
    let mut path = None;
    let mut i = 1;
    while i < args.len() {
        if args[i] == "--config" {
            if i + 1 >= args.len() {
                return Err(CliError::Usage("--config needs a path".into()));
            }
            path = Some(args.remove(i + 1));
            args.remove(i);
        } else if let Some(p) = args[i].strip_prefix("--config=") {
            path = Some(p.to_string());
            args.remove(i);
        } else {
            i += 1;
        }
    }
    let Some(path) = path else { return Ok(args) };
    let text = fs::read_to_string(&path)
        .map_err(|e| CliError::Usage(format!("cannot read config {path}: {e}")))?;
    let (command, tokens) =
        parse(&text).map_err(|e| CliError::Usage(format!("config {path}: {e}")))?;

    let position = args
        .iter()
        .skip(1)
        .position(|a| SUBCOMMANDS.contains(&a.as_str()))
        .map(|p| p + 1);
    let at = match (position, command) {
        (Some(p), _) => p + 1,
        (None, Some(cmd)) => {
            args.insert(1, cmd);
            2
        }
        (None, None) => args.len(),
    };
    args.splice(at..at, tokens);
    Ok(args)
}
