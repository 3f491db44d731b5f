//! `--config file.json` supplies flag values. Each key becomes `--key=value`
//! placed before the user's own flags, so the command line wins.

use std::ffi::OsString;
use std::path::PathBuf;

use clap::Command;
use serde_json::Value;

use crate::error::CliError;

fn config_err(line: usize, message: impl Into<String>) -> CliError {
    CliError::Solver(oufet::Error::Config { line, message: message.into() })
}

/// 1-based line of `"key":` in the source text.
fn key_line(text: &str, key: &str) -> usize {
    let pat = format!("\"{key}\"");
    let mut from = 0;
    while let Some(i) = text[from..].find(&pat) {
        let at = from + i;
        let rest = text[at + pat.len()..].trim_start();
        if rest.starts_with(':') {
            return text[..at].matches('\n').count() + 1;
        }
        from = at + pat.len();
    }
    1
}

fn config_path(args: &[String]) -> Option<PathBuf> {
    let mut it = args.iter();
    while let Some(a) = it.next() {
        if a == "--config" {
            return it.next().map(PathBuf::from);
        }
        if let Some(p) = a.strip_prefix("--config=") {
            return Some(PathBuf::from(p));
        }
    }
    None
}

fn value_string(v: &Value) -> Option<String> {
    match v {
        Value::Number(n) => Some(n.to_string()),
        Value::String(s) => Some(s.clone()),
        Value::Array(items) => {
            let parts: Option<Vec<String>> = items
                .iter()
                .map(|x| match x {
                    Value::Number(n) => Some(n.to_string()),
                    Value::String(s) => Some(s.clone()),
                    _ => None,
                })
                .collect();
            parts.filter(|p| !p.is_empty()).map(|p| p.join(","))
        }
        _ => None,
    }
}

/// Flags generated from the config text for subcommand `sub`.
pub fn config_flags(cmd: &Command, sub: &str, text: &str) -> Result<Vec<String>, CliError> {
    let root: Value = serde_json::from_str(text).map_err(|e| config_err(e.line(), e.to_string()))?;
    let Value::Object(map) = root else {
        return Err(config_err(1, "config must be a JSON object"));
    };
    let sc = cmd.find_subcommand(sub).expect("known subcommand");
    let mut flags = Vec::new();
    for (key, v) in &map {
        let line = key_line(text, key);
        let long = key.replace('_', "-");
        if long == "config" {
            return Err(config_err(line, "a config file cannot name another config file"));
        }
        let Some(arg) = sc.get_arguments().find(|a| a.get_long() == Some(long.as_str())) else {
            return Err(config_err(line, format!("unknown key '{key}' for {sub}")));
        };
        let flag = if arg.get_action().takes_values() {
            match value_string(v) {
                Some(s) => format!("--{long}={s}"),
                None => return Err(config_err(line, format!("'{key}' expects a number, string or list"))),
            }
        } else {
            match v {
                Value::Bool(true) => format!("--{long}"),
                Value::Bool(false) => continue,
                _ => return Err(config_err(line, format!("'{key}' expects true or false"))),
            }
        };
        if let Err(e) = sc.clone().try_get_matches_from([sub, flag.as_str()]) {
            let msg = e.to_string();
            let first = msg.lines().next().unwrap_or("invalid value").trim_start_matches("error: ").to_string();
            return Err(config_err(line, first));
        }
        flags.push(flag);
    }
    Ok(flags)
}

/// argv with the config-file flags spliced in after the subcommand name.
pub fn expand(cmd: &Command, argv: Vec<OsString>) -> Result<Vec<OsString>, CliError> {
    let args: Vec<String> = argv.iter().map(|a| a.to_string_lossy().into_owned()).collect();
    let Some(sub) = args.get(1) else { return Ok(argv) };
    if sub == "specfun" || cmd.find_subcommand(sub).is_none() {
        return Ok(argv);
    }
    let Some(path) = config_path(&args[2..]) else { return Ok(argv) };
    let text = std::fs::read_to_string(&path).map_err(|e| CliError::Io(e, path.clone()))?;
    let flags = config_flags(cmd, sub, &text)?;
    let mut out: Vec<OsString> = argv[..2].to_vec();
    out.extend(flags.into_iter().map(OsString::from));
    out.extend(argv[2..].iter().cloned());
    Ok(out)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn finds_the_key_line() {
        let text = "{\n  \"kappa\": 2,\n  \"note\": \"kappa\",\n  \"phi\" : 0.5\n}";
        assert_eq!(key_line(text, "kappa"), 2);
        assert_eq!(key_line(text, "phi"), 4);
    }

    #[test]
    fn lists_become_comma_separated() {
        let v: Value = serde_json::from_str("[0.1, 0.5, 1]").unwrap();
        assert_eq!(value_string(&v).unwrap(), "0.1,0.5,1");
        assert!(value_string(&Value::Null).is_none());
    }
}
