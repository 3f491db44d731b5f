use std::path::PathBuf;

use serde_json::{json, Value};

#[derive(Debug)]
pub enum CliError {
    Usage(String),
    Solver(oufet::Error),
    Io(std::io::Error, PathBuf),
    /// A figure-pack panel failed; the panel name is kept for the report.
    Panel(String, Box<CliError>),
}

impl From<oufet::Error> for CliError {
    fn from(e: oufet::Error) -> Self {
        CliError::Solver(e)
    }
}

pub fn usage<T>(msg: impl Into<String>) -> Result<T, CliError> {
    Err(CliError::Usage(msg.into()))
}

fn solver_kind(e: &oufet::Error) -> &'static str {
    use oufet::Error::*;
    match e {
        Domain(_) => "domain",
        NonConvergence { .. } => "non_convergence",
        Quadrature { .. } => "quadrature",
        RootFinding { .. } => "root_finding",
        MissedRoot { .. } => "missed_root",
        Conditioning { .. } => "conditioning",
        Config { .. } => "config",
        AllCensored(_) => "all_censored",
        Table(_) => "table",
        Io(_) => "io",
        Json(_) => "json",
    }
}

impl CliError {
    pub fn exit_code(&self) -> i32 {
        match self {
            // out-of-domain input is an invalid request, not a solver failure
            CliError::Usage(_) | CliError::Solver(oufet::Error::Config { .. } | oufet::Error::Domain(_)) => 2,
            CliError::Panel(_, inner) => inner.exit_code(),
            _ => 1,
        }
    }

    pub fn to_json(&self) -> Value {
        let mut body = match self {
            CliError::Usage(m) => json!({ "kind": "usage", "message": m }),
            CliError::Solver(e) => {
                let mut v = json!({ "kind": solver_kind(e), "message": e.to_string() });
                if let oufet::Error::Config { line, .. } = e {
                    v["line"] = json!(line);
                }
                v
            }
            CliError::Io(e, p) => json!({ "kind": "io", "message": e.to_string(), "path": p.display().to_string() }),
            CliError::Panel(name, inner) => {
                let mut v = inner.to_json()["error"].clone();
                v["panel"] = json!(name);
                v
            }
        };
        body["exit_code"] = json!(self.exit_code());
        json!({ "error": body })
    }
}
