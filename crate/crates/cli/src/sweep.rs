//! Parameter values on the command line: a number, a range `lo..hi`, or a
//! list `a,b,c`. At most one parameter per run may take several values.

use std::collections::BTreeMap;
use std::sync::atomic::{AtomicUsize, Ordering};

use clap::parser::ValueSource;
use clap::ArgMatches;
use oufet::spectral::{SpectralValue, SpectralWarning};
use rayon::prelude::*;

use crate::error::{usage, CliError};

#[derive(Clone, Debug, PartialEq)]
pub enum Param {
    Scalar(f64),
    Range(f64, f64),
    List(Vec<f64>),
}

fn number(s: &str) -> Result<f64, String> {
    let v: f64 = s.trim().parse().map_err(|_| format!("'{s}' is not a number"))?;
    if v.is_finite() {
        Ok(v)
    } else {
        Err(format!("'{s}' is not finite"))
    }
}

impl Param {
    pub fn parse(s: &str) -> Result<Param, String> {
        if let Some((a, b)) = s.split_once("..") {
            return Ok(Param::Range(number(a)?, number(b)?));
        }
        if s.contains(',') {
            return s.split(',').map(number).collect::<Result<_, _>>().map(Param::List);
        }
        number(s).map(Param::Scalar)
    }

    pub fn values(&self, count: usize, log: bool) -> Result<Vec<f64>, CliError> {
        match *self {
            Param::Scalar(v) => Ok(vec![v]),
            Param::List(ref v) => Ok(v.clone()),
            Param::Range(lo, hi) => {
                if count < 2 {
                    return usage("a range needs --count of at least 2");
                }
                if log && !(lo > 0.0 && hi > 0.0) {
                    return usage(format!("--log needs a positive range, got {lo}..{hi}"));
                }
                let n = count - 1;
                Ok((0..count)
                    .map(|i| {
                        let f = i as f64 / n as f64;
                        if i == n {
                            hi
                        } else if log {
                            lo * (hi / lo).powf(f)
                        } else {
                            lo + (hi - lo) * f
                        }
                    })
                    .collect())
            }
        }
    }
}

/// Which parameter is swept, its values, the optional column parameter,
/// and the fixed values of everything else.
#[derive(Clone, Debug)]
pub struct Plan {
    pub fixed: BTreeMap<String, f64>,
    pub sweep: String,
    pub xs: Vec<f64>,
    pub columns: Option<(String, Vec<f64>)>,
}

/// `defaults` lists parameters whose default is a range, with the scalar
/// they fall back to when some other parameter is swept instead.
pub fn plan(m: &ArgMatches, names: &[&str], column: Option<&str>, defaults: &[(&str, f64)]) -> Result<Plan, CliError> {
    let count = *m.get_one::<usize>("count").expect("count");
    let log = m.get_flag("log");
    let mut fixed = BTreeMap::new();
    let mut explicit = Vec::new();
    let mut defaulted = Vec::new();
    let mut columns = None;
    for &n in names {
        let Some(p) = m.get_one::<Param>(n) else { continue };
        let given = m.value_source(n) != Some(ValueSource::DefaultValue);
        match p {
            Param::Scalar(v) => {
                fixed.insert(n.to_string(), *v);
            }
            Param::List(v) if Some(n) == column => columns = Some((n.to_string(), v.clone())),
            other if given => explicit.push((n, other.clone())),
            other => defaulted.push((n, other.clone())),
        }
    }
    if explicit.len() > 1 {
        let which: Vec<String> = explicit.iter().map(|(n, _)| format!("--{}", n.replace('_', "-"))).collect();
        return usage(format!("only one parameter may be swept, got {}", which.join(" and ")));
    }
    let chosen = match explicit.pop() {
        Some(e) => Some(e),
        None => defaults.iter().find_map(|&(d, _)| defaulted.iter().find(|(n, _)| *n == d).cloned()),
    };
    for (n, _) in &defaulted {
        if chosen.as_ref().is_some_and(|(c, _)| c == n) {
            continue;
        }
        let Some(&(_, fb)) = defaults.iter().find(|(d, _)| d == n) else {
            return usage(format!("--{} needs a single value here", n.replace('_', "-")));
        };
        fixed.insert(n.to_string(), fb);
    }
    let (sweep, xs) = match chosen {
        Some((n, p)) => (n.to_string(), p.values(count, log)?),
        None => match columns.take() {
            Some(c) => c,
            None => {
                let n = names.iter().find(|n| fixed.contains_key(**n)).expect("at least one parameter");
                (n.to_string(), vec![fixed[*n]])
            }
        },
    };
    fixed.remove(&sweep);
    Ok(Plan { fixed, sweep, xs, columns })
}

#[derive(Clone, Copy)]
pub struct Point<'a> {
    plan: &'a Plan,
    x: f64,
    col: Option<f64>,
}

impl Point<'_> {
    pub fn get(&self, name: &str) -> f64 {
        if name == self.plan.sweep {
            return self.x;
        }
        if let (Some((c, _)), Some(v)) = (&self.plan.columns, self.col) {
            if c == name {
                return v;
            }
        }
        *self.plan.fixed.get(name).unwrap_or_else(|| panic!("parameter {name} missing from plan"))
    }
}

impl Plan {
    pub fn sweeps(&self, name: &str) -> bool {
        self.sweep == name || self.columns.as_ref().is_some_and(|(c, _)| c == name)
    }

    /// A point for parameters that do not depend on the swept ones.
    pub fn base(&self) -> Point<'_> {
        Point { plan: self, x: self.xs[0], col: self.columns.as_ref().map(|c| c.1[0]) }
    }

    /// Rows in sweep order; each holds every quantity at every column value.
    pub fn evaluate<F>(&self, f: F) -> Result<Vec<Vec<f64>>, CliError>
    where
        F: Fn(Point) -> Result<Vec<f64>, CliError> + Sync,
    {
        self.xs
            .par_iter()
            .map(|&x| {
                let cols: Vec<Option<f64>> = match &self.columns {
                    Some((_, v)) => v.iter().map(|&c| Some(c)).collect(),
                    None => vec![None],
                };
                let mut row = vec![x];
                for col in cols {
                    row.extend(f(Point { plan: self, x, col })?);
                }
                Ok(row)
            })
            .collect()
    }

    pub fn headers(&self, quantities: &[&str]) -> Vec<String> {
        let mut h = vec![self.sweep.clone()];
        match &self.columns {
            Some((c, vals)) => {
                for v in vals {
                    for q in quantities {
                        h.push(format!("{q}({c}={v})"));
                    }
                }
            }
            None => h.extend(quantities.iter().map(|q| q.to_string())),
        }
        h
    }
}

/// Counts of spectral values flagged below the truncation horizon or clamped.
#[derive(Default)]
pub struct Diagnostics {
    below_horizon: AtomicUsize,
    clamped: AtomicUsize,
}

impl Diagnostics {
    pub fn take(&self, v: SpectralValue) -> f64 {
        match v.warning {
            Some(SpectralWarning::BelowHorizon) => self.below_horizon.fetch_add(1, Ordering::Relaxed),
            Some(SpectralWarning::Clamped) => self.clamped.fetch_add(1, Ordering::Relaxed),
            None => 0,
        };
        v.value
    }

    pub fn to_json(&self) -> serde_json::Value {
        serde_json::json!({
            "below_horizon": self.below_horizon.load(Ordering::Relaxed),
            "clamped": self.clamped.load(Ordering::Relaxed),
        })
    }
}
