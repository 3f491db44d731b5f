//! Column tables with a metadata header, written as CSV, JSON or text.

use std::collections::BTreeMap;
use std::io::Write;
use std::path::{Path, PathBuf};

use oufet::curve::fmt17;
use serde_json::{json, Value};

use crate::args::Format;
use crate::error::CliError;

#[derive(Clone, Debug, PartialEq)]
pub struct Sheet {
    pub columns: Vec<String>,
    pub rows: Vec<Vec<f64>>,
    pub meta: BTreeMap<String, Value>,
}

impl Sheet {
    pub fn new(columns: Vec<String>, rows: Vec<Vec<f64>>) -> Self {
        Sheet { columns, rows, meta: BTreeMap::new() }
    }

    pub fn meta(mut self, key: &str, v: impl Into<Value>) -> Self {
        self.meta.insert(key.into(), v.into());
        self
    }

    /// `#`-prefixed metadata lines, then RFC 4180 rows at 17 significant digits.
    pub fn write_csv<W: Write>(&self, mut w: W) -> std::io::Result<()> {
        for (k, v) in &self.meta {
            write!(w, "# {k}: {v}\r\n")?;
        }
        let mut out = csv::WriterBuilder::new().terminator(csv::Terminator::CRLF).from_writer(w);
        out.write_record(&self.columns)?;
        for r in &self.rows {
            out.write_record(r.iter().map(|&x| fmt17(x)))?;
        }
        out.flush()
    }

    pub fn to_json(&self) -> Value {
        // non-finite values have no JSON number form
        let cell = |x: f64| if x.is_finite() { json!(x) } else { json!(fmt17(x)) };
        json!({
            "metadata": self.meta,
            "columns": self.columns,
            "rows": self.rows.iter().map(|r| r.iter().map(|&x| cell(x)).collect::<Vec<_>>()).collect::<Vec<_>>(),
        })
    }

    pub fn write_pretty<W: Write>(&self, mut w: W) -> std::io::Result<()> {
        for (k, v) in &self.meta {
            writeln!(w, "{k}: {v}")?;
        }
        let cells: Vec<Vec<String>> = self.rows.iter().map(|r| r.iter().map(|x| format!("{x:.6e}")).collect()).collect();
        let widths: Vec<usize> = (0..self.columns.len())
            .map(|j| cells.iter().map(|r| r[j].len()).chain([self.columns[j].len()]).max().unwrap_or(0))
            .collect();
        let line = |items: &[String]| items.iter().zip(&widths).map(|(s, &n)| format!("{s:>n$}")).collect::<Vec<_>>().join("  ");
        writeln!(w, "{}", line(&self.columns))?;
        for r in &cells {
            writeln!(w, "{}", line(r))?;
        }
        Ok(())
    }

    pub fn write<W: Write>(&self, format: Format, mut w: W) -> std::io::Result<()> {
        match format {
            Format::Csv => self.write_csv(w),
            Format::Json => writeln!(w, "{}", serde_json::to_string_pretty(&self.to_json())?),
            Format::Pretty => self.write_pretty(w),
        }
    }
}

pub fn extension(format: Format) -> &'static str {
    match format {
        Format::Csv => "csv",
        Format::Json => "json",
        Format::Pretty => "txt",
    }
}

/// The explicit path, else `$OUFET_OUT_DIR/<name>.<ext>`, else stdout (None).
pub fn destination(explicit: Option<&Path>, name: &str, format: Format) -> Option<PathBuf> {
    if let Some(p) = explicit {
        return Some(p.to_path_buf());
    }
    let dir = std::env::var_os("OUFET_OUT_DIR").filter(|d| !d.is_empty())?;
    Some(PathBuf::from(dir).join(format!("{name}.{}", extension(format))))
}

pub fn write_to(path: Option<&Path>, body: impl FnOnce(&mut dyn Write) -> std::io::Result<()>) -> Result<(), CliError> {
    match path {
        Some(p) => {
            if let Some(dir) = p.parent().filter(|d| !d.as_os_str().is_empty()) {
                std::fs::create_dir_all(dir).map_err(|e| CliError::Io(e, dir.to_path_buf()))?;
            }
            let mut f = std::io::BufWriter::new(std::fs::File::create(p).map_err(|e| CliError::Io(e, p.to_path_buf()))?);
            body(&mut f).and_then(|_| f.flush()).map_err(|e| CliError::Io(e, p.to_path_buf()))
        }
        None => {
            let stdout = std::io::stdout();
            let mut lock = stdout.lock();
            body(&mut lock).map_err(|e| CliError::Io(e, PathBuf::from("<stdout>")))
        }
    }
}
