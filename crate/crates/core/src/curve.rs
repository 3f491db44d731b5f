//! Sampled curves with their metadata, written as CSV or JSON.

use std::collections::BTreeMap;
use std::io::Write;

use serde::{Deserialize, Serialize};
use serde_json::Value;

use crate::error::{Error, Result};

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct CurveTable {
    pub abscissa: String,
    pub abscissa_unit: String,
    pub ordinate: String,
    pub ordinate_unit: String,
    pub samples: Vec<(f64, f64)>,
    pub metadata: BTreeMap<String, Value>,
}

/// 17 significant digits, enough to round-trip an f64.
pub fn fmt17(x: f64) -> String {
    if x.is_finite() {
        format!("{x:.16e}")
    } else if x.is_nan() {
        "nan".into()
    } else if x > 0.0 {
        "inf".into()
    } else {
        "-inf".into()
    }
}

impl CurveTable {
    pub fn new(abscissa: &str, abscissa_unit: &str, ordinate: &str, ordinate_unit: &str) -> Self {
        CurveTable {
            abscissa: abscissa.into(),
            abscissa_unit: abscissa_unit.into(),
            ordinate: ordinate.into(),
            ordinate_unit: ordinate_unit.into(),
            samples: Vec::new(),
            metadata: BTreeMap::new(),
        }
    }

    pub fn with_meta(mut self, key: &str, v: impl Into<Value>) -> Self {
        self.metadata.insert(key.into(), v.into());
        self
    }

    pub fn push(&mut self, x: f64, y: f64) {
        self.samples.push((x, y));
    }

    /// Abscissa strictly increasing and every value finite.
    pub fn validate(&self) -> Result<()> {
        for (i, &(x, y)) in self.samples.iter().enumerate() {
            if !x.is_finite() || !y.is_finite() {
                return Err(Error::Table(format!("non-finite sample at row {i}: ({x}, {y})")));
            }
            if i > 0 && x <= self.samples[i - 1].0 {
                return Err(Error::Table(format!("abscissa not increasing at row {i}")));
            }
        }
        Ok(())
    }

    /// CSV (RFC 4180, CRLF) with `#` comment lines carrying the metadata, then a header row.
    pub fn write_csv<W: Write>(&self, mut w: W) -> Result<()> {
        self.validate()?;
        for (k, v) in &self.metadata {
            write!(w, "# {k}: {v}\r\n")?;
        }
        let mut out = csv::WriterBuilder::new().terminator(csv::Terminator::CRLF).from_writer(w);
        let col = |name: &str, unit: &str| if unit.is_empty() { name.to_string() } else { format!("{name} [{unit}]") };
        out.write_record([col(&self.abscissa, &self.abscissa_unit), col(&self.ordinate, &self.ordinate_unit)])
            .map_err(csv_err)?;
        for &(x, y) in &self.samples {
            out.write_record([fmt17(x), fmt17(y)]).map_err(csv_err)?;
        }
        out.flush()?;
        Ok(())
    }

    pub fn to_csv_string(&self) -> Result<String> {
        let mut buf = Vec::new();
        self.write_csv(&mut buf)?;
        Ok(String::from_utf8(buf).expect("csv output is utf-8"))
    }

    pub fn to_json(&self) -> Result<String> {
        self.validate()?;
        Ok(serde_json::to_string_pretty(self)?)
    }
}

pub(crate) fn csv_err(e: csv::Error) -> Error {
    match e.into_kind() {
        csv::ErrorKind::Io(io) => Error::Io(io),
        other => Error::Table(format!("{other:?}")),
    }
}
