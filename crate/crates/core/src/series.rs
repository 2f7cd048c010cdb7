//! Variable-length sequences and the line-delimited JSON sequence format.
//!
//! Each line of a sequence file is one record:
//!
//! ```text
//! {"id":"a","label":0,"steps":[[1.0],[2.0]]}
//! ```
//!
//! `label` is optional. Every step of every series in a file must have the
//! same dimension.

use std::collections::HashSet;
use std::fs::File;
use std::io::{BufRead, BufReader, BufWriter, Write};
use std::path::Path;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// One sequence of `len()` step vectors, each of dimension `dim()`.
///
/// Steps are stored contiguously; `step(t)` borrows the `t`-th vector.
#[derive(Debug, Clone, PartialEq)]
pub struct TimeSeries {
    id: String,
    label: Option<i32>,
    dim: usize,
    values: Vec<f64>,
}

impl TimeSeries {
    pub fn new(id: impl Into<String>, label: Option<i32>, steps: Vec<Vec<f64>>) -> Result<Self> {
        let id = id.into();
        let first = steps
            .first()
            .ok_or_else(|| Error::invalid(format!("series {id:?} has no steps")))?;
        let dim = first.len();
        if dim == 0 {
            return Err(Error::invalid(format!(
                "series {id:?} has zero-dimensional steps"
            )));
        }
        let mut values = Vec::with_capacity(dim * steps.len());
        for step in &steps {
            if step.len() != dim {
                return Err(Error::DimensionMismatch {
                    expected: dim,
                    found: step.len(),
                });
            }
            values.extend_from_slice(step);
        }
        Self::from_flat(id, label, dim, values)
    }

    /// Builds a series from row-major step values.
    pub fn from_flat(
        id: impl Into<String>,
        label: Option<i32>,
        dim: usize,
        values: Vec<f64>,
    ) -> Result<Self> {
        let id = id.into();
        if dim == 0 || values.is_empty() || !values.len().is_multiple_of(dim) {
            return Err(Error::invalid(format!(
                "series {id:?}: {} values do not form steps of dimension {dim}",
                values.len()
            )));
        }
        if let Some(bad) = values.iter().find(|v| !v.is_finite()) {
            return Err(Error::invalid(format!(
                "series {id:?} contains non-finite value {bad}"
            )));
        }
        Ok(Self {
            id,
            label,
            dim,
            values,
        })
    }

    /// Univariate convenience constructor.
    pub fn scalar(id: impl Into<String>, label: Option<i32>, values: Vec<f64>) -> Result<Self> {
        Self::from_flat(id, label, 1, values)
    }

    pub fn id(&self) -> &str {
        &self.id
    }

    pub fn label(&self) -> Option<i32> {
        self.label
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    /// Number of steps `T`.
    pub fn len(&self) -> usize {
        self.values.len() / self.dim
    }

    pub fn is_empty(&self) -> bool {
        self.values.is_empty()
    }

    pub fn step(&self, t: usize) -> &[f64] {
        &self.values[t * self.dim..(t + 1) * self.dim]
    }

    pub fn steps(&self) -> impl ExactSizeIterator<Item = &[f64]> + '_ {
        self.values.chunks_exact(self.dim)
    }

    /// All step values, row-major.
    pub fn values(&self) -> &[f64] {
        &self.values
    }

    pub fn with_values(&self, values: Vec<f64>) -> Result<Self> {
        Self::from_flat(self.id.clone(), self.label, self.dim, values)
    }
}

/// A non-empty collection of series sharing one step dimension, with unique ids.
#[derive(Debug, Clone, PartialEq)]
pub struct Dataset {
    series: Vec<TimeSeries>,
    dim: usize,
}

impl Dataset {
    pub fn new(series: Vec<TimeSeries>) -> Result<Self> {
        let dim = series
            .first()
            .ok_or_else(|| Error::invalid("dataset is empty"))?
            .dim();
        let mut seen = HashSet::with_capacity(series.len());
        for s in &series {
            if s.dim() != dim {
                return Err(Error::DimensionMismatch {
                    expected: dim,
                    found: s.dim(),
                });
            }
            if !seen.insert(s.id()) {
                return Err(Error::invalid(format!("duplicate series id {:?}", s.id())));
            }
        }
        Ok(Self { series, dim })
    }

    pub fn series(&self) -> &[TimeSeries] {
        &self.series
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn len(&self) -> usize {
        self.series.len()
    }

    pub fn is_empty(&self) -> bool {
        self.series.is_empty()
    }

    pub fn ids(&self) -> Vec<String> {
        self.series.iter().map(|s| s.id().to_owned()).collect()
    }

    pub fn labels(&self) -> Vec<Option<i32>> {
        self.series.iter().map(TimeSeries::label).collect()
    }

    pub fn max_len(&self) -> usize {
        self.series.iter().map(TimeSeries::len).max().unwrap_or(0)
    }

    pub fn into_series(self) -> Vec<TimeSeries> {
        self.series
    }
}

#[derive(Serialize, Deserialize)]
struct SeriesRecord {
    id: String,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    label: Option<i32>,
    steps: Vec<Vec<f64>>,
}

impl From<&TimeSeries> for SeriesRecord {
    fn from(s: &TimeSeries) -> Self {
        SeriesRecord {
            id: s.id.clone(),
            label: s.label,
            steps: s.steps().map(<[f64]>::to_vec).collect(),
        }
    }
}

/// Parses one JSON-lines sequence file. Blank lines are ignored.
pub fn read_sequences(path: impl AsRef<Path>) -> Result<Dataset> {
    let path = path.as_ref();
    let file = File::open(path).map_err(|e| Error::io(path, e))?;
    parse_sequences(BufReader::new(file)).map_err(|e| match e {
        Error::Io { source, .. } => Error::io(path, source),
        other => other,
    })
}

pub fn parse_sequences(reader: impl BufRead) -> Result<Dataset> {
    let mut series = Vec::new();
    let mut dim = None;
    for (idx, line) in reader.lines().enumerate() {
        let lineno = idx + 1;
        let line = line.map_err(|e| Error::io("<reader>", e))?;
        if line.trim().is_empty() {
            continue;
        }
        let parse_err = |message: String| Error::Parse {
            line: lineno,
            message,
        };
        let record: SeriesRecord =
            serde_json::from_str(&line).map_err(|e| parse_err(e.to_string()))?;
        let ts = TimeSeries::new(record.id, record.label, record.steps)
            .map_err(|e| parse_err(e.to_string()))?;
        match dim {
            None => dim = Some(ts.dim()),
            Some(d) if d != ts.dim() => {
                return Err(parse_err(
                    Error::DimensionMismatch {
                        expected: d,
                        found: ts.dim(),
                    }
                    .to_string(),
                ))
            }
            Some(_) => {}
        }
        series.push(ts);
    }
    if series.is_empty() {
        return Err(Error::invalid("sequence file contains no records"));
    }
    Dataset::new(series)
}

pub fn write_sequences(ds: &Dataset, path: impl AsRef<Path>) -> Result<()> {
    let path = path.as_ref();
    let file = File::create(path).map_err(|e| Error::io(path, e))?;
    let mut out = BufWriter::new(file);
    format_sequences(ds, &mut out).map_err(|e| match e {
        Error::Io { source, .. } => Error::io(path, source),
        other => other,
    })?;
    out.flush().map_err(|e| Error::io(path, e))
}

pub fn format_sequences(ds: &Dataset, out: &mut impl Write) -> Result<()> {
    for s in ds.series() {
        // Series are validated on construction; this guards the file format
        // itself, which has no encoding for NaN or infinities.
        if s.values().iter().any(|v| !v.is_finite()) {
            return Err(Error::invalid(format!(
                "series {:?} has non-finite values",
                s.id()
            )));
        }
        let line = serde_json::to_string(&SeriesRecord::from(s))
            .map_err(|e| Error::invalid(e.to_string()))?;
        writeln!(out, "{line}").map_err(|e| Error::io("<writer>", e))?;
    }
    Ok(())
}
