//! Square pairwise matrices over a dataset and their CSV codec.
//!
//! CSV layout: a header `id,<id1>,<id2>,...` followed by one row per id,
//! `<idi>,v1,v2,...`, values written with 17 significant digits.

use std::fmt;
use std::fs;
use std::path::Path;

use nalgebra::DMatrix;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Relative tolerance for symmetry checks, scaled by the largest entry.
pub const SYMMETRY_TOL: f64 = 1e-9;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum MatrixKind {
    Kernel,
    Distance,
}

impl fmt::Display for MatrixKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            MatrixKind::Kernel => f.write_str("kernel"),
            MatrixKind::Distance => f.write_str("distance"),
        }
    }
}

/// Symmetric n×n kernel or distance matrix with row identities.
///
/// Kernel matrices have a strictly positive diagonal. Distance matrices have
/// an exactly zero diagonal and no negative entries.
#[derive(Debug, Clone, PartialEq)]
pub struct GramMatrix {
    ids: Vec<String>,
    values: DMatrix<f64>,
    kind: MatrixKind,
}

impl GramMatrix {
    pub fn new(ids: Vec<String>, values: DMatrix<f64>, kind: MatrixKind) -> Result<Self> {
        let n = values.nrows();
        if values.ncols() != n {
            return Err(Error::invalid(format!(
                "matrix is {}x{}, expected square",
                n,
                values.ncols()
            )));
        }
        if ids.len() != n {
            return Err(Error::DimensionMismatch {
                expected: n,
                found: ids.len(),
            });
        }
        if n == 0 {
            return Err(Error::invalid("matrix is empty"));
        }
        if let Some(bad) = values.iter().find(|v| !v.is_finite()) {
            return Err(Error::invalid(format!(
                "matrix contains non-finite value {bad}"
            )));
        }
        let scale = values.amax();
        for i in 0..n {
            for j in (i + 1)..n {
                let (upper, lower) = (values[(i, j)], values[(j, i)]);
                if (upper - lower).abs() > SYMMETRY_TOL * scale {
                    return Err(Error::Asymmetric {
                        row: i,
                        col: j,
                        upper,
                        lower,
                    });
                }
            }
        }
        match kind {
            MatrixKind::Kernel => {
                if let Some(i) = (0..n).find(|&i| values[(i, i)] <= 0.0) {
                    return Err(Error::invalid(format!(
                        "kernel diagonal entry {i} is {} (must be > 0)",
                        values[(i, i)]
                    )));
                }
            }
            MatrixKind::Distance => {
                if let Some(i) = (0..n).find(|&i| values[(i, i)] != 0.0) {
                    return Err(Error::invalid(format!(
                        "distance diagonal entry {i} is {} (must be 0)",
                        values[(i, i)]
                    )));
                }
                if let Some(bad) = values.iter().find(|&&v| v < 0.0) {
                    return Err(Error::invalid(format!("negative distance {bad}")));
                }
            }
        }
        Ok(Self { ids, values, kind })
    }

    pub fn ids(&self) -> &[String] {
        &self.ids
    }

    pub fn values(&self) -> &DMatrix<f64> {
        &self.values
    }

    pub fn kind(&self) -> MatrixKind {
        self.kind
    }

    pub fn len(&self) -> usize {
        self.ids.len()
    }

    pub fn is_empty(&self) -> bool {
        self.ids.is_empty()
    }

    pub fn get(&self, i: usize, j: usize) -> f64 {
        self.values[(i, j)]
    }

    pub fn expect_kind(&self, kind: MatrixKind) -> Result<()> {
        if self.kind == kind {
            Ok(())
        } else {
            Err(Error::KindMismatch {
                expected: kind,
                found: self.kind,
            })
        }
    }
}

pub(crate) fn fmt_f64(v: f64) -> String {
    format!("{v:.16e}")
}

pub fn format_matrix(gm: &GramMatrix) -> String {
    let n = gm.len();
    let mut out = String::with_capacity(n * n * 24);
    out.push_str("id");
    for id in gm.ids() {
        out.push(',');
        out.push_str(id);
    }
    out.push('\n');
    for (i, id) in gm.ids().iter().enumerate() {
        out.push_str(id);
        for j in 0..n {
            out.push(',');
            out.push_str(&fmt_f64(gm.get(i, j)));
        }
        out.push('\n');
    }
    out
}

pub fn write_matrix(gm: &GramMatrix, path: impl AsRef<Path>) -> Result<()> {
    let path = path.as_ref();
    fs::write(path, format_matrix(gm)).map_err(|e| Error::io(path, e))
}

/// Parses the CSV form. The kind is inferred: an all-zero diagonal marks a
/// distance matrix, anything else must validate as a kernel.
pub fn parse_matrix(text: &str) -> Result<GramMatrix> {
    let mut lines = text
        .lines()
        .enumerate()
        .filter(|(_, l)| !l.trim().is_empty());
    let (_, header) = lines
        .next()
        .ok_or_else(|| Error::invalid("matrix file is empty"))?;
    let mut cells = header.split(',');
    if cells.next().map(str::trim) != Some("id") {
        return Err(Error::Parse {
            line: 1,
            message: "header must start with `id`".into(),
        });
    }
    let ids: Vec<String> = cells.map(|c| c.trim().to_owned()).collect();
    let n = ids.len();
    let mut values = DMatrix::zeros(n, n);
    let mut rows = 0;
    for (idx, line) in lines {
        let lineno = idx + 1;
        if rows == n {
            return Err(Error::Parse {
                line: lineno,
                message: format!("more than {n} data rows"),
            });
        }
        let mut cells = line.split(',');
        let row_id = cells.next().unwrap_or("").trim();
        if row_id != ids[rows] {
            return Err(Error::Parse {
                line: lineno,
                message: format!("row id {row_id:?} does not match header id {:?}", ids[rows]),
            });
        }
        let cells: Vec<&str> = cells.collect();
        if cells.len() != n {
            return Err(Error::Parse {
                line: lineno,
                message: format!("expected {n} values, found {}", cells.len()),
            });
        }
        for (j, cell) in cells.iter().enumerate() {
            values[(rows, j)] = cell.trim().parse::<f64>().map_err(|e| Error::Parse {
                line: lineno,
                message: format!("column {}: {e}", j + 2),
            })?;
        }
        rows += 1;
    }
    if rows != n {
        return Err(Error::invalid(format!(
            "matrix is not square: {n} columns but {rows} rows"
        )));
    }
    let kind = if (0..n).all(|i| values[(i, i)] == 0.0) {
        MatrixKind::Distance
    } else {
        MatrixKind::Kernel
    };
    GramMatrix::new(ids, values, kind)
}

pub fn read_matrix(path: impl AsRef<Path>) -> Result<GramMatrix> {
    let path = path.as_ref();
    let text = fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
    parse_matrix(&text)
}
