//! Low-dimensional coordinates produced by kernel PCA or t-SNE.
//!
//! CSV columns are `id,label,dim1..dimk`; the label cell is blank when a row
//! has no class tag.

use std::fs;
use std::path::Path;

use nalgebra::DMatrix;

use crate::error::{Error, Result};
use crate::gram::fmt_f64;

#[derive(Debug, Clone, PartialEq)]
pub struct Embedding {
    ids: Vec<String>,
    labels: Vec<Option<i32>>,
    coords: DMatrix<f64>,
}

impl Embedding {
    pub fn new(ids: Vec<String>, labels: Vec<Option<i32>>, coords: DMatrix<f64>) -> Result<Self> {
        let n = coords.nrows();
        if ids.len() != n || labels.len() != n {
            return Err(Error::invalid(format!(
                "embedding has {n} rows but {} ids and {} labels",
                ids.len(),
                labels.len()
            )));
        }
        if coords.ncols() == 0 {
            return Err(Error::invalid("embedding needs at least one dimension"));
        }
        if coords.iter().any(|v| !v.is_finite()) {
            return Err(Error::Numerical(
                "embedding has non-finite coordinates".into(),
            ));
        }
        Ok(Self {
            ids,
            labels,
            coords,
        })
    }

    pub fn ids(&self) -> &[String] {
        &self.ids
    }

    pub fn labels(&self) -> &[Option<i32>] {
        &self.labels
    }

    pub fn coords(&self) -> &DMatrix<f64> {
        &self.coords
    }

    pub fn len(&self) -> usize {
        self.ids.len()
    }

    pub fn is_empty(&self) -> bool {
        self.ids.is_empty()
    }

    pub fn dims(&self) -> usize {
        self.coords.ncols()
    }

    pub fn point(&self, i: usize) -> Vec<f64> {
        self.coords.row(i).iter().copied().collect()
    }

    /// Labels for every row, or an error naming the first unlabeled id.
    pub fn required_labels(&self) -> Result<Vec<i32>> {
        self.labels
            .iter()
            .zip(&self.ids)
            .map(|(l, id)| l.ok_or_else(|| Error::invalid(format!("row {id:?} has no label"))))
            .collect()
    }

    pub fn with_labels(mut self, labels: Vec<Option<i32>>) -> Result<Self> {
        if labels.len() != self.len() {
            return Err(Error::DimensionMismatch {
                expected: self.len(),
                found: labels.len(),
            });
        }
        self.labels = labels;
        Ok(self)
    }
}

pub fn format_embedding(emb: &Embedding) -> String {
    let mut out = String::from("id,label");
    for j in 1..=emb.dims() {
        out.push_str(&format!(",dim{j}"));
    }
    out.push('\n');
    for i in 0..emb.len() {
        out.push_str(&emb.ids[i]);
        out.push(',');
        if let Some(l) = emb.labels[i] {
            out.push_str(&l.to_string());
        }
        for j in 0..emb.dims() {
            out.push(',');
            out.push_str(&fmt_f64(emb.coords[(i, j)]));
        }
        out.push('\n');
    }
    out
}

pub fn write_embedding(emb: &Embedding, path: impl AsRef<Path>) -> Result<()> {
    let path = path.as_ref();
    fs::write(path, format_embedding(emb)).map_err(|e| Error::io(path, e))
}

pub fn parse_embedding(text: &str) -> Result<Embedding> {
    let mut lines = text
        .lines()
        .enumerate()
        .filter(|(_, l)| !l.trim().is_empty());
    let (_, header) = lines
        .next()
        .ok_or_else(|| Error::invalid("embedding file is empty"))?;
    let cols: Vec<&str> = header.split(',').map(str::trim).collect();
    if cols.len() < 3 || cols[0] != "id" || cols[1] != "label" {
        return Err(Error::Parse {
            line: 1,
            message: "header must be id,label,dim1..dimk".into(),
        });
    }
    let k = cols.len() - 2;
    let mut ids = Vec::new();
    let mut labels = Vec::new();
    let mut flat = Vec::new();
    for (idx, line) in lines {
        let lineno = idx + 1;
        let cells: Vec<&str> = line.split(',').map(str::trim).collect();
        if cells.len() != k + 2 {
            return Err(Error::Parse {
                line: lineno,
                message: format!("expected {} columns, found {}", k + 2, cells.len()),
            });
        }
        ids.push(cells[0].to_owned());
        labels.push(if cells[1].is_empty() {
            None
        } else {
            Some(cells[1].parse::<i32>().map_err(|e| Error::Parse {
                line: lineno,
                message: format!("label: {e}"),
            })?)
        });
        for cell in &cells[2..] {
            flat.push(cell.parse::<f64>().map_err(|e| Error::Parse {
                line: lineno,
                message: e.to_string(),
            })?);
        }
    }
    let coords = DMatrix::from_row_slice(ids.len(), k, &flat);
    Embedding::new(ids, labels, coords)
}

pub fn read_embedding(path: impl AsRef<Path>) -> Result<Embedding> {
    let path = path.as_ref();
    let text = fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
    parse_embedding(&text)
}
