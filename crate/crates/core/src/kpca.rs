//! Kernel PCA on a precomputed kernel Gram matrix.

use nalgebra::{DMatrix, DVector, SymmetricEigen};

use crate::embedding::Embedding;
use crate::error::{Error, Result};
use crate::gram::{GramMatrix, MatrixKind};

/// Eigenvalues below `EIGEN_TOL * lambda_max` are treated as zero.
pub const EIGEN_TOL: f64 = 1e-10;

/// Feature-space centering `K - 1K/n - K1/n + 1K1/n^2`.
pub fn center_gram(k: &GramMatrix) -> Result<DMatrix<f64>> {
    k.expect_kind(MatrixKind::Kernel)?;
    Ok(center_matrix(k.values()))
}

pub(crate) fn center_matrix(k: &DMatrix<f64>) -> DMatrix<f64> {
    let n = k.nrows();
    let row_means: DVector<f64> = k.column_mean();
    let grand = row_means.mean();
    let mut c = DMatrix::zeros(n, n);
    for i in 0..n {
        for j in 0..n {
            // K is symmetric, so column means equal row means.
            c[(i, j)] = k[(i, j)] - row_means[i] - row_means[j] + grand;
        }
    }
    // Restore exact symmetry lost to rounding order.
    (&c + c.transpose()) * 0.5
}

#[derive(Debug, Clone, PartialEq)]
pub struct KpcaModel {
    /// Eigenvector coefficients scaled by `1/sqrt(lambda)`, n×k.
    pub alphas: DMatrix<f64>,
    /// Retained eigenvalues of the centered Gram, descending.
    pub eigenvalues: Vec<f64>,
    /// Row means of the training Gram.
    pub row_means: DVector<f64>,
    pub grand_mean: f64,
}

#[derive(Debug, Clone)]
pub struct KpcaFit {
    pub model: KpcaModel,
    pub embedding: Embedding,
    /// Set when fewer than the requested number of components cleared the
    /// eigenvalue tolerance.
    pub truncated: bool,
}

/// Eigendecomposition of the centered Gram, scores = eigenvector * sqrt(lambda).
///
/// Columns are ordered by descending eigenvalue and each column's
/// largest-magnitude entry is made positive.
pub fn kpca_fit(k: &GramMatrix, components: usize, labels: Vec<Option<i32>>) -> Result<KpcaFit> {
    if components == 0 {
        return Err(Error::invalid("need at least one component"));
    }
    let centered = center_gram(k)?;
    let n = centered.nrows();
    let eig = SymmetricEigen::new(centered);
    let mut order: Vec<usize> = (0..n).collect();
    order.sort_by(|&a, &b| eig.eigenvalues[b].total_cmp(&eig.eigenvalues[a]));
    let lambda_max = eig.eigenvalues[order[0]];
    if lambda_max.is_nan() || lambda_max <= 0.0 {
        return Err(Error::Numerical(
            "centered kernel has no positive eigenvalue".into(),
        ));
    }
    let kept: Vec<usize> = order
        .into_iter()
        .filter(|&i| eig.eigenvalues[i] > EIGEN_TOL * lambda_max)
        .take(components)
        .collect();
    let r = kept.len();
    let mut scores = DMatrix::zeros(n, r);
    let mut alphas = DMatrix::zeros(n, r);
    let mut eigenvalues = Vec::with_capacity(r);
    for (col, &idx) in kept.iter().enumerate() {
        let lambda = eig.eigenvalues[idx];
        let mut v = eig.eigenvectors.column(idx).into_owned();
        let pivot = v.iamax();
        if v[pivot] < 0.0 {
            v.neg_mut();
        }
        scores.set_column(col, &(&v * lambda.sqrt()));
        alphas.set_column(col, &(&v / lambda.sqrt()));
        eigenvalues.push(lambda);
    }
    let row_means = k.values().column_mean();
    let grand_mean = row_means.mean();
    let embedding = Embedding::new(k.ids().to_vec(), labels, scores)?;
    Ok(KpcaFit {
        model: KpcaModel {
            alphas,
            eigenvalues,
            row_means,
            grand_mean,
        },
        embedding,
        truncated: r < components,
    })
}
