//! Independent reference implementations used by the integration tests.
#![allow(dead_code)]

use std::f64::consts::PI;

use nalgebra::{DMatrix, SymmetricEigen};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::StandardNormal;
use rntk_core::rntk::{rnn_forward, RnnWeights};
use rntk_core::tsne::AffinityMatrix;
use rntk_core::{RntkParams, TimeSeries};

/// Nodes and weights of a Gauss rule from its Jacobi matrix (Golub-Welsch).
fn golub_welsch(diag: &[f64], off: &[f64], mu0: f64) -> (Vec<f64>, Vec<f64>) {
    let n = diag.len();
    let jacobi = DMatrix::from_fn(n, n, |i, j| {
        if i == j {
            diag[i]
        } else if i + 1 == j {
            off[i]
        } else if j + 1 == i {
            off[j]
        } else {
            0.0
        }
    });
    let eig = SymmetricEigen::new(jacobi);
    let mut pairs: Vec<(f64, f64)> = (0..n)
        .map(|k| (eig.eigenvalues[k], mu0 * eig.eigenvectors[(0, k)].powi(2)))
        .collect();
    pairs.sort_by(|a, b| a.0.total_cmp(&b.0));
    pairs.into_iter().unzip()
}

/// Gauss-Legendre rule on [-1, 1].
pub fn gauss_legendre(n: usize) -> (Vec<f64>, Vec<f64>) {
    let off: Vec<f64> = (1..n)
        .map(|k| {
            let k = k as f64;
            k / (4.0 * k * k - 1.0).sqrt()
        })
        .collect();
    golub_welsch(&vec![0.0; n], &off, 2.0)
}

/// Gauss-Laguerre rule for `int_0^inf f(s) e^{-s} ds`.
pub fn gauss_laguerre(n: usize) -> (Vec<f64>, Vec<f64>) {
    let diag: Vec<f64> = (0..n).map(|k| 2.0 * k as f64 + 1.0).collect();
    let off: Vec<f64> = (1..n).map(|k| k as f64).collect();
    golub_welsch(&diag, &off, 1.0)
}

/// Tensor-product quadrature for Gaussian expectations in polar coordinates.
///
/// `z = r (cos phi, sin phi)` with `s = r^2 / 2`, so the standard normal
/// density becomes `e^{-s} ds dphi / (2 pi)`. The angle axis is split at every
/// zero of the two ReLU arguments, which leaves a smooth integrand on each
/// piece.
pub struct PolarQuadrature {
    legendre: (Vec<f64>, Vec<f64>),
    laguerre: (Vec<f64>, Vec<f64>),
}

impl PolarQuadrature {
    pub fn new(nodes: usize) -> Self {
        Self {
            legendre: gauss_legendre(nodes),
            laguerre: gauss_laguerre(nodes),
        }
    }

    /// `(E[relu(u) relu(v)], P(u > 0, v > 0))` for `(u, v) ~ N(0, A)`.
    pub fn relu_expectations(&self, a11: f64, a22: f64, a12: f64) -> (f64, f64) {
        if a11 <= 0.0 || a22 <= 0.0 {
            return (0.0, 0.0);
        }
        // u = su z1, v = sv (c z1 + s z2).
        let (su, sv) = (a11.sqrt(), a22.sqrt());
        let c = (a12 / (su * sv)).clamp(-1.0, 1.0);
        let s = (1.0 - c * c).max(0.0).sqrt();
        let u_dir = |phi: f64| su * phi.cos();
        let v_dir = |phi: f64| sv * (c * phi.cos() + s * phi.sin());

        // Zeros of a cos + b sin lie at atan2(b, a) +- pi/2.
        let mut cuts = vec![0.0, 2.0 * PI];
        for (a, b) in [(su, 0.0), (sv * c, sv * s)] {
            let base = f64::atan2(b, a);
            for k in [-1.0, 1.0] {
                cuts.push((base + k * PI / 2.0).rem_euclid(2.0 * PI));
            }
        }
        cuts.sort_by(f64::total_cmp);

        // Radial moments: int 2s e^{-s} ds for r^2, int e^{-s} ds for 1.
        let (nodes, weights) = &self.laguerre;
        let radial_r2: f64 = nodes.iter().zip(weights).map(|(x, w)| w * 2.0 * x).sum();
        let radial_1: f64 = weights.iter().sum();

        let (gl_x, gl_w) = &self.legendre;
        let (mut value, mut prob) = (0.0, 0.0);
        for pair in cuts.windows(2) {
            let (lo, hi) = (pair[0], pair[1]);
            if hi - lo < 1e-15 {
                continue;
            }
            let half = 0.5 * (hi - lo);
            for (x, w) in gl_x.iter().zip(gl_w) {
                let phi = lo + half * (x + 1.0);
                let (u, v) = (u_dir(phi), v_dir(phi));
                if u > 0.0 && v > 0.0 {
                    value += w * half * u * v;
                    prob += w * half;
                }
            }
        }
        (value * radial_r2 / (2.0 * PI), prob * radial_1 / (2.0 * PI))
    }
}

/// Row-major `(sigma, gp, pi)` tables.
pub type Tables = (Vec<Vec<f64>>, Vec<Vec<f64>>, Vec<Vec<f64>>);

/// Straightforward kernel tables with every Gaussian expectation taken by
/// quadrature. Returns `(sigma, gp, pi)` as row-major nested vectors.
pub fn reference_tables(
    x: &TimeSeries,
    y: &TimeSeries,
    p: &RntkParams,
    quad: &PolarQuadrature,
) -> Tables {
    let m = x.dim() as f64;
    let (sw2, su2, sb2) = (p.sigma_w.powi(2), p.sigma_u.powi(2), p.sigma_b.powi(2));
    let inner = |a: &[f64], b: &[f64]| a.iter().zip(b).map(|(s, t)| s * t).sum::<f64>();

    let self_var = |z: &TimeSeries| {
        let mut out = Vec::new();
        for t in 0..z.len() {
            let mut s = sb2 + su2 / m * inner(z.step(t), z.step(t));
            if t > 0 {
                let prev: f64 = out[t - 1];
                s += sw2 * quad.relu_expectations(prev, prev, prev).0;
            }
            out.push(s);
        }
        out
    };
    let (vx, vy) = (self_var(x), self_var(y));
    let (tx, ty) = (x.len(), y.len());

    let mut sigma = vec![vec![0.0; ty]; tx];
    let mut gp = vec![vec![0.0; ty]; tx];
    let mut dot = vec![vec![0.0; ty]; tx];
    for t in 0..tx {
        for u in 0..ty {
            let mut s = sb2 + su2 / m * inner(x.step(t), y.step(u));
            if t > 0 && u > 0 {
                s += sw2 * gp[t - 1][u - 1];
            }
            sigma[t][u] = s;
            let (e, d) = quad.relu_expectations(vx[t], vy[u], s);
            gp[t][u] = e;
            dot[t][u] = d;
        }
    }
    let mut pi = vec![vec![0.0; ty]; tx];
    for t in (0..tx).rev() {
        for u in (0..ty).rev() {
            pi[t][u] = if t + 1 == tx || u + 1 == ty {
                dot[t][u]
            } else {
                dot[t][u] * (1.0 + sw2 * pi[t + 1][u + 1])
            };
        }
    }
    (sigma, gp, pi)
}

pub fn random_series(rng: &mut ChaCha8Rng, id: &str, len: usize, dim: usize) -> TimeSeries {
    let steps = (0..len)
        .map(|_| {
            (0..dim)
                .map(|_| rng.sample::<f64, _>(StandardNormal))
                .collect()
        })
        .collect();
    TimeSeries::new(id, None, steps).unwrap()
}

pub fn rng(seed: u64) -> ChaCha8Rng {
    ChaCha8Rng::seed_from_u64(seed)
}

/// Central finite differences of the scalar network output with respect to
/// every parameter, in the layout of `RnnGradients`: `(w, u, b, v)`.
pub fn fd_gradients(
    x: &TimeSeries,
    weights: &RnnWeights,
    p: &RntkParams,
    step: f64,
) -> (DMatrix<f64>, DMatrix<f64>, Vec<f64>, DMatrix<f64>) {
    let f = |w: &RnnWeights| rnn_forward(x, w, p).unwrap()[0];
    let probe = |get: &dyn Fn(&mut RnnWeights) -> &mut f64| {
        let mut plus = weights.clone();
        *get(&mut plus) += step;
        let mut minus = weights.clone();
        *get(&mut minus) -= step;
        (f(&plus) - f(&minus)) / (2.0 * step)
    };
    let gw = DMatrix::from_fn(weights.w.nrows(), weights.w.ncols(), |i, j| {
        probe(&|w| &mut w.w[(i, j)])
    });
    let gu = DMatrix::from_fn(weights.u.nrows(), weights.u.ncols(), |i, j| {
        probe(&|w| &mut w.u[(i, j)])
    });
    let gb = (0..weights.b.len())
        .map(|i| probe(&|w| &mut w.b[i]))
        .collect();
    let gv = DMatrix::from_fn(weights.v.nrows(), weights.v.ncols(), |i, j| {
        probe(&|w| &mut w.v[(i, j)])
    });
    (gw, gu, gb, gv)
}

/// KL(P || Q(Y)) by direct double summation with the Student-t kernel.
pub fn naive_tsne_loss(p: &AffinityMatrix, y: &DMatrix<f64>) -> f64 {
    let n = y.nrows();
    let kernel = |i: usize, j: usize| {
        let d2: f64 = (0..y.ncols())
            .map(|c| (y[(i, c)] - y[(j, c)]).powi(2))
            .sum();
        1.0 / (1.0 + d2)
    };
    let mut z = 0.0;
    for i in 0..n {
        for j in 0..n {
            if i != j {
                z += kernel(i, j);
            }
        }
    }
    let mut loss = 0.0;
    for i in 0..n {
        for j in 0..n {
            let pij = p.get(i, j);
            if i != j && pij > 0.0 {
                loss += pij * (pij / (kernel(i, j) / z)).ln();
            }
        }
    }
    loss
}

/// Central finite-difference gradient of `naive_tsne_loss` in `Y`.
pub fn fd_tsne_gradient(p: &AffinityMatrix, y: &DMatrix<f64>, step: f64) -> DMatrix<f64> {
    DMatrix::from_fn(y.nrows(), y.ncols(), |i, c| {
        let mut plus = y.clone();
        plus[(i, c)] += step;
        let mut minus = y.clone();
        minus[(i, c)] -= step;
        (naive_tsne_loss(p, &plus) - naive_tsne_loss(p, &minus)) / (2.0 * step)
    })
}

/// Classical PCA scores `U S` of row-observations via the SVD of the
/// column-centered data.
pub fn classical_pca_scores(x: &DMatrix<f64>, k: usize) -> DMatrix<f64> {
    let mut centered = x.clone();
    for mut col in centered.column_iter_mut() {
        let mean = col.mean();
        col.add_scalar_mut(-mean);
    }
    let svd = centered.svd(true, false);
    let u = svd.u.expect("requested U");
    let mut order: Vec<usize> = (0..svd.singular_values.len()).collect();
    order.sort_by(|&a, &b| svd.singular_values[b].total_cmp(&svd.singular_values[a]));
    DMatrix::from_fn(x.nrows(), k, |i, c| {
        u[(i, order[c])] * svd.singular_values[order[c]]
    })
}

/// Largest entrywise gap between two score matrices after aligning the sign
/// of each column.
pub fn max_gap_up_to_sign(a: &DMatrix<f64>, b: &DMatrix<f64>) -> f64 {
    assert_eq!(a.shape(), b.shape());
    (0..a.ncols())
        .map(|c| {
            let same = (a.column(c) - b.column(c)).amax();
            let flipped = (a.column(c) + b.column(c)).amax();
            same.min(flipped)
        })
        .fold(0.0, f64::max)
}

/// Max-norm error of RK4 against a much finer reference, at two resolutions.
pub fn rk4_halving_factor(coarse: &[f64], fine: &[f64], reference: &[f64]) -> f64 {
    let err = |xs: &[f64]| {
        xs.iter()
            .zip(reference)
            .map(|(a, b)| (a - b).abs())
            .fold(0.0, f64::max)
    };
    err(coarse) / err(fine)
}
