//! Recurrent neural tangent kernel of a single-layer ReLU RNN with sum pooling.
//!
//! The network, at hidden width `n` and input dimension `m`, is
//!
//! ```text
//! g(t) = sigma_w/sqrt(n) W h(t-1) + sigma_u/sqrt(m) U x(t) + sigma_b b
//! h(t) = relu(g(t)),  h(0) = 0
//! f    = sum_t V h(t) / sqrt(n)
//! ```
//!
//! with every weight drawn from N(0, 1). As `n` grows, pre-activations and
//! backpropagated gradients become Gaussian processes over time-step pairs
//! `(t, t')`, and the tangent kernel collapses to a double sum over those
//! pairs. [`kernel_tables`] evaluates the three per-pair covariances,
//! [`rntk`] sums them, and [`empirical_ntk`] estimates the same quantity from
//! finite networks by exact backpropagation.

use std::f64::consts::PI;

use nalgebra::{DMatrix, DVector};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::StandardNormal;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::gram::{GramMatrix, MatrixKind};
use crate::series::{Dataset, TimeSeries};

/// Initialization scales of the recurrent, input and bias weights.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct RntkParams {
    pub sigma_w: f64,
    pub sigma_u: f64,
    pub sigma_b: f64,
}

impl RntkParams {
    pub fn new(sigma_w: f64, sigma_u: f64, sigma_b: f64) -> Result<Self> {
        let ok = sigma_w.is_finite()
            && sigma_u.is_finite()
            && sigma_b.is_finite()
            && sigma_w > 0.0
            && sigma_u > 0.0
            && sigma_b >= 0.0;
        if !ok {
            return Err(Error::invalid(format!(
                "need sigma_w > 0, sigma_u > 0, sigma_b >= 0 (all finite); got ({sigma_w}, {sigma_u}, {sigma_b})"
            )));
        }
        Ok(Self {
            sigma_w,
            sigma_u,
            sigma_b,
        })
    }
}

impl Default for RntkParams {
    fn default() -> Self {
        Self {
            sigma_w: 2.0,
            sigma_u: 0.316,
            sigma_b: 1e-5,
        }
    }
}

/// Covariance of a zero-mean Gaussian pair `(u, v)`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct BivariateMoment {
    a11: f64,
    a22: f64,
    a12: f64,
}

impl BivariateMoment {
    pub fn new(a11: f64, a22: f64, a12: f64) -> Result<Self> {
        if !(a11.is_finite() && a22.is_finite() && a12.is_finite()) {
            return Err(Error::invalid(format!(
                "non-finite moment ({a11}, {a22}, {a12})"
            )));
        }
        if a11 < 0.0 || a22 < 0.0 || a12 * a12 > a11 * a22 * (1.0 + 1e-9) {
            return Err(Error::invalid(format!(
                "moment ({a11}, {a22}, {a12}) is not positive semi-definite"
            )));
        }
        Ok(Self { a11, a22, a12 })
    }

    pub fn a11(&self) -> f64 {
        self.a11
    }

    pub fn a22(&self) -> f64 {
        self.a22
    }

    pub fn a12(&self) -> f64 {
        self.a12
    }
}

/// `E[relu(u) relu(v)]` for `(u, v) ~ N(0, A)`.
pub fn vphi(a: &BivariateMoment) -> f64 {
    relu_moments(a.a11, a.a22, a.a12).0
}

/// `E[relu'(u) relu'(v)]` for `(u, v) ~ N(0, A)`, i.e. `P(u > 0, v > 0)`.
pub fn vphi_prime(a: &BivariateMoment) -> f64 {
    relu_moments(a.a11, a.a22, a.a12).1
}

/// Arc-cosine closed forms for both expectations. Zero-variance inputs give 0.
#[inline]
fn relu_moments(a11: f64, a22: f64, a12: f64) -> (f64, f64) {
    let prod = a11 * a22;
    if prod.is_nan() || prod <= 0.0 {
        return (0.0, 0.0);
    }
    let norm = prod.sqrt();
    let c = (a12 / norm).clamp(-1.0, 1.0);
    let theta = c.acos();
    let value = norm / (2.0 * PI) * (theta.sin() + (PI - theta) * c);
    (value.max(0.0), (PI - theta) / (2.0 * PI))
}

#[inline]
fn dot(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| x * y).sum()
}

#[inline]
fn input_term(p: &RntkParams, m: usize, a: &[f64], b: &[f64]) -> f64 {
    p.sigma_b * p.sigma_b + p.sigma_u * p.sigma_u / m as f64 * dot(a, b)
}

/// Per-step pre-activation variances `Sigma(t, t)(x, x)`.
pub fn self_variances(x: &TimeSeries, p: &RntkParams) -> Vec<f64> {
    let m = x.dim();
    let sw2 = p.sigma_w * p.sigma_w;
    let mut out: Vec<f64> = Vec::with_capacity(x.len());
    for (t, step) in x.steps().enumerate() {
        let mut s = input_term(p, m, step, step);
        if t > 0 {
            let prev = out[t - 1];
            s += sw2 * relu_moments(prev, prev, prev).0;
        }
        out.push(s);
    }
    out
}

/// Covariance tables over all time-step pairs of two sequences.
///
/// Row `t` indexes steps of the first sequence, column `t'` the second.
#[derive(Debug, Clone, PartialEq)]
pub struct KernelTables {
    /// Pre-activation covariance.
    pub sigma: DMatrix<f64>,
    /// Covariance of the scaled backpropagated gradients.
    pub pi: DMatrix<f64>,
    /// Output (NN-GP) covariance of the per-step readouts.
    pub gp: DMatrix<f64>,
    pub self_sigma_x: Vec<f64>,
    pub self_sigma_y: Vec<f64>,
}

impl KernelTables {
    /// Per-pair contributions `pi * sigma + gp`.
    pub fn cell_contributions(&self) -> impl Iterator<Item = f64> + '_ {
        self.pi
            .iter()
            .zip(self.sigma.iter())
            .zip(self.gp.iter())
            .map(|((p, s), g)| p * s + g)
    }

    /// Sum of the cell contributions, accumulated in ascending order so the
    /// result does not depend on which sequence came first.
    pub fn kernel_value(&self) -> f64 {
        let mut cells: Vec<f64> = self.cell_contributions().collect();
        cells.sort_unstable_by(f64::total_cmp);
        cells.iter().sum()
    }
}

fn check_dims(x: &TimeSeries, y: &TimeSeries) -> Result<()> {
    if x.dim() != y.dim() {
        return Err(Error::DimensionMismatch {
            expected: x.dim(),
            found: y.dim(),
        });
    }
    Ok(())
}

pub fn kernel_tables(x: &TimeSeries, y: &TimeSeries, p: &RntkParams) -> Result<KernelTables> {
    check_dims(x, y)?;
    let sx = self_variances(x, p);
    let sy = self_variances(y, p);
    Ok(tables_from_self(x, y, sx, sy, p))
}

fn tables_from_self(
    x: &TimeSeries,
    y: &TimeSeries,
    sx: Vec<f64>,
    sy: Vec<f64>,
    p: &RntkParams,
) -> KernelTables {
    let (tx, ty, m) = (x.len(), y.len(), x.dim());
    let sw2 = p.sigma_w * p.sigma_w;
    let mut sigma = DMatrix::zeros(tx, ty);
    let mut gp = DMatrix::zeros(tx, ty);
    let mut dphi = DMatrix::zeros(tx, ty);
    for t in 0..tx {
        let xt = x.step(t);
        for u in 0..ty {
            let mut s = input_term(p, m, xt, y.step(u));
            if t > 0 && u > 0 {
                s += sw2 * gp[(t - 1, u - 1)];
            }
            let (v, vp) = relu_moments(sx[t], sy[u], s);
            sigma[(t, u)] = s;
            gp[(t, u)] = v;
            dphi[(t, u)] = vp;
        }
    }
    // Gradients flow backwards in time; the last step of either sequence only
    // sees the readout.
    let mut pi = DMatrix::zeros(tx, ty);
    for t in (0..tx).rev() {
        for u in (0..ty).rev() {
            pi[(t, u)] = if t + 1 == tx || u + 1 == ty {
                dphi[(t, u)]
            } else {
                dphi[(t, u)] * (1.0 + sw2 * pi[(t + 1, u + 1)])
            };
        }
    }
    KernelTables {
        sigma,
        pi,
        gp,
        self_sigma_x: sx,
        self_sigma_y: sy,
    }
}

/// Infinite-width tangent kernel between two sequences of possibly different
/// lengths.
pub fn rntk(x: &TimeSeries, y: &TimeSeries, p: &RntkParams) -> Result<f64> {
    Ok(kernel_tables(x, y, p)?.kernel_value())
}

/// Kernel Gram matrix over a dataset. Pairs are evaluated in parallel; each
/// entry is independent of the schedule.
pub fn rntk_gram(ds: &Dataset, p: &RntkParams) -> Result<GramMatrix> {
    let series = ds.series();
    let n = series.len();
    let selfs: Vec<Vec<f64>> = series.par_iter().map(|s| self_variances(s, p)).collect();
    let entries: Vec<(usize, usize, f64)> = (0..n)
        .into_par_iter()
        .flat_map_iter(|i| {
            let selfs = &selfs;
            (i..n).map(move |j| {
                let tables = tables_from_self(
                    &series[i],
                    &series[j],
                    selfs[i].clone(),
                    selfs[j].clone(),
                    p,
                );
                (i, j, tables.kernel_value())
            })
        })
        .collect();
    let mut values = DMatrix::zeros(n, n);
    for (i, j, v) in entries {
        if !v.is_finite() {
            return Err(Error::Numerical(format!(
                "kernel between {:?} and {:?} is {v}",
                series[i].id(),
                series[j].id()
            )));
        }
        values[(i, j)] = v;
        values[(j, i)] = v;
    }
    GramMatrix::new(ds.ids(), values, MatrixKind::Kernel)
}

/// Pearson dissimilarity `sqrt(1 - K_ij / sqrt(K_ii K_jj))` of a kernel matrix.
pub fn rntk_distance_matrix(gm: &GramMatrix) -> Result<GramMatrix> {
    gm.expect_kind(MatrixKind::Kernel)?;
    let n = gm.len();
    let k = gm.values();
    if let Some(i) = (0..n).find(|&i| k[(i, i)].is_nan() || k[(i, i)] <= 0.0) {
        return Err(Error::invalid(format!(
            "kernel diagonal entry {i} is {} (must be > 0)",
            k[(i, i)]
        )));
    }
    let mut d = DMatrix::zeros(n, n);
    for i in 0..n {
        for j in (i + 1)..n {
            let corr = k[(i, j)] / (k[(i, i)] * k[(j, j)]).sqrt();
            let v = (1.0 - corr).max(0.0).sqrt();
            d[(i, j)] = v;
            d[(j, i)] = v;
        }
    }
    GramMatrix::new(gm.ids().to_vec(), d, MatrixKind::Distance)
}

/// Weights of one finite-width network.
#[derive(Debug, Clone, PartialEq)]
pub struct RnnWeights {
    /// Recurrent weights, n×n.
    pub w: DMatrix<f64>,
    /// Input weights, n×m.
    pub u: DMatrix<f64>,
    /// Bias, length n.
    pub b: DVector<f64>,
    /// Readout, d×n.
    pub v: DMatrix<f64>,
}

impl RnnWeights {
    pub fn new(w: DMatrix<f64>, u: DMatrix<f64>, b: DVector<f64>, v: DMatrix<f64>) -> Result<Self> {
        let n = w.nrows();
        if n == 0 || w.ncols() != n || u.nrows() != n || u.ncols() == 0 || b.len() != n {
            return Err(Error::invalid(format!(
                "inconsistent weight shapes: W {:?}, U {:?}, b {}",
                w.shape(),
                u.shape(),
                b.len()
            )));
        }
        if v.ncols() != n || v.nrows() == 0 {
            return Err(Error::invalid(format!(
                "readout shape {:?} vs width {n}",
                v.shape()
            )));
        }
        let finite = w
            .iter()
            .chain(u.iter())
            .chain(b.iter())
            .chain(v.iter())
            .all(|x| x.is_finite());
        if !finite {
            return Err(Error::invalid("non-finite weight"));
        }
        Ok(Self { w, u, b, v })
    }

    /// Standard-normal draw with scalar output.
    pub fn sample<R: Rng + ?Sized>(width: usize, input_dim: usize, rng: &mut R) -> Self {
        let mut normal = || -> f64 { rng.sample(StandardNormal) };
        let w = DMatrix::from_fn(width, width, |_, _| normal());
        let u = DMatrix::from_fn(width, input_dim, |_, _| normal());
        let b = DVector::from_fn(width, |_, _| normal());
        let v = DMatrix::from_fn(1, width, |_, _| normal());
        Self { w, u, b, v }
    }

    pub fn width(&self) -> usize {
        self.w.nrows()
    }

    pub fn input_dim(&self) -> usize {
        self.u.ncols()
    }

    pub fn output_dim(&self) -> usize {
        self.v.nrows()
    }
}

struct ForwardTrace {
    /// Pre-activations g(1..T) as columns.
    g: DMatrix<f64>,
    /// Hidden states h(1..T) as columns.
    h: DMatrix<f64>,
}

fn forward_trace(x: &TimeSeries, w: &RnnWeights, p: &RntkParams) -> Result<ForwardTrace> {
    if x.dim() != w.input_dim() {
        return Err(Error::DimensionMismatch {
            expected: w.input_dim(),
            found: x.dim(),
        });
    }
    let n = w.width();
    let rec_scale = p.sigma_w / (n as f64).sqrt();
    let in_scale = p.sigma_u / (x.dim() as f64).sqrt();
    let mut g = DMatrix::zeros(n, x.len());
    let mut h = DMatrix::zeros(n, x.len());
    for (t, step) in x.steps().enumerate() {
        let xt = DVector::from_column_slice(step);
        let mut gt = &w.u * xt * in_scale + &w.b * p.sigma_b;
        if t > 0 {
            gt.gemv(rec_scale, &w.w, &h.column(t - 1), 1.0);
        }
        h.set_column(t, &gt.map(|z| z.max(0.0)));
        g.set_column(t, &gt);
    }
    Ok(ForwardTrace { g, h })
}

/// Network output `f(x)`, a vector of length `d`.
pub fn rnn_forward(x: &TimeSeries, w: &RnnWeights, p: &RntkParams) -> Result<DVector<f64>> {
    let trace = forward_trace(x, w, p)?;
    let pooled = trace.h.column_sum();
    Ok(&w.v * pooled / (w.width() as f64).sqrt())
}

/// Gradient of a scalar-output network with respect to every parameter.
#[derive(Debug, Clone, PartialEq)]
pub struct RnnGradients {
    pub w: DMatrix<f64>,
    pub u: DMatrix<f64>,
    pub b: DVector<f64>,
    pub v: DMatrix<f64>,
}

impl RnnGradients {
    /// Inner product over the full parameter vector.
    pub fn dot(&self, other: &RnnGradients) -> f64 {
        self.w.dot(&other.w) + self.u.dot(&other.u) + self.b.dot(&other.b) + self.v.dot(&other.v)
    }
}

/// Exact backpropagation through the unrolled recursion. Requires `d = 1`.
pub fn rnn_gradients(x: &TimeSeries, w: &RnnWeights, p: &RntkParams) -> Result<RnnGradients> {
    if w.output_dim() != 1 {
        return Err(Error::invalid(format!(
            "gradients need a scalar output, network has d = {}",
            w.output_dim()
        )));
    }
    let trace = forward_trace(x, w, p)?;
    let (n, big_t) = (w.width(), x.len());
    let inv_sqrt_n = 1.0 / (n as f64).sqrt();
    let rec_scale = p.sigma_w * inv_sqrt_n;
    let readout = w.v.row(0).transpose() * inv_sqrt_n;

    // dg(t) = df/dg(t), stored as columns.
    let mut dg = DMatrix::zeros(n, big_t);
    for t in (0..big_t).rev() {
        let mut dh = readout.clone();
        if t + 1 < big_t {
            dh.gemv_tr(rec_scale, &w.w, &dg.column(t + 1), 1.0);
        }
        let gate = trace.g.column(t).map(|z| if z > 0.0 { 1.0 } else { 0.0 });
        dg.set_column(t, &dh.component_mul(&gate));
    }

    let mut h_prev = DMatrix::zeros(n, big_t);
    if big_t > 1 {
        h_prev
            .columns_mut(1, big_t - 1)
            .copy_from(&trace.h.columns(0, big_t - 1));
    }
    let xs = DMatrix::from_column_slice(x.dim(), big_t, x.values());

    let grad_w = &dg * h_prev.transpose() * rec_scale;
    let grad_u = &dg * xs.transpose() * (p.sigma_u / (x.dim() as f64).sqrt());
    let grad_b = dg.column_sum() * p.sigma_b;
    let grad_v = DMatrix::from_row_slice(1, n, (trace.h.column_sum() * inv_sqrt_n).as_slice());
    Ok(RnnGradients {
        w: grad_w,
        u: grad_u,
        b: grad_b,
        v: grad_v,
    })
}

/// Per-draw gradient inner products `<grad f(x), grad f(y)>` at the given
/// width. Draw `k` uses ChaCha stream `k` of `seed`, so the result does not
/// depend on how draws are scheduled.
pub fn empirical_ntk_samples(
    x: &TimeSeries,
    y: &TimeSeries,
    p: &RntkParams,
    width: usize,
    draws: usize,
    seed: u64,
) -> Result<Vec<f64>> {
    check_dims(x, y)?;
    if width == 0 || draws == 0 {
        return Err(Error::invalid("width and draws must be at least 1"));
    }
    (0..draws)
        .into_par_iter()
        .map(|k| {
            let weights = RnnWeights::sample(width, x.dim(), &mut draw_rng(seed, k));
            let gx = rnn_gradients(x, &weights, p)?;
            let gy = rnn_gradients(y, &weights, p)?;
            Ok(gx.dot(&gy))
        })
        .collect()
}

/// Monte-Carlo estimate of the tangent kernel from finite networks.
pub fn empirical_ntk(
    x: &TimeSeries,
    y: &TimeSeries,
    p: &RntkParams,
    width: usize,
    draws: usize,
    seed: u64,
) -> Result<f64> {
    let samples = empirical_ntk_samples(x, y, p, width, draws, seed)?;
    Ok(samples.iter().sum::<f64>() / samples.len() as f64)
}

pub fn draw_rng(seed: u64, draw: usize) -> ChaCha8Rng {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    rng.set_stream(draw as u64);
    rng
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::Rng;

    fn ts(values: &[f64]) -> TimeSeries {
        TimeSeries::scalar("x", None, values.to_vec()).unwrap()
    }

    fn random_series(
        rng: &mut impl Rng,
        lens: std::ops::RangeInclusive<usize>,
        dim: usize,
    ) -> TimeSeries {
        let len = rng.random_range(lens);
        let values = (0..len * dim)
            .map(|_| rng.random_range(-1.0..1.0))
            .collect();
        TimeSeries::from_flat("r", None, dim, values).unwrap()
    }

    fn moment(a11: f64, a22: f64, a12: f64) -> BivariateMoment {
        BivariateMoment::new(a11, a22, a12).unwrap()
    }

    #[test]
    fn vphi_fixed_points() {
        assert!((vphi(&moment(1.0, 1.0, 1.0)) - 0.5).abs() < 1e-15);
        assert!((vphi(&moment(1.0, 1.0, 0.0)) - 1.0 / (2.0 * PI)).abs() < 1e-15);
        assert!(vphi(&moment(4.0, 1.0, -2.0)).abs() < 1e-15);
        assert!((vphi(&moment(3.0, 3.0, 3.0)) - 1.5).abs() < 1e-14);
        assert_eq!(vphi(&moment(0.0, 2.0, 0.0)), 0.0);
    }

    #[test]
    fn vphi_prime_fixed_points() {
        assert!((vphi_prime(&moment(1.0, 1.0, 1.0)) - 0.5).abs() < 1e-15);
        assert!((vphi_prime(&moment(1.0, 1.0, 0.0)) - 0.25).abs() < 1e-15);
        assert!(vphi_prime(&moment(1.0, 1.0, -1.0)).abs() < 1e-15);
        assert_eq!(vphi_prime(&moment(0.0, 1.0, 0.0)), 0.0);
    }

    #[test]
    fn moment_validation() {
        assert!(BivariateMoment::new(1.0, 1.0, 1.5).is_err());
        assert!(BivariateMoment::new(-1.0, 1.0, 0.0).is_err());
        assert!(BivariateMoment::new(1.0, f64::NAN, 0.0).is_err());
        assert!(BivariateMoment::new(1.0, 1.0, 1.0 + 1e-12).is_ok());
    }

    #[test]
    fn vphi_bounds_hold() {
        let mut rng = draw_rng(11, 0);
        for _ in 0..1000 {
            let a11: f64 = rng.random_range(0.0..5.0);
            let a22: f64 = rng.random_range(0.0..5.0);
            let c: f64 = rng.random_range(-1.0..1.0);
            let m = moment(a11, a22, c * (a11 * a22).sqrt());
            let v = vphi(&m);
            assert!(v >= 0.0 && v <= (a11 * a22).sqrt() + 1e-12);
            let vp = vphi_prime(&m);
            assert!((0.0..=0.5).contains(&vp));
        }
    }

    #[test]
    fn params_validation() {
        assert!(RntkParams::new(0.0, 1.0, 0.0).is_err());
        assert!(RntkParams::new(1.0, 1.0, -1e-3).is_err());
        assert!(RntkParams::new(1.0, f64::INFINITY, 0.0).is_err());
        assert!(RntkParams::new(1.0, 1.0, 0.0).is_ok());
        let d = RntkParams::default();
        assert_eq!((d.sigma_w, d.sigma_u, d.sigma_b), (2.0, 0.316, 1e-5));
    }

    #[test]
    fn single_step_zero_input_tables() {
        let p = RntkParams::new(1.0, 1.0, 1.0).unwrap();
        let x = ts(&[0.0]);
        let t = kernel_tables(&x, &x, &p).unwrap();
        assert_eq!(t.sigma[(0, 0)], 1.0);
        assert!((t.gp[(0, 0)] - 0.5).abs() < 1e-15);
        assert!((t.pi[(0, 0)] - 0.5).abs() < 1e-15);
        assert!((rntk(&x, &x, &p).unwrap() - 1.0).abs() < 1e-15);
    }

    #[test]
    fn anticorrelated_single_step() {
        let p = RntkParams::new(1.0, 1.0, 0.0).unwrap();
        let t = kernel_tables(&ts(&[1.0]), &ts(&[-1.0]), &p).unwrap();
        assert_eq!(t.sigma[(0, 0)], -1.0);
        assert_eq!(t.self_sigma_x, vec![1.0]);
        assert_eq!(t.self_sigma_y, vec![1.0]);
        assert!(t.gp[(0, 0)].abs() < 1e-15);
        assert_eq!(t.pi[(0, 0)], 0.0);
    }

    #[test]
    fn dimension_mismatch_rejected() {
        let a = TimeSeries::from_flat("a", None, 2, vec![1.0, 2.0]).unwrap();
        let b = ts(&[1.0]);
        assert!(matches!(
            rntk(&a, &b, &RntkParams::default()),
            Err(Error::DimensionMismatch { .. })
        ));
    }

    #[test]
    fn symmetric_bit_exact() {
        let mut rng = draw_rng(5, 0);
        let p = RntkParams::default();
        for _ in 0..100 {
            let a = random_series(&mut rng, 1..=8, 2);
            let b = random_series(&mut rng, 1..=8, 2);
            let ab = rntk(&a, &b, &p).unwrap();
            let ba = rntk(&b, &a, &p).unwrap();
            assert_eq!(ab - ba, 0.0, "{ab} vs {ba}");
        }
    }

    #[test]
    fn tables_are_finite_and_non_negative() {
        let mut rng = draw_rng(6, 0);
        let p = RntkParams::default();
        for _ in 0..20 {
            let a = random_series(&mut rng, 1..=30, 1);
            let b = random_series(&mut rng, 1..=30, 1);
            let t = kernel_tables(&a, &b, &p).unwrap();
            assert_eq!(t.sigma.shape(), (a.len(), b.len()));
            assert!(t.sigma.iter().all(|v| v.is_finite()));
            assert!(t.gp.iter().all(|&v| v >= 0.0 && v.is_finite()));
            assert!(t.pi.iter().all(|&v| v >= 0.0 && v.is_finite()));
        }
    }

    #[test]
    fn self_kernel_positive() {
        let mut rng = draw_rng(7, 0);
        for _ in 0..50 {
            let a = random_series(&mut rng, 1..=10, 3);
            assert!(rntk(&a, &a, &RntkParams::default()).unwrap() > 0.0);
        }
        // Zero input still yields a positive kernel through the bias.
        assert!(rntk(&ts(&[0.0, 0.0]), &ts(&[0.0, 0.0]), &RntkParams::default()).unwrap() > 0.0);
    }

    #[test]
    fn appending_zero_step_changes_kernel() {
        let mut rng = draw_rng(8, 0);
        let a = random_series(&mut rng, 5..=5, 1);
        let b = random_series(&mut rng, 4..=4, 1);
        let mut longer = a.values().to_vec();
        longer.push(0.0);
        let a2 = a.with_values(longer).unwrap();
        let p = RntkParams::default();
        assert_ne!(rntk(&a, &b, &p).unwrap(), rntk(&a2, &b, &p).unwrap());
    }

    #[test]
    fn gram_of_one_series() {
        let ds = Dataset::new(vec![ts(&[0.3, -0.2])]).unwrap();
        let gm = rntk_gram(&ds, &RntkParams::default()).unwrap();
        assert_eq!(gm.len(), 1);
        assert!(gm.get(0, 0) > 0.0);
    }

    #[test]
    fn duplicated_series_give_identical_rows() {
        let s = |id: &str, v: &[f64]| TimeSeries::scalar(id, None, v.to_vec()).unwrap();
        let ds = Dataset::new(vec![
            s("a", &[0.1, 0.4, -0.3]),
            s("b", &[1.0, 0.2]),
            s("c", &[0.1, 0.4, -0.3]),
            s("d", &[-0.5]),
        ])
        .unwrap();
        let gm = rntk_gram(&ds, &RntkParams::default()).unwrap();
        for j in 0..4 {
            assert_eq!(gm.get(0, j), gm.get(2, j));
        }
        let d = rntk_distance_matrix(&gm).unwrap();
        assert_eq!(d.get(0, 2), 0.0);
    }

    #[test]
    fn gram_entries_match_pairwise_kernel() {
        let mut rng = draw_rng(9, 0);
        let series: Vec<TimeSeries> = (0..6)
            .map(|i| {
                let len = rng.random_range(1..=7);
                let v = (0..len).map(|_| rng.random_range(-2.0..2.0)).collect();
                TimeSeries::scalar(format!("s{i}"), None, v).unwrap()
            })
            .collect();
        let ds = Dataset::new(series.clone()).unwrap();
        let p = RntkParams::default();
        let gm = rntk_gram(&ds, &p).unwrap();
        for i in 0..6 {
            for j in 0..6 {
                assert_eq!(gm.get(i, j), rntk(&series[i], &series[j], &p).unwrap());
            }
        }
    }

    #[test]
    fn distance_of_orthogonal_kernel() {
        let gm = GramMatrix::new(
            vec!["a".into(), "b".into()],
            DMatrix::identity(2, 2),
            MatrixKind::Kernel,
        )
        .unwrap();
        let d = rntk_distance_matrix(&gm).unwrap();
        assert_eq!(d.get(0, 1), 1.0);
        assert_eq!(d.get(0, 0), 0.0);
        assert_eq!(d.kind(), MatrixKind::Distance);
    }

    #[test]
    fn distance_rejects_distance_input() {
        let gm =
            GramMatrix::new(vec!["a".into()], DMatrix::zeros(1, 1), MatrixKind::Distance).unwrap();
        assert!(rntk_distance_matrix(&gm).is_err());
    }

    #[test]
    fn forward_zero_weights_and_zero_input() {
        let n = 4;
        let p = RntkParams::new(1.5, 0.7, 0.0).unwrap();
        let zero = RnnWeights::new(
            DMatrix::zeros(n, n),
            DMatrix::zeros(n, 1),
            DVector::zeros(n),
            DMatrix::zeros(1, n),
        )
        .unwrap();
        let x = ts(&[1.0, -2.0, 3.0]);
        assert_eq!(rnn_forward(&x, &zero, &p).unwrap()[0], 0.0);

        let w = RnnWeights::sample(n, 1, &mut draw_rng(1, 0));
        assert_eq!(rnn_forward(&ts(&[0.0, 0.0]), &w, &p).unwrap()[0], 0.0);
    }

    #[test]
    fn forward_width_one_closed_form() {
        let p = RntkParams::new(1.3, 0.9, 0.4).unwrap();
        let (wv, uv, bv, vv) = (0.8, 1.7, -0.3, 2.5);
        let w = RnnWeights::new(
            DMatrix::from_element(1, 1, wv),
            DMatrix::from_element(1, 1, uv),
            DVector::from_element(1, bv),
            DMatrix::from_element(1, 1, vv),
        )
        .unwrap();
        let x = ts(&[0.6]);
        let expected = vv * (0.9 * uv * 0.6 + 0.4 * bv).max(0.0);
        assert!((rnn_forward(&x, &w, &p).unwrap()[0] - expected).abs() < 1e-15);
    }

    #[test]
    fn forward_shape_mismatch() {
        let w = RnnWeights::sample(3, 2, &mut draw_rng(1, 0));
        assert!(rnn_forward(&ts(&[1.0]), &w, &RntkParams::default()).is_err());
        assert!(RnnWeights::new(
            DMatrix::zeros(2, 3),
            DMatrix::zeros(2, 1),
            DVector::zeros(2),
            DMatrix::zeros(1, 2)
        )
        .is_err());
    }

    #[test]
    fn self_pair_samples_are_squared_norms() {
        let x = ts(&[0.5, -0.1, 0.9]);
        let p = RntkParams::default();
        let samples = empirical_ntk_samples(&x, &x, &p, 16, 8, 3).unwrap();
        for (k, s) in samples.iter().enumerate() {
            assert!(*s >= 0.0);
            let w = RnnWeights::sample(16, 1, &mut draw_rng(3, k));
            let g = rnn_gradients(&x, &w, &p).unwrap();
            assert_eq!(*s, g.dot(&g));
        }
    }

    #[test]
    fn empirical_ntk_is_reproducible() {
        let x = ts(&[0.5, -0.1, 0.9]);
        let y = ts(&[0.2, 0.3]);
        let p = RntkParams::default();
        let a = empirical_ntk(&x, &y, &p, 32, 6, 42).unwrap();
        let b = empirical_ntk(&x, &y, &p, 32, 6, 42).unwrap();
        assert_eq!(a, b);
        assert_ne!(a, empirical_ntk(&x, &y, &p, 32, 6, 43).unwrap());
    }
}
