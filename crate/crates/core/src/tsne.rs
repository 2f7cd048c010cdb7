//! Exact t-SNE over a precomputed distance matrix.
//!
//! Works with any [`GramMatrix`] of kind distance, so the same optimizer
//! embeds both RNTK Pearson distances and Euclidean distances of padded
//! sequences.

use nalgebra::DMatrix;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::StandardNormal;
use serde::{Deserialize, Serialize};

use crate::embedding::Embedding;
use crate::error::{Error, Result};
use crate::gram::{GramMatrix, MatrixKind};

/// Floor applied to joint probabilities.
pub const PROB_FLOOR: f64 = 1e-12;
const BISECTION_STEPS: usize = 64;
const LOG_PERPLEXITY_TOL: f64 = 1e-6;
const LOG_SIGMA_MIN: f64 = -46.051_701_859_880_914; // ln(1e-20)
const LOG_SIGMA_MAX: f64 = 46.051_701_859_880_914; // ln(1e20)

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TsneConfig {
    pub perplexity: f64,
    pub output_dim: usize,
    pub iterations: usize,
    pub learning_rate: f64,
    pub initial_momentum: f64,
    pub final_momentum: f64,
    /// Iteration at which momentum switches from initial to final.
    pub momentum_switch: usize,
    pub exaggeration: f64,
    /// Number of leading iterations that use the exaggerated P.
    pub exaggeration_iters: usize,
    pub seed: u64,
}

impl Default for TsneConfig {
    fn default() -> Self {
        Self {
            perplexity: 30.0,
            output_dim: 2,
            iterations: 1000,
            learning_rate: 200.0,
            initial_momentum: 0.5,
            final_momentum: 0.8,
            momentum_switch: 250,
            exaggeration: 12.0,
            exaggeration_iters: 250,
            seed: 0,
        }
    }
}

impl TsneConfig {
    fn validate(&self, n: usize) -> Result<()> {
        let positive = [self.perplexity, self.learning_rate, self.exaggeration]
            .iter()
            .all(|v| v.is_finite() && *v > 0.0);
        let momenta_ok = [self.initial_momentum, self.final_momentum]
            .iter()
            .all(|m| (0.0..1.0).contains(m));
        if !positive || !momenta_ok || self.output_dim == 0 || self.iterations == 0 {
            return Err(Error::invalid(format!(
                "invalid t-SNE configuration {self:?}"
            )));
        }
        if n < 2 {
            return Err(Error::invalid("t-SNE needs at least two points"));
        }
        if self.perplexity >= n as f64 {
            return Err(Error::invalid(format!(
                "perplexity {} must be below the number of points {n}",
                self.perplexity
            )));
        }
        Ok(())
    }
}

/// Non-negative n×n probabilities with a zero diagonal.
#[derive(Debug, Clone, PartialEq)]
pub struct AffinityMatrix {
    values: DMatrix<f64>,
}

impl AffinityMatrix {
    pub fn new(values: DMatrix<f64>) -> Result<Self> {
        let n = values.nrows();
        if values.ncols() != n {
            return Err(Error::invalid("affinity matrix must be square"));
        }
        if values.iter().any(|v| !v.is_finite() || *v < 0.0) {
            return Err(Error::invalid("affinities must be finite and non-negative"));
        }
        if (0..n).any(|i| values[(i, i)] != 0.0) {
            return Err(Error::invalid("affinity diagonal must be zero"));
        }
        Ok(Self { values })
    }

    pub fn values(&self) -> &DMatrix<f64> {
        &self.values
    }

    pub fn len(&self) -> usize {
        self.values.nrows()
    }

    pub fn is_empty(&self) -> bool {
        self.values.is_empty()
    }

    pub fn total(&self) -> f64 {
        self.values.sum()
    }

    pub fn get(&self, i: usize, j: usize) -> f64 {
        self.values[(i, j)]
    }
}

/// Row-conditional affinities together with the per-row bandwidths.
#[derive(Debug, Clone)]
pub struct ConditionalAffinities {
    pub affinities: AffinityMatrix,
    pub sigmas: Vec<f64>,
    /// Rows whose target perplexity could not be reached; these fall back to
    /// the closest bandwidth found (uniform when all distances tie).
    pub unconverged_rows: Vec<usize>,
}

/// `p_{j|i}` with each row's Gaussian bandwidth set by bisection on
/// `ln sigma` so that the row perplexity matches the target.
pub fn conditional_affinities(d: &GramMatrix, perplexity: f64) -> Result<ConditionalAffinities> {
    d.expect_kind(MatrixKind::Distance)?;
    let n = d.len();
    if n < 2 {
        return Err(Error::invalid("need at least two points"));
    }
    if !(perplexity > 1.0 && perplexity < n as f64) {
        return Err(Error::invalid(format!(
            "perplexity must lie in (1, {n}), got {perplexity}"
        )));
    }
    let target = perplexity.ln();
    let mut values = DMatrix::zeros(n, n);
    let mut sigmas = Vec::with_capacity(n);
    let mut unconverged_rows = Vec::new();
    let mut sq = vec![0.0; n - 1];
    let mut probs = vec![0.0; n - 1];
    for i in 0..n {
        for (slot, j) in (0..n).filter(|&j| j != i).enumerate() {
            let dij = d.get(i, j);
            sq[slot] = dij * dij;
        }
        let min_sq = sq.iter().copied().fold(f64::INFINITY, f64::min);
        let (mut lo, mut hi) = (LOG_SIGMA_MIN, LOG_SIGMA_MAX);
        let mut converged = false;
        let mut log_sigma = 0.0;
        for _ in 0..BISECTION_STEPS {
            log_sigma = 0.5 * (lo + hi);
            let entropy = row_distribution(&sq, min_sq, log_sigma, &mut probs);
            if (entropy - target).abs() < LOG_PERPLEXITY_TOL {
                converged = true;
                break;
            }
            if entropy > target {
                hi = log_sigma;
            } else {
                lo = log_sigma;
            }
        }
        if !converged {
            unconverged_rows.push(i);
            if sq.iter().all(|&s| s == sq[0]) {
                probs.fill(1.0 / (n - 1) as f64);
            }
        }
        for (slot, j) in (0..n).filter(|&j| j != i).enumerate() {
            values[(i, j)] = probs[slot];
        }
        sigmas.push(log_sigma.exp());
    }
    Ok(ConditionalAffinities {
        affinities: AffinityMatrix::new(values)?,
        sigmas,
        unconverged_rows,
    })
}

/// Fills `probs` with the normalized Gaussian row and returns its entropy in nats.
fn row_distribution(sq: &[f64], min_sq: f64, log_sigma: f64, probs: &mut [f64]) -> f64 {
    let inv_two_var = 0.5 * (-2.0 * log_sigma).exp();
    let mut z = 0.0;
    let mut weighted = 0.0;
    for (p, &s) in probs.iter_mut().zip(sq) {
        let e = (s - min_sq) * inv_two_var;
        *p = (-e).exp();
        z += *p;
        weighted += *p * e;
    }
    for p in probs.iter_mut() {
        *p /= z;
    }
    z.ln() + weighted / z
}

/// Joint affinities `(p_{j|i} + p_{i|j}) / 2n`, floored at [`PROB_FLOOR`] and
/// renormalized to sum to one.
pub fn symmetrize(p: &AffinityMatrix) -> AffinityMatrix {
    let n = p.len();
    let v = p.values();
    let mut joint = DMatrix::zeros(n, n);
    for i in 0..n {
        for j in (i + 1)..n {
            let pij = ((v[(i, j)] + v[(j, i)]) / (2.0 * n as f64)).max(PROB_FLOOR);
            joint[(i, j)] = pij;
            joint[(j, i)] = pij;
        }
    }
    let total = joint.sum();
    joint /= total;
    AffinityMatrix { values: joint }
}

/// Student-t joint affinities of embedding coordinates (rows are points).
pub fn student_t_affinities(y: &DMatrix<f64>) -> AffinityMatrix {
    let (q, _) = student_t_with_kernel(y);
    q
}

/// Returns Q and the unnormalized kernel `(1 + |yi - yj|^2)^-1`.
fn student_t_with_kernel(y: &DMatrix<f64>) -> (AffinityMatrix, DMatrix<f64>) {
    let n = y.nrows();
    let mut num = DMatrix::zeros(n, n);
    let mut z = 0.0;
    for i in 0..n {
        for j in (i + 1)..n {
            let d2: f64 = (0..y.ncols())
                .map(|c| (y[(i, c)] - y[(j, c)]).powi(2))
                .sum();
            let k = 1.0 / (1.0 + d2);
            num[(i, j)] = k;
            num[(j, i)] = k;
            z += 2.0 * k;
        }
    }
    let q = if z > 0.0 { &num / z } else { num.clone() };
    (AffinityMatrix { values: q }, num)
}

/// `sum p log(p / q)` over off-diagonal entries with `p > 0`, natural log.
pub fn kl_divergence(p: &AffinityMatrix, q: &AffinityMatrix) -> f64 {
    let n = p.len();
    let mut c = 0.0;
    for i in 0..n {
        for j in 0..n {
            let pij = p.get(i, j);
            if i != j && pij > 0.0 {
                c += pij * (pij / q.get(i, j).max(PROB_FLOOR)).ln();
            }
        }
    }
    c
}

/// KL loss and its gradient with respect to the embedding coordinates.
pub fn tsne_gradient(p: &AffinityMatrix, y: &DMatrix<f64>) -> (f64, DMatrix<f64>) {
    let (q, num) = student_t_with_kernel(y);
    let loss = kl_divergence(p, &q);
    (loss, gradient_from(p.values(), &q, &num, y))
}

fn gradient_from(
    p: &DMatrix<f64>,
    q: &AffinityMatrix,
    num: &DMatrix<f64>,
    y: &DMatrix<f64>,
) -> DMatrix<f64> {
    let (n, k) = y.shape();
    let mut grad = DMatrix::zeros(n, k);
    for i in 0..n {
        for j in 0..n {
            if i == j {
                continue;
            }
            let w = 4.0 * (p[(i, j)] - q.get(i, j)) * num[(i, j)];
            for c in 0..k {
                grad[(i, c)] += w * (y[(i, c)] - y[(j, c)]);
            }
        }
    }
    grad
}

#[derive(Debug, Clone)]
pub struct TsneResult {
    pub embedding: Embedding,
    /// KL divergence against the unexaggerated P: entry 0 at initialization,
    /// entry `i + 1` after update `i`.
    pub loss_trace: Vec<f64>,
    /// Rows where the perplexity search fell back.
    pub unconverged_rows: Vec<usize>,
    /// Largest `|sum Q - 1|` seen during optimization.
    pub max_q_norm_error: f64,
    /// `|sum P - 1|` of the joint affinities.
    pub p_norm_error: f64,
}

impl TsneResult {
    pub fn initial_loss(&self) -> f64 {
        self.loss_trace[0]
    }

    pub fn final_loss(&self) -> f64 {
        *self.loss_trace.last().expect("trace is never empty")
    }
}

/// Gradient descent with momentum, per-coordinate adaptive gains and early
/// exaggeration, starting from `N(0, 1e-4)` coordinates drawn from `cfg.seed`.
pub fn tsne_embed(
    d: &GramMatrix,
    cfg: &TsneConfig,
    labels: Vec<Option<i32>>,
) -> Result<TsneResult> {
    d.expect_kind(MatrixKind::Distance)?;
    let n = d.len();
    cfg.validate(n)?;
    let cond = conditional_affinities(d, cfg.perplexity)?;
    let p = symmetrize(&cond.affinities);
    let p_norm_error = (p.total() - 1.0).abs();
    let p_exaggerated = p.values() * cfg.exaggeration;

    let k = cfg.output_dim;
    let mut rng = ChaCha8Rng::seed_from_u64(cfg.seed);
    let mut y = DMatrix::from_fn(n, k, |_, _| 1e-2 * rng.sample::<f64, _>(StandardNormal));
    let mut update = DMatrix::<f64>::zeros(n, k);
    let mut gains = DMatrix::from_element(n, k, 1.0);
    let mut loss_trace = Vec::with_capacity(cfg.iterations + 1);
    let mut max_q_norm_error: f64 = 0.0;

    for it in 0..cfg.iterations {
        let (q, num) = student_t_with_kernel(&y);
        max_q_norm_error = max_q_norm_error.max((q.total() - 1.0).abs());
        loss_trace.push(kl_divergence(&p, &q));
        let p_eff = if it < cfg.exaggeration_iters {
            &p_exaggerated
        } else {
            p.values()
        };
        let grad = gradient_from(p_eff, &q, &num, &y);
        let momentum = if it < cfg.momentum_switch {
            cfg.initial_momentum
        } else {
            cfg.final_momentum
        };
        for idx in 0..n * k {
            gains[idx] = if update[idx] * grad[idx] < 0.0 {
                gains[idx] + 0.2
            } else {
                (gains[idx] * 0.8f64).max(0.01)
            };
            update[idx] = momentum * update[idx] - cfg.learning_rate * gains[idx] * grad[idx];
            y[idx] += update[idx];
        }
        let mean = y.row_mean();
        for mut row in y.row_iter_mut() {
            row -= &mean;
        }
        if y.iter().any(|v| !v.is_finite()) {
            return Err(Error::Numerical(format!(
                "t-SNE diverged at iteration {it} (last loss {:?})",
                loss_trace.last()
            )));
        }
    }
    let (q, _) = student_t_with_kernel(&y);
    max_q_norm_error = max_q_norm_error.max((q.total() - 1.0).abs());
    loss_trace.push(kl_divergence(&p, &q));

    Ok(TsneResult {
        embedding: Embedding::new(d.ids().to_vec(), labels, y)?,
        loss_trace,
        unconverged_rows: cond.unconverged_rows,
        max_q_norm_error,
        p_norm_error,
    })
}

/// `iteration,kl` CSV of a loss trace.
pub fn format_loss_trace(trace: &[f64]) -> String {
    let mut out = String::from("iteration,kl\n");
    for (i, v) in trace.iter().enumerate() {
        out.push_str(&format!("{i},{v:.16e}\n"));
    }
    out
}
