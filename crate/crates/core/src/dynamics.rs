//! Synthetic variable-length series from the second-order linear ODE family
//!
//! ```text
//! t^2 x'' - a1 x' - a0 t x = 0
//! ```
//!
//! integrated with classical RK4 as the first-order system
//! `x' = v, v' = (a1 v + a0 t x) / t^2` on the grid `t_start + k * t_step`.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::StandardNormal;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::gram::{GramMatrix, MatrixKind};
use crate::series::{Dataset, TimeSeries};

const MAX_ATTEMPTS: usize = 100;

/// Gaussian distributions of `(a0, a1)` for one class.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct OdeClassSpec {
    pub a0_mean: f64,
    pub a0_var: f64,
    pub a1_mean: f64,
    pub a1_var: f64,
    pub label: i32,
}

impl OdeClassSpec {
    pub fn new(a0_mean: f64, a0_var: f64, a1_mean: f64, a1_var: f64, label: i32) -> Result<Self> {
        let finite = [a0_mean, a0_var, a1_mean, a1_var]
            .iter()
            .all(|v| v.is_finite());
        if !finite || a0_var < 0.0 || a1_var < 0.0 {
            return Err(Error::invalid(
                "class spec needs finite means and non-negative spreads",
            ));
        }
        Ok(Self {
            a0_mean,
            a0_var,
            a1_mean,
            a1_var,
            label,
        })
    }

    /// Class 1: a0 ~ N(0, 0.0025), a1 ~ N(-4, 4).
    /// Class 2: a0 ~ N(0, 0.01),   a1 ~ N(-20, 1).
    pub fn default_classes() -> Vec<OdeClassSpec> {
        vec![
            OdeClassSpec {
                a0_mean: 0.0,
                a0_var: 0.0025,
                a1_mean: -4.0,
                a1_var: 4.0,
                label: 1,
            },
            OdeClassSpec {
                a0_mean: 0.0,
                a0_var: 0.01,
                a1_mean: -20.0,
                a1_var: 1.0,
                label: 2,
            },
        ]
    }

    fn sample<R: Rng + ?Sized>(&self, spread: Spread, rng: &mut R) -> (f64, f64) {
        let z0: f64 = rng.sample(StandardNormal);
        let z1: f64 = rng.sample(StandardNormal);
        (
            self.a0_mean + spread.std_dev(self.a0_var) * z0,
            self.a1_mean + spread.std_dev(self.a1_var) * z1,
        )
    }
}

/// How the second parameter of each class Gaussian is read.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Spread {
    #[default]
    Variance,
    StdDev,
}

impl Spread {
    fn std_dev(self, value: f64) -> f64 {
        match self {
            Spread::Variance => value.sqrt(),
            Spread::StdDev => value,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct GenConfig {
    pub n_per_class: usize,
    pub seq_len: usize,
    pub drop_prob: f64,
    pub t_start: f64,
    pub t_step: f64,
    /// RK4 steps per output sample.
    pub substeps: usize,
    /// Initial value `x(t_start)`.
    pub x0: f64,
    /// Initial slope `x'(t_start)`. With zero slope both default classes
    /// stay near `x0` and are indistinguishable by any method.
    pub v0: f64,
    pub spread: Spread,
    pub seed: u64,
}

impl Default for GenConfig {
    fn default() -> Self {
        Self {
            n_per_class: 100,
            seq_len: 30,
            drop_prob: 0.2,
            t_start: 1.0,
            t_step: 1.0,
            substeps: 100,
            x0: 1.0,
            v0: 1.0,
            spread: Spread::Variance,
            seed: 0,
        }
    }
}

impl GenConfig {
    pub fn validate(&self) -> Result<()> {
        if !(0.0..1.0).contains(&self.drop_prob) {
            return Err(Error::invalid(format!(
                "drop probability {} not in [0, 1)",
                self.drop_prob
            )));
        }
        if self.seq_len < 2 {
            return Err(Error::invalid("sequence length must be at least 2"));
        }
        if !(self.t_start > 0.0 && self.t_start.is_finite()) {
            return Err(Error::invalid(
                "t_start must be positive (the ODE is singular at t = 0)",
            ));
        }
        if !(self.t_step > 0.0 && self.t_step.is_finite()) || self.substeps == 0 {
            return Err(Error::invalid(
                "t_step must be positive and substeps at least 1",
            ));
        }
        if self.n_per_class == 0 {
            return Err(Error::invalid("need at least one sequence per class"));
        }
        if !(self.x0.is_finite() && self.v0.is_finite()) {
            return Err(Error::invalid("initial conditions must be finite"));
        }
        Ok(())
    }
}

#[inline]
fn rhs(a0: f64, a1: f64, t: f64, x: f64, v: f64) -> (f64, f64) {
    (v, (a1 * v + a0 * t * x) / (t * t))
}

/// Samples `x(t_k)` for `k = 0..seq_len` with `cfg.substeps` RK4 steps between
/// consecutive samples.
pub fn integrate_ode(a0: f64, a1: f64, cfg: &GenConfig) -> Result<Vec<f64>> {
    cfg.validate()?;
    let h = cfg.t_step / cfg.substeps as f64;
    let (mut x, mut v) = (cfg.x0, cfg.v0);
    let mut out = Vec::with_capacity(cfg.seq_len);
    out.push(x);
    for k in 1..cfg.seq_len {
        let base = cfg.t_start + (k - 1) as f64 * cfg.t_step;
        for s in 0..cfg.substeps {
            let t = base + s as f64 * h;
            let (k1x, k1v) = rhs(a0, a1, t, x, v);
            let (k2x, k2v) = rhs(a0, a1, t + 0.5 * h, x + 0.5 * h * k1x, v + 0.5 * h * k1v);
            let (k3x, k3v) = rhs(a0, a1, t + 0.5 * h, x + 0.5 * h * k2x, v + 0.5 * h * k2v);
            let (k4x, k4v) = rhs(a0, a1, t + h, x + h * k3x, v + h * k3v);
            x += h / 6.0 * (k1x + 2.0 * k2x + 2.0 * k3x + k4x);
            v += h / 6.0 * (k1v + 2.0 * k2v + 2.0 * k3v + k4v);
        }
        if !(x.is_finite() && v.is_finite()) {
            return Err(Error::Numerical(format!(
                "trajectory blew up before t = {} (a0 = {a0}, a1 = {a1})",
                base + cfg.t_step
            )));
        }
        out.push(x);
    }
    Ok(out)
}

/// Removes each step independently with probability `drop_prob`, keeping
/// order. If every step would be dropped, one uniformly chosen step survives.
pub fn drop_elements<R: Rng + ?Sized>(ts: &TimeSeries, drop_prob: f64, rng: &mut R) -> TimeSeries {
    let mut kept = Vec::with_capacity(ts.values().len());
    for step in ts.steps() {
        if rng.random::<f64>() >= drop_prob {
            kept.extend_from_slice(step);
        }
    }
    if kept.is_empty() {
        let t = rng.random_range(0..ts.len());
        kept.extend_from_slice(ts.step(t));
    }
    ts.with_values(kept)
        .expect("subsequence of a valid series is valid")
}

fn sequence_rng(seed: u64, class: usize, index: usize) -> ChaCha8Rng {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    rng.set_stream(((class as u64) << 32) | index as u64);
    rng
}

/// `n_per_class` labeled, dropped sequences per class. Sequence `i` of class
/// `c` draws all of its randomness from its own stream of `cfg.seed`.
pub fn make_dataset(specs: &[OdeClassSpec], cfg: &GenConfig) -> Result<Dataset> {
    cfg.validate()?;
    if specs.is_empty() {
        return Err(Error::invalid("need at least one class spec"));
    }
    let jobs: Vec<(usize, usize)> = (0..specs.len())
        .flat_map(|c| (0..cfg.n_per_class).map(move |i| (c, i)))
        .collect();
    let series = jobs
        .into_par_iter()
        .map(|(c, i)| {
            let spec = &specs[c];
            let mut rng = sequence_rng(cfg.seed, c, i);
            let id = format!("c{}_{i:03}", spec.label);
            let mut last_err = None;
            for _ in 0..MAX_ATTEMPTS {
                let (a0, a1) = spec.sample(cfg.spread, &mut rng);
                match integrate_ode(a0, a1, cfg) {
                    Ok(values) => {
                        let full = TimeSeries::scalar(id, Some(spec.label), values)?;
                        return Ok(drop_elements(&full, cfg.drop_prob, &mut rng));
                    }
                    Err(e) => last_err = Some(e),
                }
            }
            Err(Error::Numerical(format!(
                "class {}: {MAX_ATTEMPTS} consecutive blow-ups for sequence {i}; last: {}",
                spec.label,
                last_err.map(|e| e.to_string()).unwrap_or_default()
            )))
        })
        .collect::<Result<Vec<_>>>()?;
    Dataset::new(series)
}

/// Pads every series at the end with zero steps up to the longest length.
pub fn zero_pad(ds: &Dataset) -> Dataset {
    let target = ds.max_len();
    let dim = ds.dim();
    let series = ds
        .series()
        .iter()
        .map(|s| {
            let mut values = s.values().to_vec();
            values.resize(target * dim, 0.0);
            s.with_values(values).expect("padding keeps values finite")
        })
        .collect();
    Dataset::new(series).expect("padding preserves ids and dimension")
}

/// Pairwise l2 distances between flattened equal-length series.
pub fn euclidean_distance_matrix(ds: &Dataset) -> Result<GramMatrix> {
    let series = ds.series();
    let len = series[0].len();
    if let Some(bad) = series.iter().find(|s| s.len() != len) {
        return Err(Error::invalid(format!(
            "series {:?} has length {} but {:?} has {len}; zero-pad first",
            bad.id(),
            bad.len(),
            series[0].id()
        )));
    }
    let n = series.len();
    let mut d = nalgebra::DMatrix::zeros(n, n);
    for i in 0..n {
        for j in (i + 1)..n {
            let dist = series[i]
                .values()
                .iter()
                .zip(series[j].values())
                .map(|(a, b)| (a - b) * (a - b))
                .sum::<f64>()
                .sqrt();
            d[(i, j)] = dist;
            d[(j, i)] = dist;
        }
    }
    GramMatrix::new(ds.ids(), d, MatrixKind::Distance)
}
