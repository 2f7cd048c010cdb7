//! Class-separation scores for labeled embeddings.

use std::collections::BTreeMap;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::embedding::Embedding;
use crate::error::{Error, Result};

const KMEANS_RESTARTS: usize = 10;
const KMEANS_MAX_ITERS: usize = 300;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SeparationMetrics {
    pub one_nn_accuracy: f64,
    pub kmeans_ari: f64,
    pub n: usize,
    pub classes: usize,
}

fn labels_with_classes(emb: &Embedding) -> Result<(Vec<i32>, usize)> {
    let labels = emb.required_labels()?;
    let mut distinct = labels.clone();
    distinct.sort_unstable();
    distinct.dedup();
    if distinct.len() < 2 {
        return Err(Error::invalid(
            "separation metrics need at least two classes",
        ));
    }
    Ok((labels, distinct.len()))
}

fn sq_dist(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| (x - y) * (x - y)).sum()
}

fn points(emb: &Embedding) -> Vec<Vec<f64>> {
    (0..emb.len()).map(|i| emb.point(i)).collect()
}

/// Leave-one-out 1-nearest-neighbour accuracy; ties go to the lower index.
pub fn one_nn_accuracy(emb: &Embedding) -> Result<f64> {
    let (labels, _) = labels_with_classes(emb)?;
    let pts = points(emb);
    let n = pts.len();
    let mut correct = 0usize;
    for i in 0..n {
        let nearest = (0..n)
            .filter(|&j| j != i)
            .min_by(|&a, &b| sq_dist(&pts[i], &pts[a]).total_cmp(&sq_dist(&pts[i], &pts[b])))
            .expect("at least two points");
        if labels[nearest] == labels[i] {
            correct += 1;
        }
    }
    Ok(correct as f64 / n as f64)
}

/// Adjusted Rand index between two flat clusterings.
pub fn adjusted_rand_index(a: &[i32], b: &[i32]) -> Result<f64> {
    if a.len() != b.len() {
        return Err(Error::DimensionMismatch {
            expected: a.len(),
            found: b.len(),
        });
    }
    let n = a.len() as f64;
    let comb2 = |x: f64| x * (x - 1.0) / 2.0;
    let mut table: BTreeMap<(i32, i32), f64> = BTreeMap::new();
    let mut rows: BTreeMap<i32, f64> = BTreeMap::new();
    let mut cols: BTreeMap<i32, f64> = BTreeMap::new();
    for (&x, &y) in a.iter().zip(b) {
        *table.entry((x, y)).or_default() += 1.0;
        *rows.entry(x).or_default() += 1.0;
        *cols.entry(y).or_default() += 1.0;
    }
    let index: f64 = table.values().map(|&c| comb2(c)).sum();
    let sum_rows: f64 = rows.values().map(|&c| comb2(c)).sum();
    let sum_cols: f64 = cols.values().map(|&c| comb2(c)).sum();
    let expected = sum_rows * sum_cols / comb2(n);
    let max_index = 0.5 * (sum_rows + sum_cols);
    if max_index == expected {
        // Both partitions trivial (all one cluster or all singletons).
        return Ok(1.0);
    }
    Ok((index - expected) / (max_index - expected))
}

/// Lloyd's k-means with k-means++ seeding; the lowest-inertia restart wins.
pub fn kmeans(points: &[Vec<f64>], k: usize, seed: u64) -> Vec<usize> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut best: Option<(f64, Vec<usize>)> = None;
    for _ in 0..KMEANS_RESTARTS {
        let (inertia, assign) = kmeans_once(points, k, &mut rng);
        if best.as_ref().is_none_or(|(b, _)| inertia < *b) {
            best = Some((inertia, assign));
        }
    }
    best.map(|(_, a)| a).unwrap_or_default()
}

fn kmeans_once(points: &[Vec<f64>], k: usize, rng: &mut ChaCha8Rng) -> (f64, Vec<usize>) {
    let n = points.len();
    let dim = points[0].len();
    let mut centers: Vec<Vec<f64>> = vec![points[rng.random_range(0..n)].clone()];
    while centers.len() < k {
        let weights: Vec<f64> = points
            .iter()
            .map(|p| {
                centers
                    .iter()
                    .map(|c| sq_dist(p, c))
                    .fold(f64::INFINITY, f64::min)
            })
            .collect();
        let total: f64 = weights.iter().sum();
        let next = if total > 0.0 {
            let mut target = rng.random::<f64>() * total;
            let mut pick = n - 1;
            for (i, w) in weights.iter().enumerate() {
                if target < *w {
                    pick = i;
                    break;
                }
                target -= w;
            }
            pick
        } else {
            rng.random_range(0..n)
        };
        centers.push(points[next].clone());
    }
    let mut assign = vec![usize::MAX; n];
    for _ in 0..KMEANS_MAX_ITERS {
        let mut changed = false;
        for (i, p) in points.iter().enumerate() {
            let c = (0..k)
                .min_by(|&a, &b| sq_dist(p, &centers[a]).total_cmp(&sq_dist(p, &centers[b])))
                .expect("k >= 1");
            if assign[i] != c {
                assign[i] = c;
                changed = true;
            }
        }
        if !changed {
            break;
        }
        for (c, center) in centers.iter_mut().enumerate() {
            let members: Vec<&Vec<f64>> = points
                .iter()
                .zip(&assign)
                .filter(|(_, &a)| a == c)
                .map(|(p, _)| p)
                .collect();
            if members.is_empty() {
                continue;
            }
            for d in 0..dim {
                center[d] = members.iter().map(|p| p[d]).sum::<f64>() / members.len() as f64;
            }
        }
    }
    let inertia = points
        .iter()
        .zip(&assign)
        .map(|(p, &c)| sq_dist(p, &centers[c]))
        .sum();
    (inertia, assign)
}

/// ARI between true labels and a k-means clustering with one cluster per class.
pub fn kmeans_ari(emb: &Embedding, seed: u64) -> Result<f64> {
    let (labels, classes) = labels_with_classes(emb)?;
    let clusters: Vec<i32> = kmeans(&points(emb), classes, seed)
        .into_iter()
        .map(|c| c as i32)
        .collect();
    adjusted_rand_index(&labels, &clusters)
}

pub fn separation_metrics(emb: &Embedding, seed: u64) -> Result<SeparationMetrics> {
    let (_, classes) = labels_with_classes(emb)?;
    Ok(SeparationMetrics {
        one_nn_accuracy: one_nn_accuracy(emb)?,
        kmeans_ari: kmeans_ari(emb, seed)?,
        n: emb.len(),
        classes,
    })
}
