//! The four-panel separation experiment: RNTK PCA and RNTK t-SNE against PCA
//! and t-SNE on zero-padded sequences.

use serde::{Deserialize, Serialize};

use crate::dynamics::{self, GenConfig, OdeClassSpec};
use crate::embedding::Embedding;
use crate::error::Result;
use crate::gram::{GramMatrix, MatrixKind};
use crate::kpca;
use crate::metrics::{self, SeparationMetrics};
use crate::rntk::{self, RntkParams};
use crate::series::Dataset;
use crate::tsne::{self, TsneConfig};

/// Minimum 1-NN accuracy for each RNTK embedding.
pub const MIN_RNTK_ACCURACY: f64 = 0.85;
/// Minimum 1-NN accuracy gain of each RNTK embedding over its padded baseline.
pub const MIN_ACCURACY_MARGIN: f64 = 0.10;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Method {
    PaddedTsne,
    RntkTsne,
    PaddedPca,
    RntkPca,
}

impl Method {
    /// Panel order: top row t-SNE, bottom row PCA; baseline on the left.
    pub const ALL: [Method; 4] = [
        Method::PaddedTsne,
        Method::RntkTsne,
        Method::PaddedPca,
        Method::RntkPca,
    ];

    pub fn title(self) -> &'static str {
        match self {
            Method::PaddedTsne => "t-SNE (zero-padded)",
            Method::RntkTsne => "RNTK t-SNE",
            Method::PaddedPca => "PCA (zero-padded)",
            Method::RntkPca => "RNTK PCA",
        }
    }

    pub fn slug(self) -> &'static str {
        match self {
            Method::PaddedTsne => "padded_tsne",
            Method::RntkTsne => "rntk_tsne",
            Method::PaddedPca => "padded_pca",
            Method::RntkPca => "rntk_pca",
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ExperimentConfig {
    pub generation: GenConfig,
    pub classes: Vec<OdeClassSpec>,
    pub params: RntkParams,
    pub tsne: TsneConfig,
    pub eval_seed: u64,
}

impl ExperimentConfig {
    /// Defaults throughout, with every random stream tied to `seed`.
    pub fn seeded(seed: u64) -> Self {
        Self {
            generation: GenConfig {
                seed,
                ..GenConfig::default()
            },
            classes: OdeClassSpec::default_classes(),
            params: RntkParams::default(),
            tsne: TsneConfig {
                seed,
                ..TsneConfig::default()
            },
            eval_seed: seed,
        }
    }
}

#[derive(Debug, Clone)]
pub struct Panel {
    pub method: Method,
    pub embedding: Embedding,
    pub metrics: SeparationMetrics,
    /// KL trace for t-SNE panels.
    pub loss_trace: Option<Vec<f64>>,
}

#[derive(Debug, Clone)]
pub struct ExperimentResult {
    pub dataset: Dataset,
    pub rntk_kernel: GramMatrix,
    pub rntk_distance: GramMatrix,
    pub padded_distance: GramMatrix,
    pub padded_kernel: GramMatrix,
    pub panels: Vec<Panel>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ThresholdCheck {
    pub name: String,
    pub value: f64,
    pub threshold: f64,
    pub passed: bool,
}

impl ExperimentResult {
    pub fn panel(&self, method: Method) -> &Panel {
        self.panels
            .iter()
            .find(|p| p.method == method)
            .expect("all four panels are produced")
    }

    fn accuracy(&self, method: Method) -> f64 {
        self.panel(method).metrics.one_nn_accuracy
    }

    /// Separation thresholds on 1-NN accuracy.
    pub fn threshold_checks(&self) -> Vec<ThresholdCheck> {
        let check = |name: &str, value: f64, threshold: f64| ThresholdCheck {
            name: name.to_owned(),
            value,
            threshold,
            passed: value >= threshold,
        };
        vec![
            check(
                "rntk_pca_accuracy",
                self.accuracy(Method::RntkPca),
                MIN_RNTK_ACCURACY,
            ),
            check(
                "rntk_tsne_accuracy",
                self.accuracy(Method::RntkTsne),
                MIN_RNTK_ACCURACY,
            ),
            check(
                "rntk_pca_minus_padded_pca",
                self.accuracy(Method::RntkPca) - self.accuracy(Method::PaddedPca),
                MIN_ACCURACY_MARGIN,
            ),
            check(
                "rntk_tsne_minus_padded_tsne",
                self.accuracy(Method::RntkTsne) - self.accuracy(Method::PaddedTsne),
                MIN_ACCURACY_MARGIN,
            ),
        ]
    }
}

/// Linear kernel `<x_i, x_j>` of equal-length flattened series.
pub fn linear_gram(ds: &Dataset) -> Result<GramMatrix> {
    let series = ds.series();
    let n = series.len();
    // Shares the equal-length check with the Euclidean baseline.
    dynamics::euclidean_distance_matrix(ds)?;
    let mut k = nalgebra::DMatrix::zeros(n, n);
    for i in 0..n {
        for j in i..n {
            let v: f64 = series[i]
                .values()
                .iter()
                .zip(series[j].values())
                .map(|(a, b)| a * b)
                .sum();
            k[(i, j)] = v;
            k[(j, i)] = v;
        }
    }
    GramMatrix::new(ds.ids(), k, MatrixKind::Kernel)
}

/// Embeds an existing dataset with all four methods.
pub fn run_on_dataset(dataset: Dataset, cfg: &ExperimentConfig) -> Result<ExperimentResult> {
    let labels = dataset.labels();
    let rntk_kernel = rntk::rntk_gram(&dataset, &cfg.params)?;
    let rntk_distance = rntk::rntk_distance_matrix(&rntk_kernel)?;
    let padded = dynamics::zero_pad(&dataset);
    let padded_distance = dynamics::euclidean_distance_matrix(&padded)?;
    let padded_kernel = linear_gram(&padded)?;

    let mut panels = Vec::with_capacity(4);
    for method in Method::ALL {
        let (embedding, loss_trace) = match method {
            Method::PaddedTsne | Method::RntkTsne => {
                let d = if method == Method::RntkTsne {
                    &rntk_distance
                } else {
                    &padded_distance
                };
                let r = tsne::tsne_embed(d, &cfg.tsne, labels.clone())?;
                (r.embedding, Some(r.loss_trace))
            }
            Method::PaddedPca | Method::RntkPca => {
                let k = if method == Method::RntkPca {
                    &rntk_kernel
                } else {
                    &padded_kernel
                };
                (kpca::kpca_fit(k, 2, labels.clone())?.embedding, None)
            }
        };
        let metrics = metrics::separation_metrics(&embedding, cfg.eval_seed)?;
        panels.push(Panel {
            method,
            embedding,
            metrics,
            loss_trace,
        });
    }
    Ok(ExperimentResult {
        dataset,
        rntk_kernel,
        rntk_distance,
        padded_distance,
        padded_kernel,
        panels,
    })
}

/// Generates the synthetic dataset and runs all four methods.
pub fn run_experiment(cfg: &ExperimentConfig) -> Result<ExperimentResult> {
    let dataset = dynamics::make_dataset(&cfg.classes, &cfg.generation)?;
    run_on_dataset(dataset, cfg)
}
