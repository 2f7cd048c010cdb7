//! Recurrent neural tangent kernel (RNTK) for variable-length time series.
//!
//! The crate computes the infinite-width NTK of a single-layer ReLU RNN with
//! sum pooling between sequences of different lengths, and uses it as a
//! drop-in similarity for kernel PCA and t-SNE.
//!
//! | Module | Purpose |
//! |--------|---------|
//! | [`series`] | [`TimeSeries`] / [`Dataset`] and the JSON-lines codec |
//! | [`gram`] | [`GramMatrix`] (kernel or distance) and its CSV codec |
//! | [`embedding`] | [`Embedding`] coordinates and their CSV codec |
//! | [`rntk`] | analytical kernel, Gram assembly, Pearson distance, Monte-Carlo NTK |
//! | [`kpca`] | kernel PCA on a precomputed Gram matrix |
//! | [`tsne`] | exact t-SNE driven by a precomputed distance matrix |
//! | [`dynamics`] | synthetic second-order ODE dataset, element dropping, zero padding |
//! | [`metrics`] | 1-NN accuracy and k-means adjusted Rand index |
//! | [`plot`] | SVG scatter plots |
//! | [`pipeline`] | the four-panel variable-length separation experiment |

pub mod dynamics;
pub mod embedding;
pub mod error;
pub mod gram;
pub mod kpca;
pub mod metrics;
pub mod pipeline;
pub mod plot;
pub mod rntk;
pub mod series;
pub mod tsne;

pub use embedding::Embedding;
pub use error::{Error, Result};
pub use gram::{GramMatrix, MatrixKind};
pub use rntk::RntkParams;
pub use series::{Dataset, TimeSeries};
