//! Episodic few-shot evaluation over precomputed embeddings.
//!
//! The pipeline per episode is: sample an N-way K-shot task from an
//! [`EmbeddingDataset`], optionally L2-normalize it, fit a base learner on the
//! support set, score the query set and reduce the scores to macro accuracy and
//! macro AUROC. [`runner`] wires this into reproducible experiments and grids.
//!
//! The numeric modules are generic over [`Real`] (`f32` or `f64`); the aliases
//! below fix the 64-bit type used by the file formats and the runner.

pub mod classifiers;
pub mod error;
pub mod metrics;
pub mod preprocess;
pub mod runner;
pub mod sampler;
pub mod scalar;
pub mod store;

pub use error::{Error, Result};
pub use scalar::Real;

pub type EmbeddingRecord = store::EmbeddingRecord<f64>;
pub type EmbeddingDataset = store::EmbeddingDataset<f64>;
pub type Episode = sampler::Episode<f64>;
pub type ScoreMatrix = classifiers::ScoreMatrix<f64>;
pub type TrainedClassifier = classifiers::TrainedClassifier<f64>;
pub type PrototypeModel = classifiers::PrototypeModel<f64>;
pub type LinearModel = classifiers::LinearModel<f64>;
pub type TreeModel = classifiers::TreeModel<f64>;
pub type NeighborModel = classifiers::NeighborModel<f64>;

pub const ENGINE_VERSION: &str = env!("CARGO_PKG_VERSION");
