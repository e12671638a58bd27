//! Per-episode base learners.
//!
//! Every learner is fitted on support vectors with episode-local labels
//! `0..n_way` and scores queries through [`predict_scores`], which returns one
//! row per query with higher values meaning "more likely". The predicted label
//! is always the row argmax with ties going to the lowest class.

mod knn;
mod linear;
mod prototype;
mod tree;

use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::sampler::Episode;
use crate::scalar::{argmax, Real};

pub use knn::{classify_knn, NeighborModel};
pub use linear::{
    hinge_objective, hinge_subgradient, logistic_gradient, logistic_objective, train_logistic, train_svm,
    FitDiagnostics, LinearKind, LinearModel, SolverConfig, StopReason,
};
pub use prototype::{classify_prototype, compute_prototypes, euclidean_distance, PrototypeModel};
pub use tree::{train_tree, TreeConfig, TreeModel, TreeNode};

/// Checks shapes, label range and that every class has a sample; returns
/// the shared dimensionality.
pub(crate) fn check_support<T: Real, V: AsRef<[T]>>(vectors: &[V], labels: &[usize], n_way: usize) -> Result<usize> {
    let dim = check_shapes(vectors, labels, n_way)?;
    let mut present = vec![false; n_way];
    for &y in labels {
        present[y] = true;
    }
    if let Some(missing) = present.iter().position(|p| !p) {
        return Err(Error::EmptyClass(missing));
    }
    Ok(dim)
}

pub(crate) fn check_shapes<T: Real, V: AsRef<[T]>>(vectors: &[V], labels: &[usize], n_way: usize) -> Result<usize> {
    if vectors.len() != labels.len() {
        return Err(Error::LengthMismatch {
            left: vectors.len(),
            right: labels.len(),
        });
    }
    if let Some(&label) = labels.iter().find(|&&y| y >= n_way) {
        return Err(Error::LabelOutOfRange { label, n_way });
    }
    let dim = vectors.first().map_or(0, |v| v.as_ref().len());
    if let Some(v) = vectors.iter().find(|v| v.as_ref().len() != dim) {
        return Err(Error::LengthMismatch {
            left: v.as_ref().len(),
            right: dim,
        });
    }
    Ok(dim)
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum ClassifierKind {
    Prototype,
    Logistic,
    Svm,
    Tree,
    Knn,
}

impl ClassifierKind {
    pub const ALL: [ClassifierKind; 5] = [
        ClassifierKind::Prototype,
        ClassifierKind::Logistic,
        ClassifierKind::Svm,
        ClassifierKind::Tree,
        ClassifierKind::Knn,
    ];

    pub fn name(self) -> &'static str {
        match self {
            ClassifierKind::Prototype => "prototype",
            ClassifierKind::Logistic => "logistic",
            ClassifierKind::Svm => "svm",
            ClassifierKind::Tree => "tree",
            ClassifierKind::Knn => "knn",
        }
    }
}

impl fmt::Display for ClassifierKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for ClassifierKind {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        Ok(match s.to_ascii_lowercase().as_str() {
            "prototype" | "protonet" | "ncm" => ClassifierKind::Prototype,
            "logistic" | "lr" => ClassifierKind::Logistic,
            "svm" => ClassifierKind::Svm,
            "tree" | "dt" => ClassifierKind::Tree,
            "knn" | "nn" => ClassifierKind::Knn,
            other => return Err(Error::Config(format!("unknown classifier `{other}`"))),
        })
    }
}

/// Hyperparameters for every learner kind; only the relevant block is used.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ClassifierParams {
    pub solver: SolverConfig,
    pub tree: TreeConfig,
    pub knn_k: usize,
}

impl Default for ClassifierParams {
    fn default() -> Self {
        Self {
            solver: SolverConfig::default(),
            tree: TreeConfig::default(),
            knn_k: 1,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub enum TrainedClassifier<T> {
    Prototype(PrototypeModel<T>),
    Linear(LinearModel<T>, FitDiagnostics),
    Tree(TreeModel<T>),
    Neighbor(NeighborModel<T>),
}

impl<T: Real> TrainedClassifier<T> {
    /// Label and score row for one query.
    pub fn classify(&self, query: &[T]) -> Result<(usize, Vec<T>)> {
        match self {
            TrainedClassifier::Prototype(m) => classify_prototype(m, query),
            TrainedClassifier::Linear(m, _) => {
                if query.len() != m.dim() {
                    return Err(Error::LengthMismatch {
                        left: query.len(),
                        right: m.dim(),
                    });
                }
                let scores = m.decision(query);
                Ok((argmax(&scores), scores))
            }
            TrainedClassifier::Tree(m) => m.classify(query),
            TrainedClassifier::Neighbor(m) => classify_knn(m, query),
        }
    }

    pub fn diagnostics(&self) -> Option<&FitDiagnostics> {
        match self {
            TrainedClassifier::Linear(_, d) => Some(d),
            _ => None,
        }
    }
}

/// Fits `kind` on labeled support vectors. `record_ids` is only consulted by
/// the neighbor model (for distance tie-breaks).
pub fn fit_classifier<T: Real, V: AsRef<[T]>>(
    kind: ClassifierKind,
    params: &ClassifierParams,
    vectors: &[V],
    labels: &[usize],
    record_ids: &[u64],
    n_way: usize,
) -> Result<TrainedClassifier<T>> {
    Ok(match kind {
        ClassifierKind::Prototype => TrainedClassifier::Prototype(compute_prototypes(vectors, labels, n_way)?),
        ClassifierKind::Logistic => {
            let (m, d) = train_logistic(vectors, labels, n_way, &params.solver)?;
            TrainedClassifier::Linear(m, d)
        }
        ClassifierKind::Svm => {
            let (m, d) = train_svm(vectors, labels, n_way, &params.solver)?;
            TrainedClassifier::Linear(m, d)
        }
        ClassifierKind::Tree => TrainedClassifier::Tree(train_tree(vectors, labels, n_way, &params.tree)?),
        ClassifierKind::Knn => {
            TrainedClassifier::Neighbor(NeighborModel::fit(vectors, labels, record_ids, n_way, params.knn_k)?)
        }
    })
}

/// Fits on an episode's support set.
pub fn fit_episode<T: Real>(
    kind: ClassifierKind,
    params: &ClassifierParams,
    episode: &Episode<T>,
) -> Result<TrainedClassifier<T>> {
    let ids: Vec<u64> = episode.support.iter().map(|r| r.record_id).collect();
    fit_classifier(
        kind,
        params,
        &episode.support_vectors(),
        &episode.support_labels(),
        &ids,
        episode.n_way(),
    )
}

/// One row of class scores per query.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ScoreMatrix<T> {
    pub n_way: usize,
    pub rows: Vec<Vec<T>>,
}

impl<T: Real> ScoreMatrix<T> {
    pub fn new(n_way: usize, rows: Vec<Vec<T>>) -> Result<Self> {
        if let Some(r) = rows.iter().find(|r| r.len() != n_way) {
            return Err(Error::LengthMismatch {
                left: r.len(),
                right: n_way,
            });
        }
        if rows.iter().flatten().any(|v| !v.is_finite()) {
            return Err(Error::NonFiniteInput);
        }
        Ok(Self { n_way, rows })
    }

    pub fn len(&self) -> usize {
        self.rows.len()
    }

    pub fn is_empty(&self) -> bool {
        self.rows.is_empty()
    }

    pub fn column(&self, class: usize) -> Vec<T> {
        self.rows.iter().map(|r| r[class]).collect()
    }

    pub fn predicted_labels(&self) -> Vec<usize> {
        self.rows.iter().map(|r| argmax(r)).collect()
    }
}

/// Prototype rows are negative distances, linear rows are logits `Wx + b`,
/// tree rows are leaf class frequencies, neighbor rows are vote fractions.
pub fn predict_scores<T: Real, V: AsRef<[T]>>(
    classifier: &TrainedClassifier<T>,
    queries: &[V],
) -> Result<ScoreMatrix<T>> {
    let n_way = match classifier {
        TrainedClassifier::Prototype(m) => m.n_way(),
        TrainedClassifier::Linear(m, _) => m.n_way(),
        TrainedClassifier::Tree(m) => m.n_way,
        TrainedClassifier::Neighbor(m) => m.n_way,
    };
    let rows = queries
        .iter()
        .map(|q| classifier.classify(q.as_ref()).map(|(_, s)| s))
        .collect::<Result<Vec<_>>>()?;
    ScoreMatrix::new(n_way, rows)
}
