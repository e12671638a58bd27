//! k-nearest-neighbor vote under Euclidean distance.

use serde::Serialize;

use super::check_support;
use super::prototype::euclidean_distance;
use crate::error::{Error, Result};
use crate::scalar::Real;

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct NeighborModel<T> {
    pub vectors: Vec<Vec<T>>,
    pub labels: Vec<usize>,
    /// Used to order equidistant neighbors.
    pub record_ids: Vec<u64>,
    pub k: usize,
    pub n_way: usize,
}

impl<T: Real> NeighborModel<T> {
    pub fn fit<V: AsRef<[T]>>(
        vectors: &[V],
        labels: &[usize],
        record_ids: &[u64],
        n_way: usize,
        k: usize,
    ) -> Result<Self> {
        check_support(vectors, labels, n_way)?;
        if record_ids.len() != vectors.len() {
            return Err(Error::LengthMismatch {
                left: record_ids.len(),
                right: vectors.len(),
            });
        }
        if k == 0 || k > vectors.len() {
            return Err(Error::KTooLarge {
                k,
                memory: vectors.len(),
            });
        }
        Ok(Self {
            vectors: vectors.iter().map(|v| v.as_ref().to_vec()).collect(),
            labels: labels.to_vec(),
            record_ids: record_ids.to_vec(),
            k,
            n_way,
        })
    }
}

/// Majority vote among the `k` nearest memories. Equal distances are ordered
/// by record_id, vote ties go to the lowest class; scores are vote fractions.
pub fn classify_knn<T: Real>(model: &NeighborModel<T>, query: &[T]) -> Result<(usize, Vec<T>)> {
    if model.k == 0 || model.k > model.vectors.len() {
        return Err(Error::KTooLarge {
            k: model.k,
            memory: model.vectors.len(),
        });
    }
    let mut ranked = model
        .vectors
        .iter()
        .enumerate()
        .map(|(i, v)| Ok((euclidean_distance(query, v)?, model.record_ids[i], model.labels[i])))
        .collect::<Result<Vec<_>>>()?;
    ranked.sort_by(|a, b| a.0.partial_cmp(&b.0).expect("finite distances").then(a.1.cmp(&b.1)));
    let mut votes = vec![0usize; model.n_way];
    for &(_, _, label) in &ranked[..model.k] {
        votes[label] += 1;
    }
    let mut label = 0;
    for (c, &v) in votes.iter().enumerate() {
        if v > votes[label] {
            label = c;
        }
    }
    let k = T::from_usize_lossy(model.k);
    Ok((label, votes.iter().map(|&v| T::from_usize_lossy(v) / k).collect()))
}
