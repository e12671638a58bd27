//! Nearest-prototype rule: each class is represented by the mean of its
//! support embeddings, queries go to the closest mean.

use serde::Serialize;

use super::check_support;
use crate::error::{Error, Result};
use crate::scalar::{argmin, Real};

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct PrototypeModel<T> {
    /// Row `c` is the mean support vector of class `c`.
    pub prototypes: Vec<Vec<T>>,
}

impl<T: Real> PrototypeModel<T> {
    pub fn n_way(&self) -> usize {
        self.prototypes.len()
    }

    pub fn dim(&self) -> usize {
        self.prototypes.first().map_or(0, Vec::len)
    }
}

/// Per-class arithmetic mean of the support vectors.
///
/// Each coordinate is accumulated in sorted order, so the result does not
/// depend on the order of the support records.
pub fn compute_prototypes<T: Real, V: AsRef<[T]>>(
    vectors: &[V],
    labels: &[usize],
    n_way: usize,
) -> Result<PrototypeModel<T>> {
    let dim = check_support(vectors, labels, n_way)?;
    let mut members: Vec<Vec<&[T]>> = vec![Vec::new(); n_way];
    for (v, &y) in vectors.iter().zip(labels) {
        members[y].push(v.as_ref());
    }
    let mut prototypes = Vec::with_capacity(n_way);
    let mut column = Vec::new();
    for (class, rows) in members.iter().enumerate() {
        if rows.is_empty() {
            return Err(Error::EmptyClass(class));
        }
        let count = T::from_usize_lossy(rows.len());
        let mean = (0..dim)
            .map(|k| {
                column.clear();
                column.extend(rows.iter().map(|r| r[k]));
                column.sort_by(|a, b| a.partial_cmp(b).expect("finite support values"));
                column.iter().copied().sum::<T>() / count
            })
            .collect();
        prototypes.push(mean);
    }
    Ok(PrototypeModel { prototypes })
}

/// Minkowski distance of order two.
pub fn euclidean_distance<T: Real>(p: &[T], q: &[T]) -> Result<T> {
    if p.len() != q.len() {
        return Err(Error::LengthMismatch {
            left: p.len(),
            right: q.len(),
        });
    }
    Ok(p.iter().zip(q).map(|(&a, &b)| (a - b) * (a - b)).sum::<T>().sqrt())
}

/// Returns the closest prototype (ties to the lowest class) and the
/// per-class scores `-d(query, V_c)`.
pub fn classify_prototype<T: Real>(model: &PrototypeModel<T>, query: &[T]) -> Result<(usize, Vec<T>)> {
    let distances = model
        .prototypes
        .iter()
        .map(|p| euclidean_distance(query, p))
        .collect::<Result<Vec<T>>>()?;
    let label = argmin(&distances);
    Ok((label, distances.into_iter().map(|d| -d).collect()))
}
