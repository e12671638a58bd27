//! Per-episode embedding preprocessing.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::sampler::Episode;
use crate::scalar::{squared_norm, Real};

pub const DEFAULT_EPSILON: f64 = 1e-12;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PreprocessConfig {
    pub l2_normalize: bool,
    pub epsilon: f64,
}

impl Default for PreprocessConfig {
    fn default() -> Self {
        Self {
            l2_normalize: false,
            epsilon: DEFAULT_EPSILON,
        }
    }
}

/// Projects `vector` onto the unit sphere: `v / max(‖v‖, epsilon)`.
///
/// Vectors with norm below `epsilon` are scaled by `1/epsilon` rather than
/// blown up, so the zero vector maps to itself.
pub fn l2_normalize<T: Real>(vector: &[T], epsilon: T) -> Result<Vec<T>> {
    if vector.iter().any(|v| !v.is_finite()) {
        return Err(Error::NonFiniteInput);
    }
    Ok(normalize_finite(vector, epsilon))
}

fn normalize_finite<T: Real>(vector: &[T], epsilon: T) -> Vec<T> {
    // Rescale by the max magnitude first so the squared norm cannot overflow.
    let scale = vector.iter().fold(T::zero(), |m, &v| m.max(v.abs()));
    if scale == T::zero() {
        return vector.to_vec();
    }
    let scaled: Vec<T> = vector.iter().map(|&v| v / scale).collect();
    let norm = squared_norm(&scaled).sqrt() * scale;
    let denom = norm.max(epsilon);
    vector.iter().map(|&v| v / denom).collect()
}

/// Normalizes every support and query vector when enabled; identity otherwise.
///
/// Episode vectors come from a validated dataset and are finite.
pub fn apply_preprocess<T: Real>(mut episode: Episode<T>, config: &PreprocessConfig) -> Episode<T> {
    if config.l2_normalize {
        let eps = T::lit(config.epsilon);
        for r in episode.support.iter_mut().chain(episode.query.iter_mut()) {
            r.vector = normalize_finite(&r.vector, eps);
        }
    }
    episode
}
