//! Gaussian class clusters for desk-scale experiments.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::StandardNormal;
use serde::{Deserialize, Serialize};

use super::{EmbeddingDataset, EmbeddingRecord};
use crate::error::{Error, Result};
use crate::scalar::Real;

/// Parameters of a synthetic embedding dataset.
///
/// Each class has a center on a pseudo-random unit direction scaled to
/// `class_center_norm`. Each group draws one source vector from an isotropic
/// Gaussian around its class center; `aug_copies` further records per group
/// perturb that source vector with `aug_sigma` noise, standing in for
/// augmented views of one image.
///
/// With `nuisance_dims > 0` the first `nuisance_dims` coordinates carry
/// noise scaled by `nuisance_scale`, for both the source draw and the
/// augmentation perturbation. Augmented copies then vary along the same
/// directions as within-class variation, the way real augmentations track
/// nuisance factors such as pose or color.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SyntheticSpec {
    pub n_classes: usize,
    pub dim: usize,
    pub groups_per_class: usize,
    pub class_center_norm: f64,
    pub noise_sigma: f64,
    pub seed: u64,
    #[serde(default)]
    pub aug_copies: usize,
    #[serde(default)]
    pub aug_sigma: f64,
    #[serde(default)]
    pub nuisance_dims: usize,
    #[serde(default = "unit_scale")]
    pub nuisance_scale: f64,
}

fn unit_scale() -> f64 {
    1.0
}

impl Default for SyntheticSpec {
    fn default() -> Self {
        Self {
            n_classes: 5,
            dim: 16,
            groups_per_class: 40,
            class_center_norm: 10.0,
            noise_sigma: 1.0,
            seed: 0,
            aug_copies: 0,
            aug_sigma: 0.0,
            nuisance_dims: 0,
            nuisance_scale: 1.0,
        }
    }
}

impl SyntheticSpec {
    pub fn validate(&self) -> Result<()> {
        let fail = |m: &str| Err(Error::InvalidSpec(m.to_string()));
        if self.n_classes < 2 {
            return fail("n_classes must be at least 2");
        }
        if self.dim == 0 {
            return fail("dim must be at least 1");
        }
        if self.groups_per_class == 0 {
            return fail("groups_per_class must be at least 1");
        }
        if !(self.noise_sigma > 0.0 && self.noise_sigma.is_finite()) {
            return fail("noise_sigma must be positive and finite");
        }
        if !(self.class_center_norm >= 0.0 && self.class_center_norm.is_finite()) {
            return fail("class_center_norm must be non-negative and finite");
        }
        if self.aug_copies > 0 && !(self.aug_sigma > 0.0 && self.aug_sigma.is_finite()) {
            return fail("aug_sigma must be positive when aug_copies > 0");
        }
        if self.nuisance_dims > self.dim {
            return fail("nuisance_dims must not exceed dim");
        }
        if !(self.nuisance_scale > 0.0 && self.nuisance_scale.is_finite()) {
            return fail("nuisance_scale must be positive and finite");
        }
        if self.n_classes > u32::MAX as usize {
            return fail("too many classes");
        }
        Ok(())
    }

    pub fn records_per_group(&self) -> usize {
        1 + self.aug_copies
    }

    /// Noise multiplier of coordinate `d`.
    pub fn noise_scale(&self, d: usize) -> f64 {
        if d < self.nuisance_dims {
            self.nuisance_scale
        } else {
            1.0
        }
    }

    /// The class centers the generator samples around, in class order.
    pub fn class_centers(&self) -> Result<Vec<Vec<f64>>> {
        self.validate()?;
        let mut rng = ChaCha8Rng::seed_from_u64(self.seed);
        Ok(draw_centers(self, &mut rng))
    }
}

fn draw_centers(spec: &SyntheticSpec, rng: &mut ChaCha8Rng) -> Vec<Vec<f64>> {
    (0..spec.n_classes)
        .map(|_| loop {
            let direction: Vec<f64> = (0..spec.dim).map(|_| rng.sample(StandardNormal)).collect();
            let norm = direction.iter().map(|x| x * x).sum::<f64>().sqrt();
            if norm > 1e-12 {
                break direction
                    .into_iter()
                    .map(|x| x / norm * spec.class_center_norm)
                    .collect();
            }
        })
        .collect()
}

/// Deterministic in `spec` (seed included). Records are emitted class by
/// class and group by group; ids are consecutive from 0, and within a group
/// the source record carries the lowest id.
pub fn generate_synthetic<T: Real>(spec: &SyntheticSpec) -> Result<EmbeddingDataset<T>> {
    spec.validate()?;
    let mut rng = ChaCha8Rng::seed_from_u64(spec.seed);
    let centers = draw_centers(spec, &mut rng);

    let total = spec.n_classes * spec.groups_per_class * spec.records_per_group();
    let mut records = Vec::with_capacity(total);
    let mut next_record = 0u64;
    let mut next_group = 0u64;
    for (class, center) in centers.iter().enumerate() {
        for _ in 0..spec.groups_per_class {
            let source: Vec<f64> = center
                .iter()
                .enumerate()
                .map(|(d, &c)| c + spec.noise_sigma * spec.noise_scale(d) * rng.sample::<f64, _>(StandardNormal))
                .collect();
            for copy in 0..spec.records_per_group() {
                let vector = if copy == 0 {
                    source.iter().map(|&x| T::lit(x)).collect()
                } else {
                    source
                        .iter()
                        .enumerate()
                        .map(|(d, &x)| {
                            let step = spec.aug_sigma * spec.noise_scale(d);
                            T::lit(x + step * rng.sample::<f64, _>(StandardNormal))
                        })
                        .collect()
                };
                records.push(EmbeddingRecord {
                    record_id: next_record,
                    group_id: next_group,
                    class_label: class as u32,
                    vector,
                });
                next_record += 1;
            }
            next_group += 1;
        }
    }
    EmbeddingDataset::new(spec.dim, records)
}
