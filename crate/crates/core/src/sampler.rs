//! N-way K-shot episode construction.
//!
//! Sampling works on groups, not records: each chosen class contributes
//! `k_shot + q_query` distinct groups, so augmented copies of one source can
//! never end up on both sides of an episode. Support groups contribute either
//! their canonical record or, with `aug_expand`, every member; query groups
//! always contribute exactly their canonical (lowest record_id) record.
//!
//! Candidate classes are ordered by their lowest group_id rather than by
//! label, so relabeling classes through any bijection draws the same groups.

use std::collections::BTreeMap;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::scalar::Real;
use crate::store::{EmbeddingDataset, EmbeddingRecord};

pub const DEFAULT_Q_QUERY: usize = 15;

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct EpisodeConfig {
    pub n_way: usize,
    pub k_shot: usize,
    pub q_query: usize,
    /// Expand each support group to all of its records.
    pub aug_expand: bool,
    pub seed: u64,
}

impl Default for EpisodeConfig {
    fn default() -> Self {
        Self {
            n_way: 2,
            k_shot: 1,
            q_query: DEFAULT_Q_QUERY,
            aug_expand: false,
            seed: 0,
        }
    }
}

impl EpisodeConfig {
    pub fn validate(&self) -> Result<()> {
        if self.n_way < 2 {
            return Err(Error::InvalidEpisodeConfig("n_way must be at least 2".into()));
        }
        if self.k_shot == 0 || self.q_query == 0 {
            return Err(Error::InvalidEpisodeConfig(
                "k_shot and q_query must be positive".into(),
            ));
        }
        Ok(())
    }

    pub fn groups_per_class(&self) -> usize {
        self.k_shot + self.q_query
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct Episode<T> {
    pub episode_index: usize,
    pub support: Vec<EmbeddingRecord<T>>,
    pub query: Vec<EmbeddingRecord<T>>,
    /// Original class label -> episode-local index in `0..n_way`.
    pub class_map: BTreeMap<u32, usize>,
}

impl<T> Episode<T> {
    pub fn n_way(&self) -> usize {
        self.class_map.len()
    }

    fn local_labels(&self, records: &[EmbeddingRecord<T>]) -> Vec<usize> {
        records.iter().map(|r| self.class_map[&r.class_label]).collect()
    }

    pub fn support_labels(&self) -> Vec<usize> {
        self.local_labels(&self.support)
    }

    pub fn query_labels(&self) -> Vec<usize> {
        self.local_labels(&self.query)
    }

    pub fn support_vectors(&self) -> Vec<&[T]> {
        self.support.iter().map(|r| r.vector.as_slice()).collect()
    }

    pub fn query_vectors(&self) -> Vec<&[T]> {
        self.query.iter().map(|r| r.vector.as_slice()).collect()
    }

    pub fn manifest(&self) -> EpisodeManifest {
        EpisodeManifest {
            episode_index: self.episode_index,
            class_map: self.class_map.clone(),
            support: self.support.iter().map(|r| r.record_id).collect(),
            query: self.query.iter().map(|r| r.record_id).collect(),
        }
    }
}

/// Serializable summary of an episode: which records went where.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct EpisodeManifest {
    pub episode_index: usize,
    pub class_map: BTreeMap<u32, usize>,
    pub support: Vec<u64>,
    pub query: Vec<u64>,
}

/// RNG stream for one episode. ChaCha is counter based, so stream `i` is
/// available without generating streams `0..i`.
fn episode_rng(seed: u64, episode_index: usize) -> ChaCha8Rng {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    rng.set_stream(episode_index as u64);
    rng
}

/// Moves a uniformly drawn `m`-subset of `items` to the front, in draw order.
fn fisher_yates_prefix<X>(items: &mut [X], m: usize, rng: &mut impl Rng) {
    let n = items.len();
    for i in 0..m.min(n) {
        let j = rng.random_range(i..n);
        items.swap(i, j);
    }
}

pub fn sample_episode<T: Real>(
    dataset: &EmbeddingDataset<T>,
    config: &EpisodeConfig,
    episode_index: usize,
) -> Result<Episode<T>> {
    config.validate()?;
    let mut classes = dataset.classes();
    classes.sort_by_key(|&c| dataset.groups_of_class(c)[0]);
    if config.n_way > classes.len() {
        return Err(Error::TooManyWays {
            n_way: config.n_way,
            classes: classes.len(),
        });
    }

    let mut rng = episode_rng(config.seed, episode_index);
    fisher_yates_prefix(&mut classes, config.n_way, &mut rng);
    let chosen = &classes[..config.n_way];

    let needed = config.groups_per_class();
    let mut support = Vec::with_capacity(config.n_way * config.k_shot);
    let mut query = Vec::with_capacity(config.n_way * config.q_query);
    let mut class_map = BTreeMap::new();
    for (local, &class) in chosen.iter().enumerate() {
        class_map.insert(class, local);
        let mut groups = dataset.groups_of_class(class).to_vec();
        if groups.len() < needed {
            return Err(Error::InsufficientGroups {
                class,
                available: groups.len(),
                required: needed,
            });
        }
        fisher_yates_prefix(&mut groups, needed, &mut rng);
        let (support_groups, rest) = groups.split_at(config.k_shot);
        for &g in support_groups {
            if config.aug_expand {
                support.extend(dataset.group_records(g).cloned());
            } else {
                support.extend(dataset.canonical_record(g).cloned());
            }
        }
        for &g in &rest[..config.q_query] {
            query.extend(dataset.canonical_record(g).cloned());
        }
    }

    Ok(Episode {
        episode_index,
        support,
        query,
        class_map,
    })
}

/// Element `i` equals `sample_episode(dataset, config, i)`.
pub fn sample_episodes<T: Real>(
    dataset: &EmbeddingDataset<T>,
    config: &EpisodeConfig,
    count: usize,
) -> Result<Vec<Episode<T>>> {
    (0..count)
        .into_par_iter()
        .map(|i| sample_episode(dataset, config, i))
        .collect()
}
