//! Embedding data model, on-disk formats and the synthetic generator.
//!
//! A dataset is a flat list of [`EmbeddingRecord`]s sharing one dimensionality.
//! Records that originate from the same source image (an original plus its
//! augmented copies) share a `group_id`; every group belongs to exactly one
//! class. Validation happens once, in [`EmbeddingDataset::new`], and the
//! dataset is immutable afterwards.

mod binary;
mod csv_format;
mod synthetic;

use std::collections::btree_map::Entry;
use std::collections::{BTreeMap, HashSet};
use std::fmt;
use std::path::Path;
use std::str::FromStr;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::scalar::Real;

pub use binary::{read_binary, write_binary, BINARY_MAGIC, BINARY_VERSION};
pub use csv_format::{read_csv, write_csv};
pub use synthetic::{generate_synthetic, SyntheticSpec};

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct EmbeddingRecord<T> {
    pub record_id: u64,
    /// Shared by all augmented copies of one source sample.
    pub group_id: u64,
    pub class_label: u32,
    pub vector: Vec<T>,
}

impl<T> EmbeddingRecord<T> {
    /// A record that is its own group.
    pub fn ungrouped(record_id: u64, class_label: u32, vector: Vec<T>) -> Self {
        Self {
            record_id,
            group_id: record_id,
            class_label,
            vector,
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct EmbeddingDataset<T> {
    dim: usize,
    records: Vec<EmbeddingRecord<T>>,
    class_index: BTreeMap<u32, Vec<u64>>,
    /// group_id -> record positions, ordered by record_id.
    groups: BTreeMap<u64, Vec<usize>>,
}

impl<T: Real> EmbeddingDataset<T> {
    /// Validates `records` against `dim` and builds the class and group indices.
    ///
    /// Row numbers in errors are 1-based positions in `records`.
    pub fn new(dim: usize, records: Vec<EmbeddingRecord<T>>) -> Result<Self> {
        if dim == 0 {
            return Err(Error::MalformedHeader("dimensionality must be at least 1".into()));
        }
        let mut seen = HashSet::with_capacity(records.len());
        let mut group_class: BTreeMap<u64, u32> = BTreeMap::new();
        for (i, r) in records.iter().enumerate() {
            let row = i + 1;
            if r.vector.len() != dim {
                return Err(Error::DimensionMismatch {
                    row,
                    expected: dim,
                    found: r.vector.len(),
                });
            }
            if let Some(column) = r.vector.iter().position(|v| !v.is_finite()) {
                return Err(Error::NonFiniteValue { row, column });
            }
            if !seen.insert(r.record_id) {
                return Err(Error::DuplicateRecordId(r.record_id));
            }
            match group_class.entry(r.group_id) {
                Entry::Vacant(e) => {
                    e.insert(r.class_label);
                }
                Entry::Occupied(e) => {
                    if *e.get() != r.class_label {
                        return Err(Error::GroupSpansClasses {
                            group_id: r.group_id,
                            first: *e.get(),
                            second: r.class_label,
                        });
                    }
                }
            }
        }

        let class_index = build_class_index(&records);
        let mut groups: BTreeMap<u64, Vec<usize>> = BTreeMap::new();
        for (i, r) in records.iter().enumerate() {
            groups.entry(r.group_id).or_default().push(i);
        }
        for members in groups.values_mut() {
            members.sort_by_key(|&i| records[i].record_id);
        }

        Ok(Self {
            dim,
            records,
            class_index,
            groups,
        })
    }

    pub fn load(path: impl AsRef<Path>, format: DataFormat) -> Result<Self> {
        match format {
            DataFormat::Csv => read_csv(path),
            DataFormat::Binary => read_binary(path),
        }
    }

    pub fn save(&self, path: impl AsRef<Path>, format: DataFormat) -> Result<()> {
        match format {
            DataFormat::Csv => write_csv(self, path),
            DataFormat::Binary => write_binary(self, path),
        }
    }

    /// Applies `relabel` to every class label. `relabel` must be injective on
    /// the labels present, otherwise groups of different classes would merge.
    pub fn map_classes(&self, relabel: impl Fn(u32) -> u32) -> Result<Self> {
        let records = self
            .records
            .iter()
            .map(|r| EmbeddingRecord {
                class_label: relabel(r.class_label),
                ..r.clone()
            })
            .collect();
        Self::new(self.dim, records)
    }
}

impl<T> EmbeddingDataset<T> {
    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn records(&self) -> &[EmbeddingRecord<T>] {
        &self.records
    }

    pub fn len(&self) -> usize {
        self.records.len()
    }

    pub fn is_empty(&self) -> bool {
        self.records.is_empty()
    }

    /// class_label -> sorted group ids.
    pub fn class_index(&self) -> &BTreeMap<u32, Vec<u64>> {
        &self.class_index
    }

    /// Class labels in ascending order.
    pub fn classes(&self) -> Vec<u32> {
        self.class_index.keys().copied().collect()
    }

    pub fn groups_of_class(&self, class_label: u32) -> &[u64] {
        self.class_index.get(&class_label).map(Vec::as_slice).unwrap_or(&[])
    }

    /// Records of a group ordered by record_id.
    pub fn group_records(&self, group_id: u64) -> impl Iterator<Item = &EmbeddingRecord<T>> + '_ {
        self.groups
            .get(&group_id)
            .into_iter()
            .flatten()
            .map(move |&i| &self.records[i])
    }

    /// The lowest-record_id member of a group.
    pub fn canonical_record(&self, group_id: u64) -> Option<&EmbeddingRecord<T>> {
        self.group_records(group_id).next()
    }

    pub fn group_count(&self) -> usize {
        self.groups.len()
    }
}

/// Builds the class -> group partition induced by `records`.
pub fn build_class_index<T>(records: &[EmbeddingRecord<T>]) -> BTreeMap<u32, Vec<u64>> {
    let mut index: BTreeMap<u32, Vec<u64>> = BTreeMap::new();
    for r in records {
        index.entry(r.class_label).or_default().push(r.group_id);
    }
    for groups in index.values_mut() {
        groups.sort_unstable();
        groups.dedup();
    }
    index
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum DataFormat {
    Csv,
    Binary,
}

impl DataFormat {
    /// Guesses the format from a file extension; anything but `.csv` is binary.
    pub fn from_path(path: &Path) -> Self {
        match path.extension().and_then(|e| e.to_str()) {
            Some(ext) if ext.eq_ignore_ascii_case("csv") => DataFormat::Csv,
            _ => DataFormat::Binary,
        }
    }
}

impl FromStr for DataFormat {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s.to_ascii_lowercase().as_str() {
            "csv" => Ok(DataFormat::Csv),
            "binary" | "bin" | "fseb" => Ok(DataFormat::Binary),
            other => Err(Error::Config(format!("unknown data format `{other}`"))),
        }
    }
}

impl fmt::Display for DataFormat {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            DataFormat::Csv => "csv",
            DataFormat::Binary => "binary",
        })
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn rec(id: u64, group: u64, class: u32, v: Vec<f64>) -> EmbeddingRecord<f64> {
        EmbeddingRecord {
            record_id: id,
            group_id: group,
            class_label: class,
            vector: v,
        }
    }

    #[test]
    fn builds_class_index() {
        let ds = EmbeddingDataset::new(
            2,
            vec![
                rec(0, 0, 0, vec![0.0, 1.0]),
                rec(1, 0, 0, vec![0.5, 1.0]),
                rec(2, 5, 1, vec![1.0, 0.0]),
                rec(3, 4, 1, vec![1.0, 0.5]),
            ],
        )
        .unwrap();
        assert_eq!(ds.class_index().len(), 2);
        assert_eq!(ds.groups_of_class(1), &[4, 5]);
        assert_eq!(ds.group_count(), 3);
        assert_eq!(ds.canonical_record(0).unwrap().record_id, 0);
        assert_eq!(build_class_index(ds.records()), *ds.class_index());
    }

    #[test]
    fn canonical_record_is_lowest_id_regardless_of_row_order() {
        let ds = EmbeddingDataset::new(
            1,
            vec![
                rec(9, 3, 0, vec![1.0]),
                rec(2, 3, 0, vec![2.0]),
                rec(5, 3, 0, vec![3.0]),
            ],
        )
        .unwrap();
        let ids: Vec<u64> = ds.group_records(3).map(|r| r.record_id).collect();
        assert_eq!(ids, vec![2, 5, 9]);
    }

    #[test]
    fn rejects_invalid_records() {
        let dim = EmbeddingDataset::new(2, vec![rec(0, 0, 0, vec![0.0, 1.0]), rec(1, 1, 0, vec![1.0])]);
        assert!(matches!(
            dim,
            Err(Error::DimensionMismatch {
                row: 2,
                expected: 2,
                found: 1
            })
        ));

        let nan = EmbeddingDataset::new(2, vec![rec(0, 0, 0, vec![0.0, f64::NAN])]);
        assert!(matches!(nan, Err(Error::NonFiniteValue { row: 1, column: 1 })));

        let dup = EmbeddingDataset::new(1, vec![rec(3, 0, 0, vec![0.0]), rec(3, 1, 0, vec![1.0])]);
        assert!(matches!(dup, Err(Error::DuplicateRecordId(3))));

        let span = EmbeddingDataset::new(1, vec![rec(0, 7, 0, vec![0.0]), rec(1, 7, 1, vec![1.0])]);
        assert!(matches!(
            span,
            Err(Error::GroupSpansClasses {
                group_id: 7,
                first: 0,
                second: 1
            })
        ));

        let zero_dim = EmbeddingDataset::<f64>::new(0, vec![]);
        assert!(matches!(zero_dim, Err(Error::MalformedHeader(_))));
    }

    #[test]
    fn ungrouped_record_defaults_group_to_record_id() {
        let r = EmbeddingRecord::ungrouped(42, 1, vec![0.0f64]);
        assert_eq!(r.group_id, 42);
    }

    #[test]
    fn map_classes_relabels() {
        let ds = EmbeddingDataset::new(1, vec![rec(0, 0, 0, vec![0.0]), rec(1, 1, 1, vec![1.0])]).unwrap();
        let mapped = ds.map_classes(|c| 10 + c).unwrap();
        assert_eq!(mapped.classes(), vec![10, 11]);
    }
}
