//! CART decision tree with Gini impurity.
//!
//! Candidate thresholds are midpoints between consecutive distinct feature
//! values; a sample goes left when `x[feature] <= threshold`. Split quality is
//! compared exactly on integer counts, so ties resolve deterministically to
//! the lowest feature index and then the lowest threshold.

use std::cmp::Ordering;

use serde::{Deserialize, Serialize};

use super::check_shapes;
use crate::error::{Error, Result};
use crate::scalar::Real;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TreeConfig {
    /// `None` grows until leaves are pure or unsplittable.
    pub max_depth: Option<usize>,
    /// Nodes with fewer samples become leaves.
    pub min_split: usize,
}

impl Default for TreeConfig {
    fn default() -> Self {
        Self {
            max_depth: None,
            min_split: 2,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub enum TreeNode<T> {
    Split {
        feature: usize,
        threshold: T,
        left: usize,
        right: usize,
    },
    Leaf {
        /// Support samples per episode-local class that reached this leaf.
        counts: Vec<usize>,
        label: usize,
    },
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct TreeModel<T> {
    /// Node 0 is the root.
    pub nodes: Vec<TreeNode<T>>,
    pub n_way: usize,
    pub dim: usize,
}

impl<T: Real> TreeModel<T> {
    fn leaf_for(&self, x: &[T]) -> (&[usize], usize) {
        let mut at = 0;
        loop {
            match &self.nodes[at] {
                TreeNode::Split {
                    feature,
                    threshold,
                    left,
                    right,
                } => at = if x[*feature] <= *threshold { *left } else { *right },
                TreeNode::Leaf { counts, label } => return (counts, *label),
            }
        }
    }

    /// Predicted label and the leaf's class-frequency vector.
    pub fn classify(&self, x: &[T]) -> Result<(usize, Vec<T>)> {
        if x.len() != self.dim {
            return Err(Error::LengthMismatch {
                left: x.len(),
                right: self.dim,
            });
        }
        let (counts, label) = self.leaf_for(x);
        let total = T::from_usize_lossy(counts.iter().sum());
        Ok((label, counts.iter().map(|&c| T::from_usize_lossy(c) / total).collect()))
    }

    pub fn depth(&self) -> usize {
        fn walk<T>(nodes: &[TreeNode<T>], at: usize) -> usize {
            match &nodes[at] {
                TreeNode::Split { left, right, .. } => 1 + walk(nodes, *left).max(walk(nodes, *right)),
                TreeNode::Leaf { .. } => 0,
            }
        }
        walk(&self.nodes, 0)
    }

    pub fn leaf_count(&self) -> usize {
        self.nodes.iter().filter(|n| matches!(n, TreeNode::Leaf { .. })).count()
    }
}

/// Sum over children of Σ count² / size, as an exact fraction.
/// Larger is purer (lower weighted Gini).
#[derive(Clone, Copy)]
struct Purity {
    num: u128,
    den: u128,
}

impl Purity {
    fn of(left: &[usize], right: &[usize]) -> Self {
        let sq = |c: &[usize]| c.iter().map(|&v| (v as u128) * (v as u128)).sum::<u128>();
        let nl: u128 = left.iter().sum::<usize>() as u128;
        let nr: u128 = right.iter().sum::<usize>() as u128;
        Self {
            num: sq(left) * nr + sq(right) * nl,
            den: nl * nr,
        }
    }

    fn cmp(&self, other: &Self) -> Ordering {
        (self.num * other.den).cmp(&(other.num * self.den))
    }
}

struct Builder<'a, T> {
    vectors: Vec<&'a [T]>,
    labels: &'a [usize],
    n_way: usize,
    dim: usize,
    config: &'a TreeConfig,
    nodes: Vec<TreeNode<T>>,
}

impl<'a, T: Real> Builder<'a, T> {
    fn counts(&self, samples: &[usize]) -> Vec<usize> {
        let mut counts = vec![0; self.n_way];
        for &i in samples {
            counts[self.labels[i]] += 1;
        }
        counts
    }

    fn leaf(counts: Vec<usize>) -> TreeNode<T> {
        let mut label = 0;
        for (c, &n) in counts.iter().enumerate() {
            if n > counts[label] {
                label = c;
            }
        }
        TreeNode::Leaf { counts, label }
    }

    fn best_split(&self, samples: &[usize]) -> Option<(usize, T)> {
        let mut best: Option<(Purity, usize, T)> = None;
        let mut order = samples.to_vec();
        for feature in 0..self.dim {
            order.sort_by(|&a, &b| {
                self.vectors[a][feature]
                    .partial_cmp(&self.vectors[b][feature])
                    .expect("finite support values")
            });
            let mut left = vec![0usize; self.n_way];
            let mut right = self.counts(samples);
            for pos in 0..order.len() - 1 {
                let i = order[pos];
                left[self.labels[i]] += 1;
                right[self.labels[i]] -= 1;
                let lo = self.vectors[i][feature];
                let hi = self.vectors[order[pos + 1]][feature];
                if lo == hi {
                    continue;
                }
                let mut threshold = lo + (hi - lo) / T::lit(2.0);
                if threshold >= hi {
                    threshold = lo;
                }
                let purity = Purity::of(&left, &right);
                if best.as_ref().is_none_or(|(p, _, _)| purity.cmp(p) == Ordering::Greater) {
                    best = Some((purity, feature, threshold));
                }
            }
        }
        best.map(|(_, f, t)| (f, t))
    }

    fn grow(&mut self, samples: Vec<usize>, depth: usize) -> usize {
        let counts = self.counts(&samples);
        let id = self.nodes.len();
        let pure = counts.iter().filter(|&&c| c > 0).count() <= 1;
        let depth_capped = self.config.max_depth.is_some_and(|d| depth >= d);
        if pure || depth_capped || samples.len() < self.config.min_split {
            self.nodes.push(Self::leaf(counts));
            return id;
        }
        let Some((feature, threshold)) = self.best_split(&samples) else {
            // All samples share one vector.
            self.nodes.push(Self::leaf(counts));
            return id;
        };
        self.nodes.push(Self::leaf(Vec::new()));
        let (lhs, rhs): (Vec<usize>, Vec<usize>) = samples
            .into_iter()
            .partition(|&i| self.vectors[i][feature] <= threshold);
        let left = self.grow(lhs, depth + 1);
        let right = self.grow(rhs, depth + 1);
        self.nodes[id] = TreeNode::Split {
            feature,
            threshold,
            left,
            right,
        };
        id
    }
}

pub fn train_tree<T: Real, V: AsRef<[T]>>(
    vectors: &[V],
    labels: &[usize],
    n_way: usize,
    config: &TreeConfig,
) -> Result<TreeModel<T>> {
    if vectors.is_empty() {
        return Err(Error::EmptyClass(0));
    }
    let dim = check_shapes(vectors, labels, n_way)?;
    let mut builder = Builder {
        vectors: vectors.iter().map(AsRef::as_ref).collect(),
        labels,
        n_way,
        dim,
        config,
        nodes: Vec::new(),
    };
    builder.grow((0..vectors.len()).collect(), 0);
    Ok(TreeModel {
        nodes: builder.nodes,
        n_way,
        dim,
    })
}
