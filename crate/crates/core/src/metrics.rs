//! Macro-averaged accuracy and one-vs-rest AUROC, plus cross-episode aggregates.

use serde::{Deserialize, Serialize};

use crate::classifiers::ScoreMatrix;
use crate::error::{Error, Result};
use crate::scalar::Real;

/// z-value of the two-sided 95% normal interval.
pub const Z95: f64 = 1.96;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EpisodeResult {
    pub episode_index: usize,
    pub macro_accuracy: f64,
    pub macro_auroc: f64,
    pub per_class_accuracy: Vec<f64>,
    pub n_correct: usize,
    pub n_total: usize,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Aggregate {
    pub mean: f64,
    pub std_dev: f64,
    pub ci95_halfwidth: f64,
    pub episodes: usize,
}

fn check_truth(truth: &[usize], n_way: usize) -> Result<Vec<usize>> {
    let mut support = vec![0usize; n_way];
    for &t in truth {
        if t >= n_way {
            return Err(Error::LabelOutOfRange { label: t, n_way });
        }
        support[t] += 1;
    }
    if let Some(c) = support.iter().position(|&n| n == 0) {
        return Err(Error::ClassAbsent(c));
    }
    Ok(support)
}

/// Unweighted mean of per-class recall, with the per-class values.
pub fn macro_accuracy(predictions: &[usize], truth: &[usize], n_way: usize) -> Result<(f64, Vec<f64>)> {
    if predictions.len() != truth.len() {
        return Err(Error::LengthMismatch {
            left: predictions.len(),
            right: truth.len(),
        });
    }
    let totals = check_truth(truth, n_way)?;
    let mut hits = vec![0usize; n_way];
    for (&p, &t) in predictions.iter().zip(truth) {
        if p == t {
            hits[t] += 1;
        }
    }
    let per_class: Vec<f64> = hits.iter().zip(&totals).map(|(&h, &n)| h as f64 / n as f64).collect();
    let mean = per_class.iter().sum::<f64>() / n_way as f64;
    Ok((mean, per_class))
}

/// Binary AUROC by the rank-sum statistic with midranks for tied scores:
/// the probability that a positive outscores a negative, ties counting half.
///
/// Returns `None` when either side is empty.
pub fn binary_auroc<T: Real>(scores: &[T], positive: &[bool]) -> Option<f64> {
    let n_pos = positive.iter().filter(|&&p| p).count();
    let n_neg = positive.len() - n_pos;
    if n_pos == 0 || n_neg == 0 {
        return None;
    }
    let mut order: Vec<usize> = (0..scores.len()).collect();
    order.sort_by(|&a, &b| scores[a].partial_cmp(&scores[b]).expect("finite scores"));

    // Ranks are 1-based; a run of ties over positions i..j gets (i + j + 1) / 2.
    let mut positive_rank_sum = 0.0;
    let mut i = 0;
    while i < order.len() {
        let mut j = i + 1;
        while j < order.len() && scores[order[j]] == scores[order[i]] {
            j += 1;
        }
        let midrank = (i + j + 1) as f64 / 2.0;
        let positives_in_run = order[i..j].iter().filter(|&&k| positive[k]).count();
        positive_rank_sum += midrank * positives_in_run as f64;
        i = j;
    }
    let u = positive_rank_sum - (n_pos * (n_pos + 1)) as f64 / 2.0;
    Some(u / (n_pos as f64 * n_neg as f64))
}

/// Mean over classes of the one-vs-rest AUROC of each score column.
pub fn macro_auroc<T: Real>(scores: &ScoreMatrix<T>, truth: &[usize], n_way: usize) -> Result<f64> {
    if scores.len() != truth.len() {
        return Err(Error::LengthMismatch {
            left: scores.len(),
            right: truth.len(),
        });
    }
    if scores.n_way != n_way {
        return Err(Error::LengthMismatch {
            left: scores.n_way,
            right: n_way,
        });
    }
    check_truth(truth, n_way)?;
    let mut total = 0.0;
    for c in 0..n_way {
        let positive: Vec<bool> = truth.iter().map(|&t| t == c).collect();
        total += binary_auroc(&scores.column(c), &positive).ok_or(Error::NoNegatives(c))?;
    }
    Ok(total / n_way as f64)
}

/// Scores one episode from its score matrix.
pub fn evaluate_episode<T: Real>(
    episode_index: usize,
    scores: &ScoreMatrix<T>,
    truth: &[usize],
) -> Result<EpisodeResult> {
    let predictions = scores.predicted_labels();
    let (macro_accuracy, per_class_accuracy) = macro_accuracy(&predictions, truth, scores.n_way)?;
    let macro_auroc = macro_auroc(scores, truth, scores.n_way)?;
    let n_correct = predictions.iter().zip(truth).filter(|(p, t)| p == t).count();
    Ok(EpisodeResult {
        episode_index,
        macro_accuracy,
        macro_auroc,
        per_class_accuracy,
        n_correct,
        n_total: truth.len(),
    })
}

/// Moments are accumulated relative to the first value, so constant input
/// yields exactly that value and a zero spread.
fn summarize(values: impl ExactSizeIterator<Item = f64> + Clone) -> Aggregate {
    let n = values.len();
    let shift = values.clone().next().unwrap_or(0.0);
    let offset = values.clone().map(|v| v - shift).sum::<f64>() / n as f64;
    let mean = shift + offset;
    let std_dev = if n > 1 {
        let ss = values.map(|v| (v - shift - offset) * (v - shift - offset)).sum::<f64>();
        (ss / (n - 1) as f64).sqrt()
    } else {
        0.0
    };
    Aggregate {
        mean,
        std_dev,
        ci95_halfwidth: Z95 * std_dev / (n as f64).sqrt(),
        episodes: n,
    }
}

/// (accuracy, auroc) aggregates with sample standard deviations.
pub fn aggregate(results: &[EpisodeResult]) -> Result<(Aggregate, Aggregate)> {
    if results.is_empty() {
        return Err(Error::EmptyResults);
    }
    Ok((
        summarize(results.iter().map(|r| r.macro_accuracy)),
        summarize(results.iter().map(|r| r.macro_auroc)),
    ))
}
