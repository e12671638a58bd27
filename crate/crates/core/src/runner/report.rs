use std::io::Write;
use std::path::Path;

use serde::{Deserialize, Serialize};

use super::config::ExperimentConfig;
use crate::error::{Error, Result};
use crate::metrics::{aggregate, Aggregate, EpisodeResult};

pub const REPORT_SCHEMA_VERSION: u32 = 1;

/// How per-episode numbers were reduced; stored so readers need not guess.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ReportMetadata {
    pub accuracy: String,
    pub auroc: String,
    pub interval: String,
    pub dataset_records: usize,
    pub dataset_dim: usize,
    pub dataset_classes: usize,
    pub dataset_groups: usize,
    /// Linear fits that stopped on max_iters or a stalled line search.
    pub unconverged_fits: usize,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ExperimentReport {
    pub schema_version: u32,
    pub engine_version: String,
    pub config: ExperimentConfig,
    pub metadata: ReportMetadata,
    pub accuracy: Aggregate,
    pub auroc: Aggregate,
    pub episodes: Vec<EpisodeResult>,
    /// The only field that varies between identical runs.
    pub wall_clock_seconds: f64,
}

impl ExperimentReport {
    /// Recomputes both aggregates from the per-episode list.
    pub fn recompute_aggregates(&self) -> Result<(Aggregate, Aggregate)> {
        aggregate(&self.episodes)
    }

    pub fn to_json(&self) -> Result<String> {
        Ok(serde_json::to_string_pretty(self)? + "\n")
    }

    pub fn from_json(text: &str) -> Result<Self> {
        Ok(serde_json::from_str(text)?)
    }

    /// Serialized form with the wall-clock field zeroed.
    pub fn to_json_without_clock(&self) -> Result<String> {
        let mut copy = self.clone();
        copy.wall_clock_seconds = 0.0;
        copy.to_json()
    }
}

pub const AGGREGATE_CSV_HEADER: [&str; 14] = [
    "name",
    "classifier",
    "n_way",
    "k_shot",
    "q_query",
    "l2_normalize",
    "aug_expand",
    "episodes",
    "accuracy_mean",
    "accuracy_std",
    "accuracy_ci95",
    "auroc_mean",
    "auroc_std",
    "auroc_ci95",
];

fn aggregate_row(r: &ExperimentReport) -> Vec<String> {
    let c = &r.config;
    vec![
        c.name.clone(),
        c.classifier.to_string(),
        c.episode.n_way.to_string(),
        c.episode.k_shot.to_string(),
        c.episode.q_query.to_string(),
        c.preprocess.l2_normalize.to_string(),
        c.episode.aug_expand.to_string(),
        r.accuracy.episodes.to_string(),
        format!("{:?}", r.accuracy.mean),
        format!("{:?}", r.accuracy.std_dev),
        format!("{:?}", r.accuracy.ci95_halfwidth),
        format!("{:?}", r.auroc.mean),
        format!("{:?}", r.auroc.std_dev),
        format!("{:?}", r.auroc.ci95_halfwidth),
    ]
}

/// One aggregate row per report.
pub fn write_aggregate_csv<W: Write>(reports: &[ExperimentReport], out: W) -> Result<()> {
    let mut writer = csv::Writer::from_writer(out);
    let csv_err = |e: csv::Error| Error::Config(format!("csv export failed: {e}"));
    writer.write_record(AGGREGATE_CSV_HEADER).map_err(csv_err)?;
    for r in reports {
        writer.write_record(aggregate_row(r)).map_err(csv_err)?;
    }
    writer.flush()?;
    Ok(())
}

pub fn write_text(path: &Path, text: &str) -> Result<()> {
    if let Some(parent) = path.parent().filter(|p| !p.as_os_str().is_empty()) {
        std::fs::create_dir_all(parent)?;
    }
    std::fs::write(path, text)?;
    Ok(())
}
