//! Experiment orchestration: sample → preprocess → fit → score → metrics.
//!
//! Episodes run in parallel but results are collected by episode index, so a
//! report is identical to what a serial run would produce.

mod config;
mod grid;
mod report;

use std::time::Instant;

use rayon::prelude::*;

pub use config::{DataSource, ExperimentConfig, FileSource, ReportFormat, DEFAULT_EPISODES};
pub use grid::{default_variants, GridCell, GridReport, GridRow, GridSpec, GridTable, Variant, DEFAULT_SHOTS};
pub use report::{
    write_aggregate_csv, write_text, ExperimentReport, ReportMetadata, AGGREGATE_CSV_HEADER, REPORT_SCHEMA_VERSION,
};

use crate::classifiers::{fit_episode, predict_scores, StopReason};
use crate::error::{Error, Result};
use crate::metrics::{aggregate, evaluate_episode, EpisodeResult};
use crate::preprocess::apply_preprocess;
use crate::sampler::sample_episode;
use crate::store::{generate_synthetic, EmbeddingDataset};
use crate::ENGINE_VERSION;

pub fn load_data(config: &ExperimentConfig) -> Result<EmbeddingDataset<f64>> {
    match &config.data {
        Some(DataSource::File(f)) => EmbeddingDataset::load(&f.path, f.format),
        Some(DataSource::Synthetic(spec)) => generate_synthetic(spec),
        None => Err(Error::Config("no data source configured".into())),
    }
}

/// Runs one episode end to end; returns the metrics and whether a linear
/// solver stopped short of its gradient criterion.
pub fn run_episode(
    dataset: &EmbeddingDataset<f64>,
    config: &ExperimentConfig,
    episode_index: usize,
) -> Result<(EpisodeResult, bool)> {
    let episode = sample_episode(dataset, &config.episode, episode_index)?;
    let episode = apply_preprocess(episode, &config.preprocess);
    let classifier = fit_episode(config.classifier, &config.params, &episode)?;
    let scores = predict_scores(&classifier, &episode.query_vectors())?;
    let result = evaluate_episode(episode_index, &scores, &episode.query_labels())?;
    let unconverged = classifier
        .diagnostics()
        .is_some_and(|d| matches!(d.stop, StopReason::MaxIters | StopReason::LineSearchStalled));
    Ok((result, unconverged))
}

/// Runs an experiment on an already loaded dataset.
pub fn run_on(dataset: &EmbeddingDataset<f64>, config: &ExperimentConfig) -> Result<ExperimentReport> {
    config.validate()?;
    let started = Instant::now();
    // Collect every outcome first so a failure reports the lowest failing
    // episode, independent of thread scheduling.
    let outcomes = (0..config.episodes)
        .into_par_iter()
        .map(|i| {
            run_episode(dataset, config, i).map_err(|e| Error::Episode {
                index: i,
                source: Box::new(e),
            })
        })
        .collect::<Vec<_>>()
        .into_iter()
        .collect::<Result<Vec<_>>>()?;
    let unconverged_fits = outcomes.iter().filter(|(_, u)| *u).count();
    let episodes: Vec<EpisodeResult> = outcomes.into_iter().map(|(r, _)| r).collect();
    let (accuracy, auroc) = aggregate(&episodes)?;

    Ok(ExperimentReport {
        schema_version: REPORT_SCHEMA_VERSION,
        engine_version: ENGINE_VERSION.to_string(),
        config: config.clone(),
        metadata: ReportMetadata {
            accuracy: "macro average of per-class recall, per episode".into(),
            auroc: "macro average of one-vs-rest AUROC, per episode".into(),
            interval: "mean ± 1.96·sd/√episodes".into(),
            dataset_records: dataset.len(),
            dataset_dim: dataset.dim(),
            dataset_classes: dataset.class_index().len(),
            dataset_groups: dataset.group_count(),
            unconverged_fits,
        },
        accuracy,
        auroc,
        episodes,
        wall_clock_seconds: started.elapsed().as_secs_f64(),
    })
}

pub fn run_experiment(config: &ExperimentConfig) -> Result<ExperimentReport> {
    config.validate()?;
    let dataset = load_data(config)?;
    run_on(&dataset, config)
}

/// Runs each config independently; output order follows input order.
pub fn run_grid(configs: &[ExperimentConfig]) -> Result<Vec<ExperimentReport>> {
    configs.iter().map(run_experiment).collect()
}
