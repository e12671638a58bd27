//! Ablation grids: a base config, a list of labeled variants and a list of
//! shot counts, expanded into one experiment per (variant, shot).
//!
//! Grid files use the same flat keys as experiment configs, plus
//!
//! ```toml
//! shots = [1, 5]
//!
//! [[variant]]
//! label = "LR + L2-Norm"
//! classifier = "logistic"
//! l2_normalize = true
//! ```

use std::io::Write;
use std::path::Path;

use serde::{Deserialize, Serialize};

use super::config::{flatten, ExperimentConfig};
use super::report::{ExperimentReport, REPORT_SCHEMA_VERSION};
use crate::error::{Error, Result};
use crate::ENGINE_VERSION;

pub const DEFAULT_SHOTS: [usize; 3] = [1, 3, 5];

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Variant {
    pub label: String,
    /// Flat `key = value` settings applied over the base config.
    pub settings: Vec<(String, String)>,
}

impl Variant {
    fn new(label: &str, settings: &[(&str, &str)]) -> Self {
        Self {
            label: label.to_string(),
            settings: settings.iter().map(|(k, v)| (k.to_string(), v.to_string())).collect(),
        }
    }
}

/// Base-learner × L2-Norm × Aug rows of the ablation layout.
pub fn default_variants() -> Vec<Variant> {
    vec![
        Variant::new("DT", &[("classifier", "tree")]),
        Variant::new("DT + Aug", &[("classifier", "tree"), ("aug_expand", "true")]),
        Variant::new("NN", &[("classifier", "knn")]),
        Variant::new("NN + Aug", &[("classifier", "knn"), ("aug_expand", "true")]),
        Variant::new("LR", &[("classifier", "logistic")]),
        Variant::new("LR + L2-Norm", &[("classifier", "logistic"), ("l2_normalize", "true")]),
        Variant::new(
            "LR + L2-Norm + Aug",
            &[
                ("classifier", "logistic"),
                ("l2_normalize", "true"),
                ("aug_expand", "true"),
            ],
        ),
    ]
}

#[derive(Debug, Clone, PartialEq)]
pub struct GridSpec {
    pub base: ExperimentConfig,
    pub shots: Vec<usize>,
    pub variants: Vec<Variant>,
}

impl GridSpec {
    pub fn from_toml_str(text: &str) -> Result<Self> {
        let mut table: toml::Table = text
            .parse()
            .map_err(|e: toml::de::Error| Error::Config(e.to_string()))?;

        let shots = match table.remove("shots") {
            None => DEFAULT_SHOTS.to_vec(),
            Some(toml::Value::Array(items)) => items
                .iter()
                .map(|v| match v {
                    toml::Value::Integer(k) if *k >= 1 => Ok(*k as usize),
                    other => Err(Error::Config(format!(
                        "shots entries must be positive integers, found {other}"
                    ))),
                })
                .collect::<Result<_>>()?,
            Some(other) => return Err(Error::Config(format!("`shots` must be an array, found {other}"))),
        };

        let variants = match table.remove("variant") {
            None => default_variants(),
            Some(toml::Value::Array(items)) => items
                .iter()
                .enumerate()
                .map(|(i, v)| {
                    let toml::Value::Table(t) = v else {
                        return Err(Error::Config("each [[variant]] must be a table".into()));
                    };
                    let mut settings = flatten(t)?;
                    let label = settings
                        .iter()
                        .position(|(k, _)| k == "label")
                        .map(|p| settings.remove(p).1)
                        .unwrap_or_else(|| format!("variant {i}"));
                    Ok(Variant { label, settings })
                })
                .collect::<Result<_>>()?,
            Some(_) => return Err(Error::Config("`variant` must be an array of tables".into())),
        };

        let mut base = ExperimentConfig::default();
        for (k, v) in flatten(&table)? {
            base.set(&k, &v)?;
        }
        Ok(Self { base, shots, variants })
    }

    pub fn from_file(path: impl AsRef<Path>) -> Result<Self> {
        Self::from_toml_str(&std::fs::read_to_string(path)?)
    }

    /// Variant-major expansion; each config is named after its variant.
    pub fn expand(&self) -> Result<Vec<ExperimentConfig>> {
        let mut configs = Vec::with_capacity(self.variants.len() * self.shots.len());
        for variant in &self.variants {
            for &shot in &self.shots {
                let mut c = self.base.clone();
                for (k, v) in &variant.settings {
                    c.set(k, v)?;
                }
                c.name = variant.label.clone();
                c.episode.k_shot = shot;
                configs.push(c);
            }
        }
        Ok(configs)
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct GridCell {
    pub accuracy: f64,
    pub auroc: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct GridRow {
    pub label: String,
    /// Parallel to [`GridTable::shots`]; `None` when that shot was not run.
    pub cells: Vec<Option<GridCell>>,
}

/// One row per config label, columns shots × (Acc, AuRoc).
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct GridTable {
    pub shots: Vec<usize>,
    pub rows: Vec<GridRow>,
}

impl GridTable {
    pub fn from_reports(reports: &[ExperimentReport]) -> Self {
        let mut shots: Vec<usize> = reports.iter().map(|r| r.config.episode.k_shot).collect();
        shots.sort_unstable();
        shots.dedup();
        let mut rows: Vec<GridRow> = Vec::new();
        for r in reports {
            let idx = match rows.iter().position(|row| row.label == r.config.name) {
                Some(i) => i,
                None => {
                    rows.push(GridRow {
                        label: r.config.name.clone(),
                        cells: vec![None; shots.len()],
                    });
                    rows.len() - 1
                }
            };
            let col = shots
                .binary_search(&r.config.episode.k_shot)
                .expect("shot collected above");
            rows[idx].cells[col] = Some(GridCell {
                accuracy: r.accuracy.mean,
                auroc: r.auroc.mean,
            });
        }
        Self { shots, rows }
    }

    pub fn header(&self) -> Vec<String> {
        let mut h = vec!["label".to_string()];
        for s in &self.shots {
            h.push(format!("{s}-shot Acc"));
            h.push(format!("{s}-shot AuRoc"));
        }
        h
    }

    pub fn write_csv<W: Write>(&self, out: W) -> Result<()> {
        let mut w = csv::Writer::from_writer(out);
        let err = |e: csv::Error| Error::Config(format!("csv export failed: {e}"));
        w.write_record(self.header()).map_err(err)?;
        for row in &self.rows {
            let mut rec = vec![row.label.clone()];
            for cell in &row.cells {
                match cell {
                    Some(c) => {
                        rec.push(format!("{:?}", c.accuracy));
                        rec.push(format!("{:?}", c.auroc));
                    }
                    None => rec.extend([String::new(), String::new()]),
                }
            }
            w.write_record(rec).map_err(err)?;
        }
        w.flush()?;
        Ok(())
    }

    /// Plain-text rendering with percentages to one decimal.
    pub fn render(&self) -> String {
        let header = self.header();
        let mut body: Vec<Vec<String>> = vec![header];
        for row in &self.rows {
            let mut line = vec![row.label.clone()];
            for cell in &row.cells {
                match cell {
                    Some(c) => {
                        line.push(format!("{:.1}", 100.0 * c.accuracy));
                        line.push(format!("{:.1}", 100.0 * c.auroc));
                    }
                    None => line.extend(["-".to_string(), "-".to_string()]),
                }
            }
            body.push(line);
        }
        let widths: Vec<usize> = (0..body[0].len())
            .map(|i| body.iter().map(|l| l[i].len()).max().unwrap_or(0))
            .collect();
        body.iter()
            .map(|l| {
                l.iter()
                    .zip(&widths)
                    .enumerate()
                    .map(|(i, (s, w))| if i == 0 { format!("{s:<w$}") } else { format!("{s:>w$}") })
                    .collect::<Vec<_>>()
                    .join("  ")
                    .trim_end()
                    .to_string()
            })
            .collect::<Vec<_>>()
            .join("\n")
            + "\n"
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct GridReport {
    pub schema_version: u32,
    pub engine_version: String,
    pub table: GridTable,
    pub reports: Vec<ExperimentReport>,
}

impl GridReport {
    pub fn new(reports: Vec<ExperimentReport>) -> Self {
        Self {
            schema_version: REPORT_SCHEMA_VERSION,
            engine_version: ENGINE_VERSION.to_string(),
            table: GridTable::from_reports(&reports),
            reports,
        }
    }

    pub fn to_json(&self) -> Result<String> {
        Ok(serde_json::to_string_pretty(self)? + "\n")
    }

    pub fn to_json_without_clock(&self) -> Result<String> {
        let mut copy = self.clone();
        for r in &mut copy.reports {
            r.wall_clock_seconds = 0.0;
        }
        copy.to_json()
    }
}
