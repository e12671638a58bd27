//! Experiment configuration and its flat `key = value` file grammar.
//!
//! A config file is a TOML document whose keys are all scalar; dotted keys
//! (`synthetic.seed = 3`) are allowed and read as flat names. Every key is
//! applied through [`ExperimentConfig::set`], which is also what command-line
//! `--set key=value` overrides use, so file values and overrides share one
//! parser. Unknown keys are errors.

use std::fmt;
use std::path::{Path, PathBuf};
use std::str::FromStr;

use serde::{Deserialize, Serialize};

use crate::classifiers::{ClassifierKind, ClassifierParams};
use crate::error::{Error, Result};
use crate::preprocess::PreprocessConfig;
use crate::sampler::EpisodeConfig;
use crate::store::{DataFormat, SyntheticSpec};

pub const DEFAULT_EPISODES: usize = 600;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FileSource {
    pub path: PathBuf,
    pub format: DataFormat,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum DataSource {
    File(FileSource),
    Synthetic(SyntheticSpec),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum ReportFormat {
    Json,
    Csv,
}

impl FromStr for ReportFormat {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s.to_ascii_lowercase().as_str() {
            "json" => Ok(ReportFormat::Json),
            "csv" => Ok(ReportFormat::Csv),
            other => Err(Error::Config(format!("unknown report format `{other}`"))),
        }
    }
}

impl fmt::Display for ReportFormat {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            ReportFormat::Json => "json",
            ReportFormat::Csv => "csv",
        })
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ExperimentConfig {
    /// Row label in grid tables.
    pub name: String,
    pub data: Option<DataSource>,
    pub episode: EpisodeConfig,
    pub preprocess: PreprocessConfig,
    pub classifier: ClassifierKind,
    pub params: ClassifierParams,
    pub episodes: usize,
    pub output: Option<PathBuf>,
    pub report_format: ReportFormat,
}

impl Default for ExperimentConfig {
    fn default() -> Self {
        Self {
            name: String::new(),
            data: None,
            episode: EpisodeConfig::default(),
            preprocess: PreprocessConfig::default(),
            classifier: ClassifierKind::Prototype,
            params: ClassifierParams::default(),
            episodes: DEFAULT_EPISODES,
            output: None,
            report_format: ReportFormat::Json,
        }
    }
}

fn parse<T: FromStr>(key: &str, value: &str) -> Result<T> {
    value
        .trim()
        .parse()
        .map_err(|_| Error::Config(format!("invalid value `{value}` for `{key}`")))
}

fn parse_bool(key: &str, value: &str) -> Result<bool> {
    match value.trim().to_ascii_lowercase().as_str() {
        "true" | "yes" | "on" | "1" => Ok(true),
        "false" | "no" | "off" | "0" => Ok(false),
        _ => Err(Error::Config(format!("invalid boolean `{value}` for `{key}`"))),
    }
}

fn is_unset(value: &str) -> bool {
    matches!(value.trim().to_ascii_lowercase().as_str(), "auto" | "none" | "")
}

impl ExperimentConfig {
    /// Every key accepted by [`set`](Self::set).
    pub const KEYS: &'static [&'static str] = &[
        "name",
        "data.path",
        "data.format",
        "synthetic.n_classes",
        "synthetic.dim",
        "synthetic.groups_per_class",
        "synthetic.class_center_norm",
        "synthetic.noise_sigma",
        "synthetic.seed",
        "synthetic.aug_copies",
        "synthetic.aug_sigma",
        "synthetic.nuisance_dims",
        "synthetic.nuisance_scale",
        "n_way",
        "k_shot",
        "q_query",
        "aug_expand",
        "seed",
        "l2_normalize",
        "epsilon",
        "classifier",
        "l2_strength",
        "max_iters",
        "tolerance",
        "learning_rate",
        "tree.max_depth",
        "tree.min_split",
        "knn.k",
        "episodes",
        "output",
        "report_format",
    ];

    fn synthetic_mut(&mut self) -> Result<&mut SyntheticSpec> {
        let data = self
            .data
            .get_or_insert_with(|| DataSource::Synthetic(SyntheticSpec::default()));
        match data {
            DataSource::Synthetic(spec) => Ok(spec),
            DataSource::File(_) => Err(Error::Config(
                "config sets both a data file and a synthetic dataset".into(),
            )),
        }
    }

    fn file_mut(&mut self) -> Result<&mut FileSource> {
        let data = self.data.get_or_insert_with(|| {
            DataSource::File(FileSource {
                path: PathBuf::new(),
                format: DataFormat::Binary,
            })
        });
        match data {
            DataSource::File(f) => Ok(f),
            DataSource::Synthetic(_) => Err(Error::Config(
                "config sets both a data file and a synthetic dataset".into(),
            )),
        }
    }

    /// Applies one `key = value` setting.
    pub fn set(&mut self, key: &str, value: &str) -> Result<()> {
        let v = value.trim();
        match key {
            "name" => self.name = v.to_string(),
            "data.path" => {
                let path = PathBuf::from(v);
                let guessed = DataFormat::from_path(&path);
                let file = self.file_mut()?;
                if file.path.as_os_str().is_empty() {
                    file.format = guessed;
                }
                file.path = path;
            }
            "data.format" => self.file_mut()?.format = v.parse()?,
            "synthetic.n_classes" => self.synthetic_mut()?.n_classes = parse(key, v)?,
            "synthetic.dim" => self.synthetic_mut()?.dim = parse(key, v)?,
            "synthetic.groups_per_class" => self.synthetic_mut()?.groups_per_class = parse(key, v)?,
            "synthetic.class_center_norm" => self.synthetic_mut()?.class_center_norm = parse(key, v)?,
            "synthetic.noise_sigma" => self.synthetic_mut()?.noise_sigma = parse(key, v)?,
            "synthetic.seed" => self.synthetic_mut()?.seed = parse(key, v)?,
            "synthetic.aug_copies" => self.synthetic_mut()?.aug_copies = parse(key, v)?,
            "synthetic.aug_sigma" => self.synthetic_mut()?.aug_sigma = parse(key, v)?,
            "synthetic.nuisance_dims" => self.synthetic_mut()?.nuisance_dims = parse(key, v)?,
            "synthetic.nuisance_scale" => self.synthetic_mut()?.nuisance_scale = parse(key, v)?,
            "n_way" => self.episode.n_way = parse(key, v)?,
            "k_shot" => self.episode.k_shot = parse(key, v)?,
            "q_query" => self.episode.q_query = parse(key, v)?,
            "aug_expand" => self.episode.aug_expand = parse_bool(key, v)?,
            "seed" => self.episode.seed = parse(key, v)?,
            "l2_normalize" => self.preprocess.l2_normalize = parse_bool(key, v)?,
            "epsilon" => self.preprocess.epsilon = parse(key, v)?,
            "classifier" => self.classifier = v.parse()?,
            "l2_strength" => self.params.solver.l2_strength = if is_unset(v) { None } else { Some(parse(key, v)?) },
            "max_iters" => self.params.solver.max_iters = parse(key, v)?,
            "tolerance" => self.params.solver.tolerance = parse(key, v)?,
            "learning_rate" => self.params.solver.learning_rate = parse(key, v)?,
            "tree.max_depth" => self.params.tree.max_depth = if is_unset(v) { None } else { Some(parse(key, v)?) },
            "tree.min_split" => self.params.tree.min_split = parse(key, v)?,
            "knn.k" => self.params.knn_k = parse(key, v)?,
            "episodes" => self.episodes = parse(key, v)?,
            "output" => self.output = if is_unset(v) { None } else { Some(PathBuf::from(v)) },
            "report_format" => self.report_format = v.parse()?,
            other => return Err(Error::Config(format!("unknown key `{other}`"))),
        }
        Ok(())
    }

    /// Applies a `key=value` override string.
    pub fn set_pair(&mut self, pair: &str) -> Result<()> {
        let (key, value) = pair
            .split_once('=')
            .ok_or_else(|| Error::Config(format!("override `{pair}` is not key=value")))?;
        self.set(key.trim(), value)
    }

    pub fn from_toml_str(text: &str) -> Result<Self> {
        let table: toml::Table = text
            .parse()
            .map_err(|e: toml::de::Error| Error::Config(e.to_string()))?;
        let mut config = Self::default();
        for (key, value) in flatten(&table)? {
            config.set(&key, &value)?;
        }
        Ok(config)
    }

    pub fn from_file(path: impl AsRef<Path>) -> Result<Self> {
        Self::from_toml_str(&std::fs::read_to_string(path)?)
    }

    pub fn validate(&self) -> Result<()> {
        match &self.data {
            None => return Err(Error::Config("no data source: set data.path or synthetic.*".into())),
            Some(DataSource::File(f)) if f.path.as_os_str().is_empty() => {
                return Err(Error::Config("data.format given without data.path".into()))
            }
            Some(DataSource::Synthetic(spec)) => spec.validate()?,
            Some(DataSource::File(_)) => {}
        }
        if self.episodes == 0 {
            return Err(Error::Config("episodes must be at least 1".into()));
        }
        if !(self.preprocess.epsilon > 0.0 && self.preprocess.epsilon.is_finite()) {
            return Err(Error::Config("epsilon must be positive".into()));
        }
        self.episode.validate()?;
        self.params.solver.validate()?;
        if self.params.knn_k == 0 {
            return Err(Error::Config("knn.k must be at least 1".into()));
        }
        Ok(())
    }

    /// The `key = value` document that reproduces this config.
    pub fn to_flat_string(&self) -> String {
        let mut lines = Vec::new();
        let mut push = |k: &str, v: String| lines.push(format!("{k} = {v}"));
        let quote = |s: &str| format!("{s:?}");
        push("name", quote(&self.name));
        match &self.data {
            Some(DataSource::File(f)) => {
                push("data.path", quote(&f.path.display().to_string()));
                push("data.format", quote(&f.format.to_string()));
            }
            Some(DataSource::Synthetic(s)) => {
                push("synthetic.n_classes", s.n_classes.to_string());
                push("synthetic.dim", s.dim.to_string());
                push("synthetic.groups_per_class", s.groups_per_class.to_string());
                push("synthetic.class_center_norm", format!("{:?}", s.class_center_norm));
                push("synthetic.noise_sigma", format!("{:?}", s.noise_sigma));
                push("synthetic.seed", s.seed.to_string());
                push("synthetic.aug_copies", s.aug_copies.to_string());
                push("synthetic.aug_sigma", format!("{:?}", s.aug_sigma));
                push("synthetic.nuisance_dims", s.nuisance_dims.to_string());
                push("synthetic.nuisance_scale", format!("{:?}", s.nuisance_scale));
            }
            None => {}
        }
        push("n_way", self.episode.n_way.to_string());
        push("k_shot", self.episode.k_shot.to_string());
        push("q_query", self.episode.q_query.to_string());
        push("aug_expand", self.episode.aug_expand.to_string());
        push("seed", self.episode.seed.to_string());
        push("l2_normalize", self.preprocess.l2_normalize.to_string());
        push("epsilon", format!("{:?}", self.preprocess.epsilon));
        push("classifier", quote(self.classifier.name()));
        push(
            "l2_strength",
            self.params
                .solver
                .l2_strength
                .map_or_else(|| quote("auto"), |l| format!("{l:?}")),
        );
        push("max_iters", self.params.solver.max_iters.to_string());
        push("tolerance", format!("{:?}", self.params.solver.tolerance));
        push("learning_rate", format!("{:?}", self.params.solver.learning_rate));
        push(
            "tree.max_depth",
            self.params
                .tree
                .max_depth
                .map_or_else(|| quote("none"), |d| d.to_string()),
        );
        push("tree.min_split", self.params.tree.min_split.to_string());
        push("knn.k", self.params.knn_k.to_string());
        push("episodes", self.episodes.to_string());
        if let Some(out) = &self.output {
            push("output", quote(&out.display().to_string()));
        }
        push("report_format", quote(&self.report_format.to_string()));
        lines.join("\n") + "\n"
    }
}

/// Flattens nested tables into dotted keys with scalar values rendered as text.
pub(crate) fn flatten(table: &toml::Table) -> Result<Vec<(String, String)>> {
    fn walk(prefix: &str, table: &toml::Table, out: &mut Vec<(String, String)>) -> Result<()> {
        for (k, v) in table {
            let key = if prefix.is_empty() {
                k.clone()
            } else {
                format!("{prefix}.{k}")
            };
            let text = match v {
                toml::Value::Table(t) => {
                    walk(&key, t, out)?;
                    continue;
                }
                toml::Value::String(s) => s.clone(),
                toml::Value::Integer(i) => i.to_string(),
                toml::Value::Float(f) => format!("{f:?}"),
                toml::Value::Boolean(b) => b.to_string(),
                other => {
                    return Err(Error::Config(format!(
                        "`{key}` must be a scalar, found {}",
                        other.type_str()
                    )))
                }
            };
            out.push((key, text));
        }
        Ok(())
    }
    let mut out = Vec::new();
    walk("", table, &mut out)?;
    Ok(out)
}

#[cfg(test)]
mod tests {
    use super::*;

    const SAMPLE: &str = r#"
# 2-way 5-shot logistic regression on clustered data
name = "LR"
synthetic.n_classes = 5
synthetic.dim = 16
synthetic.noise_sigma = 0.5
synthetic.seed = 9
n_way = 2
k_shot = 5
classifier = "lr"
l2_strength = 0.01
tree.max_depth = 4
episodes = 20
"#;

    #[test]
    fn parses_flat_document() {
        let c = ExperimentConfig::from_toml_str(SAMPLE).unwrap();
        assert_eq!(c.name, "LR");
        assert_eq!(c.classifier, ClassifierKind::Logistic);
        assert_eq!(c.episode.k_shot, 5);
        assert_eq!(c.episode.q_query, crate::sampler::DEFAULT_Q_QUERY);
        assert_eq!(c.params.solver.l2_strength, Some(0.01));
        assert_eq!(c.params.tree.max_depth, Some(4));
        match &c.data {
            Some(DataSource::Synthetic(s)) => {
                assert_eq!(s.noise_sigma, 0.5);
                assert_eq!(s.seed, 9);
                assert_eq!(s.groups_per_class, SyntheticSpec::default().groups_per_class);
            }
            other => panic!("unexpected data source {other:?}"),
        }
        c.validate().unwrap();
    }

    #[test]
    fn dotted_and_table_forms_agree() {
        let dotted = ExperimentConfig::from_toml_str("synthetic.dim = 3\nsynthetic.seed = 1\n").unwrap();
        let table = ExperimentConfig::from_toml_str("[synthetic]\ndim = 3\nseed = 1\n").unwrap();
        assert_eq!(dotted, table);
    }

    #[test]
    fn overrides_win() {
        let mut c = ExperimentConfig::from_toml_str(SAMPLE).unwrap();
        c.set_pair("k_shot=1").unwrap();
        c.set_pair("l2_strength = auto").unwrap();
        assert_eq!(c.episode.k_shot, 1);
        assert_eq!(c.params.solver.l2_strength, None);
        assert!(c.set_pair("k_shot").is_err());
    }

    #[test]
    fn round_trips_through_flat_text() {
        let c = ExperimentConfig::from_toml_str(SAMPLE).unwrap();
        let again = ExperimentConfig::from_toml_str(&c.to_flat_string()).unwrap();
        assert_eq!(c, again);

        let mut file = ExperimentConfig::default();
        file.set("data.path", "emb.csv").unwrap();
        assert_eq!(
            file.data,
            Some(DataSource::File(FileSource {
                path: "emb.csv".into(),
                format: DataFormat::Csv
            }))
        );
        assert_eq!(ExperimentConfig::from_toml_str(&file.to_flat_string()).unwrap(), file);
    }

    #[test]
    fn rejects_bad_documents() {
        assert!(ExperimentConfig::from_toml_str("bogus = 1").is_err());
        assert!(ExperimentConfig::from_toml_str("k_shot = [1, 2]").is_err());
        assert!(ExperimentConfig::from_toml_str("k_shot = \"many\"").is_err());
        assert!(ExperimentConfig::from_toml_str("data.path = \"x.bin\"\nsynthetic.dim = 4").is_err());
        let c = ExperimentConfig::from_toml_str("episodes = 3").unwrap();
        assert!(matches!(c.validate(), Err(Error::Config(_))));
        let c = ExperimentConfig::from_toml_str("synthetic.dim = 2\nepisodes = 0").unwrap();
        assert!(c.validate().is_err());
    }

    #[test]
    fn every_listed_key_is_accepted() {
        for &key in ExperimentConfig::KEYS {
            let value = match key {
                "data.path" | "output" | "name" => "x",
                "data.format" => "csv",
                "classifier" => "svm",
                "report_format" => "csv",
                "aug_expand" | "l2_normalize" => "true",
                k if k.starts_with("synthetic.")
                    || k == "epsilon"
                    || k == "tolerance"
                    || k == "learning_rate"
                    || k == "l2_strength" =>
                {
                    "1"
                }
                _ => "2",
            };
            let mut c = ExperimentConfig::default();
            c.set(key, value).unwrap_or_else(|e| panic!("{key}: {e}"));
        }
    }
}
