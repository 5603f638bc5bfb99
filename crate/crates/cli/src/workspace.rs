//! The flat directory holding a dataset, its models and their outputs.

use std::path::{Path, PathBuf};

use anyhow::{Context, Result};
use lionex::data::{
    binarize_rul, make_windows, read_corpus_csv, read_dense_csv, read_series_csv, tfidf_transform, DataKind,
    DatasetManifest, Vocabulary,
};
use lionex::lionets::{InstanceSource, PipelineContext};
use lionex::neural::{load_model, MlpModel, Task};
use lionex::numerics::{compute_feature_stats, mean_std, FeatureStats, Mat64};
use lionex::recipes::Recipe;

use crate::error::CliError;

pub const MANIFEST: &str = "manifest.json";
pub const VOCAB: &str = "vocab.json";
pub const PREDICTOR: &str = "predictor.json";
pub const DECODER: &str = "decoder.json";
pub const STATS: &str = "stats.json";

pub const SPLITS: [&str; 2] = ["train", "val"];

/// One split, vectorised and ready for a predictor.
#[derive(Debug, Clone)]
pub struct SplitData {
    pub name: String,
    /// `"{split}-{row}"`.
    pub ids: Vec<String>,
    pub sources: Vec<InstanceSource>,
    pub x: Mat64,
    pub targets: Vec<f64>,
}

impl SplitData {
    pub fn position(&self, id: &str) -> Option<usize> {
        self.ids.iter().position(|i| i == id)
    }

    pub fn rows(&self) -> Vec<Vec<f64>> {
        self.x.iter_rows().map(<[f64]>::to_vec).collect()
    }
}

#[derive(Debug, Clone)]
pub struct Workspace {
    pub dir: PathBuf,
    pub manifest: DatasetManifest,
    pub vocab: Option<Vocabulary>,
}

fn require(path: &Path, what: &str) -> Result<()> {
    if !path.is_file() {
        return Err(CliError::validation(format!("{what} not found: {}", path.display())).into());
    }
    Ok(())
}

impl Workspace {
    pub fn open(dir: impl Into<PathBuf>) -> Result<Self> {
        let dir = dir.into();
        let manifest_path = dir.join(MANIFEST);
        require(&manifest_path, "dataset manifest")?;
        let manifest =
            DatasetManifest::load(&manifest_path).with_context(|| format!("reading {}", manifest_path.display()))?;
        for file in manifest.splits.values() {
            require(&dir.join(file), "dataset split")?;
        }
        let vocab = match manifest.kind {
            DataKind::Text => {
                let path = dir.join(VOCAB);
                require(&path, "vocabulary")?;
                let text = std::fs::read_to_string(&path)?;
                Some(Vocabulary::from_json(&text).with_context(|| format!("reading {}", path.display()))?)
            }
            _ => None,
        };
        Ok(Workspace { dir, manifest, vocab })
    }

    pub fn path(&self, name: &str) -> PathBuf {
        self.dir.join(name)
    }

    pub fn kind(&self) -> DataKind {
        self.manifest.kind
    }

    /// Default recipe; windows without a threshold are regressed on RUL.
    pub fn recipe(&self) -> Recipe {
        let mut recipe = Recipe::for_kind(self.kind());
        if self.kind() == DataKind::Timeseries && self.manifest.threshold.is_none() {
            recipe.task = Task::Regression;
            recipe.predictor.loss = lionex::neural::Loss::Mse;
        }
        recipe
    }

    fn window_shape(&self) -> Result<(usize, usize)> {
        match (self.manifest.window, self.manifest.sensors) {
            (Some(w), Some(s)) => Ok((w, s)),
            _ => Err(CliError::validation("time-series manifest needs window and sensors").into()),
        }
    }

    pub fn context(&self) -> Result<PipelineContext> {
        Ok(match self.kind() {
            DataKind::Text => PipelineContext::Text {
                vocab: self.vocab.clone().expect("text workspaces load a vocabulary"),
            },
            DataKind::Timeseries => {
                let (window, sensors) = self.window_shape()?;
                PipelineContext::Windows { window, sensors }
            }
            DataKind::Toy => PipelineContext::Dense {
                features: self.split("train")?.x.cols(),
            },
        })
    }

    pub fn split(&self, name: &str) -> Result<SplitData> {
        let file = self
            .manifest
            .splits
            .get(name)
            .ok_or_else(|| CliError::validation(format!("unknown split {name:?}")))?;
        let path = self.dir.join(file);
        let ids = |n: usize| (0..n).map(|i| format!("{name}-{i}")).collect::<Vec<_>>();
        let data = match self.kind() {
            DataKind::Toy => {
                let d = read_dense_csv(&path).with_context(|| format!("reading {}", path.display()))?;
                SplitData {
                    name: name.into(),
                    ids: ids(d.labels.len()),
                    sources: d.x.iter_rows().map(|r| InstanceSource::Dense(r.to_vec())).collect(),
                    targets: d.targets(),
                    x: d.x,
                }
            }
            DataKind::Text => {
                let vocab = self.vocab.as_ref().expect("text workspaces load a vocabulary");
                let corpus = read_corpus_csv(&path).with_context(|| format!("reading {}", path.display()))?;
                let rows: Vec<Vec<f64>> = corpus.iter().map(|(_, t)| tfidf_transform(vocab, t)).collect();
                SplitData {
                    name: name.into(),
                    ids: ids(corpus.len()),
                    sources: corpus.iter().map(|(_, t)| InstanceSource::Text(t.clone())).collect(),
                    targets: corpus.iter().map(|(l, _)| *l).collect(),
                    x: if rows.is_empty() {
                        Mat64::zeros(0, vocab.len())
                    } else {
                        Mat64::from_rows(&rows)?
                    },
                }
            }
            DataKind::Timeseries => {
                let (window, sensors) = self.window_shape()?;
                let units = read_series_csv(&path).with_context(|| format!("reading {}", path.display()))?;
                let d = make_windows(&units, window)?;
                if d.sensors != sensors && !d.is_empty() {
                    return Err(CliError::validation(format!(
                        "{} has {} sensors, manifest says {sensors}",
                        path.display(),
                        d.sensors
                    ))
                    .into());
                }
                let targets = match self.manifest.threshold {
                    Some(t) => binarize_rul(&d.labels, t)?,
                    None => d.labels.clone(),
                };
                SplitData {
                    name: name.into(),
                    ids: ids(d.len()),
                    sources: d
                        .windows
                        .iter_rows()
                        .map(|r| InstanceSource::Window(r.to_vec()))
                        .collect(),
                    targets,
                    x: d.windows,
                }
            }
        };
        Ok(data)
    }

    pub fn feature_names(&self) -> Result<Vec<String>> {
        Ok(self.context()?.feature_names())
    }

    /// Looks an instance id up in every split.
    pub fn find_instance(&self, id: &str) -> Result<(SplitData, usize)> {
        let split = id.rsplit_once('-').map(|(s, _)| s).unwrap_or_default();
        if self.manifest.splits.contains_key(split) {
            let data = self.split(split)?;
            if let Some(i) = data.position(id) {
                return Ok((data, i));
            }
        }
        Err(CliError::validation(format!("unknown instance id {id:?}")).into())
    }

    pub fn predictor(&self) -> Result<MlpModel> {
        self.model(PREDICTOR, "predictor model")
    }

    pub fn decoder(&self) -> Result<MlpModel> {
        self.model(DECODER, "decoder model")
    }

    fn model(&self, file: &str, what: &str) -> Result<MlpModel> {
        let path = self.path(file);
        require(&path, what)?;
        load_model(&path).with_context(|| format!("reading {}", path.display()))
    }

    pub fn stats(&self) -> Result<FeatureStats> {
        let path = self.path(STATS);
        require(&path, "feature stats")?;
        let text = std::fs::read_to_string(&path)?;
        let raw: FeatureStats = serde_json::from_str(&text).with_context(|| format!("reading {}", path.display()))?;
        Ok(FeatureStats::new(raw.dims)?)
    }

    /// Population std of every input feature over the training split.
    pub fn feature_stds(&self) -> Result<Vec<f64>> {
        Ok(compute_feature_stats(&self.split("train")?.x)?.stds())
    }

    /// Population std of every sensor over all training readings.
    pub fn sensor_stds(&self) -> Result<Vec<f64>> {
        let (window, sensors) = self.window_shape()?;
        let x = self.split("train")?.x;
        Ok((0..sensors)
            .map(|s| {
                let values: Vec<f64> = (0..window).flat_map(|t| x.column(t * sensors + s)).collect();
                mean_std(&values).1
            })
            .collect())
    }
}
