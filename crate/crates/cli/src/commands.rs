//! The pipeline subcommands.

use std::fs;
use std::path::{Path, PathBuf};

use anyhow::{Context, Result};
use clap::{Args, ValueEnum};
use lionex::baselines::{GradientXInput, Lime, LimeConfig};
use lionex::data::{
    read_corpus_csv, read_series_csv, split_corpus, split_indices, synth_classification, synth_corpus,
    synth_degradation, tfidf_fit, write_corpus_csv, write_dense_csv, write_series_csv, DataKind, DatasetManifest,
    DenseDataset, UnitSeries,
};
use lionex::explanation::{Counterfactual, Explainer, Explanation, ExplanationFile};
use lionex::lionets::{aggregate_sensor_importance, counterfactual_features, LioNets, NeighbourhoodConfig};
use lionex::metrics::{evaluate_explainer, reports_to_csv, reports_to_markdown, EvalSetup, Grouping, PerturbMode};
use lionex::neural::{save_model, MlpModel, Task};
use lionex::numerics::{compute_feature_stats, FeatureStats};
use lionex::recipes::{accuracy, reconstruction_mae};

use crate::error::{exit, CliError};
use crate::workspace::{Workspace, DECODER, MANIFEST, PREDICTOR, STATS, VOCAB};

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum KindArg {
    Toy,
    Text,
    Timeseries,
}

impl From<KindArg> for DataKind {
    fn from(k: KindArg) -> Self {
        match k {
            KindArg::Toy => DataKind::Toy,
            KindArg::Text => DataKind::Text,
            KindArg::Timeseries => DataKind::Timeseries,
        }
    }
}

#[derive(Debug, Clone, Args)]
pub struct GenerateArgs {
    #[arg(long, value_enum)]
    pub kind: KindArg,
    #[arg(long, default_value_t = 7)]
    pub seed: u64,
    /// Read a CSV (`label,text` or `unit,timestep,sensor_1..,rul`) instead of synthesising.
    #[arg(long)]
    pub from: Option<PathBuf>,
    /// Rows (toy) or messages (text) to synthesise.
    #[arg(long)]
    pub samples: Option<usize>,
    #[arg(long, default_value_t = 6)]
    pub features: usize,
    #[arg(long, default_value_t = 8)]
    pub units: usize,
    #[arg(long, default_value_t = 5)]
    pub sensors: usize,
    #[arg(long, default_value_t = 20)]
    pub window: usize,
    /// RUL threshold for classifying windows; `--regression` drops it.
    #[arg(long, default_value_t = 40.0)]
    pub threshold: f64,
    #[arg(long)]
    pub regression: bool,
    /// Vocabulary cap; defaults to 1000 for CSV corpora and no cap for synthetic ones.
    #[arg(long)]
    pub max_features: Option<usize>,
    #[arg(long, default_value_t = 0.8)]
    pub train_ratio: f64,
}

fn subset_dense(d: &DenseDataset, idx: &[usize]) -> DenseDataset {
    DenseDataset {
        x: d.x.select_rows(idx),
        labels: idx.iter().map(|&i| d.labels[i]).collect(),
    }
}

pub fn generate_data(dir: &Path, args: &GenerateArgs) -> Result<()> {
    fs::create_dir_all(dir).with_context(|| format!("creating {}", dir.display()))?;
    let kind: DataKind = args.kind.into();
    let mut manifest = DatasetManifest {
        kind,
        seed: args.seed,
        splits: [("train", "train.csv"), ("val", "val.csv")]
            .into_iter()
            .map(|(k, v)| (k.to_string(), v.to_string()))
            .collect(),
        window: None,
        sensors: None,
        threshold: None,
        max_features: None,
    };
    let (train, val) = (dir.join("train.csv"), dir.join("val.csv"));
    match kind {
        DataKind::Toy => {
            if args.from.is_some() {
                return Err(CliError::validation("toy data is always synthetic").into());
            }
            let data = synth_classification(args.samples.unwrap_or(100), args.features, args.seed)?;
            let (a, b) = split_indices(data.labels.len(), args.train_ratio, args.seed)?;
            write_dense_csv(&train, &subset_dense(&data, &a))?;
            write_dense_csv(&val, &subset_dense(&data, &b))?;
            println!(
                "toy: {} train / {} val rows, {} features",
                a.len(),
                b.len(),
                args.features
            );
        }
        DataKind::Text => {
            let (corpus, cap) = match &args.from {
                Some(path) => (read_corpus_csv(path)?, args.max_features.unwrap_or(1000)),
                None => (
                    synth_corpus(args.samples.unwrap_or(200), args.seed),
                    args.max_features.unwrap_or(usize::MAX),
                ),
            };
            let split = split_corpus(&corpus, args.train_ratio, args.seed)?;
            let texts: Vec<&str> = split.train.iter().map(|(_, t)| t.as_str()).collect();
            let vocab = tfidf_fit(&texts, cap)?;
            write_corpus_csv(&train, &split.train)?;
            write_corpus_csv(&val, &split.test)?;
            fs::write(dir.join(VOCAB), vocab.to_json())?;
            manifest.max_features = args.max_features;
            println!(
                "text: {} train / {} val messages, {} tokens",
                split.train.len(),
                split.test.len(),
                vocab.len()
            );
        }
        DataKind::Timeseries => {
            let units: Vec<UnitSeries> = match &args.from {
                Some(path) => read_series_csv(path)?,
                None => synth_degradation(args.units, args.sensors, args.seed)?,
            };
            let sensors = units.first().map_or(0, UnitSeries::sensors);
            let (a, b) = split_indices(units.len(), args.train_ratio, args.seed)?;
            let pick = |idx: &[usize]| {
                let mut sorted = idx.to_vec();
                sorted.sort_unstable();
                sorted.iter().map(|&i| units[i].clone()).collect::<Vec<_>>()
            };
            write_series_csv(&train, &pick(&a))?;
            write_series_csv(&val, &pick(&b))?;
            manifest.window = Some(args.window);
            manifest.sensors = Some(sensors);
            manifest.threshold = (!args.regression).then_some(args.threshold);
            println!(
                "timeseries: {} train / {} val units, {sensors} sensors",
                a.len(),
                b.len()
            );
        }
    }
    manifest.save(dir.join(MANIFEST))?;
    println!("wrote {}", dir.join(MANIFEST).display());
    Ok(())
}

#[derive(Debug, Clone, Args)]
pub struct TrainArgs {
    #[arg(long, default_value_t = 7)]
    pub seed: u64,
    /// Overrides the recipe's epoch count.
    #[arg(long)]
    pub epochs: Option<usize>,
}

fn print_history(history: &[f64]) {
    for (i, loss) in history.iter().enumerate() {
        println!("epoch {:>4} loss {loss:.6}", i + 1);
    }
}

pub fn train_predictor(ws: &Workspace, args: &TrainArgs) -> Result<()> {
    let mut recipe = ws.recipe();
    if let Some(e) = args.epochs {
        recipe.predictor.epochs = e;
    }
    let train = ws.split("train")?;
    let (model, history) = recipe.train_predictor(&train.x, &train.targets, args.seed)?;
    print_history(&history);
    if model.task() == Task::BinaryClassification {
        println!("train accuracy {:.4}", accuracy(&model, &train.x, &train.targets)?);
    }
    save_model(&model, ws.path(PREDICTOR))?;
    println!("wrote {}", ws.path(PREDICTOR).display());
    Ok(())
}

pub fn train_decoder(ws: &Workspace, args: &TrainArgs) -> Result<()> {
    let predictor = ws.predictor()?;
    let mut recipe = ws.recipe();
    if let Some(e) = args.epochs {
        recipe.decoder.epochs = e;
    }
    let train = ws.split("train")?;
    let (decoder, history) = recipe.train_decoder(&predictor, &train.x, args.seed)?;
    print_history(&history);
    println!(
        "reconstruction mae {:.6}",
        reconstruction_mae(&predictor, &decoder, &train.x)?
    );
    save_model(&decoder, ws.path(DECODER))?;
    println!("wrote {}", ws.path(DECODER).display());
    Ok(())
}

pub fn compute_stats(ws: &Workspace) -> Result<()> {
    let predictor = ws.predictor()?;
    let train = ws.split("train")?;
    let stats = compute_feature_stats(&predictor.encode_rows(&train.x)?)?;
    fs::write(ws.path(STATS), serde_json::to_string_pretty(&stats)? + "\n")?;
    println!("wrote {} latent records to {}", stats.len(), ws.path(STATS).display());
    Ok(())
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum ExplainerKind {
    Lionets,
    Lime,
    Gxi,
}

impl ExplainerKind {
    pub fn parse(name: &str) -> Result<Self> {
        <Self as ValueEnum>::from_str(name, true)
            .map_err(|_| CliError::validation(format!("unknown explainer {name:?}; use lionets, lime or gxi")).into())
    }
}

/// Knobs shared by `explain`, `evaluate` and `serve`.
#[derive(Debug, Clone, Args)]
pub struct ExplainOptions {
    /// Latent neighbourhood size.
    #[arg(long, default_value_t = 2000)]
    pub size: usize,
    /// Fit a single alpha instead of the grid.
    #[arg(long)]
    pub fast: bool,
    /// LIME samples per explanation.
    #[arg(long, default_value_t = 5000)]
    pub lime_samples: usize,
}

impl Default for ExplainOptions {
    fn default() -> Self {
        ExplainOptions {
            size: 2000,
            fast: false,
            lime_samples: 5000,
        }
    }
}

/// Trained artifacts an explainer borrows from.
pub struct Models {
    pub predictor: MlpModel,
    pub decoder: Option<MlpModel>,
    pub stats: Option<FeatureStats>,
}

impl Models {
    /// Loads the predictor, plus the decoder and stats when `latent` is set.
    pub fn load(ws: &Workspace, latent: bool) -> Result<Self> {
        Ok(Models {
            predictor: ws.predictor()?,
            decoder: if latent { Some(ws.decoder()?) } else { None },
            stats: if latent { Some(ws.stats()?) } else { None },
        })
    }

    pub fn explainer<'a>(
        &'a self,
        kind: ExplainerKind,
        data: DataKind,
        opts: &ExplainOptions,
    ) -> Result<Box<dyn Explainer + 'a>> {
        Ok(match kind {
            ExplainerKind::Lionets => {
                let (Some(decoder), Some(stats)) = (&self.decoder, &self.stats) else {
                    return Err(CliError::validation("lionets needs a trained decoder and feature stats").into());
                };
                let mut cfg = NeighbourhoodConfig::default().with_size(opts.size);
                if opts.fast {
                    cfg = cfg.fast();
                }
                Box::new(LioNets::new(&self.predictor, decoder, stats, cfg)?)
            }
            ExplainerKind::Lime => {
                if data == DataKind::Toy {
                    return Err(CliError::validation("lime needs sparse text vectors or flattened windows").into());
                }
                Box::new(Lime {
                    predictor: &self.predictor,
                    config: LimeConfig {
                        num_samples: opts.lime_samples,
                        ..LimeConfig::default()
                    },
                })
            }
            ExplainerKind::Gxi => Box::new(GradientXInput {
                predictor: &self.predictor,
            }),
        })
    }
}

/// Explanation file for one instance, with counterfactual words for text.
pub fn explanation_file(
    ws: &Workspace,
    names: &[String],
    id: &str,
    explainer: &str,
    expl: &Explanation,
    x: &[f64],
    top_k: usize,
) -> Result<ExplanationFile> {
    let counterfactuals = if ws.kind() == DataKind::Text {
        counterfactual_features(expl, x, top_k.max(1))?
            .absent
            .into_iter()
            .map(|(j, importance)| Counterfactual {
                feature: names[j].clone(),
                importance,
            })
            .collect()
    } else {
        Vec::new()
    };
    Ok(ExplanationFile::new(id, explainer, expl, x, names, counterfactuals)?)
}

#[derive(Debug, Clone, Args)]
pub struct ExplainArgs {
    /// Instance id such as `val-3`.
    #[arg(long)]
    pub instance: String,
    #[arg(long, value_enum, default_value = "lionets")]
    pub explainer: ExplainerKind,
    #[arg(long, default_value_t = 7)]
    pub seed: u64,
    /// Counterfactual words to keep.
    #[arg(long, default_value_t = 10)]
    pub top_k: usize,
    /// Output directory; defaults to `<workspace>/explanations`.
    #[arg(long)]
    pub out: Option<PathBuf>,
    #[command(flatten)]
    pub options: ExplainOptions,
}

pub fn explain(ws: &Workspace, args: &ExplainArgs) -> Result<()> {
    let (split, row) = ws.find_instance(&args.instance)?;
    let models = Models::load(ws, args.explainer == ExplainerKind::Lionets)?;
    let explainer = models.explainer(args.explainer, ws.kind(), &args.options)?;
    let x = split.x.row(row);
    let expl = explainer.explain(x, args.seed)?;
    let names = ws.feature_names()?;
    let file = explanation_file(ws, &names, &args.instance, explainer.id(), &expl, x, args.top_k)?;

    let out = args.out.clone().unwrap_or_else(|| ws.path("explanations"));
    fs::create_dir_all(&out)?;
    let stem = format!("{}-{}", args.instance, explainer.id());
    let json = out.join(format!("{stem}.json"));
    fs::write(&json, file.to_json_pretty() + "\n")?;
    println!("wrote {}", json.display());

    let mut plot = String::from("feature,importance\n");
    for f in &file.importances {
        plot.push_str(&format!("{},{}\n", f.feature, f.importance));
    }
    let plot_path = out.join(format!("{stem}-plot.csv"));
    fs::write(&plot_path, plot)?;
    println!("wrote {}", plot_path.display());

    if let (Some(window), Some(sensors)) = (ws.manifest.window, ws.manifest.sensors) {
        let mut csv = String::from("sensor,mean,std,min,max\n");
        for (s, agg) in aggregate_sensor_importance(&expl.importances, window, sensors)?
            .iter()
            .enumerate()
        {
            csv.push_str(&format!(
                "sensor_{},{},{},{},{}\n",
                s + 1,
                agg.mean,
                agg.std,
                agg.min,
                agg.max
            ));
        }
        let path = out.join(format!("{stem}-sensors.csv"));
        fs::write(&path, csv)?;
        println!("wrote {}", path.display());
    }
    println!("model prediction {:.6}", expl.model_prediction);
    if let Some(s) = &expl.surrogate {
        println!(
            "local prediction {:.6}, fidelity mae {:.6}, alpha {}",
            s.local_prediction, s.fidelity_mae, s.alpha
        );
    }
    Ok(())
}

#[derive(Debug, Clone, Args)]
pub struct EvaluateArgs {
    #[arg(long, value_enum, value_delimiter = ',', default_value = "lionets,lime,gxi")]
    pub explainers: Vec<ExplainerKind>,
    #[arg(long, default_value = "val")]
    pub split: String,
    #[arg(long, default_value_t = 7)]
    pub seed: u64,
    /// Evaluate only the first `limit` instances of the split.
    #[arg(long)]
    pub limit: Option<usize>,
    /// Output directory; defaults to `<workspace>/reports`.
    #[arg(long)]
    pub out: Option<PathBuf>,
    #[command(flatten)]
    pub options: ExplainOptions,
}

pub fn eval_setup(ws: &Workspace, split: &str, seed: u64) -> Result<EvalSetup> {
    let (perturb, grouping) = match ws.kind() {
        DataKind::Text => (PerturbMode::Text, Grouping::PerToken),
        DataKind::Toy => {
            let stds = ws.feature_stds()?;
            (PerturbMode::Dense { stds: stds.clone() }, Grouping::PerFeature { stds })
        }
        DataKind::Timeseries => (
            PerturbMode::Dense {
                stds: ws.feature_stds()?,
            },
            Grouping::PerSensor {
                window: ws.manifest.window.unwrap_or_default(),
                sensors: ws.manifest.sensors.unwrap_or_default(),
                stds: ws.sensor_stds()?,
            },
        ),
    };
    Ok(EvalSetup {
        split: split.to_string(),
        perturb,
        grouping,
        seed,
    })
}

pub fn evaluate(ws: &Workspace, args: &EvaluateArgs) -> Result<()> {
    let data = ws.split(&args.split)?;
    let mut rows = data.rows();
    if let Some(limit) = args.limit {
        rows.truncate(limit);
    }
    if rows.is_empty() {
        return Err(CliError::validation(format!("split {:?} has no instances", args.split)).into());
    }
    let models = Models::load(ws, args.explainers.contains(&ExplainerKind::Lionets))?;
    let setup = eval_setup(ws, &args.split, args.seed)?;
    let mut reports = Vec::new();
    let mut failing = Vec::new();
    for &kind in &args.explainers {
        let explainer = models.explainer(kind, ws.kind(), &args.options)?;
        match evaluate_explainer(explainer.as_ref(), &models.predictor, &rows, &setup) {
            Ok(report) => {
                if report.failure_rate() > 0.1 {
                    failing.push(format!(
                        "{}: {} of {} failed",
                        report.explainer,
                        report.failures,
                        rows.len()
                    ));
                }
                reports.push(report);
            }
            Err(e) => failing.push(format!("{}: {e}", explainer.id())),
        }
    }
    let out = args.out.clone().unwrap_or_else(|| ws.path("reports"));
    fs::create_dir_all(&out)?;
    let csv = out.join(format!("metrics-{}.csv", args.split));
    let md = out.join(format!("metrics-{}.md", args.split));
    fs::write(&csv, reports_to_csv(&reports))?;
    fs::write(&md, reports_to_markdown(&reports))?;
    print!("{}", reports_to_markdown(&reports));
    println!("wrote {}", csv.display());
    println!("wrote {}", md.display());
    if !failing.is_empty() {
        return Err(CliError::new(
            exit::EXPLAINER_FAILURES,
            format!(
                "explainers failing on more than 10% of instances: {}",
                failing.join("; ")
            ),
        )
        .into());
    }
    Ok(())
}
