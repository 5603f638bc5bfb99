#![allow(dead_code)]

use lionex::data::{
    binarize_rul, make_windows, split_indices, synth_classification, synth_corpus, synth_degradation, tfidf_fit,
    tfidf_transform, DataKind, Vocabulary,
};
use lionex::neural::MlpModel;
use lionex::numerics::{compute_feature_stats, FeatureStats, Mat64};
use lionex::recipes::Recipe;

pub struct Pipeline {
    pub predictor: MlpModel,
    pub decoder: MlpModel,
    pub stats: FeatureStats,
    pub train_x: Mat64,
    pub train_y: Vec<f64>,
    pub test_x: Mat64,
    pub test_y: Vec<f64>,
}

fn fit(recipe: &Recipe, train_x: Mat64, train_y: Vec<f64>, test_x: Mat64, test_y: Vec<f64>, seed: u64) -> Pipeline {
    let (predictor, _) = recipe.train_predictor(&train_x, &train_y, seed).unwrap();
    let (decoder, _) = recipe.train_decoder(&predictor, &train_x, seed + 1).unwrap();
    let stats = compute_feature_stats(&predictor.encode_rows(&train_x).unwrap()).unwrap();
    Pipeline {
        predictor,
        decoder,
        stats,
        train_x,
        train_y,
        test_x,
        test_y,
    }
}

/// 100 x 6 two-cluster data; train and test are the same rows.
pub fn toy(seed: u64) -> Pipeline {
    let data = synth_classification(100, 6, seed).unwrap();
    let y = data.targets();
    fit(
        &Recipe::for_kind(DataKind::Toy),
        data.x.clone(),
        y.clone(),
        data.x,
        y,
        seed,
    )
}

pub struct TextPipeline {
    pub pipeline: Pipeline,
    pub vocab: Vocabulary,
    pub test_texts: Vec<String>,
}

/// 200 synthetic messages, 80/20 split, vocabulary of at most 300 tokens.
pub fn text(seed: u64) -> TextPipeline {
    text_with(&Recipe::for_kind(DataKind::Text), seed)
}

pub fn text_with(recipe: &Recipe, seed: u64) -> TextPipeline {
    let corpus = synth_corpus(200, seed);
    let (train, test) = split_indices(corpus.len(), 0.8, seed).unwrap();
    let train_texts: Vec<&str> = train.iter().map(|&i| corpus[i].1.as_str()).collect();
    let vocab = tfidf_fit(&train_texts, 300).unwrap();
    let vectors = |idx: &[usize]| {
        let rows: Vec<Vec<f64>> = idx.iter().map(|&i| tfidf_transform(&vocab, &corpus[i].1)).collect();
        Mat64::from_rows(&rows).unwrap()
    };
    let labels = |idx: &[usize]| idx.iter().map(|&i| corpus[i].0).collect::<Vec<_>>();
    let pipeline = fit(
        recipe,
        vectors(&train),
        labels(&train),
        vectors(&test),
        labels(&test),
        seed,
    );
    TextPipeline {
        test_texts: test.iter().map(|&i| corpus[i].1.clone()).collect(),
        pipeline,
        vocab,
    }
}

pub const WINDOW: usize = 20;
pub const SENSORS: usize = 5;

/// Degradation windows of 20 x 5 readings labelled `rul <= 40`.
pub fn series(seed: u64) -> Pipeline {
    let units = synth_degradation(8, SENSORS, seed).unwrap();
    let data = make_windows(&units, WINDOW).unwrap();
    let y = binarize_rul(&data.labels, 40.0).unwrap();
    let (train, test) = split_indices(data.len(), 0.8, seed).unwrap();
    fit(
        &Recipe::for_kind(DataKind::Timeseries),
        data.windows.select_rows(&train),
        train.iter().map(|&i| y[i]).collect(),
        data.windows.select_rows(&test),
        test.iter().map(|&i| y[i]).collect(),
        seed,
    )
}
