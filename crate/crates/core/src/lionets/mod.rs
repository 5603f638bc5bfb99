//! Local explanations through the predictor's latent space.
//!
//! An instance is encoded by every predictor layer but the last; neighbours
//! are generated around that latent point, decoded back to input space,
//! scored by the predictor, weighted by their latent distance and fitted with
//! a weighted ridge surrogate whose coefficients form the explanation.

mod counterfactual;
mod geometry;
mod neighbourhood;
mod whatif;

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

pub use counterfactual::{counterfactual_features, CounterfactualReport};
pub use geometry::{
    distance_distributions, histogram, ks_critical_value, ks_statistic, standardize, DistanceStudy, HistogramBin,
    OriginalGenerator, SERIES_NAMES,
};
pub use neighbourhood::{determine_value, first_order_count, generate_neighbourhood, NoiseLevel};
pub use whatif::{what_if, Edit, InstanceSource, PipelineContext, WhatIfOutcome};

use crate::error::{Error, Result};
use crate::explanation::{Explainer, Explanation, SurrogateSummary};
use crate::metrics::fidelity;
use crate::neural::MlpModel;
use crate::numerics::{
    cosine_distance, euclidean_distance, kernel_weight, mean_std, FeatureStats, Mat64, WeightedGram,
};

/// Latent-space distance used for neighbour weights.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Similarity {
    Euclidean,
    Cosine,
}

impl Similarity {
    pub fn distance(self, a: &[f64], b: &[f64]) -> Result<f64> {
        match self {
            Similarity::Euclidean => euclidean_distance(a, b),
            Similarity::Cosine => cosine_distance(a, b),
        }
    }
}

pub const DEFAULT_ALPHA_GRID: [f64; 4] = [0.01, 0.1, 1.0, 10.0];

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct NeighbourhoodConfig {
    pub size: usize,
    pub similarity: Similarity,
    pub alpha_grid: Vec<f64>,
    pub seed: u64,
}

impl Default for NeighbourhoodConfig {
    fn default() -> Self {
        NeighbourhoodConfig {
            size: 2000,
            similarity: Similarity::Euclidean,
            alpha_grid: DEFAULT_ALPHA_GRID.to_vec(),
            seed: 0,
        }
    }
}

impl NeighbourhoodConfig {
    pub fn with_seed(mut self, seed: u64) -> Self {
        self.seed = seed;
        self
    }

    pub fn with_size(mut self, size: usize) -> Self {
        self.size = size;
        self
    }

    /// Single-alpha grid (`[1]`) for quick runs.
    pub fn fast(mut self) -> Self {
        self.alpha_grid = vec![1.0];
        self
    }

    fn validate(&self) -> Result<()> {
        if self.size == 0 {
            return Err(Error::Domain("neighbourhood size must be >= 1".into()));
        }
        if self.alpha_grid.is_empty() || self.alpha_grid.iter().any(|a| !(*a >= 0.0)) {
            return Err(Error::Domain("alpha grid must be non-empty with alphas >= 0".into()));
        }
        Ok(())
    }
}

/// Everything generated while explaining one instance.
#[derive(Debug, Clone, PartialEq)]
pub struct Neighbourhood {
    /// `N x L` latent neighbours.
    pub latent: Mat64,
    /// `N x M` decoded neighbours.
    pub decoded: Mat64,
    /// Predictor output on every decoded neighbour.
    pub predictions: Vec<f64>,
    /// Kernel weight of every neighbour, all strictly positive.
    pub weights: Vec<f64>,
    pub first_order_count: usize,
}

/// The latent-neighbourhood explainer: predictor, matching decoder and the
/// latent statistics of the predictor's training set.
#[derive(Debug, Clone)]
pub struct LioNets<'a> {
    pub predictor: &'a MlpModel,
    pub decoder: &'a MlpModel,
    pub stats: &'a FeatureStats,
    pub config: NeighbourhoodConfig,
}

impl<'a> LioNets<'a> {
    pub fn new(
        predictor: &'a MlpModel,
        decoder: &'a MlpModel,
        stats: &'a FeatureStats,
        config: NeighbourhoodConfig,
    ) -> Result<Self> {
        let latent = predictor.latent_dim()?;
        if decoder.input_dim() != latent {
            return Err(Error::Validation(format!(
                "decoder takes {} inputs but the predictor's latent space has {latent} dimensions",
                decoder.input_dim()
            )));
        }
        if decoder.output_dim() != predictor.input_dim() {
            return Err(Error::Validation(format!(
                "decoder produces {} features but the predictor expects {}",
                decoder.output_dim(),
                predictor.input_dim()
            )));
        }
        if stats.len() != latent {
            return Err(Error::Validation(format!(
                "feature stats cover {} dimensions, latent space has {latent}",
                stats.len()
            )));
        }
        config.validate()?;
        Ok(LioNets {
            predictor,
            decoder,
            stats,
            config,
        })
    }

    /// Builds the neighbourhood of `instance` with the configured seed.
    pub fn neighbourhood(&self, instance: &[f64]) -> Result<Neighbourhood> {
        self.neighbourhood_seeded(instance, self.config.seed)
    }

    fn neighbourhood_seeded(&self, instance: &[f64], seed: u64) -> Result<Neighbourhood> {
        let encoded = self.predictor.encode(instance)?;
        let latent_dim = encoded.len();
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let latent = generate_neighbourhood(&encoded, self.config.size, self.stats, &mut rng)?;
        let decoded = self.decoder.predict_rows(&latent)?;
        let predictions = self.predictor.score_rows(&decoded)?;
        let weights = latent
            .iter_rows()
            .map(|row| kernel_weight(self.config.similarity.distance(&encoded, row)?, latent_dim))
            .collect::<Result<Vec<_>>>()?;
        Ok(Neighbourhood {
            first_order_count: first_order_count(latent_dim, self.config.size),
            latent,
            decoded,
            predictions,
            weights,
        })
    }

    /// Explains `instance`, returning the neighbourhood alongside.
    pub fn explain_with_neighbourhood(&self, instance: &[f64], seed: u64) -> Result<(Explanation, Neighbourhood)> {
        let hood = self.neighbourhood_seeded(instance, seed)?;
        let gram = WeightedGram::new(&hood.decoded, &hood.predictions, &hood.weights)?;
        let total_weight: f64 = hood.weights.iter().sum();

        let mut best: Option<(f64, crate::numerics::RidgeFit, Vec<f64>)> = None;
        for &alpha in &self.config.alpha_grid {
            let fit = match gram.solve(alpha) {
                Ok(fit) => fit,
                Err(Error::RankDeficient) => continue,
                Err(e) => return Err(e),
            };
            let local: Vec<f64> = hood.decoded.iter_rows().map(|r| fit.predict(r)).collect();
            let weighted_mae = local
                .iter()
                .zip(&hood.predictions)
                .zip(&hood.weights)
                .map(|((g, f), w)| w * (g - f).abs())
                .sum::<f64>()
                / total_weight;
            if best.as_ref().is_none_or(|(score, _, _)| weighted_mae < *score) {
                best = Some((weighted_mae, fit, local));
            }
        }
        let (_, fit, local) = best.ok_or(Error::RankDeficient)?;
        let fid = fidelity(&hood.predictions, &local)?;
        let explanation = Explanation {
            model_prediction: self.predictor.score(instance)?,
            surrogate: Some(SurrogateSummary {
                intercept: fit.intercept,
                local_prediction: fit.predict(instance),
                fidelity_mae: fid.mae,
                fidelity_r2: fid.r2,
                alpha: fit.alpha,
            }),
            importances: fit.coefficients,
            seed,
        };
        Ok((explanation, hood))
    }
}

impl Explainer for LioNets<'_> {
    fn id(&self) -> &str {
        "lionets"
    }

    fn explain(&self, instance: &[f64], seed: u64) -> Result<Explanation> {
        self.explain_with_neighbourhood(instance, seed).map(|(e, _)| e)
    }
}

/// One-call form of [`LioNets::explain_with_neighbourhood`] using
/// `config.seed`.
pub fn explain(
    predictor: &MlpModel,
    decoder: &MlpModel,
    stats: &FeatureStats,
    instance: &[f64],
    config: &NeighbourhoodConfig,
) -> Result<(Explanation, Neighbourhood)> {
    LioNets::new(predictor, decoder, stats, config.clone())?.explain_with_neighbourhood(instance, config.seed)
}

/// Summary of one sensor's importances across the window.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SensorImportance {
    pub mean: f64,
    pub std: f64,
    pub min: f64,
    pub max: f64,
}

/// Regroups timestep-major importances into per-sensor statistics.
pub fn aggregate_sensor_importance(
    importances: &[f64],
    window: usize,
    sensors: usize,
) -> Result<Vec<SensorImportance>> {
    if window * sensors != importances.len() || window == 0 {
        return Err(Error::dim(window * sensors, importances.len()));
    }
    Ok((0..sensors)
        .map(|s| {
            let series: Vec<f64> = (0..window).map(|t| importances[t * sensors + s]).collect();
            let (mean, std) = mean_std(&series);
            SensorImportance {
                mean,
                std,
                min: series.iter().copied().fold(f64::INFINITY, f64::min),
                max: series.iter().copied().fold(f64::NEG_INFINITY, f64::max),
            }
        })
        .collect())
}
