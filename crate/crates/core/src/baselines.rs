//! Comparison explainers: LIME-style perturbation of sparse inputs and Gradient×Input.

use rand::seq::index::sample;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::explanation::{Explainer, Explanation, SurrogateSummary};
use crate::metrics::fidelity;
use crate::neural::MlpModel;
use crate::numerics::{cosine_similarity, weighted_ridge_fit, Mat64};

/// Scale applied to the cosine similarity of each perturbed sample.
pub const LIME_WEIGHT_SCALE: f64 = 1000.0;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct LimeConfig {
    pub num_samples: usize,
    pub alpha: f64,
    pub seed: u64,
}

impl Default for LimeConfig {
    fn default() -> Self {
        LimeConfig {
            num_samples: 5000,
            alpha: 1.0,
            seed: 0,
        }
    }
}

/// `count` keep-masks over `n` features. The first keeps everything; each
/// other one zeroes `k ~ U{1..n}` features chosen uniformly.
pub fn lime_masks<R: Rng + ?Sized>(n: usize, count: usize, rng: &mut R) -> Vec<Vec<bool>> {
    let mut masks = Vec::with_capacity(count);
    if count == 0 || n == 0 {
        return masks;
    }
    masks.push(vec![true; n]);
    while masks.len() < count {
        let mut mask = vec![true; n];
        let k = rng.random_range(1..=n);
        for i in sample(rng, n, k) {
            mask[i] = false;
        }
        masks.push(mask);
    }
    masks
}

/// Weight of a perturbed sample: `1000 * cos(sample, instance)`, or 0 for
/// the all-zero sample.
pub fn lime_weight(sample: &[f64], instance: &[f64]) -> Result<f64> {
    if sample.iter().all(|v| *v == 0.0) {
        return Ok(0.0);
    }
    Ok(cosine_similarity(sample, instance)? * LIME_WEIGHT_SCALE)
}

/// LIME for sparse inputs: perturbs by zeroing subsets of the non-zero
/// features and fits a weighted ridge on those features only. Features
/// absent from the instance always get importance 0.
pub fn lime_text_explain(predictor: &MlpModel, instance: &[f64], cfg: &LimeConfig) -> Result<Explanation> {
    if instance.len() != predictor.input_dim() {
        return Err(Error::dim(predictor.input_dim(), instance.len()));
    }
    if cfg.num_samples == 0 {
        return Err(Error::Domain("num_samples must be >= 1".into()));
    }
    let present: Vec<usize> = (0..instance.len()).filter(|&j| instance[j] != 0.0).collect();
    if present.is_empty() {
        return Err(Error::Degenerate("instance has no non-zero feature".into()));
    }
    let mut rng = ChaCha8Rng::seed_from_u64(cfg.seed);
    let masks = lime_masks(present.len(), cfg.num_samples, &mut rng);

    let mut full = Mat64::zeros(masks.len(), instance.len());
    let mut reduced = Mat64::zeros(masks.len(), present.len());
    let mut weights = Vec::with_capacity(masks.len());
    for (r, mask) in masks.iter().enumerate() {
        for (i, (&j, &keep)) in present.iter().zip(mask).enumerate() {
            if keep {
                full.set(r, j, instance[j]);
                reduced.set(r, i, instance[j]);
            }
        }
        weights.push(lime_weight(full.row(r), instance)?);
    }
    let predictions = predictor.score_rows(&full)?;
    let fit = weighted_ridge_fit(&reduced, &predictions, &weights, cfg.alpha)?;
    let local: Vec<f64> = reduced.iter_rows().map(|r| fit.predict(r)).collect();
    let fid = fidelity(&predictions, &local)?;

    let mut importances = vec![0.0; instance.len()];
    for (&j, &c) in present.iter().zip(&fit.coefficients) {
        importances[j] = c;
    }
    let own: Vec<f64> = present.iter().map(|&j| instance[j]).collect();
    Ok(Explanation {
        importances,
        model_prediction: predictor.score(instance)?,
        surrogate: Some(SurrogateSummary {
            intercept: fit.intercept,
            local_prediction: fit.predict(&own),
            fidelity_mae: fid.mae,
            fidelity_r2: fid.r2,
            alpha: fit.alpha,
        }),
        seed: cfg.seed,
    })
}

/// Input gradient of output `output_index` multiplied elementwise by the input.
pub fn gradient_x_input_explain(predictor: &MlpModel, instance: &[f64], output_index: usize) -> Result<Explanation> {
    let grad = predictor.gradient_wrt_input(instance, output_index)?;
    let out = predictor.predict(instance)?;
    Ok(Explanation {
        importances: grad.iter().zip(instance).map(|(g, x)| g * x).collect(),
        model_prediction: out[output_index],
        surrogate: None,
        seed: 0,
    })
}

/// [`lime_text_explain`] as an [`Explainer`]; the call seed replaces `config.seed`.
#[derive(Debug, Clone)]
pub struct Lime<'a> {
    pub predictor: &'a MlpModel,
    pub config: LimeConfig,
}

impl Explainer for Lime<'_> {
    fn id(&self) -> &str {
        "lime"
    }

    fn explain(&self, instance: &[f64], seed: u64) -> Result<Explanation> {
        lime_text_explain(self.predictor, instance, &LimeConfig { seed, ..self.config })
    }
}

/// [`gradient_x_input_explain`] on the model's last output.
#[derive(Debug, Clone)]
pub struct GradientXInput<'a> {
    pub predictor: &'a MlpModel,
}

impl Explainer for GradientXInput<'_> {
    fn id(&self) -> &str {
        "gxi"
    }

    fn explain(&self, instance: &[f64], seed: u64) -> Result<Explanation> {
        let last = self.predictor.output_dim() - 1;
        gradient_x_input_explain(self.predictor, instance, last).map(|e| Explanation { seed, ..e })
    }
}
