//! The explanation value shared by every explainer, and its JSON file form.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Surrogate-model details; absent for explainers that fit no surrogate
/// (e.g. Gradient×Input).
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SurrogateSummary {
    pub intercept: f64,
    /// Surrogate output on the explained instance.
    pub local_prediction: f64,
    /// Mean absolute difference between surrogate and model over the
    /// explainer's own neighbourhood.
    pub fidelity_mae: f64,
    /// Coefficient of determination over the same neighbourhood, when defined.
    pub fidelity_r2: Option<f64>,
    pub alpha: f64,
}

/// Per-input-feature importances for one prediction.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Explanation {
    pub importances: Vec<f64>,
    pub model_prediction: f64,
    pub surrogate: Option<SurrogateSummary>,
    pub seed: u64,
}

impl Explanation {
    /// Number of importances whose magnitude exceeds `1e-12`.
    pub fn nonzero_count(&self) -> usize {
        self.importances.iter().filter(|v| v.abs() > NONZERO_EPS).count()
    }
}

pub(crate) const NONZERO_EPS: f64 = 1e-12;

/// Anything that turns an input vector into an [`Explanation`].
pub trait Explainer: Sync {
    /// Short identifier used in reports (`lionets`, `lime`, `gxi`).
    fn id(&self) -> &str;

    fn explain(&self, instance: &[f64], seed: u64) -> Result<Explanation>;
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FeatureImportance {
    pub feature: String,
    pub value: f64,
    pub importance: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Counterfactual {
    pub feature: String,
    pub importance: f64,
}

/// On-disk and over-the-wire form of an explanation.
///
/// Surrogate fields are omitted for explainers without a surrogate.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ExplanationFile {
    pub instance_id: String,
    pub explainer: String,
    pub model_prediction: f64,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub local_prediction: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub fidelity_mae: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub alpha: Option<f64>,
    pub seed: u64,
    pub importances: Vec<FeatureImportance>,
    #[serde(default)]
    pub counterfactuals: Vec<Counterfactual>,
}

impl ExplanationFile {
    pub fn new(
        instance_id: &str,
        explainer: &str,
        expl: &Explanation,
        instance: &[f64],
        feature_names: &[String],
        counterfactuals: Vec<Counterfactual>,
    ) -> Result<Self> {
        if instance.len() != expl.importances.len() {
            return Err(Error::dim(expl.importances.len(), instance.len()));
        }
        if feature_names.len() != instance.len() {
            return Err(Error::dim(instance.len(), feature_names.len()));
        }
        let importances = feature_names
            .iter()
            .zip(instance)
            .zip(&expl.importances)
            .map(|((name, &value), &importance)| FeatureImportance {
                feature: name.clone(),
                value,
                importance,
            })
            .collect();
        let s = expl.surrogate.as_ref();
        Ok(ExplanationFile {
            instance_id: instance_id.to_string(),
            explainer: explainer.to_string(),
            model_prediction: expl.model_prediction,
            local_prediction: s.map(|s| s.local_prediction),
            fidelity_mae: s.map(|s| s.fidelity_mae),
            alpha: s.map(|s| s.alpha),
            seed: expl.seed,
            importances,
            counterfactuals,
        })
    }

    pub fn to_json_pretty(&self) -> String {
        serde_json::to_string_pretty(self).expect("explanation serialization cannot fail")
    }

    pub fn from_json(text: &str) -> Result<Self> {
        serde_json::from_str(text).map_err(|e| Error::from_json(e, text))
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn file_omits_surrogate_fields_when_absent() {
        let e = Explanation {
            importances: vec![0.5, 0.0],
            model_prediction: 0.7,
            surrogate: None,
            seed: 3,
        };
        let names = vec!["a".to_string(), "b".to_string()];
        let f = ExplanationFile::new("val-0", "gxi", &e, &[1.0, 0.0], &names, vec![]).unwrap();
        let json = f.to_json_pretty();
        assert!(!json.contains("fidelity_mae"));
        assert!(!json.contains("local_prediction"));
        assert_eq!(ExplanationFile::from_json(&json).unwrap(), f);
        assert_eq!(e.nonzero_count(), 1);
    }
}
