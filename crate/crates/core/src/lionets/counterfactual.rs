use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::explanation::{Explanation, NONZERO_EPS};

/// Importances split by whether the feature occurs in the instance.
///
/// `absent` holds the counterfactual candidates: features the instance does
/// not contain but the surrogate still weighted, ranked by magnitude.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CounterfactualReport {
    pub present: Vec<(usize, f64)>,
    pub absent: Vec<(usize, f64)>,
}

impl CounterfactualReport {
    /// Absent feature with the largest positive importance.
    pub fn top_positive(&self) -> Option<(usize, f64)> {
        self.absent
            .iter()
            .copied()
            .filter(|(_, v)| *v > 0.0)
            .max_by(|a, b| a.1.total_cmp(&b.1))
    }

    /// Absent feature with the most negative importance.
    pub fn top_negative(&self) -> Option<(usize, f64)> {
        self.absent
            .iter()
            .copied()
            .filter(|(_, v)| *v < 0.0)
            .min_by(|a, b| a.1.total_cmp(&b.1))
    }
}

fn by_magnitude(items: &mut [(usize, f64)]) {
    items.sort_by(|a, b| b.1.abs().total_cmp(&a.1.abs()).then(a.0.cmp(&b.0)));
}

/// Splits non-zero importances into features present in (`instance[f] != 0`)
/// and absent from the instance; the absent side keeps the `top_k` largest
/// magnitudes of either sign.
pub fn counterfactual_features(expl: &Explanation, instance: &[f64], top_k: usize) -> Result<CounterfactualReport> {
    if top_k == 0 {
        return Err(Error::Domain("top_k must be >= 1".into()));
    }
    if instance.len() != expl.importances.len() {
        return Err(Error::dim(expl.importances.len(), instance.len()));
    }
    let (mut present, mut absent): (Vec<_>, Vec<_>) = expl
        .importances
        .iter()
        .copied()
        .enumerate()
        .filter(|(_, v)| v.abs() > NONZERO_EPS)
        .partition(|&(i, _)| instance[i] != 0.0);
    by_magnitude(&mut present);
    by_magnitude(&mut absent);
    absent.truncate(top_k);
    Ok(CounterfactualReport { present, absent })
}
