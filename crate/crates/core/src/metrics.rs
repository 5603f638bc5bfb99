//! Quantitative evaluation of explainers.

use std::fmt::Write as _;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::explanation::{Explainer, Explanation, NONZERO_EPS};
use crate::neural::MlpModel;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Fidelity {
    /// `1 - mae`.
    pub fidelity: f64,
    /// `mean |g - f|`.
    pub mae: f64,
    /// `1 - SS_res / SS_tot`; `None` for fewer than two points or constant `f`.
    pub r2: Option<f64>,
}

/// Agreement of surrogate outputs `g` with model outputs `f`.
pub fn fidelity(f: &[f64], g: &[f64]) -> Result<Fidelity> {
    if f.len() != g.len() {
        return Err(Error::dim(f.len(), g.len()));
    }
    if f.is_empty() {
        return Err(Error::Domain("fidelity needs at least one prediction".into()));
    }
    let n = f.len() as f64;
    let mae = f.iter().zip(g).map(|(a, b)| (a - b).abs()).sum::<f64>() / n;
    let mean = f.iter().sum::<f64>() / n;
    let ss_tot: f64 = f.iter().map(|a| (a - mean).powi(2)).sum();
    let ss_res: f64 = f.iter().zip(g).map(|(a, b)| (a - b).powi(2)).sum();
    let r2 = (f.len() >= 2 && ss_tot > 0.0).then(|| 1.0 - ss_res / ss_tot);
    Ok(Fidelity {
        fidelity: 1.0 - mae,
        mae,
        r2,
    })
}

/// Mean number of importances with magnitude above `1e-12`.
pub fn avg_nonzero(explanations: &[Explanation]) -> Result<f64> {
    if explanations.is_empty() {
        return Err(Error::Domain("no explanations".into()));
    }
    Ok(explanations.iter().map(|e| e.nonzero_count() as f64).sum::<f64>() / explanations.len() as f64)
}

/// How an instance is nudged when probing an explanation.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case", tag = "kind")]
pub enum PerturbMode {
    /// Sparse vectors: a feature is removed by zeroing it.
    Text,
    /// Dense vectors: a feature moves by one training-set std.
    Dense { stds: Vec<f64> },
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Robustness {
    /// Mean over evaluated instances; lower is more stable.
    pub score: f64,
    pub evaluated: usize,
    /// Instances without a usable feature or whose re-explanation failed.
    pub skipped: usize,
}

/// Re-explains each instance after tweaking its least important feature and
/// averages the elementwise absolute change of the importances.
///
/// `originals[i]` must be the explanation of `instances[i]`; the tweaked
/// instance is explained with the same seed. In text mode only features
/// present in the instance are candidates and the change is averaged over
/// those features.
pub fn relaxed_robustness(
    explainer: &dyn Explainer,
    instances: &[Vec<f64>],
    originals: &[Explanation],
    mode: &PerturbMode,
) -> Result<Robustness> {
    if instances.len() != originals.len() {
        return Err(Error::dim(instances.len(), originals.len()));
    }
    let mut total = 0.0;
    let mut evaluated = 0;
    let mut skipped = 0;
    for (x, orig) in instances.iter().zip(originals) {
        if x.len() != orig.importances.len() {
            return Err(Error::dim(x.len(), orig.importances.len()));
        }
        let candidate = orig
            .importances
            .iter()
            .enumerate()
            .filter(|&(j, v)| v.abs() > NONZERO_EPS && (!matches!(mode, PerturbMode::Text) || x[j] != 0.0))
            .min_by(|a, b| a.1.abs().total_cmp(&b.1.abs()).then(a.0.cmp(&b.0)))
            .map(|(j, _)| j);
        let Some(j) = candidate else {
            skipped += 1;
            continue;
        };
        let mut tweaked = x.clone();
        match mode {
            PerturbMode::Text => tweaked[j] = 0.0,
            PerturbMode::Dense { stds } => {
                if stds.len() != x.len() {
                    return Err(Error::dim(x.len(), stds.len()));
                }
                tweaked[j] -= stds[j];
            }
        }
        let Ok(after) = explainer.explain(&tweaked, orig.seed) else {
            skipped += 1;
            continue;
        };
        let common: Vec<usize> = match mode {
            PerturbMode::Text => (0..x.len()).filter(|&k| x[k] != 0.0 || tweaked[k] != 0.0).collect(),
            PerturbMode::Dense { .. } => (0..x.len()).collect(),
        };
        let diff: f64 = common
            .iter()
            .map(|&k| (orig.importances[k] - after.importances[k]).abs())
            .sum();
        total += diff / common.len() as f64;
        evaluated += 1;
    }
    Ok(Robustness {
        score: if evaluated == 0 { 0.0 } else { total / evaluated as f64 },
        evaluated,
        skipped,
    })
}

/// Feature whose removal is scored by [`faithfulness`]: the present
/// (`x[j] != 0`) feature with the largest positive importance.
pub fn top_positive_present(expl: &Explanation, instance: &[f64]) -> Option<usize> {
    expl.importances
        .iter()
        .enumerate()
        .filter(|&(j, v)| *v > NONZERO_EPS && instance[j] != 0.0)
        .max_by(|a, b| a.1.total_cmp(b.1).then(b.0.cmp(&a.0)))
        .map(|(j, _)| j)
}

/// Mean drop of the model score after zeroing each instance's most
/// important positive feature. Instances without one contribute 0.
pub fn faithfulness(predictor: &MlpModel, instances: &[Vec<f64>], explanations: &[Explanation]) -> Result<f64> {
    if instances.len() != explanations.len() {
        return Err(Error::dim(instances.len(), explanations.len()));
    }
    if instances.is_empty() {
        return Err(Error::Domain("no instances".into()));
    }
    let mut total = 0.0;
    for (x, e) in instances.iter().zip(explanations) {
        if x.len() != e.importances.len() {
            return Err(Error::dim(x.len(), e.importances.len()));
        }
        if let Some(j) = top_positive_present(e, x) {
            let mut removed = x.clone();
            removed[j] = 0.0;
            total += predictor.score(x)? - predictor.score(&removed)?;
        }
    }
    Ok(total / instances.len() as f64)
}

/// Units whose importance sign is checked by [`altruist_untruthfulness`].
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case", tag = "kind")]
pub enum Grouping {
    /// Every present feature; the only perturbation is removal.
    PerToken,
    /// Every feature, moved by `±stds[j]`.
    PerFeature { stds: Vec<f64> },
    /// Every sensor of a timestep-major window; its importance is the mean
    /// over the window and all its readings move by `±stds[s]`.
    PerSensor {
        window: usize,
        sensors: usize,
        stds: Vec<f64>,
    },
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Altruist {
    /// Untruthful units per instance.
    pub mean_count: f64,
    /// Untruthful units over all evaluated units, in percent.
    pub mean_pct: f64,
    pub units: usize,
    /// Units left out for a zero importance or a zero std.
    pub excluded: usize,
}

/// `true` when the score moved in the direction the importance sign claims.
/// `up`/`down` are the scores after increasing/decreasing the unit.
fn truthful(z: f64, base: f64, up: Option<f64>, down: Option<f64>) -> bool {
    let up_ok = up.is_none_or(|p| if z > 0.0 { p >= base } else { p <= base });
    let down_ok = down.is_none_or(|p| if z > 0.0 { p <= base } else { p >= base });
    up_ok && down_ok
}

/// Counts importances whose sign disagrees with how the model reacts when
/// the corresponding unit is perturbed.
pub fn altruist_untruthfulness(
    predictor: &MlpModel,
    instances: &[Vec<f64>],
    explanations: &[Explanation],
    grouping: &Grouping,
) -> Result<Altruist> {
    if instances.len() != explanations.len() {
        return Err(Error::dim(instances.len(), explanations.len()));
    }
    if instances.is_empty() {
        return Err(Error::Domain("no instances".into()));
    }
    let mut untruthful = 0usize;
    let mut units = 0usize;
    let mut excluded = 0usize;
    for (x, e) in instances.iter().zip(explanations) {
        let m = x.len();
        if e.importances.len() != m {
            return Err(Error::dim(m, e.importances.len()));
        }
        let base = predictor.score(x)?;
        let shifted = |cells: &[usize], delta: f64| -> Result<f64> {
            let mut v = x.clone();
            for &c in cells {
                v[c] += delta;
            }
            predictor.score(&v)
        };
        match grouping {
            Grouping::PerToken => {
                for j in 0..m {
                    if x[j] == 0.0 {
                        continue;
                    }
                    let z = e.importances[j];
                    if z.abs() <= NONZERO_EPS {
                        excluded += 1;
                        continue;
                    }
                    units += 1;
                    let down = shifted(&[j], -x[j])?;
                    if !truthful(z, base, None, Some(down)) {
                        untruthful += 1;
                    }
                }
            }
            Grouping::PerFeature { stds } => {
                if stds.len() != m {
                    return Err(Error::dim(m, stds.len()));
                }
                for j in 0..m {
                    let z = e.importances[j];
                    if z.abs() <= NONZERO_EPS || stds[j] <= 0.0 {
                        excluded += 1;
                        continue;
                    }
                    units += 1;
                    let (up, down) = (shifted(&[j], stds[j])?, shifted(&[j], -stds[j])?);
                    if !truthful(z, base, Some(up), Some(down)) {
                        untruthful += 1;
                    }
                }
            }
            Grouping::PerSensor { window, sensors, stds } => {
                if window * sensors != m {
                    return Err(Error::dim(m, window * sensors));
                }
                if stds.len() != *sensors {
                    return Err(Error::dim(*sensors, stds.len()));
                }
                for s in 0..*sensors {
                    let cells: Vec<usize> = (0..*window).map(|t| t * sensors + s).collect();
                    let z = cells.iter().map(|&c| e.importances[c]).sum::<f64>() / *window as f64;
                    if z.abs() <= NONZERO_EPS || stds[s] <= 0.0 {
                        excluded += 1;
                        continue;
                    }
                    units += 1;
                    let (up, down) = (shifted(&cells, stds[s])?, shifted(&cells, -stds[s])?);
                    if !truthful(z, base, Some(up), Some(down)) {
                        untruthful += 1;
                    }
                }
            }
        }
    }
    Ok(Altruist {
        mean_count: untruthful as f64 / instances.len() as f64,
        mean_pct: if units == 0 {
            0.0
        } else {
            100.0 * untruthful as f64 / units as f64
        },
        units,
        excluded,
    })
}

/// One row of an evaluation table.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MetricReport {
    pub explainer: String,
    pub split: String,
    /// Instances explained successfully.
    pub instances: usize,
    pub failures: usize,
    /// Mean surrogate MAE over the explainer's own neighbourhoods.
    pub fidelity_mae: Option<f64>,
    pub fidelity_r2: Option<f64>,
    pub avg_nonzero: f64,
    pub relaxed_robustness: f64,
    pub faithfulness: f64,
    pub altruist_count: f64,
    pub altruist_pct: f64,
}

impl MetricReport {
    pub fn failure_rate(&self) -> f64 {
        let total = self.instances + self.failures;
        if total == 0 {
            0.0
        } else {
            self.failures as f64 / total as f64
        }
    }
}

/// Settings shared by every explainer in one evaluation.
#[derive(Debug, Clone, PartialEq)]
pub struct EvalSetup {
    pub split: String,
    pub perturb: PerturbMode,
    pub grouping: Grouping,
    /// Instance `i` is explained with seed `seed + i`.
    pub seed: u64,
}

/// Explains every instance once and derives all metrics from those
/// explanations. Instances whose explanation fails are counted and left out.
pub fn evaluate_explainer(
    explainer: &dyn Explainer,
    predictor: &MlpModel,
    instances: &[Vec<f64>],
    setup: &EvalSetup,
) -> Result<MetricReport> {
    let mut kept = Vec::new();
    let mut explanations = Vec::new();
    let mut failures = 0;
    for (i, x) in instances.iter().enumerate() {
        match explainer.explain(x, setup.seed.wrapping_add(i as u64)) {
            Ok(e) => {
                kept.push(x.clone());
                explanations.push(e);
            }
            Err(_) => failures += 1,
        }
    }
    if explanations.is_empty() {
        return Err(Error::Validation(format!(
            "{} failed on all {} instances",
            explainer.id(),
            instances.len()
        )));
    }
    let surrogates: Vec<_> = explanations.iter().filter_map(|e| e.surrogate.as_ref()).collect();
    let fidelity_mae = (!surrogates.is_empty())
        .then(|| surrogates.iter().map(|s| s.fidelity_mae).sum::<f64>() / surrogates.len() as f64);
    let r2s: Vec<f64> = surrogates.iter().filter_map(|s| s.fidelity_r2).collect();
    let fidelity_r2 = (!r2s.is_empty()).then(|| r2s.iter().sum::<f64>() / r2s.len() as f64);
    let robustness = relaxed_robustness(explainer, &kept, &explanations, &setup.perturb)?;
    let altruist = altruist_untruthfulness(predictor, &kept, &explanations, &setup.grouping)?;
    Ok(MetricReport {
        explainer: explainer.id().to_string(),
        split: setup.split.clone(),
        instances: kept.len(),
        failures,
        fidelity_mae,
        fidelity_r2,
        avg_nonzero: avg_nonzero(&explanations)?,
        relaxed_robustness: robustness.score,
        faithfulness: faithfulness(predictor, &kept, &explanations)?,
        altruist_count: altruist.mean_count,
        altruist_pct: altruist.mean_pct,
    })
}

const CSV_HEADER: &str = "explainer,split,instances,failures,fidelity_mae,fidelity_r2,avg_nonzero,relaxed_robustness,faithfulness,altruist_count,altruist_pct";

fn opt(v: Option<f64>) -> String {
    v.map(|v| v.to_string()).unwrap_or_default()
}

/// One CSV row per report, full float precision.
pub fn reports_to_csv(reports: &[MetricReport]) -> String {
    let mut out = format!("{CSV_HEADER}\n");
    for r in reports {
        writeln!(
            out,
            "{},{},{},{},{},{},{},{},{},{},{}",
            r.explainer,
            r.split,
            r.instances,
            r.failures,
            opt(r.fidelity_mae),
            opt(r.fidelity_r2),
            r.avg_nonzero,
            r.relaxed_robustness,
            r.faithfulness,
            r.altruist_count,
            r.altruist_pct
        )
        .unwrap();
    }
    out
}

/// Markdown table with Altruist, Robustness, NonZero and Fidelity columns.
pub fn reports_to_markdown(reports: &[MetricReport]) -> String {
    let mut out = String::from(
        "| Explainer | Split | Altruist (count) | Altruist (%) | Robustness | Faithfulness | NonZero | Fidelity (mae) |\n\
         |---|---|---|---|---|---|---|---|\n",
    );
    for r in reports {
        let fid = r.fidelity_mae.map(|v| format!("{v:.4}")).unwrap_or_else(|| "-".into());
        writeln!(
            out,
            "| {} | {} | {:.2} | {:.2} | {:.4} | {:.4} | {:.2} | {} |",
            r.explainer,
            r.split,
            r.altruist_count,
            r.altruist_pct,
            r.relaxed_robustness,
            r.faithfulness,
            r.avg_nonzero,
            fid
        )
        .unwrap();
    }
    out
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::neural::{Activation, DenseLayer, Task};
    use crate::numerics::Mat64;

    #[test]
    fn fidelity_by_hand() {
        let f = fidelity(&[0.2, 0.8], &[0.3, 0.6]).unwrap();
        assert!((f.fidelity - 0.85).abs() < 1e-15);
        let same = fidelity(&[0.1, 0.5, 0.9], &[0.1, 0.5, 0.9]).unwrap();
        assert_eq!((same.fidelity, same.r2), (1.0, Some(1.0)));
        let flat = fidelity(&[1.0, 2.0, 3.0], &[2.0, 2.0, 2.0]).unwrap();
        assert_eq!(flat.r2, Some(0.0));
        assert_eq!(fidelity(&[0.5, 0.5], &[0.5, 0.4]).unwrap().r2, None);
        assert!(fidelity(&[1.0], &[1.0, 2.0]).is_err());
    }

    fn expl(importances: Vec<f64>) -> Explanation {
        Explanation {
            importances,
            model_prediction: 0.0,
            surrogate: None,
            seed: 0,
        }
    }

    #[test]
    fn nonzero_average() {
        let a = expl(vec![1.0, 1.0, 1.0, 0.0, 0.0]);
        let b = expl(vec![1.0; 5]);
        assert_eq!(avg_nonzero(&[a, b]).unwrap(), 4.0);
        assert_eq!(avg_nonzero(&[expl(vec![1e-13, 0.0])]).unwrap(), 0.0);
        assert!(avg_nonzero(&[]).is_err());
    }

    struct Fixed(Vec<f64>);

    impl Explainer for Fixed {
        fn id(&self) -> &str {
            "fixed"
        }

        fn explain(&self, _: &[f64], seed: u64) -> Result<Explanation> {
            Ok(Explanation {
                seed,
                ..expl(self.0.clone())
            })
        }
    }

    #[test]
    fn robustness_by_hand() {
        // e_orig = [1, 2], e_tweaked = [1, 1]
        let tweaked = Fixed(vec![1.0, 1.0]);
        let r = relaxed_robustness(&tweaked, &[vec![0.5, 0.5]], &[expl(vec![1.0, 2.0])], &PerturbMode::Text).unwrap();
        assert_eq!(r.score, 0.5);
        let constant = Fixed(vec![0.3, -0.2, 0.1]);
        let x = vec![vec![0.1, 0.2, 0.3]; 3];
        let e = vec![constant.explain(&x[0], 0).unwrap(); 3];
        let mode = PerturbMode::Dense { stds: vec![0.1; 3] };
        assert_eq!(relaxed_robustness(&constant, &x, &e, &mode).unwrap().score, 0.0);
    }

    fn linear(w: &[f64]) -> MlpModel {
        MlpModel::from_layers(
            w.len(),
            Task::Regression,
            vec![DenseLayer::new(
                Mat64::new(1, w.len(), w.to_vec()).unwrap(),
                vec![0.0],
                Activation::Linear,
            )
            .unwrap()],
        )
        .unwrap()
    }

    #[test]
    fn faithfulness_cases() {
        let p = linear(&[0.5, -0.25]);
        let x = vec![vec![1.0, 1.0]];
        // removing feature 0 drops the score from 0.25 to -0.25
        assert_eq!(faithfulness(&p, &x, &[expl(vec![0.5, -0.25])]).unwrap(), 0.5);
        // a wrong explanation pointing at feature 1 raises the score
        assert_eq!(faithfulness(&p, &x, &[expl(vec![-0.1, 0.9])]).unwrap(), -0.25);
        assert_eq!(faithfulness(&p, &x, &[expl(vec![-0.1, -0.9])]).unwrap(), 0.0);
        let flat = linear(&[0.0, 0.0]);
        assert_eq!(faithfulness(&flat, &x, &[expl(vec![0.5, 0.5])]).unwrap(), 0.0);
    }

    #[test]
    fn altruist_oracles() {
        let w = [0.4, -0.7, 0.2, 1.1, -0.3];
        let p = linear(&w);
        let x = vec![vec![0.5; 5], vec![0.2, 0.9, 0.4, 0.1, 0.6]];
        let truth = vec![expl(w.to_vec()); 2];
        let flipped = vec![expl(w.iter().map(|v| -v).collect()); 2];
        let g = Grouping::PerFeature { stds: vec![0.1; 5] };
        assert_eq!(altruist_untruthfulness(&p, &x, &truth, &g).unwrap().mean_pct, 0.0);
        let a = altruist_untruthfulness(&p, &x, &flipped, &g).unwrap();
        assert_eq!((a.mean_pct, a.mean_count), (100.0, 5.0));
        // two instances with two of five units untruthful each
        let mixed = vec![expl(vec![0.4, 0.7, 0.2, -1.1, -0.3]); 2];
        let a = altruist_untruthfulness(&p, &x, &mixed, &g).unwrap();
        assert_eq!((a.mean_count, a.mean_pct), (2.0, 40.0));
        let per_token = altruist_untruthfulness(&p, &x, &flipped, &Grouping::PerToken).unwrap();
        assert_eq!(per_token.mean_pct, 100.0);
    }

    #[test]
    fn sensor_grouping_uses_mean_importance() {
        // window 2, sensors 2; the model only reads sensor 0
        let p = linear(&[1.0, 0.0, 1.0, 0.0]);
        let x = vec![vec![0.5; 4]];
        let g = Grouping::PerSensor {
            window: 2,
            sensors: 2,
            stds: vec![0.1, 0.0],
        };
        let a = altruist_untruthfulness(&p, &x, &[expl(vec![2.0, 1.0, -1.0, 1.0])], &g).unwrap();
        assert_eq!((a.units, a.excluded, a.mean_pct), (1, 1, 0.0));
    }

    #[test]
    fn csv_leaves_missing_fidelity_empty() {
        let r = MetricReport {
            explainer: "gxi".into(),
            split: "val".into(),
            instances: 3,
            failures: 0,
            fidelity_mae: None,
            fidelity_r2: None,
            avg_nonzero: 2.0,
            relaxed_robustness: 0.1,
            faithfulness: 0.2,
            altruist_count: 1.0,
            altruist_pct: 50.0,
        };
        let csv = reports_to_csv(std::slice::from_ref(&r));
        assert_eq!(csv.lines().nth(1).unwrap(), "gxi,val,3,0,,,2,0.1,0.2,1,50");
        assert!(reports_to_markdown(&[r]).contains("| - |"));
    }
}
