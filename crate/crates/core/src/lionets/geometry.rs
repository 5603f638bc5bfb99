//! How neighbourhood distances look in the original space versus the latent space.

use std::fmt::Write as _;

use rand::seq::index::sample;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, Normal};
use serde::{Deserialize, Serialize};

use super::{generate_neighbourhood, NeighbourhoodConfig};
use crate::error::{Error, Result};
use crate::neural::MlpModel;
use crate::numerics::{euclidean_distance, mean_std, FeatureStats, Mat64};

/// Names of the four distance series, in the order they are stored.
pub const SERIES_NAMES: [&str; 4] = ["original", "original_encoded", "latent_decoded", "latent"];

/// Produces neighbours of an instance directly in the original space.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case", tag = "kind")]
pub enum OriginalGenerator {
    /// Adds `N(0, stds[j])` to every feature.
    Gaussian { stds: Vec<f64> },
    /// Zeroes a random non-empty subset of the non-zero features.
    Masking,
    /// Repeats the instance unchanged.
    Copies,
}

impl OriginalGenerator {
    pub fn generate<R: Rng + ?Sized>(&self, instance: &[f64], size: usize, rng: &mut R) -> Result<Mat64> {
        let m = instance.len();
        let mut values = Vec::with_capacity(size * m);
        match self {
            OriginalGenerator::Gaussian { stds } => {
                if stds.len() != m {
                    return Err(Error::dim(m, stds.len()));
                }
                let noises = stds
                    .iter()
                    .map(|&s| Normal::new(0.0, s).map_err(|e| Error::Domain(format!("invalid std {s}: {e}"))))
                    .collect::<Result<Vec<_>>>()?;
                for _ in 0..size {
                    values.extend(instance.iter().zip(&noises).map(|(x, n)| x + n.sample(rng)));
                }
            }
            OriginalGenerator::Masking => {
                let present: Vec<usize> = (0..m).filter(|&j| instance[j] != 0.0).collect();
                if present.is_empty() {
                    return Err(Error::Degenerate("masking needs a non-zero feature".into()));
                }
                for _ in 0..size {
                    let start = values.len();
                    values.extend_from_slice(instance);
                    let k = rng.random_range(1..=present.len());
                    for i in sample(rng, present.len(), k) {
                        values[start + present[i]] = 0.0;
                    }
                }
            }
            OriginalGenerator::Copies => {
                for _ in 0..size {
                    values.extend_from_slice(instance);
                }
            }
        }
        Mat64::new(size, m, values)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct HistogramBin {
    pub low: f64,
    pub high: f64,
    pub count: usize,
}

/// `bins` equal-width bins over `[0, max(values)]`; the last bin is closed.
/// An all-zero sample puts everything in a first bin of width `1 / bins`.
pub fn histogram(values: &[f64], bins: usize) -> Result<Vec<HistogramBin>> {
    if bins == 0 {
        return Err(Error::Domain("histogram needs at least one bin".into()));
    }
    if values.iter().any(|v| !(v.is_finite() && *v >= 0.0)) {
        return Err(Error::Domain("distances must be finite and non-negative".into()));
    }
    let max = values.iter().copied().fold(0.0, f64::max);
    let upper = if max > 0.0 { max } else { 1.0 };
    let width = upper / bins as f64;
    let mut out: Vec<HistogramBin> = (0..bins)
        .map(|b| HistogramBin {
            low: width * b as f64,
            high: if b + 1 == bins { upper } else { width * (b + 1) as f64 },
            count: 0,
        })
        .collect();
    for v in values {
        let b = ((v / width) as usize).min(bins - 1);
        out[b].count += 1;
    }
    Ok(out)
}

/// `(x - mean) / std`; a constant sample maps to zeros.
pub fn standardize(values: &[f64]) -> Vec<f64> {
    let (mean, std) = mean_std(values);
    if std == 0.0 {
        return vec![0.0; values.len()];
    }
    values.iter().map(|v| (v - mean) / std).collect()
}

/// Two-sample Kolmogorov-Smirnov statistic `sup |F_a - F_b|`.
pub fn ks_statistic(a: &[f64], b: &[f64]) -> Result<f64> {
    if a.is_empty() || b.is_empty() {
        return Err(Error::Domain("both samples must be non-empty".into()));
    }
    let mut a = a.to_vec();
    let mut b = b.to_vec();
    a.sort_by(f64::total_cmp);
    b.sort_by(f64::total_cmp);
    let (n, m) = (a.len() as f64, b.len() as f64);
    let (mut i, mut j, mut d) = (0, 0, 0.0f64);
    while i < a.len() && j < b.len() {
        let x = a[i].min(b[j]);
        while i < a.len() && a[i] <= x {
            i += 1;
        }
        while j < b.len() && b[j] <= x {
            j += 1;
        }
        d = d.max((i as f64 / n - j as f64 / m).abs());
    }
    Ok(d)
}

/// Asymptotic critical value of the two-sample KS statistic at level `alpha`.
pub fn ks_critical_value(alpha: f64, n: usize, m: usize) -> Result<f64> {
    if !(alpha > 0.0 && alpha < 1.0) || n == 0 || m == 0 {
        return Err(Error::Domain("need 0 < alpha < 1 and non-empty samples".into()));
    }
    let (n, m) = (n as f64, m as f64);
    Ok((-(alpha / 2.0).ln() / 2.0).sqrt() * ((n + m) / (n * m)).sqrt())
}

/// The four distance samples and their histograms.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DistanceStudy {
    /// Indexed like [`SERIES_NAMES`].
    pub series: [Vec<f64>; 4],
    pub histograms: [Vec<HistogramBin>; 4],
}

impl DistanceStudy {
    pub fn series(&self, name: &str) -> Option<&[f64]> {
        SERIES_NAMES
            .iter()
            .position(|n| *n == name)
            .map(|i| self.series[i].as_slice())
    }

    /// KS statistic between the standardized original-space and encoded
    /// original-space distances.
    pub fn shape_change(&self) -> Result<f64> {
        ks_statistic(&standardize(&self.series[0]), &standardize(&self.series[1]))
    }

    /// CSV with columns `series,bin_low,bin_high,count`.
    pub fn histogram_csv(&self) -> String {
        let mut out = String::from("series,bin_low,bin_high,count\n");
        for (name, bins) in SERIES_NAMES.iter().zip(&self.histograms) {
            for b in bins {
                writeln!(out, "{name},{},{},{}", b.low, b.high, b.count).unwrap();
            }
        }
        out
    }
}

/// Euclidean distances of four neighbourhoods of `instance`:
/// original-space neighbours in the original space, the same neighbours once
/// encoded, latent neighbours once decoded, and latent neighbours in the
/// latent space. Both neighbourhoods have `cfg.size` rows and use `cfg.seed`.
pub fn distance_distributions(
    predictor: &MlpModel,
    decoder: &MlpModel,
    stats: &FeatureStats,
    instance: &[f64],
    generator: &OriginalGenerator,
    cfg: &NeighbourhoodConfig,
    bins: usize,
) -> Result<DistanceStudy> {
    let encoded = predictor.encode(instance)?;
    let mut rng = ChaCha8Rng::seed_from_u64(cfg.seed);
    let original = generator.generate(instance, cfg.size, &mut rng)?;
    let original_encoded = predictor.encode_rows(&original)?;
    let mut rng = ChaCha8Rng::seed_from_u64(cfg.seed);
    let latent = generate_neighbourhood(&encoded, cfg.size, stats, &mut rng)?;
    let decoded = decoder.predict_rows(&latent)?;
    if decoded.cols() != instance.len() {
        return Err(Error::dim(instance.len(), decoded.cols()));
    }

    let distances = |rows: &Mat64, centre: &[f64]| -> Result<Vec<f64>> {
        rows.iter_rows().map(|r| euclidean_distance(r, centre)).collect()
    };
    let series = [
        distances(&original, instance)?,
        distances(&original_encoded, &encoded)?,
        distances(&decoded, instance)?,
        distances(&latent, &encoded)?,
    ];
    let histograms = [
        histogram(&series[0], bins)?,
        histogram(&series[1], bins)?,
        histogram(&series[2], bins)?,
        histogram(&series[3], bins)?,
    ];
    Ok(DistanceStudy { series, histograms })
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn ks_of_identical_and_disjoint_samples() {
        let a = [1.0, 2.0, 3.0, 4.0];
        assert_eq!(ks_statistic(&a, &a).unwrap(), 0.0);
        assert_eq!(ks_statistic(&a, &[10.0, 11.0]).unwrap(), 1.0);
        // F_a(2) = 0.5, F_b(2) = 1
        assert_eq!(ks_statistic(&a, &[1.5, 2.0]).unwrap(), 0.5);
    }

    #[test]
    fn critical_value_formula() {
        // c(0.05) = sqrt(-ln(0.025) / 2) = 1.3581
        let c = ks_critical_value(0.05, 2000, 2000).unwrap();
        assert!((c - 1.358_098_8 * (2.0f64 / 2000.0).sqrt()).abs() < 1e-6, "{c}");
    }

    #[test]
    fn histogram_counts_everything() {
        let h = histogram(&[0.0, 0.2, 0.4, 1.2, 2.0], 4).unwrap();
        assert_eq!(h.iter().map(|b| b.count).collect::<Vec<_>>(), [3, 0, 1, 1]);
        assert_eq!(h[3].high, 2.0);
        let zeros = histogram(&[0.0; 5], 20).unwrap();
        assert_eq!(zeros[0].count, 5);
        assert!(histogram(&[-1.0], 3).is_err());
    }

    #[test]
    fn masking_keeps_absent_features_zero() {
        let mut rng = ChaCha8Rng::seed_from_u64(4);
        let x = [0.0, 0.3, 0.0, 0.7, 0.2];
        let n = OriginalGenerator::Masking.generate(&x, 200, &mut rng).unwrap();
        for r in n.iter_rows() {
            assert_eq!((r[0], r[2]), (0.0, 0.0));
            assert!(r != x);
        }
        assert!(OriginalGenerator::Masking.generate(&[0.0; 3], 2, &mut rng).is_err());
    }

    #[test]
    fn standardized_sample_has_unit_spread() {
        let z = standardize(&[1.0, 2.0, 3.0, 10.0]);
        let (mean, std) = mean_std(&z);
        assert!(mean.abs() < 1e-15 && (std - 1.0).abs() < 1e-15);
        assert_eq!(standardize(&[4.0, 4.0]), [0.0, 0.0]);
    }
}
