//! Latent-space neighbourhood generation.

use rand::Rng;
use rand_distr::{Distribution, Normal};
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::numerics::{DimStats, FeatureStats, Mat64};

/// Spread of the Gaussian noise relative to a latent feature's std.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum NoiseLevel {
    /// `std / 2`
    Weak,
    /// `std`
    Normal,
    /// `2 * std`
    Strong,
}

impl NoiseLevel {
    /// Order in which first-order neighbours are produced for each dimension.
    pub const FIRST_ORDER: [NoiseLevel; 3] = [NoiseLevel::Normal, NoiseLevel::Weak, NoiseLevel::Strong];

    pub fn scale(self, std: f64) -> f64 {
        match self {
            NoiseLevel::Weak => std / 2.0,
            NoiseLevel::Normal => std,
            NoiseLevel::Strong => std * 2.0,
        }
    }
}

/// New value for one latent feature: `value + noise`, with
/// `noise ~ N(mean, level.scale(std))`, clamped to `[min, max]`.
///
/// The noise is centred on the feature mean, not on zero.
pub fn determine_value<R: Rng + ?Sized>(value: f64, stats: &DimStats, level: NoiseLevel, rng: &mut R) -> Result<f64> {
    let sigma = level.scale(stats.std);
    let noise = Normal::new(stats.mean, sigma)
        .map_err(|e| Error::Domain(format!("invalid noise distribution: {e}")))?
        .sample(rng);
    Ok((value + noise).max(stats.min).min(stats.max))
}

/// Number of first-order neighbours in a neighbourhood of `size` around an
/// `latent_dim`-dimensional point.
pub fn first_order_count(latent_dim: usize, size: usize) -> usize {
    (3 * latent_dim).min(size)
}

/// Generates exactly `size` latent neighbours of `encoded`.
///
/// The first `min(3L, size)` rows change a single coordinate each (per
/// dimension, at the normal, weak and strong levels in that order). The
/// remaining rows re-draw a random non-empty subset of coordinates at the
/// weak level.
pub fn generate_neighbourhood<R: Rng + ?Sized>(
    encoded: &[f64],
    size: usize,
    stats: &FeatureStats,
    rng: &mut R,
) -> Result<Mat64> {
    if size == 0 {
        return Err(Error::Domain("neighbourhood size must be >= 1".into()));
    }
    let dims = encoded.len();
    if stats.len() != dims {
        return Err(Error::dim(dims, stats.len()));
    }
    if dims == 0 {
        return Err(Error::Degenerate("empty latent representation".into()));
    }
    let mut values = Vec::with_capacity(size * dims);
    let mut produced = 0;

    'first: for (i, dim_stats) in stats.dims.iter().enumerate() {
        for level in NoiseLevel::FIRST_ORDER {
            if produced == size {
                break 'first;
            }
            let start = values.len();
            values.extend_from_slice(encoded);
            values[start + i] = determine_value(encoded[i], dim_stats, level, rng)?;
            produced += 1;
        }
    }

    let mut mask = vec![false; dims];
    while produced < size {
        loop {
            mask.iter_mut().for_each(|m| *m = rng.random_bool(0.5));
            if mask.iter().any(|&m| m) {
                break;
            }
        }
        let start = values.len();
        values.extend_from_slice(encoded);
        for (i, _) in mask.iter().enumerate().filter(|(_, &m)| m) {
            values[start + i] = determine_value(encoded[i], &stats.dims[i], NoiseLevel::Weak, rng)?;
        }
        produced += 1;
    }
    Mat64::new(size, dims, values)
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;

    fn stats(min: f64, max: f64, mean: f64, std: f64) -> DimStats {
        DimStats { min, max, mean, std }
    }

    #[test]
    fn zero_variance_noise_is_the_mean() {
        let mut rng = ChaCha8Rng::seed_from_u64(0);
        for level in NoiseLevel::FIRST_ORDER {
            let v = determine_value(0.5, &stats(0.0, 1.0, 0.2, 0.0), level, &mut rng).unwrap();
            assert!((v - 0.7).abs() < 1e-15);
        }
        let clamped = determine_value(1.0, &stats(0.0, 1.0, 0.3, 0.0), NoiseLevel::Strong, &mut rng).unwrap();
        assert_eq!(clamped, 1.0);
    }

    #[test]
    fn monte_carlo_noise_spread() {
        let mut rng = ChaCha8Rng::seed_from_u64(42);
        let wide = stats(-1e9, 1e9, 0.0, 1.0);
        let draws: Vec<f64> = (0..100_000)
            .map(|_| determine_value(0.0, &wide, NoiseLevel::Normal, &mut rng).unwrap())
            .collect();
        let (_, std) = crate::numerics::mean_std(&draws);
        assert!((0.98..=1.02).contains(&std), "{std}");
    }

    #[test]
    fn structure_of_small_neighbourhoods() {
        let s = FeatureStats::new(vec![stats(-1.0, 1.0, 0.0, 0.3); 4]).unwrap();
        let x = [0.1, -0.2, 0.3, 0.0];
        let mut rng = ChaCha8Rng::seed_from_u64(1);
        let n = generate_neighbourhood(&x, 20, &s, &mut rng).unwrap();
        assert_eq!(n.rows(), 20);
        for r in 0..12 {
            let changed: Vec<usize> = (0..4).filter(|&j| n.get(r, j) != x[j]).collect();
            assert_eq!(changed, vec![r / 3], "row {r}");
        }
        let mut rng = ChaCha8Rng::seed_from_u64(1);
        let short = generate_neighbourhood(&x, 6, &s, &mut rng).unwrap();
        assert_eq!(short, n.select_rows(&[0, 1, 2, 3, 4, 5]));
    }

    #[test]
    fn degenerate_stats_copy_the_instance() {
        let s = FeatureStats::new(vec![stats(-1.0, 0.25, 0.0, 0.0); 3]).unwrap();
        let x = [0.1, 0.2, -0.3];
        let mut rng = ChaCha8Rng::seed_from_u64(9);
        let n = generate_neighbourhood(&x, 15, &s, &mut rng).unwrap();
        for r in n.iter_rows() {
            assert_eq!(r, &x);
        }
        // an out-of-range coordinate is pulled back only where it is redrawn
        let n = generate_neighbourhood(&[0.1, 0.5, -0.3], 6, &s, &mut rng).unwrap();
        assert_eq!(n.row(3), &[0.1, 0.25, -0.3]);
        assert_eq!(n.row(0), &[0.1, 0.5, -0.3]);
    }

    #[test]
    fn argument_errors() {
        let s = FeatureStats::new(vec![stats(0.0, 1.0, 0.5, 0.1); 2]).unwrap();
        let mut rng = ChaCha8Rng::seed_from_u64(0);
        assert!(generate_neighbourhood(&[0.5, 0.5], 0, &s, &mut rng).is_err());
        assert!(matches!(
            generate_neighbourhood(&[0.5], 4, &s, &mut rng),
            Err(Error::Dimension { .. })
        ));
    }
}
