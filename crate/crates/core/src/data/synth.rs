//! Seeded desk-scale datasets: a dense two-cluster classification toy, a
//! spam-like text corpus and multi-sensor degradation histories.

use rand::seq::{IndexedRandom, SliceRandom};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, Normal, StandardNormal};

use crate::data::series::UnitSeries;
use crate::error::{Error, Result};
use crate::numerics::Mat64;

/// Dense features with `±1` labels.
#[derive(Debug, Clone, PartialEq)]
pub struct DenseDataset {
    pub x: Mat64,
    pub labels: Vec<f64>,
}

impl DenseDataset {
    /// Labels mapped to `{0, 1}` for a sigmoid head.
    pub fn targets(&self) -> Vec<f64> {
        self.labels.iter().map(|&l| if l > 0.0 { 1.0 } else { 0.0 }).collect()
    }
}

/// Two Gaussian clusters embedded in `features` dimensions.
///
/// Samples live on a three-factor linear manifold (two class-separating
/// factors, one nuisance factor) plus small isotropic noise, then every column
/// is min-max scaled to `[0, 1]`. Labels are balanced.
pub fn synth_classification(n: usize, features: usize, seed: u64) -> Result<DenseDataset> {
    if n < 2 || features < 2 {
        return Err(Error::Domain("need at least 2 samples and 2 features".into()));
    }
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let factors = 3.min(features);
    let mixing: Vec<f64> = (0..features * factors)
        .map(|_| StandardNormal.sample(&mut rng))
        .collect();
    let centre = [1.5, 1.0, 0.0];

    let mut labels: Vec<f64> = (0..n).map(|i| if i < n / 2 { 1.0 } else { -1.0 }).collect();
    labels.shuffle(&mut rng);

    let mut values = Vec::with_capacity(n * features);
    for &label in &labels {
        let z: Vec<f64> = (0..factors)
            .map(|k| {
                let e: f64 = StandardNormal.sample(&mut rng);
                label * centre[k] + e
            })
            .collect();
        for j in 0..features {
            let clean: f64 = (0..factors).map(|k| mixing[j * factors + k] * z[k]).sum();
            let noise: f64 = StandardNormal.sample(&mut rng);
            values.push(clean + 0.02 * noise);
        }
    }
    let mut x = Mat64::new(n, features, values)?;
    min_max_scale_columns(&mut x);
    Ok(DenseDataset { x, labels })
}

pub(crate) fn min_max_scale_columns(x: &mut Mat64) {
    for j in 0..x.cols() {
        let col = x.column(j);
        let lo = col.iter().copied().fold(f64::INFINITY, f64::min);
        let hi = col.iter().copied().fold(f64::NEG_INFINITY, f64::max);
        let span = hi - lo;
        for i in 0..x.rows() {
            let v = if span > 0.0 { (x.get(i, j) - lo) / span } else { 0.0 };
            x.set(i, j, v);
        }
    }
}

const SPAM_WORDS: &[&str] = &[
    "free",
    "win",
    "prize",
    "cash",
    "claim",
    "urgent",
    "offer",
    "txt",
    "winner",
    "award",
    "bonus",
    "discount",
    "click",
    "subscribe",
    "guaranteed",
    "credit",
    "voucher",
    "ringtone",
    "reward",
    "selected",
    "congrat",
    "exclusive",
    "deal",
    "entry",
    "contest",
    "unlimited",
    "jackpot",
    "lucky",
    "code",
    "promo",
];

const HAM_WORDS: &[&str] = &[
    "meeting", "lunch", "home", "later", "tonight", "love", "dinner", "sorry", "tomorrow", "class", "mom", "work",
    "sleep", "movie", "friend", "bus", "coffee", "weekend", "study", "birthday", "game", "cook", "library", "walk",
    "gym", "book", "family", "train", "party", "kitchen",
];

const COMMON_WORDS: &[&str] = &[
    "the", "a", "you", "to", "and", "for", "now", "your", "this", "we", "it", "in", "on", "today", "call", "get",
    "just", "will", "with", "me", "at", "please", "reply", "time", "text",
];

const SPAM_TAILS: &[&str] = &[
    "50% off!",
    "it's yours",
    "don't miss out",
    "you'll win big",
    "e-mail us",
];
const HAM_TAILS: &[&str] = &[
    "what's up?",
    "i'm on my way",
    "that's fine",
    "we're late",
    "i'd like that",
];

/// Labelled short messages (`1` = spam-like, `0` = ordinary) drawn from
/// overlapping word pools, with contractions and punctuation sprinkled in so
/// the preprocessing path is exercised.
pub fn synth_corpus(n: usize, seed: u64) -> Vec<(f64, String)> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut labels: Vec<f64> = (0..n).map(|i| if i < n / 2 { 1.0 } else { 0.0 }).collect();
    labels.shuffle(&mut rng);
    labels
        .into_iter()
        .map(|label| {
            let spam = label > 0.5;
            let (own, other, tails) = if spam {
                (SPAM_WORDS, HAM_WORDS, SPAM_TAILS)
            } else {
                (HAM_WORDS, SPAM_WORDS, HAM_TAILS)
            };
            let len = rng.random_range(5..=11);
            let mut words: Vec<String> = (0..len)
                .map(|_| {
                    let r: f64 = rng.random();
                    let pool = if r < 0.4 {
                        own
                    } else if r < 0.55 {
                        other
                    } else {
                        COMMON_WORDS
                    };
                    pool.choose(&mut rng).expect("pools are non-empty").to_string()
                })
                .collect();
            if rng.random_bool(0.3) {
                words.push(tails.choose(&mut rng).expect("non-empty").to_string());
            }
            let mut text = words.join(" ");
            if let Some(first) = text.get_mut(0..1) {
                first.make_ascii_uppercase();
            }
            (label, text)
        })
        .collect()
}

/// Run-to-failure histories: each unit lives `[120, 250]` steps; every
/// sensor drifts monotonically (up or down, with its own curvature) plus
/// Gaussian noise, globally min-max scaled to `[0, 1]` per sensor.
/// `rul[t] = lifetime - (t + 1)`, so the last reading has RUL 0.
pub fn synth_degradation(units: usize, sensors: usize, seed: u64) -> Result<Vec<UnitSeries>> {
    if units == 0 || sensors == 0 {
        return Err(Error::Domain("need at least one unit and one sensor".into()));
    }
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let profiles: Vec<(f64, f64, f64, f64)> = (0..sensors)
        .map(|_| {
            let direction = if rng.random_bool(0.5) { 1.0 } else { -1.0 };
            let amplitude = rng.random_range(0.5..1.5);
            let power = rng.random_range(1.5..3.0);
            let noise = rng.random_range(0.05..0.15);
            (direction, amplitude, power, noise)
        })
        .collect();

    let mut raw = Vec::with_capacity(units);
    for u in 0..units {
        let lifetime = rng.random_range(120..=250usize);
        let offsets: Vec<f64> = (0..sensors).map(|_| rng.random_range(-0.2..0.2)).collect();
        let mut values = Vec::with_capacity(lifetime * sensors);
        for t in 0..lifetime {
            let progress = (t + 1) as f64 / lifetime as f64;
            for (s, &(direction, amplitude, power, noise)) in profiles.iter().enumerate() {
                let eps = Normal::new(0.0, noise).expect("positive std").sample(&mut rng);
                values.push(offsets[s] + direction * amplitude * progress.powf(power) + eps);
            }
        }
        let rul = (0..lifetime).map(|t| (lifetime - t - 1) as f64).collect();
        raw.push(UnitSeries {
            unit: u as u32 + 1,
            readings: Mat64::new(lifetime, sensors, values)?,
            rul,
        });
    }

    for s in 0..sensors {
        let (mut lo, mut hi) = (f64::INFINITY, f64::NEG_INFINITY);
        for unit in &raw {
            for t in 0..unit.len() {
                let v = unit.readings.get(t, s);
                lo = lo.min(v);
                hi = hi.max(v);
            }
        }
        let span = (hi - lo).max(f64::MIN_POSITIVE);
        for unit in &mut raw {
            for t in 0..unit.len() {
                let v = unit.readings.get(t, s);
                unit.readings.set(t, s, (v - lo) / span);
            }
        }
    }
    Ok(raw)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn classification_shape_balance_and_determinism() {
        let d = synth_classification(100, 6, 7).unwrap();
        assert_eq!((d.x.rows(), d.x.cols()), (100, 6));
        assert_eq!(d.labels.iter().filter(|&&l| l > 0.0).count(), 50);
        assert!(d.x.values().iter().all(|v| (0.0..=1.0).contains(v)));
        assert_eq!(d, synth_classification(100, 6, 7).unwrap());
        assert_ne!(d, synth_classification(100, 6, 8).unwrap());
    }

    #[test]
    fn corpus_is_deterministic_and_balanced() {
        let c = synth_corpus(200, 3);
        assert_eq!(c, synth_corpus(200, 3));
        assert_eq!(c.iter().filter(|(l, _)| *l > 0.5).count(), 100);
    }

    #[test]
    fn degradation_ends_at_zero_rul() {
        let units = synth_degradation(4, 3, 11).unwrap();
        assert_eq!(units, synth_degradation(4, 3, 11).unwrap());
        for u in &units {
            assert!((120..=250).contains(&u.len()));
            assert_eq!(*u.rul.last().unwrap(), 0.0);
            assert_eq!(u.rul[0], (u.len() - 1) as f64);
            assert!(u.readings.values().iter().all(|v| (0.0..=1.0).contains(v)));
        }
    }
}
