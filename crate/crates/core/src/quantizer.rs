//! Uniformly dithered scalar quantizer.
//!
//! Every output is a bin centre `Δ(k + ½)`. Adding a dither drawn uniformly
//! from `[−Δ/2, Δ/2)` before flooring makes the quantizer unbiased:
//! `E[Q(x + τ)] = x`.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::error::{Error, Result};

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct QuantizerConfig {
    delta: f64,
    pub seed: u64,
}

impl QuantizerConfig {
    pub fn new(delta: f64, seed: u64) -> Result<Self> {
        if !(delta > 0.0) || !delta.is_finite() {
            return Err(Error::Domain(format!("bin width must be positive, got {delta}")));
        }
        Ok(Self { delta, seed })
    }

    pub fn delta(&self) -> f64 {
        self.delta
    }
}

/// Quantized measurements together with the bin width and dither seed that
/// produced them.
#[derive(Debug, Clone, PartialEq)]
pub struct MeasurementSet {
    pub p: Vec<f64>,
    pub delta: f64,
    pub seed: u64,
}

impl MeasurementSet {
    pub fn len(&self) -> usize {
        self.p.len()
    }

    pub fn is_empty(&self) -> bool {
        self.p.is_empty()
    }

    /// Integer bin labels `k` with `p_i = Δ(k_i + ½)`.
    pub fn bin_labels(&self) -> Vec<i64> {
        self.p.iter().map(|&v| bin_label(v, self.delta)).collect()
    }
}

/// One dither sample on `[−Δ/2, Δ/2)`.
pub fn dither<R: Rng + ?Sized>(rng: &mut R, delta: f64) -> f64 {
    let half = 0.5 * delta;
    rng.random_range(-half..half)
}

/// `Δ(⌊(x + τ)/Δ⌋ + ½)`.
pub fn quantize(x: f64, tau: f64, delta: f64) -> f64 {
    delta * (((x + tau) / delta).floor() + 0.5)
}

/// Recovers `k` from a bin centre `Δ(k + ½)`.
pub fn bin_label(value: f64, delta: f64) -> i64 {
    (value / delta - 0.5).round() as i64
}

/// Dither for measurement `index` under `seed`. Each index owns a fixed
/// position of the ChaCha keystream, so the value does not depend on the
/// order in which entries are produced.
pub fn indexed_dither(seed: u64, index: usize, delta: f64) -> f64 {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    // one u64 draw consumes two 32-bit words; reserve four per index
    rng.set_word_pos(4 * index as u128);
    dither(&mut rng, delta)
}

pub fn quantize_measurements(clean: &[f64], config: &QuantizerConfig) -> MeasurementSet {
    let delta = config.delta();
    let p = clean
        .iter()
        .enumerate()
        .map(|(i, &x)| quantize(x, indexed_dither(config.seed, i, delta), delta))
        .collect();
    MeasurementSet {
        p,
        delta,
        seed: config.seed,
    }
}

/// `Δ = pct · (1/m) Σ|clean_i|`, with `pct` a fraction (0.05 for 5%).
pub fn bin_width_from_percentage(clean: &[f64], pct: f64) -> Result<f64> {
    if !(pct > 0.0) || !pct.is_finite() {
        return Err(Error::Domain(format!("bin-width percentage must be positive, got {pct}")));
    }
    if clean.is_empty() {
        return Err(Error::DegenerateInput("no measurements to size the bin width".into()));
    }
    let mean_abs = clean.iter().map(|v| v.abs()).sum::<f64>() / clean.len() as f64;
    if mean_abs == 0.0 {
        return Err(Error::DegenerateInput(
            "all clean measurements are zero; bin width would vanish".into(),
        ));
    }
    Ok(pct * mean_abs)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn quantize_examples() {
        assert_eq!(quantize(0.3, 0.0, 1.0), 0.5);
        assert_eq!(quantize(-0.3, 0.0, 1.0), -0.5);
        assert_eq!(quantize(0.5, 0.0, 1.0), 0.5);
        assert_eq!(quantize(1.0, 0.0, 1.0), 1.5);
    }

    #[test]
    fn dither_range_and_moments() {
        let mut rng = ChaCha8Rng::seed_from_u64(1);
        let draws: Vec<f64> = (0..1_000_000).map(|_| dither(&mut rng, 1.0)).collect();
        assert!(draws.iter().all(|&t| (-0.5..0.5).contains(&t)));
        let n = draws.len() as f64;
        let mean = draws.iter().sum::<f64>() / n;
        let var = draws.iter().map(|t| (t - mean).powi(2)).sum::<f64>() / n;
        assert!(mean.abs() < 0.002, "mean {mean}");
        assert!((var - 1.0 / 12.0).abs() < 0.001, "var {var}");
    }

    #[test]
    fn bin_centres_are_fixed_points() {
        let delta = 0.25;
        let clean: Vec<f64> = (-20..20).map(|k| delta * (k as f64 + 0.5)).collect();
        for &x in &clean {
            assert_eq!(quantize(x, 0.0, delta), x);
        }
    }

    #[test]
    fn measurements_stay_within_one_bin() {
        let clean: Vec<f64> = (0..5000).map(|i| (i as f64 * 0.37).sin() * 3.0).collect();
        for seed in 0..5 {
            let cfg = QuantizerConfig::new(0.3, seed).unwrap();
            let ms = quantize_measurements(&clean, &cfg);
            for (p, x) in ms.p.iter().zip(&clean) {
                assert!((p - x).abs() <= 0.3);
            }
            assert_eq!(ms, quantize_measurements(&clean, &cfg));
        }
    }

    #[test]
    fn dithered_quantizer_is_unbiased_in_expectation() {
        let (x, delta, reps) = (0.37, 0.2, 100_000u64);
        let mut rng = ChaCha8Rng::seed_from_u64(42);
        let mean = (0..reps)
            .map(|_| quantize(x, dither(&mut rng, delta), delta))
            .sum::<f64>()
            / reps as f64;
        assert!((mean - x).abs() < 0.002, "mean {mean}");
    }

    #[test]
    fn indexed_dithers_are_order_free() {
        let forward: Vec<f64> = (0..100).map(|i| indexed_dither(9, i, 1.0)).collect();
        let backward: Vec<f64> = (0..100).rev().map(|i| indexed_dither(9, i, 1.0)).collect();
        assert!(forward.iter().eq(backward.iter().rev()));
        assert_ne!(forward[0], forward[1]);
        assert_ne!(indexed_dither(9, 0, 1.0), indexed_dither(10, 0, 1.0));
    }

    #[test]
    fn bin_width_examples() {
        assert!((bin_width_from_percentage(&[1.0, -1.0, 1.0, -1.0], 0.1).unwrap() - 0.1).abs() < 1e-15);
        assert!((bin_width_from_percentage(&[2.0, 0.0], 0.5).unwrap() - 0.5).abs() < 1e-15);
        let a = bin_width_from_percentage(&[0.3, -0.7, 1.1], 0.05).unwrap();
        let b = bin_width_from_percentage(&[0.3, -0.7, 1.1], 0.10).unwrap();
        assert!((b - 2.0 * a).abs() < 1e-15);
        assert!(matches!(
            bin_width_from_percentage(&[0.0, 0.0], 0.1),
            Err(Error::DegenerateInput(_))
        ));
        assert!(bin_width_from_percentage(&[1.0], 0.0).is_err());
    }

    #[test]
    fn config_rejects_bad_delta() {
        assert!(QuantizerConfig::new(0.0, 1).is_err());
        assert!(QuantizerConfig::new(-1.0, 1).is_err());
        assert!(QuantizerConfig::new(f64::NAN, 1).is_err());
    }

    #[test]
    fn bin_labels_round_trip() {
        let ms = MeasurementSet {
            p: vec![-2.5, -0.5, 0.5, 3.5],
            delta: 1.0,
            seed: 0,
        };
        assert_eq!(ms.bin_labels(), vec![-3, -1, 0, 3]);
    }
}
