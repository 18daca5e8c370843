//! Weak and strong stochastic perturbations of feature vectors.
//!
//! These stand in for the image-space weak/strong augmentation pair of
//! pseudo-label pipelines: the weak view adds mild Gaussian noise, the strong
//! view masks coordinates, rescales the survivors, and adds heavier noise.
//! At low feature dimension, masking is by far the most violent of the three
//! (it teleports points onto coordinate axes), so the defaults keep it rare
//! and put the strength into noise and scaling.
//! All draws come from keyed [`RngStream`]s, so augmentation is a pure
//! function of `(input, config, key)`.

use crate::error::{Error, Result};
use crate::rng::RngStream;

#[derive(Debug, Clone, PartialEq)]
pub struct AugmentConfig {
    pub weak_noise_sigma: f64,
    pub strong_noise_sigma: f64,
    /// Per-coordinate probability of zeroing in the strong view.
    pub strong_mask_prob: f64,
    /// Uniform scale range `[min, max]` applied to unmasked coordinates.
    pub strong_scale_min: f64,
    pub strong_scale_max: f64,
}

impl Default for AugmentConfig {
    fn default() -> Self {
        AugmentConfig {
            weak_noise_sigma: 0.05,
            strong_noise_sigma: 0.25,
            strong_mask_prob: 0.05,
            strong_scale_min: 0.7,
            strong_scale_max: 1.4,
        }
    }
}

impl AugmentConfig {
    pub fn validate(&self) -> Result<()> {
        if !(self.weak_noise_sigma >= 0.0) || !(self.strong_noise_sigma >= 0.0) {
            return Err(Error::InvalidConfig("noise sigmas must be >= 0".into()));
        }
        if self.strong_noise_sigma < self.weak_noise_sigma {
            return Err(Error::InvalidConfig(
                "strong noise sigma must be >= weak noise sigma".into(),
            ));
        }
        if !(0.0..=1.0).contains(&self.strong_mask_prob) {
            return Err(Error::InvalidConfig(format!(
                "mask probability {} outside [0, 1]",
                self.strong_mask_prob
            )));
        }
        if !(self.strong_scale_min > 0.0)
            || self.strong_scale_min > 1.0
            || self.strong_scale_max < 1.0
        {
            return Err(Error::InvalidConfig(format!(
                "scale range [{}, {}] must satisfy 0 < min <= 1 <= max",
                self.strong_scale_min, self.strong_scale_max
            )));
        }
        Ok(())
    }
}

/// Weak view: `x + eps`, `eps ~ N(0, weak_noise_sigma^2 I)`.
pub fn weak_augment(x: &[f64], cfg: &AugmentConfig, stream: &mut RngStream) -> Vec<f64> {
    x.iter()
        .map(|&v| v + cfg.weak_noise_sigma * stream.next_normal())
        .collect()
}

/// Strong view: per coordinate, zero with probability `strong_mask_prob`,
/// otherwise scale by `u ~ Uniform[min, max]`; then add
/// `N(0, strong_noise_sigma^2)` noise. Draw counts per coordinate are fixed
/// regardless of the mask outcome, keeping streams aligned.
pub fn strong_augment(x: &[f64], cfg: &AugmentConfig, stream: &mut RngStream) -> Vec<f64> {
    x.iter()
        .map(|&v| {
            let mask = stream.next_f64() < cfg.strong_mask_prob;
            let scale = stream.next_range(cfg.strong_scale_min, cfg.strong_scale_max);
            let kept = if mask { 0.0 } else { v * scale };
            kept + cfg.strong_noise_sigma * stream.next_normal()
        })
        .collect()
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn weak_sigma_zero_is_identity() {
        let cfg = AugmentConfig {
            weak_noise_sigma: 0.0,
            strong_noise_sigma: 0.0,
            ..AugmentConfig::default()
        };
        let x = vec![1.0, -2.0, 0.25];
        let mut stream = RngStream::new(0, "aug", 0, 0);
        assert_eq!(weak_augment(&x, &cfg, &mut stream), x);
    }

    #[test]
    fn same_key_same_view() {
        let cfg = AugmentConfig::default();
        let x = vec![0.4, -1.1];
        let a = weak_augment(&x, &cfg, &mut RngStream::new(9, "aug/weak", 5, 2));
        let b = weak_augment(&x, &cfg, &mut RngStream::new(9, "aug/weak", 5, 2));
        assert_eq!(a, b);
        let c = strong_augment(&x, &cfg, &mut RngStream::new(9, "aug/strong", 5, 2));
        let d = strong_augment(&x, &cfg, &mut RngStream::new(9, "aug/strong", 5, 2));
        assert_eq!(c, d);
    }

    #[test]
    fn weak_noise_standard_deviation_is_calibrated() {
        let cfg = AugmentConfig {
            weak_noise_sigma: 0.1,
            ..AugmentConfig::default()
        };
        let n = 10_000;
        let x = vec![0.0; n];
        let mut stream = RngStream::new(3, "aug/mc", 0, 0);
        let noisy = weak_augment(&x, &cfg, &mut stream);
        let mean: f64 = noisy.iter().sum::<f64>() / n as f64;
        let var: f64 = noisy.iter().map(|v| (v - mean) * (v - mean)).sum::<f64>() / n as f64;
        let std = var.sqrt();
        assert!((0.09..=0.11).contains(&std), "std {std}");
    }

    #[test]
    fn strong_identity_config_is_identity() {
        let cfg = AugmentConfig {
            weak_noise_sigma: 0.0,
            strong_noise_sigma: 0.0,
            strong_mask_prob: 0.0,
            strong_scale_min: 1.0,
            strong_scale_max: 1.0,
        };
        let x = vec![2.0, -3.0, 0.5];
        let mut stream = RngStream::new(1, "aug/strong", 0, 0);
        assert_eq!(strong_augment(&x, &cfg, &mut stream), x);
    }

    #[test]
    fn strong_full_mask_zeroes_before_noise() {
        let cfg = AugmentConfig {
            weak_noise_sigma: 0.0,
            strong_noise_sigma: 0.0,
            strong_mask_prob: 1.0,
            strong_scale_min: 0.8,
            strong_scale_max: 1.25,
        };
        let x = vec![5.0, -7.0];
        let mut stream = RngStream::new(2, "aug/strong", 0, 0);
        assert_eq!(strong_augment(&x, &cfg, &mut stream), vec![0.0, 0.0]);
    }

    #[test]
    fn strong_mask_fraction_is_calibrated() {
        let cfg = AugmentConfig {
            weak_noise_sigma: 0.0,
            strong_noise_sigma: 0.0,
            strong_mask_prob: 0.3,
            strong_scale_min: 1.0,
            strong_scale_max: 1.0,
        };
        let n = 100_000;
        let x = vec![1.0; n];
        let mut stream = RngStream::new(4, "aug/mask", 0, 0);
        let out = strong_augment(&x, &cfg, &mut stream);
        let zeroed = out.iter().filter(|&&v| v == 0.0).count() as f64 / n as f64;
        assert!((zeroed - 0.3).abs() <= 0.01, "zeroed fraction {zeroed}");
    }

    /// Per-sample keying means generating a batch in any order (or in
    /// parallel) gives the same views as a sequential pass.
    #[test]
    fn batch_generation_order_independent() {
        let cfg = AugmentConfig::default();
        let batch: Vec<Vec<f64>> = (0..16)
            .map(|i| vec![i as f64 * 0.1, -(i as f64) * 0.2])
            .collect();
        let sequential: Vec<Vec<f64>> = batch
            .iter()
            .enumerate()
            .map(|(i, x)| strong_augment(x, &cfg, &mut RngStream::new(7, "aug/strong", 42, i as u64)))
            .collect();
        let mut reversed: Vec<(usize, Vec<f64>)> = batch
            .iter()
            .enumerate()
            .rev()
            .map(|(i, x)| {
                (
                    i,
                    strong_augment(x, &cfg, &mut RngStream::new(7, "aug/strong", 42, i as u64)),
                )
            })
            .collect();
        reversed.sort_by_key(|(i, _)| *i);
        for ((_, r), s) in reversed.iter().zip(&sequential) {
            assert_eq!(r, s);
        }
    }

    #[test]
    fn config_validation() {
        assert!(AugmentConfig::default().validate().is_ok());
        let bad = AugmentConfig {
            weak_noise_sigma: 0.5,
            strong_noise_sigma: 0.1,
            ..AugmentConfig::default()
        };
        assert!(bad.validate().is_err());
        let bad_mask = AugmentConfig {
            strong_mask_prob: 1.5,
            ..AugmentConfig::default()
        };
        assert!(bad_mask.validate().is_err());
        let bad_scale = AugmentConfig {
            strong_scale_min: 0.0,
            ..AugmentConfig::default()
        };
        assert!(bad_scale.validate().is_err());
    }
}
