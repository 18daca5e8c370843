//! Synthetic class-conditional Gaussian-mixture datasets, balanced or
//! long-tailed, standing in for image benchmarks at desk scale.
//!
//! Class centers sit on a circle in the first two feature dimensions with a
//! configurable separation between neighbors; each class strings its mixture
//! components along an arc of that circle and draws isotropic Gaussian
//! samples around them, optionally with a heavy-tailed outlier fraction.
//! Everything is determined by the dataset spec's seed. Unlabeled samples
//! carry their true label for diagnostics only; the training path never
//! reads it.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::rng::RngStream;

/// Long-tail shape: exponential class-count profiles for the labeled and
/// unlabeled sets. Negative ratios reverse the class order, so a negative
/// unlabeled ratio puts the unlabeled mass on the labeled tail classes.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct LongtailSpec {
    pub gamma_labeled: f64,
    pub gamma_unlabeled: f64,
    /// Head-class labeled count (the profile's largest value).
    pub labeled_head: usize,
    /// Head-class unlabeled count.
    pub unlabeled_head: usize,
}

/// Noise multiplier for outlier draws.
pub const OUTLIER_NOISE_MULT: f64 = 2.5;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DatasetSpec {
    pub classes: usize,
    pub feature_dim: usize,
    pub components_per_class: usize,
    /// Distance between neighboring class centers.
    pub class_separation: f64,
    /// Scatter of mixture-component means around their class center.
    pub component_spread: f64,
    /// Isotropic sample noise around each component mean.
    pub noise_sigma: f64,
    /// Fraction of unlabeled and test samples drawn with
    /// `OUTLIER_NOISE_MULT` times the noise, producing fat tails that overlap
    /// neighboring classes. The labeled split stays clean, the way curated
    /// annotation sets are. The tails floor the achievable accuracy, which is
    /// what separates a model that is merely accurate from one that is also
    /// honest about its confidence.
    pub outlier_fraction: f64,
    pub labeled_per_class: usize,
    pub unlabeled_count: usize,
    pub test_count: usize,
    pub seed: u64,
    pub longtail: Option<LongtailSpec>,
}

impl DatasetSpec {
    pub fn validate(&self) -> Result<()> {
        if self.classes < 2 {
            return Err(Error::InvalidConfig("need at least 2 classes".into()));
        }
        if self.feature_dim < 2 {
            return Err(Error::InvalidConfig("need feature dimension >= 2".into()));
        }
        if self.components_per_class == 0 {
            return Err(Error::InvalidConfig("need at least one mixture component".into()));
        }
        if !(self.class_separation > 0.0) || !(self.noise_sigma > 0.0) {
            return Err(Error::InvalidConfig(
                "class separation and noise sigma must be positive".into(),
            ));
        }
        if self.component_spread < 0.0 {
            return Err(Error::InvalidConfig("component spread must be >= 0".into()));
        }
        if !(0.0..=1.0).contains(&self.outlier_fraction) {
            return Err(Error::InvalidConfig(format!(
                "outlier fraction {} outside [0, 1]",
                self.outlier_fraction
            )));
        }
        if self.test_count == 0 {
            return Err(Error::InvalidConfig("need a nonempty test set".into()));
        }
        match &self.longtail {
            None => {
                if self.labeled_per_class == 0 {
                    return Err(Error::InvalidConfig(
                        "balanced mode needs at least one label per class".into(),
                    ));
                }
            }
            Some(lt) => {
                for gamma in [lt.gamma_labeled, lt.gamma_unlabeled] {
                    validate_gamma(gamma)?;
                    if gamma.fract() != 0.0 {
                        return Err(Error::InvalidConfig(format!(
                            "long-tail ratio must be a nonzero integer, got {gamma}"
                        )));
                    }
                }
                if lt.labeled_head < self.classes || lt.unlabeled_head < self.classes {
                    return Err(Error::InvalidConfig(
                        "long-tail head counts must be >= the class count".into(),
                    ));
                }
            }
        }
        Ok(())
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct LabeledExample {
    pub features: Vec<f64>,
    pub label: usize,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct UnlabeledExample {
    pub features: Vec<f64>,
    /// True class, for diagnostics only. Losses never see it.
    pub hidden_label: usize,
}

#[derive(Debug, Clone, PartialEq)]
pub struct Dataset {
    pub labeled: Vec<LabeledExample>,
    pub unlabeled: Vec<UnlabeledExample>,
    pub test: Vec<LabeledExample>,
}

fn validate_gamma(gamma: f64) -> Result<()> {
    if gamma == 0.0 || !gamma.is_finite() || gamma.abs() < 1.0 {
        return Err(Error::InvalidConfig(format!(
            "imbalance ratio must satisfy |gamma| >= 1, got {gamma}"
        )));
    }
    Ok(())
}

/// Exponential class-count profile with head count `n_1 = head` and
/// head-to-tail ratio `|gamma|`:
///
/// ```text
/// n_k = round(head * |gamma|^(-(k-1)/(K-1))), clamped to >= 1
/// ```
///
/// Negative `gamma` reverses the class order.
pub fn longtail_counts(classes: usize, head: usize, gamma: f64) -> Result<Vec<usize>> {
    if classes < 2 {
        return Err(Error::InvalidConfig("need at least 2 classes".into()));
    }
    if head < classes {
        return Err(Error::InvalidConfig(format!(
            "head count {head} below class count {classes}"
        )));
    }
    validate_gamma(gamma)?;
    let ratio = gamma.abs();
    let mut counts: Vec<usize> = (0..classes)
        .map(|k| {
            let exponent = -(k as f64) / (classes as f64 - 1.0);
            let n = (head as f64 * ratio.powf(exponent)).round();
            (n as usize).max(1)
        })
        .collect();
    if gamma < 0.0 {
        counts.reverse();
    }
    Ok(counts)
}

fn split_evenly(total: usize, classes: usize) -> Vec<usize> {
    let base = total / classes;
    let rem = total % classes;
    (0..classes).map(|c| base + usize::from(c < rem)).collect()
}

/// Per-class labeled/unlabeled/test counts implied by a spec.
pub fn class_counts(spec: &DatasetSpec) -> Result<(Vec<usize>, Vec<usize>, Vec<usize>)> {
    let labeled = match &spec.longtail {
        None => vec![spec.labeled_per_class; spec.classes],
        Some(lt) => longtail_counts(spec.classes, lt.labeled_head, lt.gamma_labeled)?,
    };
    let unlabeled = match &spec.longtail {
        None => split_evenly(spec.unlabeled_count, spec.classes),
        Some(lt) => longtail_counts(spec.classes, lt.unlabeled_head, lt.gamma_unlabeled)?,
    };
    // the test set stays balanced so error rates are comparable across tails
    let test = split_evenly(spec.test_count, spec.classes);
    Ok((labeled, unlabeled, test))
}

fn circle_radius(spec: &DatasetSpec) -> f64 {
    spec.class_separation / (2.0 * (std::f64::consts::PI / spec.classes as f64).sin())
}

/// Class centers on a circle in the first two dimensions, spaced so that
/// neighboring centers are `class_separation` apart. The whole layout is
/// rotated by a seed-dependent phase, so different seeds see different data
/// without changing the difficulty of the problem.
fn class_centers(spec: &DatasetSpec) -> Vec<Vec<f64>> {
    let k = spec.classes;
    let radius = circle_radius(spec);
    let phase = RngStream::new(spec.seed, "dataset/rotation", 0, 0).next_f64()
        * 2.0
        * std::f64::consts::PI;
    (0..k)
        .map(|c| {
            let angle = phase + 2.0 * std::f64::consts::PI * c as f64 / k as f64;
            let mut center = vec![0.0; spec.feature_dim];
            center[0] = radius * angle.cos();
            center[1] = radius * angle.sin();
            center
        })
        .collect()
}

/// Each class is an arc of components strung along the circle: component `j`
/// sits `component_spread` arc units from its neighbor, centered on the class
/// center. Classes become elongated low-density-separated ridges, the regime
/// where label propagation from a handful of labels genuinely pays off.
fn component_means(spec: &DatasetSpec, centers: &[Vec<f64>]) -> Vec<Vec<Vec<f64>>> {
    let radius = circle_radius(spec);
    let c = spec.components_per_class;
    centers
        .iter()
        .map(|center| {
            let base_angle = center[1].atan2(center[0]);
            (0..c)
                .map(|comp| {
                    let offset = (comp as f64 - (c as f64 - 1.0) / 2.0) * spec.component_spread;
                    let angle = base_angle + offset / radius;
                    let mut mean = center.clone();
                    mean[0] = radius * angle.cos();
                    mean[1] = radius * angle.sin();
                    mean
                })
                .collect()
        })
        .collect()
}

fn draw_sample(
    spec: &DatasetSpec,
    means: &[Vec<Vec<f64>>],
    class: usize,
    purpose: &str,
    index: usize,
    allow_outliers: bool,
) -> Vec<f64> {
    let mut stream = RngStream::new(
        spec.seed,
        purpose,
        class as u64,
        index as u64,
    );
    let comp = stream.next_index(spec.components_per_class);
    let outlier_draw = stream.next_f64();
    let sigma = if allow_outliers && outlier_draw < spec.outlier_fraction {
        spec.noise_sigma * OUTLIER_NOISE_MULT
    } else {
        spec.noise_sigma
    };
    means[class][comp]
        .iter()
        .map(|&m| m + sigma * stream.next_normal())
        .collect()
}

/// Generate the labeled/unlabeled/test splits, fully determined by the
/// dataset spec including its seed; all splits are drawn independently.
pub fn generate_dataset(spec: &DatasetSpec) -> Result<Dataset> {
    spec.validate()?;
    let (labeled_counts, unlabeled_counts, test_counts) = class_counts(spec)?;
    let centers = class_centers(spec);
    let means = component_means(spec, &centers);

    let mut labeled = Vec::new();
    for (class, &count) in labeled_counts.iter().enumerate() {
        for i in 0..count {
            labeled.push(LabeledExample {
                features: draw_sample(spec, &means, class, "dataset/labeled", i, false),
                label: class,
            });
        }
    }
    let mut unlabeled = Vec::new();
    for (class, &count) in unlabeled_counts.iter().enumerate() {
        for i in 0..count {
            unlabeled.push(UnlabeledExample {
                features: draw_sample(spec, &means, class, "dataset/unlabeled", i, true),
                hidden_label: class,
            });
        }
    }
    let mut test = Vec::new();
    for (class, &count) in test_counts.iter().enumerate() {
        for i in 0..count {
            test.push(LabeledExample {
                features: draw_sample(spec, &means, class, "dataset/test", i, true),
                label: class,
            });
        }
    }
    Ok(Dataset {
        labeled,
        unlabeled,
        test,
    })
}
