//! Calibration and analysis metrics: the ECE family, reliability-diagram
//! data, Friedman ranks, logit-distribution statistics, agreement-ratio
//! tracking, and the two-class entropy-dynamics table.
//!
//! Binning conventions, pinned once:
//!
//! - equal-width confidence bins are `(lower, upper]` with the first bin
//!   closed at 0; the default bin count is 15;
//! - equal-mass (adaptive) bins take their boundaries from sorted-confidence
//!   quantile positions, with ties assigned to the lower bin;
//! - confidence is the max softmax probability of the predicted class.

use serde::{Deserialize, Serialize};

use crate::core_math::argmax_tiebreak;
use crate::error::{Error, Result};
use crate::objective::logit_distances;
use crate::pseudo_label::PseudoLabelDecision;

/// Default bin count for every ECE-family metric.
pub const DEFAULT_BINS: usize = 15;

/// Default histogram bin width (in logit units) for [`logit_stats`].
pub const DEFAULT_LOGIT_BIN_WIDTH: f64 = 0.5;

/// Per-bin reliability data over `(lower, upper]` confidence bins. Empty bins
/// are reported with count 0 and zeroed statistics.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ReliabilityBins {
    pub lower: Vec<f64>,
    pub upper: Vec<f64>,
    pub count: Vec<usize>,
    pub mean_confidence: Vec<f64>,
    pub accuracy: Vec<f64>,
}

impl ReliabilityBins {
    pub fn n_bins(&self) -> usize {
        self.lower.len()
    }
}

/// Scalar calibration metrics plus the reliability table they derive from.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CalibrationReport {
    pub ece: f64,
    pub aece: f64,
    pub cece: f64,
    pub bins: ReliabilityBins,
    pub error_rate: f64,
    pub n_samples: usize,
}

fn validate_inputs(confidences: &[f64], correct: &[bool], n_bins: usize) -> Result<()> {
    if confidences.is_empty() {
        return Err(Error::InvalidInput("calibration metric over zero samples".into()));
    }
    if confidences.len() != correct.len() {
        return Err(Error::ShapeMismatch(format!(
            "{} confidences for {} correctness flags",
            confidences.len(),
            correct.len()
        )));
    }
    if n_bins == 0 {
        return Err(Error::InvalidInput("need at least one bin".into()));
    }
    if confidences.iter().any(|c| !(0.0..=1.0).contains(c)) {
        return Err(Error::InvalidInput("confidence outside [0, 1]".into()));
    }
    Ok(())
}

/// Equal-width bin index for confidence `c`: bins are `(b/n, (b+1)/n]` with
/// the first bin closed at 0.
fn width_bin_index(c: f64, n_bins: usize) -> usize {
    let raw = (c * n_bins as f64).ceil() as isize - 1;
    raw.clamp(0, n_bins as isize - 1) as usize
}

/// Expected calibration error over equal-width bins:
/// `sum_b count_b / N * |acc_b - conf_b|`.
pub fn ece(confidences: &[f64], correct: &[bool], n_bins: usize) -> Result<f64> {
    let bins = reliability(confidences, correct, n_bins)?;
    let n = confidences.len() as f64;
    Ok(bins
        .count
        .iter()
        .zip(bins.accuracy.iter().zip(&bins.mean_confidence))
        .map(|(&c, (&acc, &conf))| c as f64 / n * (acc - conf).abs())
        .sum())
}

/// The same statistic over equal-mass bins with quantile boundaries; samples
/// tied with a boundary value go to the lower bin.
pub fn adaptive_ece(confidences: &[f64], correct: &[bool], n_bins: usize) -> Result<f64> {
    validate_inputs(confidences, correct, n_bins)?;
    let n = confidences.len();
    let mut sorted: Vec<f64> = confidences.to_vec();
    sorted.sort_by(|a, b| a.partial_cmp(b).unwrap());
    let boundaries: Vec<f64> = (0..n_bins)
        .map(|b| {
            let pos = (b + 1) * n / n_bins;
            if pos == 0 {
                f64::NEG_INFINITY
            } else {
                sorted[pos - 1]
            }
        })
        .collect();

    let mut count = vec![0usize; n_bins];
    let mut conf_sum = vec![0.0; n_bins];
    let mut correct_sum = vec![0usize; n_bins];
    for (&c, &ok) in confidences.iter().zip(correct) {
        // smallest bin whose boundary covers this confidence; the last
        // boundary is the maximum, so the search always succeeds
        let b = boundaries
            .iter()
            .position(|&q| c <= q)
            .unwrap_or(n_bins - 1);
        count[b] += 1;
        conf_sum[b] += c;
        correct_sum[b] += usize::from(ok);
    }
    let total = n as f64;
    Ok((0..n_bins)
        .map(|b| {
            if count[b] == 0 {
                0.0
            } else {
                let acc = correct_sum[b] as f64 / count[b] as f64;
                let conf = conf_sum[b] / count[b] as f64;
                count[b] as f64 / total * (acc - conf).abs()
            }
        })
        .sum())
}

/// Classwise ECE: for each class, bin its predicted probability over all
/// samples and compare the empirical class frequency with the mean predicted
/// probability per bin; report the mean over classes.
pub fn classwise_ece(probs: &[Vec<f64>], labels: &[usize], n_bins: usize) -> Result<f64> {
    if probs.is_empty() {
        return Err(Error::InvalidInput("classwise ECE over zero samples".into()));
    }
    if probs.len() != labels.len() {
        return Err(Error::ShapeMismatch(format!(
            "{} probability vectors for {} labels",
            probs.len(),
            labels.len()
        )));
    }
    if n_bins == 0 {
        return Err(Error::InvalidInput("need at least one bin".into()));
    }
    let k = probs[0].len();
    if k < 2 || probs.iter().any(|p| p.len() != k) {
        return Err(Error::ShapeMismatch("ragged probability batch".into()));
    }
    if labels.iter().any(|&y| y >= k) {
        return Err(Error::InvalidInput("label out of range".into()));
    }
    let n = probs.len() as f64;
    let mut total = 0.0;
    for class in 0..k {
        let mut count = vec![0usize; n_bins];
        let mut prob_sum = vec![0.0; n_bins];
        let mut hit_sum = vec![0usize; n_bins];
        for (p, &y) in probs.iter().zip(labels) {
            let v = p[class];
            if !(0.0..=1.0).contains(&v) {
                return Err(Error::InvalidInput(format!(
                    "predicted probability {v} outside [0, 1]"
                )));
            }
            let b = width_bin_index(v, n_bins);
            count[b] += 1;
            prob_sum[b] += v;
            hit_sum[b] += usize::from(y == class);
        }
        let mut class_ece = 0.0;
        for b in 0..n_bins {
            if count[b] > 0 {
                let freq = hit_sum[b] as f64 / count[b] as f64;
                let mean_prob = prob_sum[b] / count[b] as f64;
                class_ece += count[b] as f64 / n * (freq - mean_prob).abs();
            }
        }
        total += class_ece;
    }
    Ok(total / k as f64)
}

/// Full reliability-diagram table over equal-width bins.
pub fn reliability(confidences: &[f64], correct: &[bool], n_bins: usize) -> Result<ReliabilityBins> {
    validate_inputs(confidences, correct, n_bins)?;
    let mut count = vec![0usize; n_bins];
    let mut conf_sum = vec![0.0; n_bins];
    let mut correct_sum = vec![0usize; n_bins];
    for (&c, &ok) in confidences.iter().zip(correct) {
        let b = width_bin_index(c, n_bins);
        count[b] += 1;
        conf_sum[b] += c;
        correct_sum[b] += usize::from(ok);
    }
    let nb = n_bins as f64;
    Ok(ReliabilityBins {
        lower: (0..n_bins).map(|b| b as f64 / nb).collect(),
        upper: (0..n_bins).map(|b| (b + 1) as f64 / nb).collect(),
        mean_confidence: (0..n_bins)
            .map(|b| {
                if count[b] == 0 {
                    0.0
                } else {
                    conf_sum[b] / count[b] as f64
                }
            })
            .collect(),
        accuracy: (0..n_bins)
            .map(|b| {
                if count[b] == 0 {
                    0.0
                } else {
                    correct_sum[b] as f64 / count[b] as f64
                }
            })
            .collect(),
        count,
    })
}

/// Calibration report from full probability vectors and true labels.
/// Prediction is the tie-broken argmax; confidence its probability.
pub fn calibration_report(
    probs: &[Vec<f64>],
    labels: &[usize],
    n_bins: usize,
) -> Result<CalibrationReport> {
    if probs.len() != labels.len() {
        return Err(Error::ShapeMismatch(format!(
            "{} probability vectors for {} labels",
            probs.len(),
            labels.len()
        )));
    }
    let mut confidences = Vec::with_capacity(probs.len());
    let mut correct = Vec::with_capacity(probs.len());
    let mut errors = 0usize;
    for (p, &y) in probs.iter().zip(labels) {
        let pred = argmax_tiebreak(p)?;
        confidences.push(p[pred]);
        let ok = pred == y;
        correct.push(ok);
        errors += usize::from(!ok);
    }
    Ok(CalibrationReport {
        ece: ece(&confidences, &correct, n_bins)?,
        aece: adaptive_ece(&confidences, &correct, n_bins)?,
        cece: classwise_ece(probs, labels, n_bins)?,
        bins: reliability(&confidences, &correct, n_bins)?,
        error_rate: errors as f64 / probs.len() as f64,
        n_samples: probs.len(),
    })
}

/// Friedman rank: per setting, rank all methods (average rank on ties, rank 1
/// is best), then average each method's ranks across settings.
///
/// `scores[m][s]` is method `m`'s score in setting `s`;
/// `lower_is_better[s]` gives the per-setting direction.
pub fn friedman_rank(scores: &[Vec<f64>], lower_is_better: &[bool]) -> Result<Vec<f64>> {
    if scores.is_empty() || scores[0].is_empty() {
        return Err(Error::InvalidInput("empty score matrix".into()));
    }
    let n_settings = scores[0].len();
    if scores.iter().any(|row| row.len() != n_settings) {
        return Err(Error::ShapeMismatch("ragged score matrix".into()));
    }
    if lower_is_better.len() != n_settings {
        return Err(Error::ShapeMismatch(format!(
            "{} direction flags for {n_settings} settings",
            lower_is_better.len()
        )));
    }
    if scores.iter().flatten().any(|v| !v.is_finite()) {
        return Err(Error::InvalidInput("non-finite score".into()));
    }
    let n_methods = scores.len();
    let mut rank_sums = vec![0.0; n_methods];
    for s in 0..n_settings {
        let mut order: Vec<usize> = (0..n_methods).collect();
        order.sort_by(|&a, &b| {
            let (x, y) = (scores[a][s], scores[b][s]);
            if lower_is_better[s] {
                x.partial_cmp(&y).unwrap()
            } else {
                y.partial_cmp(&x).unwrap()
            }
        });
        let mut i = 0;
        while i < n_methods {
            let mut j = i;
            while j + 1 < n_methods && scores[order[j + 1]][s] == scores[order[i]][s] {
                j += 1;
            }
            // positions i..=j share the average of ranks i+1..=j+1
            let avg = (i + j + 2) as f64 / 2.0;
            for t in i..=j {
                rank_sums[order[t]] += avg;
            }
            i = j + 1;
        }
    }
    Ok(rank_sums
        .into_iter()
        .map(|r| r / n_settings as f64)
        .collect())
}

/// Fixed-width histogram over a real axis; bin `i` covers
/// `[(origin + i) w, (origin + i + 1) w)`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct LogitHistogram {
    pub bin_width: f64,
    pub origin: i64,
    pub counts: Vec<u64>,
}

impl LogitHistogram {
    fn from_values(values: impl Iterator<Item = f64> + Clone, bin_width: f64) -> Self {
        let indices: Vec<i64> = values
            .map(|v| (v / bin_width).floor() as i64)
            .collect();
        let origin = indices.iter().copied().min().unwrap_or(0);
        let end = indices.iter().copied().max().unwrap_or(0);
        let mut counts = vec![0u64; (end - origin + 1) as usize];
        for i in indices {
            counts[(i - origin) as usize] += 1;
        }
        LogitHistogram {
            bin_width,
            origin,
            counts,
        }
    }

    pub fn bin_lower(&self, i: usize) -> f64 {
        (self.origin + i as i64) as f64 * self.bin_width
    }

    pub fn total(&self) -> u64 {
        self.counts.iter().sum()
    }
}

/// Logit-value distributions for the samples of one target class.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ClassLogitStats {
    pub class: usize,
    pub n_samples: usize,
    /// One histogram per logit coordinate.
    pub coordinate_histograms: Vec<LogitHistogram>,
    pub min_logit: f64,
    pub max_logit: f64,
    /// Largest winner-to-logit distance seen in this class.
    pub max_distance: f64,
}

/// Per-target-class logit statistics over a labeled evaluation batch.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct LogitStats {
    pub bin_width: f64,
    pub classes: Vec<ClassLogitStats>,
    pub min_logit: f64,
    pub max_logit: f64,
}

impl LogitStats {
    /// Overall logit range `max - min`.
    pub fn range(&self) -> f64 {
        self.max_logit - self.min_logit
    }
}

/// Histogram the logit coordinates per target class, and record min/max
/// logits and the largest logit distance.
pub fn logit_stats(logits: &[Vec<f64>], labels: &[usize], bin_width: f64) -> Result<LogitStats> {
    if logits.is_empty() || logits.len() != labels.len() {
        return Err(Error::ShapeMismatch(format!(
            "{} logit vectors for {} labels",
            logits.len(),
            labels.len()
        )));
    }
    if !(bin_width > 0.0) {
        return Err(Error::InvalidInput("bin width must be positive".into()));
    }
    let k = logits[0].len();
    let n_classes = labels.iter().copied().max().unwrap() + 1;
    let mut classes = Vec::new();
    for class in 0..n_classes {
        let members: Vec<&Vec<f64>> = logits
            .iter()
            .zip(labels)
            .filter(|(_, &y)| y == class)
            .map(|(l, _)| l)
            .collect();
        if members.is_empty() {
            continue;
        }
        let mut min_logit = f64::INFINITY;
        let mut max_logit = f64::NEG_INFINITY;
        let mut max_distance = 0.0f64;
        for l in &members {
            for &v in l.iter() {
                min_logit = min_logit.min(v);
                max_logit = max_logit.max(v);
            }
            let d = logit_distances(l);
            max_distance = max_distance.max(d.iter().copied().fold(0.0, f64::max));
        }
        let coordinate_histograms = (0..k)
            .map(|coord| {
                LogitHistogram::from_values(members.iter().map(|l| l[coord]), bin_width)
            })
            .collect();
        classes.push(ClassLogitStats {
            class,
            n_samples: members.len(),
            coordinate_histograms,
            min_logit,
            max_logit,
            max_distance,
        });
    }
    let min_logit = classes.iter().map(|c| c.min_logit).fold(f64::INFINITY, f64::min);
    let max_logit = classes
        .iter()
        .map(|c| c.max_logit)
        .fold(f64::NEG_INFINITY, f64::max);
    Ok(LogitStats {
        bin_width,
        classes,
        min_logit,
        max_logit,
    })
}

/// Share of agreeing samples among the selected ones in a window of
/// decisions; `None` when nothing was selected.
pub fn agreement_ratio(decisions: &[PseudoLabelDecision]) -> Option<f64> {
    let selected = decisions.iter().filter(|d| d.selected).count();
    if selected == 0 {
        return None;
    }
    let agree = decisions.iter().filter(|d| d.selected && d.agree).count();
    Some(agree as f64 / selected as f64)
}

/// One row of the two-class entropy-dynamics table.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct DynamicsRow {
    pub p: f64,
    pub shannon: f64,
    pub min_entropy: f64,
    pub d_shannon_abs: f64,
    pub d_min_entropy_abs: f64,
}

/// Tabulate, for two-class distributions `(p, 1-p)` on an even grid, the
/// Shannon and min-entropy values and the magnitudes of their derivatives in
/// `p`. The grid `p_i = i / (resolution + 1)` excludes the endpoints and the
/// kink at `p = 0.5`.
pub fn simplex_dynamics(resolution: usize) -> Result<Vec<DynamicsRow>> {
    if resolution < 3 {
        return Err(Error::InvalidInput(format!(
            "dynamics grid resolution must be >= 3, got {resolution}"
        )));
    }
    let denom = (resolution + 1) as f64;
    let mut rows = Vec::with_capacity(resolution);
    for i in 1..=resolution {
        if 2 * i == resolution + 1 {
            continue; // exact 0.5 sits on the min-entropy kink
        }
        let p = i as f64 / denom;
        let shannon = -(p * p.ln() + (1.0 - p) * (1.0 - p).ln());
        let max = p.max(1.0 - p);
        let min_entropy = -max.ln();
        let d_shannon_abs = ((1.0 - p) / p).ln().abs();
        let d_min_entropy_abs = 1.0 / max;
        rows.push(DynamicsRow {
            p,
            shannon,
            min_entropy,
            d_shannon_abs,
            d_min_entropy_abs,
        });
    }
    Ok(rows)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::rng::RngStream;

    const FIXTURE_CONF: [f64; 6] = [0.3, 0.4, 0.6, 0.8, 0.9, 1.0];
    const FIXTURE_OK: [bool; 6] = [false, true, true, false, true, true];

    #[test]
    fn ece_always_confident_half_right() {
        let conf = vec![1.0; 10];
        let correct: Vec<bool> = (0..10).map(|i| i % 2 == 0).collect();
        assert_eq!(ece(&conf, &correct, 15).unwrap(), 0.5);
    }

    #[test]
    fn ece_zero_when_bins_match() {
        // one bin: overall confidence must equal overall accuracy
        let conf = vec![0.75; 4];
        let correct = vec![true, true, true, false];
        assert!(ece(&conf, &correct, 1).unwrap().abs() < 1e-15);
    }

    #[test]
    fn ece_two_bin_fixture_hand_value() {
        let v = ece(&FIXTURE_CONF, &FIXTURE_OK, 2).unwrap();
        assert!((v - 0.1).abs() < 1e-12, "ECE {v}");
    }

    #[test]
    fn ece_rejects_empty_and_bad_inputs() {
        assert!(ece(&[], &[], 15).is_err());
        assert!(ece(&[0.5], &[true], 0).is_err());
        assert!(ece(&[1.5], &[true], 15).is_err());
    }

    #[test]
    fn ece_permutation_invariant() {
        let mut conf = FIXTURE_CONF.to_vec();
        let mut ok = FIXTURE_OK.to_vec();
        let base = ece(&conf, &ok, 3).unwrap();
        conf.reverse();
        ok.reverse();
        assert_eq!(ece(&conf, &ok, 3).unwrap(), base);
    }

    #[test]
    fn aece_constant_confidence_single_effective_bin() {
        let conf = vec![0.8; 8];
        let correct = vec![true, false, true, true, false, true, true, true];
        // |acc - conf| = |0.75 - 0.8|
        let v = adaptive_ece(&conf, &correct, 4).unwrap();
        assert!((v - 0.05).abs() < 1e-12, "AECE {v}");
    }

    #[test]
    fn aece_six_sample_fixture_hand_value() {
        let v = adaptive_ece(&FIXTURE_CONF, &FIXTURE_OK, 2).unwrap();
        assert!((v - 7.0 / 30.0).abs() < 1e-12, "AECE {v}");
    }

    #[test]
    fn aece_calibrated_predictor_is_small() {
        // two-class predictor whose confidence equals its hit rate
        let mut s = RngStream::new(17, "calibrated", 0, 0);
        let n = 100_000;
        let mut conf = Vec::with_capacity(n);
        let mut ok = Vec::with_capacity(n);
        for _ in 0..n {
            let q = 0.5 + 0.5 * s.next_f64();
            conf.push(q);
            ok.push(s.next_f64() < q);
        }
        assert!(adaptive_ece(&conf, &ok, 15).unwrap() < 0.01);
        assert!(ece(&conf, &ok, 15).unwrap() < 0.01);
    }

    #[test]
    fn cece_one_hot_correct_predictor_is_zero() {
        let probs = vec![
            vec![1.0, 0.0, 0.0],
            vec![0.0, 1.0, 0.0],
            vec![0.0, 0.0, 1.0],
            vec![1.0, 0.0, 0.0],
        ];
        let labels = vec![0, 1, 2, 0];
        assert_eq!(classwise_ece(&probs, &labels, 15).unwrap(), 0.0);
    }

    #[test]
    fn cece_six_sample_fixture_hand_value() {
        let probs: Vec<Vec<f64>> = FIXTURE_CONF.iter().map(|&c| vec![c, 1.0 - c]).collect();
        let labels = vec![1, 1, 0, 1, 0, 0];
        let v = classwise_ece(&probs, &labels, 2).unwrap();
        assert!((v - 1.0 / 6.0).abs() < 1e-12, "CECE {v}");
    }

    #[test]
    fn cece_calibrated_two_class_predictor_is_small() {
        let mut s = RngStream::new(23, "cece", 0, 0);
        let n = 100_000;
        let mut probs = Vec::with_capacity(n);
        let mut labels = Vec::with_capacity(n);
        for _ in 0..n {
            let q = s.next_f64();
            probs.push(vec![q, 1.0 - q]);
            labels.push(usize::from(s.next_f64() >= q));
        }
        assert!(classwise_ece(&probs, &labels, 15).unwrap() < 0.01);
    }

    #[test]
    fn reliability_reports_empty_bins() {
        let bins = reliability(&FIXTURE_CONF, &FIXTURE_OK, 10).unwrap();
        assert_eq!(bins.n_bins(), 10);
        assert_eq!(bins.count.iter().sum::<usize>(), 6);
        assert_eq!(bins.count[0], 0);
        assert_eq!(bins.mean_confidence[0], 0.0);
        // 0.3 -> bin (0.2, 0.3]
        assert_eq!(bins.count[2], 1);
        // boundary sample 1.0 lands in the last bin
        assert_eq!(bins.count[9], 1);
        for b in 0..10 {
            assert!((bins.upper[b] - bins.lower[b] - 0.1).abs() < 1e-12);
        }
    }

    #[test]
    fn reliability_two_bin_fixture_contents() {
        let bins = reliability(&FIXTURE_CONF, &FIXTURE_OK, 2).unwrap();
        assert_eq!(bins.count, vec![2, 4]);
        assert!((bins.mean_confidence[0] - 0.35).abs() < 1e-12);
        assert!((bins.accuracy[0] - 0.5).abs() < 1e-12);
        assert!((bins.mean_confidence[1] - 0.825).abs() < 1e-12);
        assert!((bins.accuracy[1] - 0.75).abs() < 1e-12);
    }

    #[test]
    fn metrics_stay_in_unit_interval_on_random_fixtures() {
        let mut s = RngStream::new(29, "range", 0, 0);
        for trial in 0..200 {
            let n = 1 + s.next_index(50);
            let conf: Vec<f64> = (0..n).map(|_| s.next_f64()).collect();
            let ok: Vec<bool> = (0..n).map(|_| s.next_f64() < 0.5).collect();
            for bins in [1, 2, 15] {
                let e = ece(&conf, &ok, bins).unwrap();
                let a = adaptive_ece(&conf, &ok, bins).unwrap();
                assert!((0.0..=1.0).contains(&e), "trial {trial}: ECE {e}");
                assert!((0.0..=1.0).contains(&a), "trial {trial}: AECE {a}");
            }
        }
    }

    #[test]
    fn friedman_mean_of_per_setting_ranks() {
        // method 0 ranks 1 then 2; method 1 ranks 2 then 1
        let scores = vec![vec![1.0, 5.0], vec![2.0, 3.0]];
        let ranks = friedman_rank(&scores, &[true, true]).unwrap();
        assert_eq!(ranks, vec![1.5, 1.5]);
    }

    #[test]
    fn friedman_average_rank_on_ties() {
        let scores = vec![vec![4.0], vec![4.0], vec![9.0]];
        let ranks = friedman_rank(&scores, &[true]).unwrap();
        assert_eq!(ranks, vec![1.5, 1.5, 3.0]);
    }

    #[test]
    fn friedman_direction_flags_flip_ranking() {
        let scores = vec![vec![1.0], vec![2.0]];
        assert_eq!(friedman_rank(&scores, &[true]).unwrap(), vec![1.0, 2.0]);
        assert_eq!(friedman_rank(&scores, &[false]).unwrap(), vec![2.0, 1.0]);
    }

    #[test]
    fn friedman_invariant_to_per_setting_shift() {
        let scores = vec![vec![3.0, 10.0], vec![5.0, 8.0], vec![4.0, 12.0]];
        let base = friedman_rank(&scores, &[true, true]).unwrap();
        let shifted: Vec<Vec<f64>> = scores
            .iter()
            .map(|row| vec![row[0] + 100.0, row[1] - 7.5])
            .collect();
        assert_eq!(friedman_rank(&shifted, &[true, true]).unwrap(), base);
    }

    #[test]
    fn friedman_rejects_empty_and_ragged() {
        assert!(friedman_rank(&[], &[]).is_err());
        assert!(friedman_rank(&[vec![1.0], vec![1.0, 2.0]], &[true]).is_err());
        assert!(friedman_rank(&[vec![1.0]], &[true, false]).is_err());
    }

    #[test]
    fn logit_stats_all_zero_logits() {
        let logits = vec![vec![0.0, 0.0], vec![0.0, 0.0]];
        let stats = logit_stats(&logits, &[0, 0], 0.5).unwrap();
        assert_eq!(stats.range(), 0.0);
        let class = &stats.classes[0];
        assert_eq!(class.max_distance, 0.0);
        for h in &class.coordinate_histograms {
            assert_eq!(h.counts.len(), 1);
            assert_eq!(h.total(), 2);
            assert_eq!(h.bin_lower(0), 0.0);
        }
    }

    #[test]
    fn logit_stats_two_sample_fixture_counts() {
        let logits = vec![vec![1.2, -0.3], vec![0.4, 2.0]];
        let labels = vec![1, 1];
        let stats = logit_stats(&logits, &labels, 0.5).unwrap();
        let class = &stats.classes[0];
        assert_eq!(class.class, 1);
        assert_eq!(class.n_samples, 2);
        // coordinate 0: values 1.2 (bin [1.0,1.5)) and 0.4 (bin [0.0,0.5))
        let h0 = &class.coordinate_histograms[0];
        assert_eq!(h0.total(), 2);
        assert_eq!(h0.origin, 0);
        assert_eq!(h0.counts, vec![1, 0, 1]);
        // per-class counts across coordinate histograms sum to n * K
        let total: u64 = class.coordinate_histograms.iter().map(|h| h.total()).sum();
        assert_eq!(total, 2 * 2);
        // range statistic
        assert!((stats.max_logit - 2.0).abs() < 1e-15);
        assert!((stats.min_logit + 0.3).abs() < 1e-15);
        assert!((stats.range() - 2.3).abs() < 1e-15);
        // distances: sample 0 -> max 1.5, sample 1 -> max 1.6
        assert!((class.max_distance - 1.6).abs() < 1e-12);
    }

    #[test]
    fn agreement_ratio_cases() {
        let mk = |selected, agree| PseudoLabelDecision {
            pseudo_class: 0,
            selected,
            agree,
            weak_max_prob: 0.9,
            strong_pred_class: usize::from(!agree),
        };
        let all_agree = vec![mk(true, true); 5];
        assert_eq!(agreement_ratio(&all_agree), Some(1.0));
        let none_selected = vec![mk(false, true), mk(false, false)];
        assert_eq!(agreement_ratio(&none_selected), None);
        let window = vec![mk(true, true), mk(true, true), mk(true, true), mk(true, false)];
        assert_eq!(agreement_ratio(&window), Some(0.75));
    }

    #[test]
    fn dynamics_hand_values() {
        // resolution 3 -> grid {0.25, 0.75}, 0.5 excluded
        let rows = simplex_dynamics(3).unwrap();
        assert_eq!(rows.len(), 2);
        let row = rows.iter().find(|r| (r.p - 0.75).abs() < 1e-12).unwrap();
        assert!((row.min_entropy + 0.75_f64.ln()).abs() < 1e-12);
        assert!((row.d_min_entropy_abs - 4.0 / 3.0).abs() < 1e-12);

        // resolution 99 -> grid step 0.01 includes 0.51
        let rows = simplex_dynamics(99).unwrap();
        let row = rows.iter().find(|r| (r.p - 0.51).abs() < 1e-9).unwrap();
        assert!((row.d_shannon_abs - 0.04).abs() < 2e-4);
        assert!((row.d_min_entropy_abs - 1.9608).abs() < 1e-4);
    }

    #[test]
    fn dynamics_rejects_tiny_resolution() {
        assert!(simplex_dynamics(2).is_err());
    }

    #[test]
    fn dynamics_bound_and_crossover_properties() {
        let rows = simplex_dynamics(199).unwrap();
        for row in &rows {
            assert!(row.shannon >= row.min_entropy - 1e-12, "p={}", row.p);
            assert!(row.d_min_entropy_abs >= 1.0);
            if (0.27..=0.73).contains(&row.p) {
                assert!(
                    row.d_min_entropy_abs >= row.d_shannon_abs,
                    "p={}: min-entropy gradient should dominate",
                    row.p
                );
            }
        }
        // no grid point may sit on the excluded set
        assert!(rows.iter().all(|r| r.p != 0.5 && r.p != 0.0 && r.p != 1.0));
    }

    #[test]
    fn calibration_report_composite() {
        let probs = vec![
            vec![0.9, 0.1],
            vec![0.2, 0.8],
            vec![0.55, 0.45],
            vec![0.3, 0.7],
        ];
        let labels = vec![0, 1, 1, 0];
        let report = calibration_report(&probs, &labels, 10).unwrap();
        assert_eq!(report.n_samples, 4);
        assert!((report.error_rate - 0.5).abs() < 1e-15);
        assert!((0.0..=1.0).contains(&report.ece));
        assert!((0.0..=1.0).contains(&report.aece));
        assert!((0.0..=1.0).contains(&report.cece));
        assert_eq!(report.bins.count.iter().sum::<usize>(), 4);
    }
}
