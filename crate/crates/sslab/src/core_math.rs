//! Deterministic double-precision primitives: simplex points, the entropy
//! family, argmax with defined tie-breaking, and the elementwise hinge.
//!
//! Everything here is a pure function in natural-log units. These are the
//! objects the loss terms and calibration metrics are built from, so the
//! conventions are pinned once and tested here:
//!
//! - `0 * ln 0 = 0` in entropies (continuous extension),
//! - argmax ties break to the lowest index,
//! - softmax is computed with max-subtraction and is shift-invariant.

use crate::error::{Error, Result};

/// Pre-softmax scores for `K >= 2` classes. Entries must be finite.
#[derive(Debug, Clone, PartialEq)]
pub struct LogitVector(Vec<f64>);

impl LogitVector {
    pub fn new(values: Vec<f64>) -> Result<Self> {
        if values.len() < 2 {
            return Err(Error::InvalidInput(format!(
                "logit vector needs at least 2 classes, got {}",
                values.len()
            )));
        }
        if values.iter().any(|v| !v.is_finite()) {
            return Err(Error::InvalidInput("non-finite logit".into()));
        }
        Ok(LogitVector(values))
    }

    pub fn values(&self) -> &[f64] {
        &self.0
    }

    pub fn num_classes(&self) -> usize {
        self.0.len()
    }
}

/// A point on the `K`-simplex: entries in `[0, 1]` summing to 1 within 1e-12.
#[derive(Debug, Clone, PartialEq)]
pub struct ProbVector(Vec<f64>);

impl ProbVector {
    pub fn new(values: Vec<f64>) -> Result<Self> {
        if values.len() < 2 {
            return Err(Error::InvalidInput(format!(
                "probability vector needs at least 2 classes, got {}",
                values.len()
            )));
        }
        let mut sum = 0.0;
        for &v in &values {
            if !(0.0..=1.0).contains(&v) {
                return Err(Error::InvalidInput(format!(
                    "probability {v} outside [0, 1]"
                )));
            }
            sum += v;
        }
        if (sum - 1.0).abs() > 1e-12 {
            return Err(Error::InvalidInput(format!(
                "probabilities sum to {sum}, not 1"
            )));
        }
        Ok(ProbVector(values))
    }

    pub fn values(&self) -> &[f64] {
        &self.0
    }

    pub fn num_classes(&self) -> usize {
        self.0.len()
    }
}

/// A hard label: exactly one of `K` classes.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct OneHot {
    class_index: usize,
    num_classes: usize,
}

impl OneHot {
    pub fn new(class_index: usize, num_classes: usize) -> Result<Self> {
        if num_classes < 2 || class_index >= num_classes {
            return Err(Error::InvalidInput(format!(
                "class index {class_index} out of range for {num_classes} classes"
            )));
        }
        Ok(OneHot {
            class_index,
            num_classes,
        })
    }

    pub fn class_index(&self) -> usize {
        self.class_index
    }

    pub fn num_classes(&self) -> usize {
        self.num_classes
    }
}

/// Stable softmax. Shift-invariant: `softmax(l + c) = softmax(l)`.
pub fn softmax(logits: &LogitVector) -> ProbVector {
    let mut out = vec![0.0; logits.num_classes()];
    softmax_slice(logits.values(), &mut out);
    ProbVector(out)
}

/// Hot-path softmax kernel for pre-validated finite logits.
pub(crate) fn softmax_slice(logits: &[f64], out: &mut [f64]) {
    debug_assert_eq!(logits.len(), out.len());
    let max = logits.iter().copied().fold(f64::NEG_INFINITY, f64::max);
    let mut sum = 0.0;
    for (o, &l) in out.iter_mut().zip(logits) {
        let e = (l - max).exp();
        *o = e;
        sum += e;
    }
    for o in out.iter_mut() {
        *o /= sum;
    }
}

/// Softmax over each row of a batch of finite logit vectors.
pub fn softmax_batch(logits: &[Vec<f64>]) -> Vec<Vec<f64>> {
    logits
        .iter()
        .map(|l| {
            let mut out = vec![0.0; l.len()];
            softmax_slice(l, &mut out);
            out
        })
        .collect()
}

/// `log(sum_k exp(v_k))`, computed with max-subtraction.
pub(crate) fn log_sum_exp(values: &[f64]) -> f64 {
    let max = values.iter().copied().fold(f64::NEG_INFINITY, f64::max);
    let sum: f64 = values.iter().map(|&v| (v - max).exp()).sum();
    max + sum.ln()
}

/// Shannon entropy `H(p) = -sum_k p_k ln p_k` in nats, with `0 ln 0 = 0`.
pub fn shannon_entropy(p: &ProbVector) -> f64 {
    shannon_entropy_slice(p.values())
}

pub(crate) fn shannon_entropy_slice(p: &[f64]) -> f64 {
    let mut h = 0.0;
    for &q in p {
        if q > 0.0 {
            h -= q * q.ln();
        }
    }
    // Clamp the -0.0 that a pure vertex produces.
    if h == 0.0 {
        0.0
    } else {
        h
    }
}

/// Min-entropy `-ln(max_k p_k)` in nats: the lower bound of Shannon entropy
/// that the agreement part of the pseudo-label loss turns out to minimize.
pub fn min_entropy(p: &ProbVector) -> f64 {
    min_entropy_slice(p.values())
}

pub(crate) fn min_entropy_slice(p: &[f64]) -> f64 {
    let max = p.iter().copied().fold(f64::NEG_INFINITY, f64::max);
    let v = -max.ln();
    if v == 0.0 {
        0.0
    } else {
        v
    }
}

/// Index of the maximum entry; ties break to the lowest index.
pub fn argmax_tiebreak(values: &[f64]) -> Result<usize> {
    if values.is_empty() {
        return Err(Error::InvalidInput("argmax of empty vector".into()));
    }
    if values.iter().any(|v| !v.is_finite()) {
        return Err(Error::InvalidInput("argmax over non-finite values".into()));
    }
    let mut best = 0;
    for (i, &v) in values.iter().enumerate().skip(1) {
        if v > values[best] {
            best = i;
        }
    }
    Ok(best)
}

/// `max(0, x)`.
pub fn hinge(x: f64) -> f64 {
    x.max(0.0)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::rng::RngStream;
    use proptest::prelude::*;

    fn prob(values: &[f64]) -> ProbVector {
        ProbVector::new(values.to_vec()).unwrap()
    }

    fn logits(values: &[f64]) -> LogitVector {
        LogitVector::new(values.to_vec()).unwrap()
    }

    #[test]
    fn softmax_uniform_on_equal_logits() {
        let p = softmax(&logits(&[0.0, 0.0, 0.0]));
        for &v in p.values() {
            assert!((v - 1.0 / 3.0).abs() < 1e-15);
        }
    }

    #[test]
    fn softmax_hand_case_ln2() {
        let p = softmax(&logits(&[2.0_f64.ln(), 0.0]));
        assert!((p.values()[0] - 2.0 / 3.0).abs() < 1e-15);
        assert!((p.values()[1] - 1.0 / 3.0).abs() < 1e-15);
    }

    #[test]
    fn softmax_extreme_logits_no_overflow() {
        let p = softmax(&logits(&[1000.0, 0.0]));
        assert_eq!(p.values()[0], 1.0);
        assert!(p.values()[1] < 1e-300);
        assert!(p.values().iter().all(|v| v.is_finite()));
    }

    #[test]
    fn logit_vector_rejects_non_finite_and_short() {
        assert!(LogitVector::new(vec![f64::NAN, 0.0]).is_err());
        assert!(LogitVector::new(vec![f64::INFINITY, 0.0]).is_err());
        assert!(LogitVector::new(vec![1.0]).is_err());
    }

    #[test]
    fn shannon_entropy_cases() {
        assert!((shannon_entropy(&prob(&[0.5, 0.5])) - 2.0_f64.ln()).abs() < 1e-15);
        assert_eq!(shannon_entropy(&prob(&[1.0, 0.0])), 0.0);
        // -0.25 ln 0.25 - 0.75 ln 0.75
        let expected = -(0.25_f64 * 0.25_f64.ln() + 0.75 * 0.75_f64.ln());
        assert!((expected - 0.5623).abs() < 5e-5);
        assert!((shannon_entropy(&prob(&[0.25, 0.75])) - expected).abs() < 1e-15);
    }

    #[test]
    fn min_entropy_cases() {
        assert_eq!(min_entropy(&prob(&[1.0, 0.0, 0.0])), 0.0);
        assert!((min_entropy(&prob(&[0.25, 0.75])) + 0.75_f64.ln()).abs() < 1e-15);
    }

    #[test]
    fn argmax_cases() {
        assert_eq!(argmax_tiebreak(&[0.2, 0.7, 0.1]).unwrap(), 1);
        assert_eq!(argmax_tiebreak(&[0.5, 0.5]).unwrap(), 0);
        assert_eq!(argmax_tiebreak(&[3.0, 3.0, 0.0]).unwrap(), 0);
        assert!(argmax_tiebreak(&[]).is_err());
    }

    #[test]
    fn hinge_cases() {
        assert_eq!(hinge(-2.0), 0.0);
        assert_eq!(hinge(0.0), 0.0);
        assert_eq!(hinge(3.5), 3.5);
    }

    #[test]
    fn onehot_bounds() {
        assert!(OneHot::new(3, 4).is_ok());
        assert!(OneHot::new(4, 4).is_err());
        assert!(OneHot::new(0, 1).is_err());
    }

    /// Dirichlet(1,..,1) sample via normalized exponentials.
    fn dirichlet_uniform(k: usize, stream: &mut RngStream) -> Vec<f64> {
        let mut draws: Vec<f64> = (0..k).map(|_| -stream.next_open_f64().ln()).collect();
        let sum: f64 = draws.iter().sum();
        for d in &mut draws {
            *d /= sum;
        }
        draws
    }

    #[test]
    fn min_entropy_bounded_by_shannon_on_simplex_samples() {
        let mut stream = RngStream::new(11, "dirichlet", 0, 0);
        for i in 0..100_000 {
            let k = 2 + (i % 9);
            let p = dirichlet_uniform(k, &mut stream);
            let h = shannon_entropy_slice(&p);
            let me = min_entropy_slice(&p);
            assert!(me <= h + 1e-12, "minEnt {me} > H {h} at sample {i}");
            assert!(h <= (k as f64).ln() + 1e-12);
        }
    }

    #[test]
    fn min_entropy_zero_exactly_at_vertices() {
        for k in 2..6 {
            for c in 0..k {
                let mut v = vec![0.0; k];
                v[c] = 1.0;
                assert_eq!(min_entropy(&prob(&v)), 0.0);
            }
        }
    }

    #[test]
    fn shannon_entropy_max_at_uniform() {
        for k in 2..12 {
            let p = prob(&vec![1.0 / k as f64; k]);
            assert!((shannon_entropy(&p) - (k as f64).ln()).abs() < 1e-12);
        }
    }

    /// On the 2-class simplex the min-entropy gradient magnitude dominates the
    /// Shannon one near the middle, which is the mechanism that makes the
    /// agreement term aggressive early in training.
    #[test]
    fn min_entropy_gradient_dominates_near_center() {
        let mut q: f64 = 0.35;
        while q <= 0.65 + 1e-9 {
            if (q - 0.5).abs() > 1e-9 {
                let d_h = ((1.0 - q) / q).ln().abs();
                let d_me = 1.0 / q.max(1.0 - q);
                assert!(d_me > d_h, "q={q}: |d minEnt|={d_me} <= |dH|={d_h}");
                assert!(d_me >= 1.0);
            }
            q += 0.01;
        }
    }

    proptest! {
        #[test]
        fn softmax_sums_to_one(raw in proptest::collection::vec(-50.0f64..50.0, 2..12)) {
            let p = softmax(&logits(&raw));
            let sum: f64 = p.values().iter().sum();
            prop_assert!((sum - 1.0).abs() < 1e-12);
            prop_assert!(ProbVector::new(p.values().to_vec()).is_ok());
        }

        #[test]
        fn softmax_shift_invariant(
            raw in proptest::collection::vec(-30.0f64..30.0, 2..8),
            shift in -25.0f64..25.0,
        ) {
            let base = softmax(&logits(&raw));
            let shifted_raw: Vec<f64> = raw.iter().map(|v| v + shift).collect();
            let shifted = softmax(&logits(&shifted_raw));
            for (a, b) in base.values().iter().zip(shifted.values()) {
                prop_assert!((a - b).abs() < 1e-12);
            }
        }

        #[test]
        fn argmax_matches_position_of_max(raw in proptest::collection::vec(-10.0f64..10.0, 1..10)) {
            let idx = argmax_tiebreak(&raw).unwrap();
            let max = raw.iter().copied().fold(f64::NEG_INFINITY, f64::max);
            prop_assert_eq!(raw[idx], max);
            // lowest-index rule
            for (i, &v) in raw.iter().enumerate() {
                if v == max {
                    prop_assert!(idx <= i);
                    break;
                }
            }
        }
    }
}
