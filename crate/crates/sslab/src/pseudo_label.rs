//! Pseudo-label generation, confidence-threshold selection, and the partition
//! of selected samples by weak/strong prediction agreement.
//!
//! Three selection strategies are provided:
//!
//! - `fixed`: a constant threshold `tau` (FixMatch-style),
//! - `class_adaptive`: per-class thresholds `tau * sigma_c / max_c sigma_c`
//!   from running counts of confident predictions (FlexMatch-style),
//! - `self_adaptive`: a global EMA of batch confidence modulated per class by
//!   an EMA of the mean predicted distribution (FreeMatch-style).
//!
//! Selected samples whose weak and strong argmax predictions differ form the
//! disagreement set; the rest form the agreement set, on which the trained
//! pseudo-label loss reduces to the min-entropy of the strong view.

use serde::{Deserialize, Serialize};

use crate::core_math::argmax_tiebreak;
use crate::error::{Error, Result};

/// Per-sample record of one selection decision.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct PseudoLabelDecision {
    /// Argmax class of the weak view; the pseudo-label.
    pub pseudo_class: usize,
    /// Whether the weak confidence cleared the applicable threshold.
    pub selected: bool,
    /// Whether weak and strong argmax predictions coincide.
    pub agree: bool,
    pub weak_max_prob: f64,
    pub strong_pred_class: usize,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ThresholdStrategy {
    Fixed,
    ClassAdaptive,
    SelfAdaptive,
}

impl ThresholdStrategy {
    pub fn parse(name: &str) -> Result<Self> {
        match name {
            "fixed" => Ok(ThresholdStrategy::Fixed),
            "class_adaptive" => Ok(ThresholdStrategy::ClassAdaptive),
            "self_adaptive" => Ok(ThresholdStrategy::SelfAdaptive),
            other => Err(Error::InvalidConfig(format!(
                "unknown threshold strategy '{other}'"
            ))),
        }
    }

    pub fn name(&self) -> &'static str {
        match self {
            ThresholdStrategy::Fixed => "fixed",
            ThresholdStrategy::ClassAdaptive => "class_adaptive",
            ThresholdStrategy::SelfAdaptive => "self_adaptive",
        }
    }
}

/// Evolving selection-threshold state.
///
/// A base `tau` above 1 is allowed and selects nothing, which is how a
/// supervised-only run is expressed.
#[derive(Debug, Clone, PartialEq)]
pub struct ThresholdState {
    strategy: ThresholdStrategy,
    num_classes: usize,
    tau: f64,
    /// Running confident-prediction counts per class (class-adaptive).
    class_counts: Vec<f64>,
    /// Global EMA threshold (self-adaptive), initialized to `1/K`.
    ema_tau: f64,
    /// EMA of the mean predicted distribution (self-adaptive).
    ema_probs: Vec<f64>,
    ema_decay: f64,
}

impl ThresholdState {
    pub fn fixed(num_classes: usize, tau: f64) -> Result<Self> {
        Self::new(ThresholdStrategy::Fixed, num_classes, tau, 0.999)
    }

    pub fn class_adaptive(num_classes: usize, tau: f64) -> Result<Self> {
        Self::new(ThresholdStrategy::ClassAdaptive, num_classes, tau, 0.999)
    }

    pub fn self_adaptive(num_classes: usize, ema_decay: f64) -> Result<Self> {
        Self::new(ThresholdStrategy::SelfAdaptive, num_classes, 0.95, ema_decay)
    }

    pub fn new(
        strategy: ThresholdStrategy,
        num_classes: usize,
        tau: f64,
        ema_decay: f64,
    ) -> Result<Self> {
        if num_classes < 2 {
            return Err(Error::InvalidConfig("need at least 2 classes".into()));
        }
        if !tau.is_finite() || tau <= 0.0 {
            return Err(Error::InvalidConfig(format!(
                "threshold tau must be positive, got {tau}"
            )));
        }
        if !(0.0..1.0).contains(&ema_decay) {
            return Err(Error::InvalidConfig(format!(
                "EMA decay must be in [0, 1), got {ema_decay}"
            )));
        }
        let k = num_classes as f64;
        Ok(ThresholdState {
            strategy,
            num_classes,
            tau,
            class_counts: vec![0.0; num_classes],
            ema_tau: 1.0 / k,
            ema_probs: vec![1.0 / k; num_classes],
            ema_decay,
        })
    }

    pub fn strategy(&self) -> ThresholdStrategy {
        self.strategy
    }

    pub fn num_classes(&self) -> usize {
        self.num_classes
    }

    pub fn base_tau(&self) -> f64 {
        self.tau
    }

    /// The scalar threshold reported in logs: the base `tau` for fixed and
    /// class-adaptive strategies, the EMA value for the self-adaptive one.
    pub fn global_threshold(&self) -> f64 {
        match self.strategy {
            ThresholdStrategy::Fixed | ThresholdStrategy::ClassAdaptive => self.tau,
            ThresholdStrategy::SelfAdaptive => self.ema_tau,
        }
    }

    /// Threshold a pseudo-label of `class` must clear right now.
    pub fn threshold_for(&self, class: usize) -> f64 {
        match self.strategy {
            ThresholdStrategy::Fixed => self.tau,
            ThresholdStrategy::ClassAdaptive => {
                let max = self.class_counts.iter().copied().fold(0.0, f64::max);
                if max == 0.0 {
                    self.tau
                } else {
                    self.tau * self.class_counts[class] / max
                }
            }
            ThresholdStrategy::SelfAdaptive => {
                let max = self.ema_probs.iter().copied().fold(0.0, f64::max);
                self.ema_tau * self.ema_probs[class] / max
            }
        }
    }

    pub fn per_class_thresholds(&self) -> Vec<f64> {
        (0..self.num_classes).map(|c| self.threshold_for(c)).collect()
    }

    pub fn class_counts(&self) -> &[f64] {
        &self.class_counts
    }

    pub fn ema_probs(&self) -> &[f64] {
        &self.ema_probs
    }
}

/// One selection decision from the weak/strong probability pair.
pub fn decide(
    weak_probs: &[f64],
    strong_probs: &[f64],
    state: &ThresholdState,
) -> Result<PseudoLabelDecision> {
    if weak_probs.len() != strong_probs.len() || weak_probs.len() != state.num_classes() {
        return Err(Error::ShapeMismatch(format!(
            "weak {} / strong {} / state {} class counts differ",
            weak_probs.len(),
            strong_probs.len(),
            state.num_classes()
        )));
    }
    let pseudo_class = argmax_tiebreak(weak_probs)?;
    let strong_pred_class = argmax_tiebreak(strong_probs)?;
    let weak_max_prob = weak_probs[pseudo_class];
    let selected = weak_max_prob >= state.threshold_for(pseudo_class);
    Ok(PseudoLabelDecision {
        pseudo_class,
        selected,
        agree: pseudo_class == strong_pred_class,
        weak_max_prob,
        strong_pred_class,
    })
}

/// Fixed strategy: the identity update.
pub fn update_fixed(_state: &mut ThresholdState) {}

/// Class-adaptive update: grow running counts of samples whose weak
/// confidence cleared the *base* threshold, attributed to their pseudo-class.
pub fn update_class_adaptive(state: &mut ThresholdState, batch: &[PseudoLabelDecision]) {
    for d in batch {
        if d.weak_max_prob >= state.tau {
            state.class_counts[d.pseudo_class] += 1.0;
        }
    }
}

/// Self-adaptive update from the batch of weak-view probability vectors:
/// EMA of the mean max-probability and of the mean distribution.
pub fn update_self_adaptive(state: &mut ThresholdState, weak_probs_batch: &[Vec<f64>]) {
    if weak_probs_batch.is_empty() {
        return;
    }
    let n = weak_probs_batch.len() as f64;
    let mut mean_max = 0.0;
    let mut mean_probs = vec![0.0; state.num_classes];
    for probs in weak_probs_batch {
        mean_max += probs.iter().copied().fold(f64::NEG_INFINITY, f64::max);
        for (m, &p) in mean_probs.iter_mut().zip(probs) {
            *m += p;
        }
    }
    mean_max /= n;
    for m in &mut mean_probs {
        *m /= n;
    }
    let lambda = state.ema_decay;
    state.ema_tau = lambda * state.ema_tau + (1.0 - lambda) * mean_max;
    for (e, m) in state.ema_probs.iter_mut().zip(&mean_probs) {
        *e = lambda * *e + (1.0 - lambda) * m;
    }
}

/// Split one batch of decisions into (disagreement, agreement) index sets
/// among the selected samples. Unselected samples appear in neither.
pub fn partition(decisions: &[PseudoLabelDecision]) -> (Vec<usize>, Vec<usize>) {
    let mut disagree = Vec::new();
    let mut agree = Vec::new();
    for (i, d) in decisions.iter().enumerate() {
        if d.selected {
            if d.agree {
                agree.push(i);
            } else {
                disagree.push(i);
            }
        }
    }
    (disagree, agree)
}
