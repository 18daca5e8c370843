//! Loss terms and their logit gradients.
//!
//! The training objective is
//!
//! ```text
//! total = supervised CE  +  masked pseudo-CE  +  lambda * margin penalty
//! ```
//!
//! where the masked pseudo-CE over selected unlabeled samples splits, by
//! weak/strong agreement, into a corrective pseudo-CE on the disagreement set
//! and a min-entropy term `-ln(max_k softmax(l)_k)` on the agreement set. The
//! two routes to that quantity ([`pseudo_ce_masked`] and [`decompose`]) are
//! implemented independently and checked against each other in the tests.
//!
//! The margin penalty hinges logit distances `max_j l_j - l_k` against a
//! margin `m`, pulling oversized logit gaps back in without touching the
//! predicted class. Label smoothing and focal variants of the pseudo-CE are
//! provided as calibration baselines.
//!
//! Unlabeled terms are normalized by the full unlabeled batch size, not the
//! selected count, so loss weights keep their meaning as the selection ratio
//! moves.

use serde::{Deserialize, Serialize};

use crate::core_math::{argmax_tiebreak, log_sum_exp, softmax_slice};
use crate::error::{Error, Result};
use crate::pseudo_label::PseudoLabelDecision;

/// Which selected samples the margin penalty applies to.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ApplySet {
    /// Agreement set only (the default; the disagreement set carries the
    /// corrective signal and is left alone).
    U2Only,
    /// All selected samples, for the ablation arm.
    U1AndU2,
}

impl ApplySet {
    pub fn parse(name: &str) -> Result<Self> {
        match name {
            "u2_only" => Ok(ApplySet::U2Only),
            "u1_and_u2" => Ok(ApplySet::U1AndU2),
            other => Err(Error::InvalidConfig(format!(
                "unknown apply set '{other}' (expected u2_only or u1_and_u2)"
            ))),
        }
    }

    pub fn name(&self) -> &'static str {
        match self {
            ApplySet::U2Only => "u2_only",
            ApplySet::U1AndU2 => "u1_and_u2",
        }
    }

    fn applies(&self, d: &PseudoLabelDecision) -> bool {
        match self {
            ApplySet::U2Only => d.selected && d.agree,
            ApplySet::U1AndU2 => d.selected,
        }
    }
}

/// Margin-penalty configuration.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct MarginConfig {
    /// Margin `m > 0` shared by every class.
    pub margin: f64,
    /// Penalty weight `lambda >= 0`; zero disables the penalty.
    pub lambda: f64,
    pub apply_set: ApplySet,
}

impl Default for MarginConfig {
    fn default() -> Self {
        MarginConfig {
            margin: 10.0,
            lambda: 0.1,
            apply_set: ApplySet::U2Only,
        }
    }
}

impl MarginConfig {
    pub fn validate(&self) -> Result<()> {
        if !(self.margin > 0.0) || !self.margin.is_finite() {
            return Err(Error::InvalidConfig(format!(
                "margin must be > 0, got {}",
                self.margin
            )));
        }
        if !(self.lambda >= 0.0) || !self.lambda.is_finite() {
            return Err(Error::InvalidConfig(format!(
                "lambda must be >= 0, got {}",
                self.lambda
            )));
        }
        Ok(())
    }
}

/// Which unsupervised loss the selected samples are trained with.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case", tag = "kind")]
pub enum UnsupervisedLoss {
    PseudoCe,
    LabelSmoothing { eps: f64 },
    Focal { gamma: f64 },
}

/// The additive pieces of one total-loss evaluation. The unsupervised term is
/// split by the agreement partition; for the plain pseudo-CE the agreement
/// part equals the min-entropy of the strong view exactly.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct LossBreakdown {
    pub supervised_ce: f64,
    pub pseudo_ce_u1: f64,
    pub min_entropy_u2: f64,
    pub penalty: f64,
    pub total: f64,
    pub n_labeled: usize,
    pub n_u1: usize,
    pub n_u2: usize,
}

impl LossBreakdown {
    fn zero() -> Self {
        LossBreakdown {
            supervised_ce: 0.0,
            pseudo_ce_u1: 0.0,
            min_entropy_u2: 0.0,
            penalty: 0.0,
            total: 0.0,
            n_labeled: 0,
            n_u1: 0,
            n_u2: 0,
        }
    }
}

fn zero_grads(logits: &[Vec<f64>]) -> Vec<Vec<f64>> {
    logits.iter().map(|l| vec![0.0; l.len()]).collect()
}

fn check_alignment(strong_logits: &[Vec<f64>], decisions: &[PseudoLabelDecision]) -> Result<()> {
    if strong_logits.len() != decisions.len() {
        return Err(Error::ShapeMismatch(format!(
            "{} strong logits for {} decisions",
            strong_logits.len(),
            decisions.len()
        )));
    }
    Ok(())
}

/// Mean cross-entropy of logits against hard labels, with gradient
/// `(softmax - onehot) / batch`.
pub fn supervised_ce(logits: &[Vec<f64>], labels: &[usize]) -> Result<(f64, Vec<Vec<f64>>)> {
    if logits.is_empty() {
        return Err(Error::InvalidInput("supervised CE over empty batch".into()));
    }
    if logits.len() != labels.len() {
        return Err(Error::ShapeMismatch(format!(
            "{} logits for {} labels",
            logits.len(),
            labels.len()
        )));
    }
    let n = logits.len() as f64;
    let mut loss = 0.0;
    let mut grads = zero_grads(logits);
    for ((l, &y), g) in logits.iter().zip(labels).zip(&mut grads) {
        if y >= l.len() {
            return Err(Error::InvalidInput(format!(
                "label {y} out of range for {} classes",
                l.len()
            )));
        }
        loss += log_sum_exp(l) - l[y];
        softmax_slice(l, g);
        g[y] -= 1.0;
        for v in g.iter_mut() {
            *v /= n;
        }
    }
    Ok((loss / n, grads))
}

/// Thresholded pseudo-cross-entropy: selected samples are trained against
/// their weak-view pseudo-label; unselected samples contribute nothing.
pub fn pseudo_ce_masked(
    strong_logits: &[Vec<f64>],
    decisions: &[PseudoLabelDecision],
) -> Result<(f64, Vec<Vec<f64>>)> {
    check_alignment(strong_logits, decisions)?;
    let mut grads = zero_grads(strong_logits);
    if strong_logits.is_empty() {
        return Ok((0.0, grads));
    }
    let n_u = strong_logits.len() as f64;
    let mut loss = 0.0;
    for ((l, d), g) in strong_logits.iter().zip(decisions).zip(&mut grads) {
        if !d.selected {
            continue;
        }
        let c = d.pseudo_class;
        if c >= l.len() {
            return Err(Error::InvalidInput(format!(
                "pseudo-class {c} out of range for {} classes",
                l.len()
            )));
        }
        loss += log_sum_exp(l) - l[c];
        softmax_slice(l, g);
        g[c] -= 1.0;
        for v in g.iter_mut() {
            *v /= n_u;
        }
    }
    Ok((loss / n_u, grads))
}

/// Split the masked pseudo-CE by the agreement partition: pseudo-CE over the
/// disagreement set, and over the agreement set the min-entropy of the strong
/// view, `lse(l) - max_k l_k`. The two parts recompose to
/// [`pseudo_ce_masked`] exactly.
pub fn decompose(
    strong_logits: &[Vec<f64>],
    decisions: &[PseudoLabelDecision],
) -> Result<LossBreakdown> {
    check_alignment(strong_logits, decisions)?;
    let mut out = LossBreakdown::zero();
    if strong_logits.is_empty() {
        return Ok(out);
    }
    let n_u = strong_logits.len() as f64;
    for (l, d) in strong_logits.iter().zip(decisions) {
        if !d.selected {
            continue;
        }
        if d.agree {
            let max = l.iter().copied().fold(f64::NEG_INFINITY, f64::max);
            out.min_entropy_u2 += log_sum_exp(l) - max;
            out.n_u2 += 1;
        } else {
            out.pseudo_ce_u1 += log_sum_exp(l) - l[d.pseudo_class];
            out.n_u1 += 1;
        }
    }
    out.pseudo_ce_u1 /= n_u;
    out.min_entropy_u2 /= n_u;
    out.total = out.pseudo_ce_u1 + out.min_entropy_u2;
    Ok(out)
}

/// Distances from the winner logit: `d_k = max_j l_j - l_k`.
pub fn logit_distances(logits: &[f64]) -> Vec<f64> {
    let max = logits.iter().copied().fold(f64::NEG_INFINITY, f64::max);
    logits.iter().map(|&l| max - l).collect()
}

/// Hinge penalty on logit distances exceeding the margin, over the configured
/// apply set:
///
/// ```text
/// lambda / n_u * sum_i sum_k max(0, max_j l_ij - l_ik - m)
/// ```
///
/// Per sample, each violating logit receives gradient `-lambda / n_u` and the
/// winner logit the balancing `+lambda |violations| / n_u`. Distances exactly
/// at the margin count as inactive; winner ties resolve to the lowest index.
pub fn margin_penalty(
    strong_logits: &[Vec<f64>],
    decisions: &[PseudoLabelDecision],
    cfg: &MarginConfig,
) -> Result<(f64, Vec<Vec<f64>>)> {
    cfg.validate()?;
    check_alignment(strong_logits, decisions)?;
    let mut grads = zero_grads(strong_logits);
    if strong_logits.is_empty() || cfg.lambda == 0.0 {
        return Ok((0.0, grads));
    }
    let n_u = strong_logits.len() as f64;
    let scale = cfg.lambda / n_u;
    let mut loss = 0.0;
    for ((l, d), g) in strong_logits.iter().zip(decisions).zip(&mut grads) {
        if !cfg.apply_set.applies(d) {
            continue;
        }
        let winner = argmax_tiebreak(l)?;
        let top = l[winner];
        let mut violations = 0usize;
        for (gk, &lk) in g.iter_mut().zip(l.iter()) {
            let excess = top - lk - cfg.margin;
            if excess > 0.0 {
                loss += scale * excess;
                *gk -= scale;
                violations += 1;
            }
        }
        g[winner] += scale * violations as f64;
    }
    Ok((loss, grads))
}

/// Pseudo-CE against label-smoothed targets `(1 - eps) onehot + eps / K`.
pub fn ls_pseudo_ce(
    strong_logits: &[Vec<f64>],
    decisions: &[PseudoLabelDecision],
    eps: f64,
) -> Result<(f64, Vec<Vec<f64>>)> {
    if !(0.0..1.0).contains(&eps) {
        return Err(Error::InvalidConfig(format!(
            "label smoothing eps must be in [0, 1), got {eps}"
        )));
    }
    check_alignment(strong_logits, decisions)?;
    let mut grads = zero_grads(strong_logits);
    if strong_logits.is_empty() {
        return Ok((0.0, grads));
    }
    let n_u = strong_logits.len() as f64;
    let mut loss = 0.0;
    for ((l, d), g) in strong_logits.iter().zip(decisions).zip(&mut grads) {
        if !d.selected {
            continue;
        }
        let k = l.len() as f64;
        let lse = log_sum_exp(l);
        softmax_slice(l, g);
        let mut sample = 0.0;
        for (j, (&lj, gj)) in l.iter().zip(g.iter_mut()).enumerate() {
            let target = if j == d.pseudo_class {
                (1.0 - eps) + eps / k
            } else {
                eps / k
            };
            sample += target * (lse - lj);
            *gj = (*gj - target) / n_u;
        }
        loss += sample;
    }
    Ok((loss / n_u, grads))
}

/// Focal pseudo-CE: `(1 - p_t)^gamma * (-ln p_t)` per selected sample, with
/// `p_t` the strong-view probability of the pseudo-class.
pub fn focal_pseudo_ce(
    strong_logits: &[Vec<f64>],
    decisions: &[PseudoLabelDecision],
    gamma: f64,
) -> Result<(f64, Vec<Vec<f64>>)> {
    if !(gamma >= 0.0) || !gamma.is_finite() {
        return Err(Error::InvalidConfig(format!(
            "focal gamma must be >= 0, got {gamma}"
        )));
    }
    check_alignment(strong_logits, decisions)?;
    let mut grads = zero_grads(strong_logits);
    if strong_logits.is_empty() {
        return Ok((0.0, grads));
    }
    let n_u = strong_logits.len() as f64;
    let mut loss = 0.0;
    for ((l, d), g) in strong_logits.iter().zip(decisions).zip(&mut grads) {
        if !d.selected {
            continue;
        }
        let c = d.pseudo_class;
        let nll = log_sum_exp(l) - l[c];
        softmax_slice(l, g);
        let p_t = g[c];
        let one_minus = 1.0 - p_t;
        let weight = one_minus.powf(gamma);
        loss += weight * nll;
        // d/dl_k [(1-p_t)^g * nll] = (p_k - delta_tk) * (w + g (1-p_t)^{g-1} p_t nll);
        // the correction vanishes in the p_t -> 1 limit since nll ~ (1 - p_t).
        let correction = if gamma > 0.0 && one_minus > 0.0 {
            gamma * one_minus.powf(gamma - 1.0) * p_t * nll
        } else {
            0.0
        };
        let factor = weight + correction;
        for (j, gj) in g.iter_mut().enumerate() {
            let delta = if j == c { 1.0 } else { 0.0 };
            *gj = (*gj - delta) * factor / n_u;
        }
    }
    Ok((loss / n_u, grads))
}

/// Everything one optimizer step needs: the loss pieces and the logit
/// gradients for both batches.
#[derive(Debug, Clone)]
pub struct TotalLossOutput {
    pub breakdown: LossBreakdown,
    pub dlogits_labeled: Vec<Vec<f64>>,
    pub dlogits_strong: Vec<Vec<f64>>,
}

/// The full objective: supervised CE + the chosen unsupervised loss over
/// selected samples + the margin penalty. Gradients are the sums of the
/// component gradients.
pub fn total_loss(
    labeled_logits: &[Vec<f64>],
    labels: &[usize],
    strong_logits: &[Vec<f64>],
    decisions: &[PseudoLabelDecision],
    margin_cfg: &MarginConfig,
    unsup: UnsupervisedLoss,
) -> Result<TotalLossOutput> {
    let (sup_loss, dlogits_labeled) = supervised_ce(labeled_logits, labels)?;
    let (unsup_loss, mut dlogits_strong) = match unsup {
        UnsupervisedLoss::PseudoCe => pseudo_ce_masked(strong_logits, decisions)?,
        UnsupervisedLoss::LabelSmoothing { eps } => ls_pseudo_ce(strong_logits, decisions, eps)?,
        UnsupervisedLoss::Focal { gamma } => focal_pseudo_ce(strong_logits, decisions, gamma)?,
    };
    let (penalty, penalty_grads) = margin_penalty(strong_logits, decisions, margin_cfg)?;
    for (g, pg) in dlogits_strong.iter_mut().zip(&penalty_grads) {
        for (a, b) in g.iter_mut().zip(pg) {
            *a += b;
        }
    }

    let mut breakdown = split_unsupervised(strong_logits, decisions, unsup, unsup_loss)?;
    breakdown.supervised_ce = sup_loss;
    breakdown.penalty = penalty;
    breakdown.n_labeled = labeled_logits.len();
    breakdown.total =
        breakdown.supervised_ce + breakdown.pseudo_ce_u1 + breakdown.min_entropy_u2 + penalty;
    Ok(TotalLossOutput {
        breakdown,
        dlogits_labeled,
        dlogits_strong,
    })
}

/// Report the unsupervised loss split by the agreement partition.
fn split_unsupervised(
    strong_logits: &[Vec<f64>],
    decisions: &[PseudoLabelDecision],
    unsup: UnsupervisedLoss,
    total_unsup: f64,
) -> Result<LossBreakdown> {
    match unsup {
        UnsupervisedLoss::PseudoCe => decompose(strong_logits, decisions),
        // For the baseline losses, charge each selected sample's term to its
        // partition slot; the slots still sum to the trained value.
        UnsupervisedLoss::LabelSmoothing { .. } | UnsupervisedLoss::Focal { .. } => {
            let mut out = LossBreakdown::zero();
            let mut u1_share = 0.0;
            let mut n_u1 = 0usize;
            let mut n_u2 = 0usize;
            if !strong_logits.is_empty() {
                let per_sample = per_sample_unsup_terms(strong_logits, decisions, unsup)?;
                for (d, term) in decisions.iter().zip(per_sample) {
                    if d.selected {
                        if d.agree {
                            n_u2 += 1;
                        } else {
                            n_u1 += 1;
                            u1_share += term;
                        }
                    }
                }
                u1_share /= strong_logits.len() as f64;
            }
            out.pseudo_ce_u1 = u1_share;
            out.min_entropy_u2 = total_unsup - u1_share;
            out.n_u1 = n_u1;
            out.n_u2 = n_u2;
            out.total = total_unsup;
            Ok(out)
        }
    }
}

fn per_sample_unsup_terms(
    strong_logits: &[Vec<f64>],
    decisions: &[PseudoLabelDecision],
    unsup: UnsupervisedLoss,
) -> Result<Vec<f64>> {
    strong_logits
        .iter()
        .zip(decisions)
        .map(|(l, d)| {
            if !d.selected {
                return Ok(0.0);
            }
            let nll = log_sum_exp(l) - l[d.pseudo_class];
            match unsup {
                UnsupervisedLoss::PseudoCe => Ok(nll),
                UnsupervisedLoss::Focal { gamma } => {
                    let mut p = vec![0.0; l.len()];
                    softmax_slice(l, &mut p);
                    Ok((1.0 - p[d.pseudo_class]).powf(gamma) * nll)
                }
                UnsupervisedLoss::LabelSmoothing { eps } => {
                    let k = l.len() as f64;
                    let lse = log_sum_exp(l);
                    let mut sample = 0.0;
                    for (j, &lj) in l.iter().enumerate() {
                        let target = if j == d.pseudo_class {
                            (1.0 - eps) + eps / k
                        } else {
                            eps / k
                        };
                        sample += target * (lse - lj);
                    }
                    Ok(sample)
                }
            }
        })
        .collect()
}
