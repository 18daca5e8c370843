//! The SSL training loop: batches, augmented views, pseudo-label decisions,
//! the composite objective, SGD, threshold updates, and periodic evaluation.
//!
//! A run is a pure function of `(config, seed)`: batches, views, and
//! initialization all draw from purpose-keyed streams derived from the run
//! seed, so logs are bit-identical across repeats. The hidden true labels of
//! unlabeled samples are never read anywhere in this module.

use serde::{Deserialize, Serialize};

use crate::calibration::{
    agreement_ratio, calibration_report, logit_stats, CalibrationReport, LogitStats,
    ReliabilityBins, DEFAULT_LOGIT_BIN_WIDTH,
};
use crate::core_math::{softmax_batch, softmax_slice};
use crate::error::{Error, Result};
use crate::experiment::config::RunConfig;
use crate::experiment::dataset::{generate_dataset, Dataset};
use crate::model::{
    backward, forward, forward_no_cache, init_params, sgd_step, CosineSchedule, ForwardCache,
    MlpParams, SgdState,
};
use crate::objective::{logit_distances, total_loss, LossBreakdown};
use crate::pseudo_label::{
    decide, update_class_adaptive, update_fixed, update_self_adaptive, PseudoLabelDecision,
    ThresholdState, ThresholdStrategy,
};
use crate::rng::RngStream;

/// Upper bound on |logit| before a run is declared divergent.
const LOGIT_ABORT_THRESHOLD: f64 = 1e4;

/// One evaluation snapshot.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EvalRow {
    pub iteration: usize,
    /// Training-batch losses at this point (for iteration 0: the loss the
    /// initial model incurs on the first batch).
    pub losses: LossBreakdown,
    pub test_error: f64,
    pub ece: f64,
    pub aece: f64,
    pub cece: f64,
    /// Agreement ratio among selected samples over the window since the last
    /// evaluation; `None` when nothing was selected (or before training).
    pub agreement: Option<f64>,
    /// Mean over test samples of the largest winner-to-logit distance.
    pub mean_max_logit_distance: f64,
    /// Largest such distance over the test set.
    pub max_logit_distance: f64,
    pub threshold_global: f64,
    pub threshold_per_class: Vec<f64>,
    pub reliability: ReliabilityBins,
}

/// The minimum-test-error evaluation of a run.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct BestRecord {
    pub row_index: usize,
    pub iteration: usize,
    pub test_error: f64,
    pub ece: f64,
}

/// Per-run metric trace plus the best-checkpoint record.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RunLog {
    pub config_hash: String,
    pub seed: u64,
    pub rows: Vec<EvalRow>,
    pub best: Option<BestRecord>,
    /// Test-set logit statistics of the best checkpoint.
    pub best_logit_stats: Option<LogitStats>,
}

impl RunLog {
    /// A log with no evaluations; used to exercise report emission.
    pub fn empty(config_hash: String, seed: u64) -> Self {
        RunLog {
            config_hash,
            seed,
            rows: Vec::new(),
            best: None,
            best_logit_stats: None,
        }
    }
}

/// A finished run: the log plus final and best-checkpoint parameters.
#[derive(Debug, Clone)]
pub struct TrainOutcome {
    pub log: RunLog,
    pub final_params: MlpParams,
    pub best_params: MlpParams,
}

/// Indices for one batch: the whole population when it is no larger than the
/// requested count, otherwise a partial Fisher-Yates draw without
/// replacement.
fn sample_indices(population: usize, count: usize, stream: &mut RngStream) -> Vec<usize> {
    if population == 0 {
        return Vec::new();
    }
    if count >= population {
        return (0..population).collect();
    }
    let mut pool: Vec<usize> = (0..population).collect();
    for i in 0..count {
        let j = i + stream.next_index(population - i);
        pool.swap(i, j);
    }
    pool.truncate(count);
    pool
}

struct BatchComputation {
    breakdown: LossBreakdown,
    dl_labeled: Vec<Vec<f64>>,
    dl_strong: Vec<Vec<f64>>,
    labeled_cache: ForwardCache,
    strong_cache: ForwardCache,
    decisions: Vec<PseudoLabelDecision>,
    weak_probs: Vec<Vec<f64>>,
    max_abs_logit: f64,
}

fn compute_batch(
    params: &MlpParams,
    config: &RunConfig,
    dataset: &Dataset,
    threshold: &ThresholdState,
    seed: u64,
    t: usize,
) -> Result<BatchComputation> {
    let b = config.train.labeled_batch;
    let mu_b = b * config.train.unlabeled_ratio;

    let mut labeled_stream = RngStream::new(seed, "batch/labeled", t as u64, 0);
    let labeled_idx = sample_indices(dataset.labeled.len(), b, &mut labeled_stream);
    let labeled_x: Vec<Vec<f64>> = labeled_idx
        .iter()
        .map(|&i| dataset.labeled[i].features.clone())
        .collect();
    let labeled_y: Vec<usize> = labeled_idx.iter().map(|&i| dataset.labeled[i].label).collect();

    let mut unlabeled_stream = RngStream::new(seed, "batch/unlabeled", t as u64, 0);
    let unlabeled_idx = sample_indices(dataset.unlabeled.len(), mu_b, &mut unlabeled_stream);
    let mut weak_views = Vec::with_capacity(unlabeled_idx.len());
    let mut strong_views = Vec::with_capacity(unlabeled_idx.len());
    for &i in &unlabeled_idx {
        let x = &dataset.unlabeled[i].features;
        let mut weak_stream = RngStream::new(seed, "augment/weak", t as u64, i as u64);
        weak_views.push(crate::augment::weak_augment(x, &config.augment, &mut weak_stream));
        let mut strong_stream = RngStream::new(seed, "augment/strong", t as u64, i as u64);
        strong_views.push(crate::augment::strong_augment(
            x,
            &config.augment,
            &mut strong_stream,
        ));
    }

    let (labeled_logits, labeled_cache) = forward(params, &labeled_x)?;
    let (strong_logits, strong_cache) = forward(params, &strong_views)?;
    // the weak view only proposes pseudo-labels; no gradient flows through it
    let weak_logits = forward_no_cache(params, &weak_views)?;

    let k = params.num_classes();
    let mut weak_probs = vec![vec![0.0; k]; weak_logits.len()];
    for (p, l) in weak_probs.iter_mut().zip(&weak_logits) {
        softmax_slice(l, p);
    }
    let mut strong_probs = vec![vec![0.0; k]; strong_logits.len()];
    for (p, l) in strong_probs.iter_mut().zip(&strong_logits) {
        softmax_slice(l, p);
    }
    let decisions: Vec<PseudoLabelDecision> = weak_probs
        .iter()
        .zip(&strong_probs)
        .map(|(w, s)| decide(w, s, threshold))
        .collect::<Result<_>>()?;

    let out = total_loss(
        &labeled_logits,
        &labeled_y,
        &strong_logits,
        &decisions,
        &config.penalty,
        config.baseline.unsupervised_loss(),
    )?;

    let max_abs_logit = labeled_logits
        .iter()
        .chain(&strong_logits)
        .flatten()
        .fold(0.0f64, |m, &v| m.max(v.abs()));

    Ok(BatchComputation {
        breakdown: out.breakdown,
        dl_labeled: out.dlogits_labeled,
        dl_strong: out.dlogits_strong,
        labeled_cache,
        strong_cache,
        decisions,
        weak_probs,
        max_abs_logit,
    })
}

struct TestEvaluation {
    report: CalibrationReport,
    mean_max_distance: f64,
    max_distance: f64,
}

fn evaluate_on_test(
    params: &MlpParams,
    features: &[Vec<f64>],
    labels: &[usize],
    n_bins: usize,
) -> Result<TestEvaluation> {
    let logits = forward_no_cache(params, features)?;
    let probs = softmax_batch(&logits);
    let report = calibration_report(&probs, labels, n_bins)?;
    let mut mean_max = 0.0;
    let mut max_all = 0.0f64;
    for l in &logits {
        let d = logit_distances(l);
        let m = d.iter().copied().fold(0.0, f64::max);
        mean_max += m;
        max_all = max_all.max(m);
    }
    mean_max /= logits.len() as f64;
    Ok(TestEvaluation {
        report,
        mean_max_distance: mean_max,
        max_distance: max_all,
    })
}

fn make_threshold_state(config: &RunConfig) -> Result<ThresholdState> {
    ThresholdState::new(
        config.threshold.strategy,
        config.dataset.classes,
        config.threshold.tau,
        config.threshold.ema_decay,
    )
}

/// Train one run on the config's generated dataset. Aborts with
/// [`Error::Diverged`] on a non-finite loss or runaway logits; otherwise
/// returns the full metric trace, with an evaluation at iteration 0, every
/// `eval_interval` iterations, and at the final iteration.
pub fn train(config: &RunConfig, seed: u64) -> Result<TrainOutcome> {
    config.validate()?;
    let mut spec = config.dataset.clone();
    spec.seed = seed;
    let dataset = generate_dataset(&spec)?;
    train_on(config, seed, &dataset)
}

/// [`train`] on a caller-supplied dataset, for pre-extracted feature vectors
/// or for experiments that perturb the data directly. The dataset must match
/// the config's feature dimension and class count.
pub fn train_on(config: &RunConfig, seed: u64, dataset: &Dataset) -> Result<TrainOutcome> {
    config.validate()?;
    let d = config.dataset.feature_dim;
    let k = config.dataset.classes;
    let dims_ok = dataset
        .labeled
        .iter()
        .map(|e| (e.features.len(), e.label))
        .chain(dataset.test.iter().map(|e| (e.features.len(), e.label)))
        .all(|(dim, label)| dim == d && label < k)
        && dataset.unlabeled.iter().all(|e| e.features.len() == d);
    if !dims_ok || dataset.labeled.is_empty() || dataset.test.is_empty() {
        return Err(Error::ShapeMismatch(
            "dataset does not match the config's dimensions".into(),
        ));
    }

    let mut widths = Vec::with_capacity(config.model.hidden.len() + 2);
    widths.push(config.dataset.feature_dim);
    widths.extend_from_slice(&config.model.hidden);
    widths.push(config.dataset.classes);
    let mut params = init_params(&widths, config.model.activation, seed)?;

    let schedule = config.optimizer.cosine_schedule.then(|| CosineSchedule {
        total_steps: config.train.iterations.max(1),
        warmup_steps: config.warmup_steps(),
    });
    let mut sgd = SgdState::new(
        config.optimizer.learning_rate,
        config.optimizer.momentum,
        schedule,
        &params,
    )?;
    let mut threshold = make_threshold_state(config)?;

    let test_x: Vec<Vec<f64>> = dataset.test.iter().map(|e| e.features.clone()).collect();
    let test_y: Vec<usize> = dataset.test.iter().map(|e| e.label).collect();
    let n_bins = config.calibration_bins;

    let mut log = RunLog::empty(config.config_hash(), seed);
    let mut best_params = params.clone();
    let mut window: Vec<PseudoLabelDecision> = Vec::new();

    let push_row = |rows: &mut Vec<EvalRow>,
                        best: &mut Option<BestRecord>,
                        best_params: &mut MlpParams,
                        params: &MlpParams,
                        threshold: &ThresholdState,
                        iteration: usize,
                        losses: LossBreakdown,
                        agreement: Option<f64>|
     -> Result<()> {
        let eval = evaluate_on_test(params, &test_x, &test_y, n_bins)?;
        rows.push(EvalRow {
            iteration,
            losses,
            test_error: eval.report.error_rate,
            ece: eval.report.ece,
            aece: eval.report.aece,
            cece: eval.report.cece,
            agreement,
            mean_max_logit_distance: eval.mean_max_distance,
            max_logit_distance: eval.max_distance,
            threshold_global: threshold.global_threshold(),
            threshold_per_class: threshold.per_class_thresholds(),
            reliability: eval.report.bins,
        });
        let row_index = rows.len() - 1;
        let row = &rows[row_index];
        // ties on the discrete test-error plateau resolve to the latest,
        // i.e. most-trained, of the equally accurate checkpoints
        if best.is_none_or(|b| row.test_error <= b.test_error) {
            *best = Some(BestRecord {
                row_index,
                iteration,
                test_error: row.test_error,
                ece: row.ece,
            });
            *best_params = params.clone();
        }
        Ok(())
    };

    // Initial evaluation: the untouched model, with the loss it would incur
    // on the first batch. Keyed streams make this re-computation free of side
    // effects on the training sequence.
    let initial = compute_batch(&params, config, dataset, &threshold, seed, 0)?;
    push_row(
        &mut log.rows,
        &mut log.best,
        &mut best_params,
        &params,
        &threshold,
        0,
        initial.breakdown,
        None,
    )?;

    for t in 0..config.train.iterations {
        let batch = compute_batch(&params, config, dataset, &threshold, seed, t)?;
        if !batch.breakdown.total.is_finite() {
            return Err(Error::Diverged {
                iteration: t,
                detail: format!("non-finite loss {:?}", batch.breakdown.total),
            });
        }
        if batch.max_abs_logit > LOGIT_ABORT_THRESHOLD {
            return Err(Error::Diverged {
                iteration: t,
                detail: format!("|logit| reached {:.3e}", batch.max_abs_logit),
            });
        }

        let mut grads = backward(&params, &batch.labeled_cache, &batch.dl_labeled)?;
        let strong_grads = backward(&params, &batch.strong_cache, &batch.dl_strong)?;
        grads.add_assign(&strong_grads)?;
        if !grads.is_finite() {
            return Err(Error::Diverged {
                iteration: t,
                detail: "non-finite gradient".into(),
            });
        }
        sgd_step(&mut params, &grads, &mut sgd)?;

        match threshold.strategy() {
            ThresholdStrategy::Fixed => update_fixed(&mut threshold),
            ThresholdStrategy::ClassAdaptive => {
                update_class_adaptive(&mut threshold, &batch.decisions)
            }
            ThresholdStrategy::SelfAdaptive => {
                update_self_adaptive(&mut threshold, &batch.weak_probs)
            }
        }
        window.extend_from_slice(&batch.decisions);

        let done = t + 1 == config.train.iterations;
        if (t + 1) % config.train.eval_interval == 0 || done {
            let agreement = agreement_ratio(&window);
            window.clear();
            push_row(
                &mut log.rows,
                &mut log.best,
                &mut best_params,
                &params,
                &threshold,
                t + 1,
                batch.breakdown,
                agreement,
            )?;
        }
    }

    // logit distributions of the best checkpoint, for the analysis exports
    let best_logits = forward_no_cache(&best_params, &test_x)?;
    log.best_logit_stats = Some(logit_stats(&best_logits, &test_y, DEFAULT_LOGIT_BIN_WIDTH)?);

    Ok(TrainOutcome {
        log,
        final_params: params,
        best_params,
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    fn tiny_config() -> RunConfig {
        let mut config = RunConfig::default();
        config.dataset.unlabeled_count = 200;
        config.dataset.test_count = 200;
        config.train.iterations = 60;
        config.train.eval_interval = 20;
        config.model.hidden = vec![16];
        config
    }

    #[test]
    fn zero_iterations_yield_only_the_initial_evaluation() {
        let mut config = tiny_config();
        config.train.iterations = 0;
        let outcome = train(&config, 1).unwrap();
        assert_eq!(outcome.log.rows.len(), 1);
        assert_eq!(outcome.log.rows[0].iteration, 0);
        let best = outcome.log.best.unwrap();
        assert_eq!(best.iteration, 0);
        assert_eq!(outcome.final_params, outcome.best_params);
    }

    #[test]
    fn impossible_threshold_reduces_to_supervised_training() {
        let mut config = tiny_config();
        config.threshold.tau = 1.01;
        config.penalty.lambda = 0.0;
        let outcome = train(&config, 2).unwrap();
        for row in &outcome.log.rows {
            assert_eq!(row.losses.n_u1 + row.losses.n_u2, 0);
            assert_eq!(row.losses.pseudo_ce_u1, 0.0);
            assert_eq!(row.losses.min_entropy_u2, 0.0);
            assert_eq!(row.losses.penalty, 0.0);
            assert_eq!(row.agreement, None);
        }
    }

    #[test]
    fn run_log_row_count_matches_eval_schedule() {
        let config = tiny_config();
        let outcome = train(&config, 3).unwrap();
        // iterations 60, eval every 20 -> rows at 0, 20, 40, 60
        let iterations: Vec<usize> = outcome.log.rows.iter().map(|r| r.iteration).collect();
        assert_eq!(iterations, vec![0, 20, 40, 60]);
    }

    #[test]
    fn best_record_is_the_minimum_error_row() {
        let outcome = train(&tiny_config(), 4).unwrap();
        let best = outcome.log.best.unwrap();
        let min_error = outcome
            .log
            .rows
            .iter()
            .map(|r| r.test_error)
            .fold(f64::INFINITY, f64::min);
        assert_eq!(best.test_error, min_error);
        assert_eq!(outcome.log.rows[best.row_index].iteration, best.iteration);
        let last = outcome.log.rows.last().unwrap();
        assert!(best.test_error <= last.test_error);
    }

    #[test]
    fn training_is_bit_reproducible() {
        let config = tiny_config();
        let a = train(&config, 5).unwrap();
        let b = train(&config, 5).unwrap();
        assert_eq!(a.log, b.log);
        assert_eq!(a.final_params, b.final_params);
        let c = train(&config, 6).unwrap();
        assert_ne!(a.log, c.log);
    }

    #[test]
    fn divergent_learning_rate_aborts_with_diagnostics() {
        let mut config = tiny_config();
        config.optimizer.learning_rate = 1e6;
        config.optimizer.cosine_schedule = false;
        match train(&config, 7) {
            Err(Error::Diverged { iteration, detail }) => {
                assert!(iteration < config.train.iterations);
                assert!(!detail.is_empty());
            }
            other => panic!("expected divergence, got {other:?}"),
        }
    }

    #[test]
    fn sample_indices_without_replacement_are_distinct() {
        let mut stream = RngStream::new(0, "test/sample", 0, 0);
        let idx = sample_indices(100, 30, &mut stream);
        assert_eq!(idx.len(), 30);
        let mut sorted = idx.clone();
        sorted.sort_unstable();
        sorted.dedup();
        assert_eq!(sorted.len(), 30);
        assert_eq!(sample_indices(5, 10, &mut stream), vec![0, 1, 2, 3, 4]);
        assert!(sample_indices(0, 4, &mut stream).is_empty());
    }
}
