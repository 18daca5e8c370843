//! End-to-end properties of the training harness that go beyond single
//! modules: label hygiene, reproducibility, augmentation effects on a
//! trained model, and the easy-regime sanity run.

use sslab::augment::{strong_augment, weak_augment};
use sslab::core_math::softmax_batch;
use sslab::experiment::{generate_dataset, train, train_on, RunConfig};
use sslab::model::forward_no_cache;
use sslab::rng::RngStream;

fn quick_config() -> RunConfig {
    let mut config = RunConfig::default();
    config.train.iterations = 400;
    config.train.eval_interval = 100;
    config.dataset.unlabeled_count = 400;
    config.dataset.test_count = 300;
    config
}

/// The hidden true labels of unlabeled samples are diagnostics only:
/// scrambling them must leave the whole training trajectory bit-identical.
#[test]
fn hidden_labels_never_influence_training() {
    let config = quick_config();
    let mut spec = config.dataset.clone();
    spec.seed = 11;
    let dataset = generate_dataset(&spec).unwrap();

    let mut scrambled = dataset.clone();
    for (i, example) in scrambled.unlabeled.iter_mut().enumerate() {
        example.hidden_label = (example.hidden_label + 1 + i) % config.dataset.classes;
    }

    let a = train_on(&config, 11, &dataset).unwrap();
    let b = train_on(&config, 11, &scrambled).unwrap();
    assert_eq!(a.log, b.log);
    assert_eq!(a.final_params, b.final_params);
    assert_eq!(a.best_params, b.best_params);
}

#[test]
fn full_outcome_is_reproducible() {
    let config = quick_config();
    let a = train(&config, 21).unwrap();
    let b = train(&config, 21).unwrap();
    assert_eq!(a.log, b.log);
    assert_eq!(a.final_params, b.final_params);
    assert_eq!(a.best_params, b.best_params);
}

/// On a trained model, strong views are never more confidently classified
/// than weak views on average.
#[test]
fn strong_views_lower_mean_confidence_than_weak() {
    let config = quick_config();
    for seed in [1, 2, 3, 4, 5] {
        let outcome = train(&config, seed).unwrap();
        let mut spec = config.dataset.clone();
        spec.seed = seed;
        let dataset = generate_dataset(&spec).unwrap();

        let mut weak_views = Vec::new();
        let mut strong_views = Vec::new();
        for (i, example) in dataset.unlabeled.iter().enumerate() {
            let mut ws = RngStream::new(seed, "props/weak", 0, i as u64);
            weak_views.push(weak_augment(&example.features, &config.augment, &mut ws));
            let mut ss = RngStream::new(seed, "props/strong", 0, i as u64);
            strong_views.push(strong_augment(&example.features, &config.augment, &mut ss));
        }
        let mean_max = |views: &[Vec<f64>]| -> f64 {
            let probs = softmax_batch(&forward_no_cache(&outcome.final_params, views).unwrap());
            probs
                .iter()
                .map(|p| p.iter().copied().fold(f64::NEG_INFINITY, f64::max))
                .sum::<f64>()
                / probs.len() as f64
        };
        let weak_conf = mean_max(&weak_views);
        let strong_conf = mean_max(&strong_views);
        assert!(
            strong_conf <= weak_conf,
            "seed {seed}: strong view confidence {strong_conf:.4} above weak {weak_conf:.4}"
        );
    }
}

/// Well-separated mixtures (centers six noise-sigmas apart, tight arcs) are
/// easy: a supervised-only run lands under 10% test error.
#[test]
fn well_separated_mixture_is_easy_for_supervised_training() {
    let mut config = RunConfig::default();
    config.dataset.noise_sigma = 0.4;
    config.dataset.class_separation = 2.4; // 6 sigma between neighboring centers
    config.dataset.component_spread = 0.2;
    config.dataset.outlier_fraction = 0.0;
    config.threshold.tau = 1.01;
    config.penalty.lambda = 0.0;
    config.train.iterations = 1500;
    config.dataset.unlabeled_count = 100;
    config.dataset.test_count = 500;
    let outcome = train(&config, 3).unwrap();
    let best = outcome.log.best.unwrap();
    assert!(
        best.test_error < 0.10,
        "supervised error {:.3} on a 6-sigma-separated mixture",
        best.test_error
    );
}

/// The self-adaptive threshold starts permissive (1/K) and tightens as the
/// model grows confident; the run log tracks it.
#[test]
fn self_adaptive_threshold_tightens_over_training() {
    let mut config = quick_config();
    config.threshold.strategy = sslab::pseudo_label::ThresholdStrategy::SelfAdaptive;
    let outcome = train(&config, 5).unwrap();
    let first = outcome.log.rows.first().unwrap().threshold_global;
    let last = outcome.log.rows.last().unwrap().threshold_global;
    assert!((first - 0.25).abs() < 1e-12, "starts at 1/K, got {first}");
    assert!(last > first, "threshold did not tighten: {first} -> {last}");
    assert!(last < 1.0);
}
