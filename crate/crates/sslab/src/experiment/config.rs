//! Experiment configuration: a flat `key = value` text format with dotted
//! sections, override support, canonical serialization, and a stable content
//! hash used to name output files.
//!
//! Every key has a default, so an empty config is the canonical desk-scale
//! setup. Unknown keys are rejected, which is what catches typos in
//! `--override` flags.

use crate::augment::AugmentConfig;
use crate::error::{Error, Result};
use crate::experiment::dataset::{DatasetSpec, LongtailSpec};
use crate::model::Activation;
use crate::objective::{ApplySet, MarginConfig, UnsupervisedLoss};
use crate::pseudo_label::ThresholdStrategy;
use crate::rng::content_hash;

#[derive(Debug, Clone, PartialEq)]
pub struct ModelConfig {
    pub hidden: Vec<usize>,
    pub activation: Activation,
}

#[derive(Debug, Clone, PartialEq)]
pub struct OptimizerConfig {
    pub learning_rate: f64,
    pub momentum: f64,
    /// Fraction of total iterations spent in linear warm-up.
    pub warmup_fraction: f64,
    pub cosine_schedule: bool,
}

#[derive(Debug, Clone, PartialEq)]
pub struct ThresholdConfig {
    pub strategy: ThresholdStrategy,
    pub tau: f64,
    pub ema_decay: f64,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum BaselineKind {
    None,
    LabelSmoothing,
    Focal,
}

impl BaselineKind {
    fn parse(name: &str) -> Result<Self> {
        match name {
            "none" => Ok(BaselineKind::None),
            "label_smoothing" => Ok(BaselineKind::LabelSmoothing),
            "focal" => Ok(BaselineKind::Focal),
            other => Err(Error::InvalidConfig(format!(
                "unknown baseline loss '{other}' (expected none, label_smoothing, or focal)"
            ))),
        }
    }

    fn name(&self) -> &'static str {
        match self {
            BaselineKind::None => "none",
            BaselineKind::LabelSmoothing => "label_smoothing",
            BaselineKind::Focal => "focal",
        }
    }
}

/// Which unsupervised loss replaces the plain pseudo-CE, if any.
#[derive(Debug, Clone, PartialEq)]
pub struct BaselineConfig {
    pub kind: BaselineKind,
    pub label_smoothing_eps: f64,
    pub focal_gamma: f64,
}

impl BaselineConfig {
    pub fn unsupervised_loss(&self) -> UnsupervisedLoss {
        match self.kind {
            BaselineKind::None => UnsupervisedLoss::PseudoCe,
            BaselineKind::LabelSmoothing => UnsupervisedLoss::LabelSmoothing {
                eps: self.label_smoothing_eps,
            },
            BaselineKind::Focal => UnsupervisedLoss::Focal {
                gamma: self.focal_gamma,
            },
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct TrainLoopConfig {
    pub iterations: usize,
    pub eval_interval: usize,
    /// Labeled batch size B.
    pub labeled_batch: usize,
    /// Unlabeled-to-labeled batch ratio mu; the unlabeled batch is `mu * B`.
    pub unlabeled_ratio: usize,
}

/// Full experiment configuration.
#[derive(Debug, Clone, PartialEq)]
pub struct RunConfig {
    pub dataset: DatasetSpec,
    pub model: ModelConfig,
    pub optimizer: OptimizerConfig,
    pub augment: AugmentConfig,
    pub threshold: ThresholdConfig,
    pub penalty: MarginConfig,
    pub baseline: BaselineConfig,
    pub train: TrainLoopConfig,
    /// Bin count for every ECE-family metric.
    pub calibration_bins: usize,
    pub seeds: Vec<u64>,
    pub out_dir: String,
}

impl Default for RunConfig {
    fn default() -> Self {
        RunConfig {
            dataset: DatasetSpec {
                classes: 4,
                feature_dim: 2,
                components_per_class: 3,
                class_separation: 3.8,
                component_spread: 1.5,
                noise_sigma: 0.35,
                outlier_fraction: 0.12,
                labeled_per_class: 4,
                unlabeled_count: 2000,
                test_count: 1000,
                seed: 0,
                longtail: None,
            },
            model: ModelConfig {
                hidden: vec![16, 16],
                activation: Activation::Tanh,
            },
            optimizer: OptimizerConfig {
                learning_rate: 0.007,
                momentum: 0.9,
                warmup_fraction: 0.025,
                cosine_schedule: true,
            },
            augment: AugmentConfig::default(),
            threshold: ThresholdConfig {
                strategy: ThresholdStrategy::Fixed,
                tau: 0.95,
                ema_decay: 0.999,
            },
            penalty: MarginConfig::default(),
            baseline: BaselineConfig {
                kind: BaselineKind::None,
                label_smoothing_eps: 0.1,
                focal_gamma: 2.0,
            },
            train: TrainLoopConfig {
                iterations: 4000,
                eval_interval: 100,
                labeled_batch: 16,
                unlabeled_ratio: 4,
            },
            calibration_bins: 15,
            seeds: vec![1, 2, 3, 4, 5],
            out_dir: "runs".into(),
        }
    }
}

/// Long-tail fields keep their values even while `dataset.longtail` is off,
/// so toggling it on does not lose them. Inactive defaults:
const DEFAULT_LONGTAIL: LongtailSpec = LongtailSpec {
    gamma_labeled: 10.0,
    gamma_unlabeled: -10.0,
    labeled_head: 150,
    unlabeled_head: 300,
};

impl RunConfig {
    /// Parse a config file body: `key = value` lines, `#` comments, blank
    /// lines. Values not mentioned keep their defaults.
    pub fn from_text(text: &str) -> Result<RunConfig> {
        let mut config = RunConfig::default();
        for (lineno, raw) in text.lines().enumerate() {
            let line = raw.trim();
            if line.is_empty() || line.starts_with('#') {
                continue;
            }
            let (key, value) = line.split_once('=').ok_or_else(|| {
                Error::parse(
                    format!("config line {}", lineno + 1),
                    format!("expected 'key = value', got '{line}'"),
                )
            })?;
            config.apply_override(key.trim(), value.trim())?;
        }
        Ok(config)
    }

    /// Apply one `key=value` override.
    pub fn apply_override(&mut self, key: &str, value: &str) -> Result<()> {
        let bad_value = |detail: String| Error::InvalidConfig(format!("{key}: {detail}"));
        let parse_f64 = |v: &str| {
            v.parse::<f64>()
                .map_err(|e| bad_value(format!("'{v}' is not a number: {e}")))
        };
        let parse_usize = |v: &str| {
            v.parse::<usize>()
                .map_err(|e| bad_value(format!("'{v}' is not a non-negative integer: {e}")))
        };
        let parse_bool = |v: &str| match v {
            "true" => Ok(true),
            "false" => Ok(false),
            other => Err(bad_value(format!("'{other}' is not true/false"))),
        };
        match key {
            "dataset.classes" => self.dataset.classes = parse_usize(value)?,
            "dataset.feature_dim" => self.dataset.feature_dim = parse_usize(value)?,
            "dataset.components_per_class" => {
                self.dataset.components_per_class = parse_usize(value)?
            }
            "dataset.class_separation" => self.dataset.class_separation = parse_f64(value)?,
            "dataset.component_spread" => self.dataset.component_spread = parse_f64(value)?,
            "dataset.noise_sigma" => self.dataset.noise_sigma = parse_f64(value)?,
            "dataset.outlier_fraction" => self.dataset.outlier_fraction = parse_f64(value)?,
            "dataset.labeled_per_class" => self.dataset.labeled_per_class = parse_usize(value)?,
            "dataset.unlabeled_count" => self.dataset.unlabeled_count = parse_usize(value)?,
            "dataset.test_count" => self.dataset.test_count = parse_usize(value)?,
            "dataset.seed" => {
                self.dataset.seed = value
                    .parse::<u64>()
                    .map_err(|e| bad_value(format!("'{value}': {e}")))?
            }
            "dataset.longtail" => {
                if parse_bool(value)? {
                    self.dataset.longtail.get_or_insert(DEFAULT_LONGTAIL);
                } else {
                    self.dataset.longtail = None;
                }
            }
            "dataset.gamma_labeled" => {
                self.dataset
                    .longtail
                    .get_or_insert(DEFAULT_LONGTAIL)
                    .gamma_labeled = parse_f64(value)?
            }
            "dataset.gamma_unlabeled" => {
                self.dataset
                    .longtail
                    .get_or_insert(DEFAULT_LONGTAIL)
                    .gamma_unlabeled = parse_f64(value)?
            }
            "dataset.labeled_head_count" => {
                self.dataset
                    .longtail
                    .get_or_insert(DEFAULT_LONGTAIL)
                    .labeled_head = parse_usize(value)?
            }
            "dataset.unlabeled_head_count" => {
                self.dataset
                    .longtail
                    .get_or_insert(DEFAULT_LONGTAIL)
                    .unlabeled_head = parse_usize(value)?
            }
            "model.hidden" => {
                self.model.hidden = value
                    .split(',')
                    .map(|t| {
                        t.trim()
                            .parse::<usize>()
                            .map_err(|e| bad_value(format!("width '{t}': {e}")))
                    })
                    .collect::<Result<_>>()?
            }
            "model.activation" => self.model.activation = Activation::parse(value)?,
            "optimizer.learning_rate" => self.optimizer.learning_rate = parse_f64(value)?,
            "optimizer.momentum" => self.optimizer.momentum = parse_f64(value)?,
            "optimizer.warmup_fraction" => self.optimizer.warmup_fraction = parse_f64(value)?,
            "optimizer.cosine_schedule" => self.optimizer.cosine_schedule = parse_bool(value)?,
            "augment.weak_noise_sigma" => self.augment.weak_noise_sigma = parse_f64(value)?,
            "augment.strong_noise_sigma" => self.augment.strong_noise_sigma = parse_f64(value)?,
            "augment.strong_mask_prob" => self.augment.strong_mask_prob = parse_f64(value)?,
            "augment.strong_scale_min" => self.augment.strong_scale_min = parse_f64(value)?,
            "augment.strong_scale_max" => self.augment.strong_scale_max = parse_f64(value)?,
            "threshold.strategy" => self.threshold.strategy = ThresholdStrategy::parse(value)?,
            "threshold.tau" => self.threshold.tau = parse_f64(value)?,
            "threshold.ema_decay" => self.threshold.ema_decay = parse_f64(value)?,
            "penalty.margin" => self.penalty.margin = parse_f64(value)?,
            "penalty.lambda" => self.penalty.lambda = parse_f64(value)?,
            "penalty.apply_set" => self.penalty.apply_set = ApplySet::parse(value)?,
            "baseline.loss" => self.baseline.kind = BaselineKind::parse(value)?,
            "baseline.label_smoothing_eps" => {
                self.baseline.label_smoothing_eps = parse_f64(value)?
            }
            "baseline.focal_gamma" => self.baseline.focal_gamma = parse_f64(value)?,
            "train.iterations" => self.train.iterations = parse_usize(value)?,
            "train.eval_interval" => self.train.eval_interval = parse_usize(value)?,
            "train.labeled_batch" => self.train.labeled_batch = parse_usize(value)?,
            "train.unlabeled_ratio" => self.train.unlabeled_ratio = parse_usize(value)?,
            "calibration.n_bins" => self.calibration_bins = parse_usize(value)?,
            "run.seeds" => {
                self.seeds = value
                    .split(',')
                    .map(|t| {
                        t.trim()
                            .parse::<u64>()
                            .map_err(|e| bad_value(format!("seed '{t}': {e}")))
                    })
                    .collect::<Result<_>>()?
            }
            "run.out_dir" => self.out_dir = value.to_string(),
            other => {
                return Err(Error::InvalidConfig(format!("unknown config key '{other}'")));
            }
        }
        Ok(())
    }

    /// Canonical text form: every key, fixed order.
    pub fn to_canonical_text(&self) -> String {
        let mut out = String::new();
        let lt = self.dataset.longtail.unwrap_or(DEFAULT_LONGTAIL);
        let pairs: Vec<(&str, String)> = vec![
            ("dataset.classes", self.dataset.classes.to_string()),
            ("dataset.feature_dim", self.dataset.feature_dim.to_string()),
            (
                "dataset.components_per_class",
                self.dataset.components_per_class.to_string(),
            ),
            (
                "dataset.class_separation",
                self.dataset.class_separation.to_string(),
            ),
            (
                "dataset.component_spread",
                self.dataset.component_spread.to_string(),
            ),
            ("dataset.noise_sigma", self.dataset.noise_sigma.to_string()),
            (
                "dataset.outlier_fraction",
                self.dataset.outlier_fraction.to_string(),
            ),
            (
                "dataset.labeled_per_class",
                self.dataset.labeled_per_class.to_string(),
            ),
            (
                "dataset.unlabeled_count",
                self.dataset.unlabeled_count.to_string(),
            ),
            ("dataset.test_count", self.dataset.test_count.to_string()),
            ("dataset.seed", self.dataset.seed.to_string()),
            ("dataset.gamma_labeled", lt.gamma_labeled.to_string()),
            ("dataset.gamma_unlabeled", lt.gamma_unlabeled.to_string()),
            ("dataset.labeled_head_count", lt.labeled_head.to_string()),
            ("dataset.unlabeled_head_count", lt.unlabeled_head.to_string()),
            // the toggle comes after the long-tail fields so parsing the
            // canonical text restores `longtail: None` configs exactly
            (
                "dataset.longtail",
                self.dataset.longtail.is_some().to_string(),
            ),
            (
                "model.hidden",
                self.model
                    .hidden
                    .iter()
                    .map(|w| w.to_string())
                    .collect::<Vec<_>>()
                    .join(","),
            ),
            ("model.activation", self.model.activation.name().to_string()),
            (
                "optimizer.learning_rate",
                self.optimizer.learning_rate.to_string(),
            ),
            ("optimizer.momentum", self.optimizer.momentum.to_string()),
            (
                "optimizer.warmup_fraction",
                self.optimizer.warmup_fraction.to_string(),
            ),
            (
                "optimizer.cosine_schedule",
                self.optimizer.cosine_schedule.to_string(),
            ),
            (
                "augment.weak_noise_sigma",
                self.augment.weak_noise_sigma.to_string(),
            ),
            (
                "augment.strong_noise_sigma",
                self.augment.strong_noise_sigma.to_string(),
            ),
            (
                "augment.strong_mask_prob",
                self.augment.strong_mask_prob.to_string(),
            ),
            (
                "augment.strong_scale_min",
                self.augment.strong_scale_min.to_string(),
            ),
            (
                "augment.strong_scale_max",
                self.augment.strong_scale_max.to_string(),
            ),
            (
                "threshold.strategy",
                self.threshold.strategy.name().to_string(),
            ),
            ("threshold.tau", self.threshold.tau.to_string()),
            ("threshold.ema_decay", self.threshold.ema_decay.to_string()),
            ("penalty.margin", self.penalty.margin.to_string()),
            ("penalty.lambda", self.penalty.lambda.to_string()),
            ("penalty.apply_set", self.penalty.apply_set.name().to_string()),
            ("baseline.loss", self.baseline.kind.name().to_string()),
            (
                "baseline.label_smoothing_eps",
                self.baseline.label_smoothing_eps.to_string(),
            ),
            ("baseline.focal_gamma", self.baseline.focal_gamma.to_string()),
            ("train.iterations", self.train.iterations.to_string()),
            ("train.eval_interval", self.train.eval_interval.to_string()),
            ("train.labeled_batch", self.train.labeled_batch.to_string()),
            (
                "train.unlabeled_ratio",
                self.train.unlabeled_ratio.to_string(),
            ),
            ("calibration.n_bins", self.calibration_bins.to_string()),
            (
                "run.seeds",
                self.seeds
                    .iter()
                    .map(|s| s.to_string())
                    .collect::<Vec<_>>()
                    .join(","),
            ),
            ("run.out_dir", self.out_dir.clone()),
        ];
        for (key, value) in pairs {
            out.push_str(key);
            out.push_str(" = ");
            out.push_str(&value);
            out.push('\n');
        }
        out
    }

    /// Stable hex hash of everything except the `run.*` section, so output
    /// files from different seeds of one configuration share a prefix.
    pub fn config_hash(&self) -> String {
        let text: String = self
            .to_canonical_text()
            .lines()
            .filter(|l| !l.starts_with("run."))
            .collect::<Vec<_>>()
            .join("\n");
        format!("{:016x}", content_hash(&text))
    }

    /// Warm-up steps implied by the schedule settings.
    pub fn warmup_steps(&self) -> usize {
        (self.optimizer.warmup_fraction * self.train.iterations as f64).round() as usize
    }

    pub fn validate(&self) -> Result<()> {
        self.dataset.validate()?;
        self.augment.validate()?;
        self.penalty.validate()?;
        if self.model.hidden.is_empty() {
            return Err(Error::InvalidConfig("need at least one hidden layer".into()));
        }
        if !(self.optimizer.learning_rate > 0.0) {
            return Err(Error::InvalidConfig("learning rate must be positive".into()));
        }
        if !(0.0..1.0).contains(&self.optimizer.momentum) {
            return Err(Error::InvalidConfig("momentum must be in [0, 1)".into()));
        }
        if !(0.0..1.0).contains(&self.optimizer.warmup_fraction) {
            return Err(Error::InvalidConfig("warmup fraction must be in [0, 1)".into()));
        }
        if !(self.threshold.tau > 0.0) || !self.threshold.tau.is_finite() {
            return Err(Error::InvalidConfig("threshold tau must be positive".into()));
        }
        if !(0.0..1.0).contains(&self.threshold.ema_decay) {
            return Err(Error::InvalidConfig("EMA decay must be in [0, 1)".into()));
        }
        if !(0.0..1.0).contains(&self.baseline.label_smoothing_eps) {
            return Err(Error::InvalidConfig(
                "label smoothing eps must be in [0, 1)".into(),
            ));
        }
        if !(self.baseline.focal_gamma >= 0.0) {
            return Err(Error::InvalidConfig("focal gamma must be >= 0".into()));
        }
        if self.train.labeled_batch == 0 {
            return Err(Error::InvalidConfig("labeled batch must be >= 1".into()));
        }
        if self.train.unlabeled_ratio == 0 {
            return Err(Error::InvalidConfig("unlabeled ratio must be >= 1".into()));
        }
        if self.train.eval_interval == 0 {
            return Err(Error::InvalidConfig("eval interval must be >= 1".into()));
        }
        if self.calibration_bins == 0 {
            return Err(Error::InvalidConfig("calibration bin count must be >= 1".into()));
        }
        if self.train.iterations > 0 && self.warmup_steps() >= self.train.iterations {
            return Err(Error::InvalidConfig(
                "iterations must exceed the warm-up period".into(),
            ));
        }
        if self.seeds.is_empty() {
            return Err(Error::InvalidConfig("need at least one seed".into()));
        }
        Ok(())
    }
}
