//! The experiment harness: synthetic datasets, the training loop, sweeps,
//! and report persistence.

pub mod config;
pub mod dataset;
pub mod report;
pub mod sweep;
pub mod train;

pub use config::{BaselineConfig, BaselineKind, ModelConfig, OptimizerConfig, RunConfig};
pub use dataset::{
    class_counts, generate_dataset, longtail_counts, Dataset, DatasetSpec, LabeledExample,
    LongtailSpec, UnlabeledExample,
};
pub use report::{emit_dynamics_csv, emit_run_reports, emit_sweep_reports, run_prefix};
pub use sweep::{sweep, sweep_with_outcomes, SeedMetrics, SweepReport, Variant, VariantSummary};
pub use train::{train, train_on, BestRecord, EvalRow, RunLog, TrainOutcome};
