//! A desk-scale laboratory for studying how pseudo-label semi-supervised
//! training affects confidence calibration, and for the margin penalty that
//! repairs it.
//!
//! The crate trains a small MLP on synthetic Gaussian-mixture data with the
//! standard pseudo-label recipe: a weak view of each unlabeled sample
//! proposes a hard label, a confidence threshold filters the proposals, and
//! the strong view is trained against the survivors. Three selection
//! strategies are built in (fixed, class-adaptive, self-adaptive thresholds,
//! in the style of FixMatch, FlexMatch, and FreeMatch).
//!
//! On the selected samples whose weak and strong predictions agree, that loss
//! collapses to the min-entropy of the strong view, a lower bound of the
//! Shannon entropy whose gradients push predictions to the simplex vertices
//! far harder than entropy-based regularizers do. The library exposes this
//! decomposition directly ([`objective::decompose`]), tracks the agreement
//! ratio over training, and measures the downstream effect with an ECE /
//! adaptive-ECE / classwise-ECE suite plus logit-distribution statistics.
//! The counter-measure is a hinge penalty on logit distances
//! ([`objective::margin_penalty`]) with a configurable application set.
//!
//! Everything is deterministic: keyed RNG streams make runs bit-reproducible
//! given `(config, seed)`.
//!
//! See the `examples/` directory for runnable entry points covering each
//! capability, and the `sslab` binary for the `train` / `sweep` / `analyze` /
//! `dynamics` / `rank` commands.

pub mod augment;
pub mod calibration;
pub mod core_math;
pub mod error;
pub mod experiment;
pub mod model;
pub mod objective;
pub mod pseudo_label;
pub mod rng;

pub use error::{Error, Result};
