//! Multi-seed, multi-variant sweeps with best-checkpoint aggregation and
//! Friedman ranks across variants.
//!
//! Each (variant, seed) run is independent and executes on its own thread;
//! results are merged in fixed (variant, seed) order, so the report is
//! deterministic regardless of scheduling.

use serde::{Deserialize, Serialize};

use crate::calibration::friedman_rank;
use crate::error::{Error, Result};
use crate::experiment::config::RunConfig;
use crate::experiment::train::{train, TrainOutcome};

/// A named set of config overrides.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Variant {
    pub name: String,
    pub overrides: Vec<(String, String)>,
}

impl Variant {
    /// Parse `name` or `name:key=value;key=value`.
    pub fn parse(spec: &str) -> Result<Variant> {
        let (name, rest) = match spec.split_once(':') {
            None => (spec.trim(), ""),
            Some((n, r)) => (n.trim(), r.trim()),
        };
        if name.is_empty() {
            return Err(Error::InvalidConfig(format!("variant '{spec}' has no name")));
        }
        let mut overrides = Vec::new();
        if !rest.is_empty() {
            for part in rest.split(';') {
                let (key, value) = part.split_once('=').ok_or_else(|| {
                    Error::InvalidConfig(format!(
                        "variant override '{part}' is not key=value"
                    ))
                })?;
                overrides.push((key.trim().to_string(), value.trim().to_string()));
            }
        }
        Ok(Variant {
            name: name.to_string(),
            overrides,
        })
    }

    pub fn apply_to(&self, base: &RunConfig) -> Result<RunConfig> {
        let mut config = base.clone();
        for (key, value) in &self.overrides {
            config.apply_override(key, value)?;
        }
        config.validate()?;
        Ok(config)
    }
}

/// Best-checkpoint metrics of one (variant, seed) run.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SeedMetrics {
    pub seed: u64,
    pub best_iteration: usize,
    pub error: f64,
    pub ece: f64,
    /// Agreement ratio at the best-checkpoint row, when a window existed.
    pub agreement: Option<f64>,
    pub mean_max_logit_distance: f64,
}

/// Seed-aggregated metrics of one variant.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct VariantSummary {
    pub name: String,
    pub config_hash: String,
    pub per_seed: Vec<SeedMetrics>,
    pub mean_error: f64,
    pub std_error: f64,
    pub mean_ece: f64,
    pub std_ece: f64,
    pub mean_agreement: Option<f64>,
    pub mean_max_logit_distance: f64,
    /// Friedman rank of this variant across per-seed error and ECE settings.
    pub friedman_rank: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SweepReport {
    pub base_hash: String,
    pub seeds: Vec<u64>,
    pub variants: Vec<VariantSummary>,
}

fn mean_and_std(values: &[f64]) -> (f64, f64) {
    let n = values.len() as f64;
    let mean = values.iter().sum::<f64>() / n;
    if values.len() < 2 {
        return (mean, 0.0);
    }
    let var = values.iter().map(|v| (v - mean) * (v - mean)).sum::<f64>() / (n - 1.0);
    (mean, var.sqrt())
}

/// Run every (variant, seed) pair and aggregate. Returns the report along
/// with every run's outcome, in `outcomes[variant][seed]` order.
pub fn sweep_with_outcomes(
    base: &RunConfig,
    variants: &[Variant],
    seeds: &[u64],
) -> Result<(SweepReport, Vec<Vec<TrainOutcome>>)> {
    if seeds.is_empty() {
        return Err(Error::InvalidConfig("need at least one seed".into()));
    }
    if variants.is_empty() {
        return Err(Error::InvalidConfig("need at least one variant".into()));
    }
    let configs: Vec<RunConfig> = variants
        .iter()
        .map(|v| v.apply_to(base))
        .collect::<Result<_>>()?;

    let mut results: Vec<Vec<Option<Result<TrainOutcome>>>> =
        (0..variants.len()).map(|_| seeds.iter().map(|_| None).collect()).collect();
    std::thread::scope(|scope| {
        let mut handles = Vec::new();
        for (vi, config) in configs.iter().enumerate() {
            for (si, &seed) in seeds.iter().enumerate() {
                handles.push(((vi, si), scope.spawn(move || train(config, seed))));
            }
        }
        for ((vi, si), handle) in handles {
            let outcome = handle.join().unwrap_or_else(|_| {
                Err(Error::InvalidInput("training thread panicked".into()))
            });
            results[vi][si] = Some(outcome);
        }
    });

    let mut outcomes: Vec<Vec<TrainOutcome>> = Vec::with_capacity(variants.len());
    for row in results {
        let mut per_variant = Vec::with_capacity(seeds.len());
        for cell in row {
            per_variant.push(cell.expect("every run launched")?);
        }
        outcomes.push(per_variant);
    }

    let mut summaries = Vec::with_capacity(variants.len());
    for ((variant, config), runs) in variants.iter().zip(&configs).zip(&outcomes) {
        let per_seed: Vec<SeedMetrics> = runs
            .iter()
            .zip(seeds)
            .map(|(outcome, &seed)| {
                let best = outcome
                    .log
                    .best
                    .expect("a finished run always has a best record");
                let row = &outcome.log.rows[best.row_index];
                SeedMetrics {
                    seed,
                    best_iteration: best.iteration,
                    error: best.test_error,
                    ece: best.ece,
                    agreement: row.agreement,
                    mean_max_logit_distance: row.mean_max_logit_distance,
                }
            })
            .collect();
        let errors: Vec<f64> = per_seed.iter().map(|m| m.error).collect();
        let eces: Vec<f64> = per_seed.iter().map(|m| m.ece).collect();
        let (mean_error, std_error) = mean_and_std(&errors);
        let (mean_ece, std_ece) = mean_and_std(&eces);
        let agreements: Vec<f64> = per_seed.iter().filter_map(|m| m.agreement).collect();
        let mean_agreement = if agreements.is_empty() {
            None
        } else {
            Some(agreements.iter().sum::<f64>() / agreements.len() as f64)
        };
        let distances: Vec<f64> = per_seed.iter().map(|m| m.mean_max_logit_distance).collect();
        summaries.push(VariantSummary {
            name: variant.name.clone(),
            config_hash: config.config_hash(),
            per_seed,
            mean_error,
            std_error,
            mean_ece,
            std_ece,
            mean_agreement,
            mean_max_logit_distance: mean_and_std(&distances).0,
            friedman_rank: 0.0,
        });
    }

    // Friedman ranks across variants: one setting per (seed, metric) pair,
    // all lower-is-better.
    let scores: Vec<Vec<f64>> = summaries
        .iter()
        .map(|s| {
            s.per_seed
                .iter()
                .flat_map(|m| [m.error, m.ece])
                .collect::<Vec<f64>>()
        })
        .collect();
    let directions = vec![true; 2 * seeds.len()];
    let ranks = friedman_rank(&scores, &directions)?;
    for (summary, rank) in summaries.iter_mut().zip(ranks) {
        summary.friedman_rank = rank;
    }

    Ok((
        SweepReport {
            base_hash: base.config_hash(),
            seeds: seeds.to_vec(),
            variants: summaries,
        },
        outcomes,
    ))
}

/// [`sweep_with_outcomes`] without keeping the per-run outcomes.
pub fn sweep(base: &RunConfig, variants: &[Variant], seeds: &[u64]) -> Result<SweepReport> {
    sweep_with_outcomes(base, variants, seeds).map(|(report, _)| report)
}
