//! Report persistence: JSON summaries and flat CSV tables.
//!
//! File names are deterministic, derived from the config hash and seed, and
//! all numeric output uses shortest round-trip formatting, so re-emitting the
//! same log produces byte-identical files.
//!
//! CSV column layouts (comma separator, dot decimal, one header row):
//!
//! - `*-timeseries.csv`: `iteration,total_loss,supervised_ce,pseudo_ce_u1,`
//!   `min_entropy_u2,penalty,n_labeled,n_u1,n_u2,test_error,ece,aece,cece,`
//!   `agreement,mean_max_logit_distance,max_logit_distance,threshold_global`
//!   (empty `agreement` cell when no window was selected);
//! - `*-reliability.csv`: `iteration,bin_index,lower,upper,count,`
//!   `mean_confidence,accuracy`;
//! - `*-logit-hist.csv`: `class,coordinate,bin_lower,count` (best checkpoint);
//! - `dynamics-*.csv`: `p,shannon_entropy,min_entropy,d_shannon_abs,`
//!   `d_min_entropy_abs`;
//! - `sweep-*-summary.csv`: `variant,mean_error,std_error,mean_ece,std_ece,`
//!   `mean_agreement,mean_max_logit_distance,friedman_rank`.

use std::fmt::Write as _;
use std::path::{Path, PathBuf};

use crate::calibration::DynamicsRow;
use crate::error::{Error, Result};
use crate::experiment::sweep::SweepReport;
use crate::experiment::train::RunLog;

fn write_file(path: &Path, contents: &str) -> Result<()> {
    if let Some(parent) = path.parent() {
        if !parent.as_os_str().is_empty() {
            std::fs::create_dir_all(parent).map_err(|e| Error::io(parent, e))?;
        }
    }
    std::fs::write(path, contents).map_err(|e| Error::io(path, e))
}

fn fmt_opt(v: Option<f64>) -> String {
    v.map(|x| x.to_string()).unwrap_or_default()
}

/// File-name prefix shared by one run's outputs.
pub fn run_prefix(log: &RunLog) -> String {
    format!("run-{}-seed{}", log.config_hash, log.seed)
}

/// Write one run's summary JSON, metric time series, reliability bins, and
/// best-checkpoint logit histograms. Returns the created paths.
pub fn emit_run_reports(log: &RunLog, out_dir: &Path) -> Result<Vec<PathBuf>> {
    let prefix = run_prefix(log);
    let mut written = Vec::new();

    let summary_path = out_dir.join(format!("{prefix}-summary.json"));
    let json = serde_json::to_string_pretty(log)
        .map_err(|e| Error::parse("run summary", e.to_string()))?;
    write_file(&summary_path, &json)?;
    written.push(summary_path);

    let mut timeseries = String::from(
        "iteration,total_loss,supervised_ce,pseudo_ce_u1,min_entropy_u2,penalty,\
         n_labeled,n_u1,n_u2,test_error,ece,aece,cece,agreement,\
         mean_max_logit_distance,max_logit_distance,threshold_global\n",
    );
    for row in &log.rows {
        let _ = writeln!(
            timeseries,
            "{},{},{},{},{},{},{},{},{},{},{},{},{},{},{},{},{}",
            row.iteration,
            row.losses.total,
            row.losses.supervised_ce,
            row.losses.pseudo_ce_u1,
            row.losses.min_entropy_u2,
            row.losses.penalty,
            row.losses.n_labeled,
            row.losses.n_u1,
            row.losses.n_u2,
            row.test_error,
            row.ece,
            row.aece,
            row.cece,
            fmt_opt(row.agreement),
            row.mean_max_logit_distance,
            row.max_logit_distance,
            row.threshold_global,
        );
    }
    let timeseries_path = out_dir.join(format!("{prefix}-timeseries.csv"));
    write_file(&timeseries_path, &timeseries)?;
    written.push(timeseries_path);

    let mut reliability =
        String::from("iteration,bin_index,lower,upper,count,mean_confidence,accuracy\n");
    for row in &log.rows {
        let bins = &row.reliability;
        for b in 0..bins.n_bins() {
            let _ = writeln!(
                reliability,
                "{},{},{},{},{},{},{}",
                row.iteration,
                b,
                bins.lower[b],
                bins.upper[b],
                bins.count[b],
                bins.mean_confidence[b],
                bins.accuracy[b],
            );
        }
    }
    let reliability_path = out_dir.join(format!("{prefix}-reliability.csv"));
    write_file(&reliability_path, &reliability)?;
    written.push(reliability_path);

    let mut hist = String::from("class,coordinate,bin_lower,count\n");
    if let Some(stats) = &log.best_logit_stats {
        for class_stats in &stats.classes {
            for (coord, histogram) in class_stats.coordinate_histograms.iter().enumerate() {
                for (i, &count) in histogram.counts.iter().enumerate() {
                    if count > 0 {
                        let _ = writeln!(
                            hist,
                            "{},{},{},{}",
                            class_stats.class,
                            coord,
                            histogram.bin_lower(i),
                            count,
                        );
                    }
                }
            }
        }
    }
    let hist_path = out_dir.join(format!("{prefix}-logit-hist.csv"));
    write_file(&hist_path, &hist)?;
    written.push(hist_path);

    Ok(written)
}

/// Write the two-class entropy-dynamics table.
pub fn emit_dynamics_csv(rows: &[DynamicsRow], path: &Path) -> Result<()> {
    let mut out = String::from("p,shannon_entropy,min_entropy,d_shannon_abs,d_min_entropy_abs\n");
    for row in rows {
        let _ = writeln!(
            out,
            "{},{},{},{},{}",
            row.p, row.shannon, row.min_entropy, row.d_shannon_abs, row.d_min_entropy_abs,
        );
    }
    write_file(path, &out)
}

/// Write a sweep's JSON report and CSV summary. Returns the created paths.
pub fn emit_sweep_reports(report: &SweepReport, out_dir: &Path) -> Result<Vec<PathBuf>> {
    let mut written = Vec::new();
    let json_path = out_dir.join(format!("sweep-{}-report.json", report.base_hash));
    let json = serde_json::to_string_pretty(report)
        .map_err(|e| Error::parse("sweep report", e.to_string()))?;
    write_file(&json_path, &json)?;
    written.push(json_path);

    let mut csv = String::from(
        "variant,mean_error,std_error,mean_ece,std_ece,mean_agreement,\
         mean_max_logit_distance,friedman_rank\n",
    );
    for v in &report.variants {
        let _ = writeln!(
            csv,
            "{},{},{},{},{},{},{},{}",
            v.name,
            v.mean_error,
            v.std_error,
            v.mean_ece,
            v.std_ece,
            fmt_opt(v.mean_agreement),
            v.mean_max_logit_distance,
            v.friedman_rank,
        );
    }
    let csv_path = out_dir.join(format!("sweep-{}-summary.csv", report.base_hash));
    write_file(&csv_path, &csv)?;
    written.push(csv_path);
    Ok(written)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::experiment::config::RunConfig;
    use crate::experiment::train::train;

    fn temp_dir(tag: &str) -> PathBuf {
        let dir = std::env::temp_dir().join(format!("sslab-report-{tag}"));
        let _ = std::fs::remove_dir_all(&dir);
        std::fs::create_dir_all(&dir).unwrap();
        dir
    }

    #[test]
    fn empty_log_emits_header_only_files() {
        let dir = temp_dir("empty");
        let log = RunLog::empty("cafebabecafebabe".into(), 1);
        let files = emit_run_reports(&log, &dir).unwrap();
        assert_eq!(files.len(), 4);
        let ts = std::fs::read_to_string(&files[1]).unwrap();
        assert_eq!(ts.lines().count(), 1, "header row only");
        assert!(ts.starts_with("iteration,total_loss"));
        let hist = std::fs::read_to_string(&files[3]).unwrap();
        assert_eq!(hist.lines().count(), 1);
    }

    #[test]
    fn re_emitting_a_log_is_byte_identical() {
        let mut config = RunConfig::default();
        config.dataset.unlabeled_count = 100;
        config.dataset.test_count = 100;
        config.train.iterations = 20;
        config.train.eval_interval = 10;
        config.model.hidden = vec![8];
        let outcome = train(&config, 3).unwrap();
        let dir_a = temp_dir("rerun-a");
        let dir_b = temp_dir("rerun-b");
        let files_a = emit_run_reports(&outcome.log, &dir_a).unwrap();
        let files_b = emit_run_reports(&outcome.log, &dir_b).unwrap();
        for (a, b) in files_a.iter().zip(&files_b) {
            assert_eq!(
                std::fs::read(a).unwrap(),
                std::fs::read(b).unwrap(),
                "{a:?} differs"
            );
        }
    }

    #[test]
    fn timeseries_row_count_matches_eval_count() {
        let mut config = RunConfig::default();
        config.dataset.unlabeled_count = 100;
        config.dataset.test_count = 100;
        config.train.iterations = 30;
        config.train.eval_interval = 10;
        config.model.hidden = vec![8];
        let outcome = train(&config, 4).unwrap();
        let dir = temp_dir("rows");
        let files = emit_run_reports(&outcome.log, &dir).unwrap();
        let ts = std::fs::read_to_string(&files[1]).unwrap();
        assert_eq!(ts.lines().count(), 1 + outcome.log.rows.len());
    }

    #[test]
    fn dynamics_csv_layout() {
        let rows = crate::calibration::simplex_dynamics(9).unwrap();
        let dir = temp_dir("dynamics");
        let path = dir.join("dynamics-9.csv");
        emit_dynamics_csv(&rows, &path).unwrap();
        let text = std::fs::read_to_string(&path).unwrap();
        let mut lines = text.lines();
        assert_eq!(
            lines.next().unwrap(),
            "p,shannon_entropy,min_entropy,d_shannon_abs,d_min_entropy_abs"
        );
        assert_eq!(text.lines().count(), 1 + rows.len());
    }
}
