//! Where should the penalty apply? Sweep the three choices — no penalty,
//! agreement set only, all selected samples — and emit the comparison report
//! with Friedman ranks.
//!
//! ```bash
//! cargo run -p sslab --example penalty_ablation
//! ```

use sslab::experiment::{sweep, RunConfig, Variant};

fn main() {
    let mut base = RunConfig::default();
    base.train.iterations = 1200;
    base.dataset.unlabeled_count = 800;
    base.dataset.test_count = 500;
    base.penalty.margin = 4.0;

    let variants = vec![
        Variant::parse("no_penalty: penalty.lambda=0").unwrap(),
        Variant::parse("agreement_only: penalty.lambda=0.1; penalty.apply_set=u2_only").unwrap(),
        Variant::parse("all_selected: penalty.lambda=0.1; penalty.apply_set=u1_and_u2").unwrap(),
    ];
    let report = sweep(&base, &variants, &[1, 2, 3]).unwrap();

    println!(
        "{:<16} {:>8} {:>8} {:>8} {:>8} {:>8} {:>6}",
        "variant", "error", "err_sd", "ece", "ece_sd", "agree", "rank"
    );
    for v in &report.variants {
        println!(
            "{:<16} {:>8.4} {:>8.4} {:>8.4} {:>8.4} {:>8} {:>6.2}",
            v.name,
            v.mean_error,
            v.std_error,
            v.mean_ece,
            v.std_ece,
            v.mean_agreement
                .map(|a| format!("{a:.3}"))
                .unwrap_or_else(|| "-".into()),
            v.friedman_rank,
        );
    }
}
