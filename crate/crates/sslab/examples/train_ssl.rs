//! Supervised-only vs pseudo-label SSL on the synthetic benchmark, at the
//! full desk-scale schedule: the SSL runs win on error and lose on
//! calibration, which is the whole reason this laboratory exists.
//!
//! Takes roughly half a minute; the acceptance suite gates the same
//! directions over five seeds.
//!
//! ```bash
//! cargo run -p sslab --example train_ssl
//! ```

use sslab::experiment::{train, RunConfig};

fn main() {
    let config = RunConfig::default();

    let mut supervised = config.clone();
    supervised.threshold.tau = 1.01; // nothing clears the threshold
    supervised.penalty.lambda = 0.0;

    let mut ssl = config.clone();
    ssl.penalty.lambda = 0.0;

    let seeds = [1u64, 2, 3];
    println!(
        "{:<12} {:>6} {:>8} {:>8} {:>8} {:>8}",
        "run", "seed", "error", "ece", "aece", "agree"
    );
    let mut means = [[0.0f64; 2]; 2];
    for &seed in &seeds {
        for (which, (name, cfg)) in [("supervised", &supervised), ("ssl", &ssl)]
            .into_iter()
            .enumerate()
        {
            let outcome = train(cfg, seed).unwrap();
            let best = outcome.log.best.unwrap();
            let row = &outcome.log.rows[best.row_index];
            means[which][0] += best.test_error / seeds.len() as f64;
            means[which][1] += best.ece / seeds.len() as f64;
            println!(
                "{:<12} {:>6} {:>8.4} {:>8.4} {:>8.4} {:>8}",
                name,
                seed,
                best.test_error,
                best.ece,
                row.aece,
                row.agreement
                    .map(|a| format!("{a:.3}"))
                    .unwrap_or_else(|| "-".into()),
            );
        }
    }
    println!(
        "\nmeans: supervised error {:.4} / ece {:.4}  vs  ssl error {:.4} / ece {:.4}",
        means[0][0], means[0][1], means[1][0], means[1][1]
    );
    println!("ssl should sit below on error and above on ECE");
}
