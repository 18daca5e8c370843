//! Long-tailed class populations: the exponential count profiles, and a short
//! run comparing the penalty against the plain SSL baseline when both the
//! labeled and unlabeled sets share the same head-heavy imbalance.
//!
//! ```bash
//! cargo run -p sslab --example longtail
//! ```

use sslab::experiment::{longtail_counts, train, RunConfig};

fn main() {
    println!("count profiles (head count 150):");
    for gamma in [10.0, 15.0, -10.0] {
        let counts = longtail_counts(4, 150, gamma).unwrap();
        println!("  gamma {gamma:>5}: {counts:?}");
    }

    let mut base = RunConfig::default();
    base.apply_override("dataset.longtail", "true").unwrap();
    base.apply_override("dataset.gamma_labeled", "10").unwrap();
    base.apply_override("dataset.gamma_unlabeled", "10").unwrap();

    let mut baseline = base.clone();
    baseline.penalty.lambda = 0.0;
    let penalized = base.clone(); // default margin 10, lambda 0.1

    println!("\nlabeled head 150 / unlabeled head 300, gamma_l = 10, gamma_u = 10:");
    println!("{:<12} {:>6} {:>8} {:>8}", "run", "seed", "error", "ece");
    for seed in [1, 2, 3] {
        for (name, cfg) in [("baseline", &baseline), ("penalized", &penalized)] {
            let outcome = train(cfg, seed).unwrap();
            let best = outcome.log.best.unwrap();
            println!(
                "{:<12} {:>6} {:>8.4} {:>8.4}",
                name, seed, best.test_error, best.ece
            );
        }
    }
}
