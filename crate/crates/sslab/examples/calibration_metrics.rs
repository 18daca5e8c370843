//! The calibration metric suite on two synthetic predictors: one whose
//! confidence matches its hit rate, and an overconfident one.
//!
//! ```bash
//! cargo run -p sslab --example calibration_metrics
//! ```

use sslab::calibration::{adaptive_ece, classwise_ece, ece, reliability};
use sslab::rng::RngStream;

fn simulate(n: usize, overconfidence: f64, seed: u64) -> (Vec<Vec<f64>>, Vec<usize>) {
    // two-class predictor: true positive-class probability q ~ U(0,1); the
    // reported probability is pushed toward the vertex by `overconfidence`
    let mut stream = RngStream::new(seed, "example/calibration", 0, 0);
    let mut probs = Vec::with_capacity(n);
    let mut labels = Vec::with_capacity(n);
    for _ in 0..n {
        let q = stream.next_f64();
        let reported = if q >= 0.5 {
            (q + overconfidence * (1.0 - q)).min(1.0)
        } else {
            (q - overconfidence * q).max(0.0)
        };
        probs.push(vec![reported, 1.0 - reported]);
        labels.push(usize::from(stream.next_f64() >= q));
    }
    (probs, labels)
}

fn report(name: &str, probs: &[Vec<f64>], labels: &[usize]) {
    let confidences: Vec<f64> = probs.iter().map(|p| p[0].max(p[1])).collect();
    let correct: Vec<bool> = probs
        .iter()
        .zip(labels)
        .map(|(p, &y)| usize::from(p[1] > p[0]) == y)
        .collect();
    let e = ece(&confidences, &correct, 15).unwrap();
    let a = adaptive_ece(&confidences, &correct, 15).unwrap();
    let c = classwise_ece(probs, labels, 15).unwrap();
    println!("{name}: ECE {e:.4}  AECE {a:.4}  CECE {c:.4}");

    let bins = reliability(&confidences, &correct, 10).unwrap();
    println!("  bin        conf    acc   count");
    for b in 0..bins.n_bins() {
        if bins.count[b] > 0 {
            println!(
                "  ({:.1},{:.1}] {:>6.3} {:>6.3} {:>7}",
                bins.lower[b], bins.upper[b], bins.mean_confidence[b], bins.accuracy[b], bins.count[b]
            );
        }
    }
}

fn main() {
    let (probs, labels) = simulate(100_000, 0.0, 7);
    report("calibrated predictor ", &probs, &labels);
    let (probs, labels) = simulate(100_000, 0.6, 7);
    report("overconfident variant", &probs, &labels);
}
