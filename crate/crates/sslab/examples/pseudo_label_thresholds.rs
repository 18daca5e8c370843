//! Pseudo-label selection in isolation: the decision record, the agreement
//! partition, and how the three threshold strategies evolve on the same
//! stream of batches.
//!
//! ```bash
//! cargo run -p sslab --example pseudo_label_thresholds
//! ```

use sslab::pseudo_label::{
    decide, partition, update_class_adaptive, update_self_adaptive, ThresholdState,
};
use sslab::rng::RngStream;

/// A synthetic weak/strong probability pair: mostly confident, classes drawn
/// with a skew so the class-adaptive counts have something to adapt to.
fn fake_batch(t: u64, k: usize) -> Vec<(Vec<f64>, Vec<f64>)> {
    let mut stream = RngStream::new(42, "example/thresholds", t, 0);
    (0..32)
        .map(|_| {
            // skewed class draw: class 0 twice as likely as the rest
            let class = if stream.next_f64() < 0.4 {
                0
            } else {
                1 + stream.next_index(k - 1)
            };
            let conf = 0.55 + 0.45 * stream.next_f64();
            let make = |c: usize, p: f64, stream: &mut RngStream| {
                let mut v = vec![(1.0 - p) / (k as f64 - 1.0); k];
                v[c] = p;
                // occasionally the strong view flips to a neighbor
                let _ = stream;
                v
            };
            let weak = make(class, conf, &mut stream);
            let strong_class = if stream.next_f64() < 0.15 { (class + 1) % k } else { class };
            let strong = make(strong_class, 0.6, &mut stream);
            (weak, strong)
        })
        .collect()
}

fn main() {
    let k = 4;
    let mut fixed = ThresholdState::fixed(k, 0.95).unwrap();
    let mut class_adaptive = ThresholdState::class_adaptive(k, 0.95).unwrap();
    let mut self_adaptive = ThresholdState::self_adaptive(k, 0.95).unwrap();

    for t in 0..40u64 {
        let batch = fake_batch(t, k);
        let weak_probs: Vec<Vec<f64>> = batch.iter().map(|(w, _)| w.clone()).collect();

        let decisions: Vec<_> = batch
            .iter()
            .map(|(w, s)| decide(w, s, &class_adaptive).unwrap())
            .collect();
        update_class_adaptive(&mut class_adaptive, &decisions);
        update_self_adaptive(&mut self_adaptive, &weak_probs);
        // fixed stays fixed; nothing to update

        if t % 10 == 9 {
            let (u1, u2) = partition(&decisions);
            println!(
                "batch {:>2}: selected {:>2} of {} (disagree {}, agree {})",
                t,
                u1.len() + u2.len(),
                decisions.len(),
                u1.len(),
                u2.len()
            );
        }
    }

    println!("\nper-class thresholds after 40 batches:");
    println!("  fixed          {:?}", rounded(&fixed.per_class_thresholds()));
    println!("  class-adaptive {:?}", rounded(&class_adaptive.per_class_thresholds()));
    println!("  self-adaptive  {:?}", rounded(&self_adaptive.per_class_thresholds()));
    println!(
        "  self-adaptive global EMA threshold: {:.4} (started at 1/K = {:.4})",
        self_adaptive.global_threshold(),
        1.0 / k as f64
    );
    let _ = &mut fixed;
}

fn rounded(v: &[f64]) -> Vec<f64> {
    v.iter().map(|x| (x * 1e4).round() / 1e4).collect()
}
