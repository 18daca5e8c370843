//! The heart of the library: the thresholded pseudo-label loss splits, by
//! weak/strong agreement, into a corrective pseudo-CE plus a min-entropy term
//! on the agreeing samples — and the margin penalty that counteracts the
//! min-entropy push.
//!
//! ```bash
//! cargo run -p sslab --example loss_decomposition
//! ```

use sslab::core_math::argmax_tiebreak;
use sslab::objective::{
    decompose, logit_distances, margin_penalty, pseudo_ce_masked, ApplySet, MarginConfig,
};
use sslab::pseudo_label::PseudoLabelDecision;
use sslab::rng::RngStream;

fn main() {
    // a random strong-logit batch with decisions as training would make them
    let mut stream = RngStream::new(3, "example/decomposition", 0, 0);
    let k = 4;
    let logits: Vec<Vec<f64>> = (0..64)
        .map(|_| (0..k).map(|_| 4.0 * stream.next_normal()).collect())
        .collect();
    let decisions: Vec<PseudoLabelDecision> = logits
        .iter()
        .map(|l| {
            let strong_pred = argmax_tiebreak(l).unwrap();
            let selected = stream.next_f64() < 0.8;
            let agree = stream.next_f64() < 0.85;
            let pseudo_class = if agree {
                strong_pred
            } else {
                (strong_pred + 1 + stream.next_index(k - 1)) % k
            };
            PseudoLabelDecision {
                pseudo_class,
                selected,
                agree,
                weak_max_prob: 0.97,
                strong_pred_class: strong_pred,
            }
        })
        .collect();

    let (masked, _) = pseudo_ce_masked(&logits, &decisions).unwrap();
    let parts = decompose(&logits, &decisions).unwrap();
    println!("thresholded pseudo-CE:          {masked:.12}");
    println!(
        "pseudo-CE on disagreement set:  {:.12}  ({} samples)",
        parts.pseudo_ce_u1, parts.n_u1
    );
    println!(
        "min-entropy on agreement set:   {:.12}  ({} samples)",
        parts.min_entropy_u2, parts.n_u2
    );
    println!(
        "recomposition gap:              {:.3e}",
        (parts.pseudo_ce_u1 + parts.min_entropy_u2 - masked).abs()
    );

    // the margin penalty on one oversized logit vector
    let sample = vec![9.0, 2.0, 0.5, -1.0];
    println!("\nlogits {sample:?}");
    println!("logit distances {:?}", logit_distances(&sample));
    let one_decision = vec![PseudoLabelDecision {
        pseudo_class: 0,
        selected: true,
        agree: true,
        weak_max_prob: 0.99,
        strong_pred_class: 0,
    }];
    for margin in [2.0, 6.0, 12.0] {
        let cfg = MarginConfig {
            margin,
            lambda: 1.0,
            apply_set: ApplySet::U2Only,
        };
        let (penalty, grads) = margin_penalty(std::slice::from_ref(&sample), &one_decision, &cfg).unwrap();
        println!("margin {margin:>4}: penalty {penalty:>7.3}  gradient {:?}", grads[0]);
    }
}
