//! Friedman ranks: compare methods across settings by mean per-setting rank,
//! with average ranks on ties. Lower is better.
//!
//! ```bash
//! cargo run -p sslab --example friedman_rank
//! ```

use sslab::calibration::friedman_rank;

fn main() {
    // four methods evaluated on three settings by error rate and on three by
    // ECE; every setting is lower-is-better
    let methods = ["baseline", "label_smoothing", "focal", "margin_penalty"];
    let scores = vec![
        //       err1  err2  err3  ece1  ece2  ece3
        vec![21.4, 16.2, 14.9, 18.3, 11.6, 10.5],
        vec![29.1, 19.0, 15.6, 23.6, 13.0, 10.1],
        vec![28.8, 20.4, 14.7, 24.4, 15.6, 11.2],
        vec![21.4, 16.1, 13.2, 14.9, 10.4, 3.7],
    ];
    let ranks = friedman_rank(&scores, &[true; 6]).unwrap();

    let mut order: Vec<usize> = (0..methods.len()).collect();
    order.sort_by(|&a, &b| ranks[a].partial_cmp(&ranks[b]).unwrap());
    println!("{:<18} {:>6}", "method", "rank");
    for &i in &order {
        println!("{:<18} {:>6.3}", methods[i], ranks[i]);
    }
    println!("\nnote the tie on err1 (21.4): both methods receive the average rank there");
}
