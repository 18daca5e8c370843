//! Why the agreement part of the pseudo-label loss is so aggressive: tabulate
//! Shannon entropy vs min-entropy on the two-class simplex, with the
//! magnitudes of their gradients in `p`.
//!
//! Near the center of the simplex the Shannon gradient vanishes while the
//! min-entropy gradient never drops below 1, so uncertain predictions get
//! pushed to a vertex immediately, right or wrong.
//!
//! ```bash
//! cargo run -p sslab --example entropy_dynamics
//! ```

use sslab::calibration::simplex_dynamics;

fn main() {
    let rows = simplex_dynamics(19).unwrap();
    println!(
        "{:>6} {:>10} {:>10} {:>10} {:>10}",
        "p", "H(p)", "minEnt(p)", "|dH/dp|", "|dME/dp|"
    );
    for row in &rows {
        println!(
            "{:>6.2} {:>10.4} {:>10.4} {:>10.4} {:>10.4}",
            row.p, row.shannon, row.min_entropy, row.d_shannon_abs, row.d_min_entropy_abs
        );
    }
    let near_center = rows
        .iter()
        .filter(|r| (r.p - 0.5).abs() < 0.1)
        .map(|r| r.d_min_entropy_abs / r.d_shannon_abs.max(1e-12))
        .fold(f64::INFINITY, f64::min);
    println!("\nnear p = 0.5 the min-entropy gradient is at least {near_center:.1}x the Shannon one");
}
