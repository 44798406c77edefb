//! Promotion probability against the candidate index for connected and
//! unconnected candidates: favors move the curve, information flattens it.

use favinfo::likelihood::prob_of;
use favinfo::spec::LinearIndex;

fn main() {
    let favor = 0.3;
    let log_scale = 0.4;
    println!("{:>8}{:>12}{:>12}{:>12}", "x·b - a", "unconnected", "favor only", "info only");
    for k in -8..=8 {
        let m = k as f64 * 0.5;
        let p = |mean, log_sigma| prob_of(LinearIndex { mean, log_sigma });
        println!(
            "{m:>8.1}{:>12.4}{:>12.4}{:>12.4}",
            p(m, 0.0),
            p(m + favor, 0.0),
            p(m, log_scale)
        );
    }
    println!("information raises the chances of candidates below the bar and lowers them above it");
}
