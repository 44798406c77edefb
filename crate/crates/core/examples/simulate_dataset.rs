//! Draw a synthetic promotion dataset and look at who gets connected.
//!
//! ```text
//! cargo run --example simulate_dataset -- /tmp/favinfo-sim
//! ```

use favinfo::data::save_dataset;
use favinfo::report::dataset_summary;
use favinfo::sim::{save_truth, simulate, DgpConfig, TieCount};

fn main() -> favinfo::error::Result<()> {
    let out = std::env::args().nth(1).unwrap_or_else(|| "sim-out".into());
    std::fs::create_dir_all(&out)?;

    // Strong ties are more common among candidates with high x1.
    let cfg = DgpConfig {
        n_exams: 50,
        candidates_per_exam: 80,
        strong_ties: TieCount::Binomial {
            prob: 0.04,
            loadings: vec![0.5, 0.0],
        },
        seed: 2024,
        ..DgpConfig::default()
    };
    let (ds, truth) = simulate(&cfg)?;
    print!("{}", dataset_summary(&ds));

    let connected: Vec<_> = ds.candidates().iter().filter(|c| c.is_connected()).collect();
    let mean_x1 = |cs: &[&favinfo::data::Candidate]| cs.iter().map(|c| c.observables[0]).sum::<f64>() / cs.len() as f64;
    let others: Vec<_> = ds.candidates().iter().filter(|c| !c.is_connected()).collect();
    println!("mean x1, connected {:.3} vs unconnected {:.3}", mean_x1(&connected), mean_x1(&others));

    let promoted_by_favor = truth
        .rows
        .iter()
        .zip(ds.candidates())
        .filter(|(t, c)| t.y_favor_only == 1 && c.outcome == 0)
        .count();
    println!("candidates one more strong tie would push over the bar by favor alone: {promoted_by_favor}");

    let dir = std::path::Path::new(&out);
    save_dataset(&ds, dir.join("dataset.csv"))?;
    save_truth(&truth, dir.join("truth.csv"))?;
    println!("wrote {}", dir.display());
    Ok(())
}
