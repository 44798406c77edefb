//! Checks that jury draws are random once the expected number of
//! connections is controlled for, then picks the baseline variance
//! regressors on unconnected candidates.

use favinfo::diagnostics::{balance_test, select_baseline_variance};
use favinfo::optimizer::FitOptions;
use favinfo::report::{balance_report, selection_report};
use favinfo::sim::{simulate, DgpConfig, TieCount};
use favinfo::spec::ThresholdSpec;

fn main() -> favinfo::error::Result<()> {
    // Better candidates have more ties in the evaluator pool, and x1
    // makes grades noisier.
    let cfg = DgpConfig {
        n_exams: 200,
        strong_ties: TieCount::Binomial {
            prob: 0.04,
            loadings: vec![0.5, 0.0],
        },
        weak_ties: TieCount::Binomial {
            prob: 0.05,
            loadings: vec![0.3, -0.2],
        },
        delta_base: vec![0.3, 0.0],
        seed: 9,
        ..DgpConfig::default()
    };
    let (ds, _) = simulate(&cfg)?;
    let rep = balance_test(&ds, ds.observable_names())?;
    print!("{}", balance_report(&rep));

    let keep = ["e_strong".to_string(), "e_weak".to_string()];
    let threshold = ThresholdSpec::GroupedEffects {
        covariates: vec!["z1".into()],
        intercept: true,
    };
    let sel = select_baseline_variance(&ds, 1.96, &keep, &threshold, &FitOptions::default())?;
    println!();
    print!("{}", selection_report(&sel));
    Ok(())
}
