//! Fit a model to your own data. Column names are mapped through a
//! `Schema`; everything not listed there is ignored.
//!
//! ```text
//! cargo run --example from_csv -- path/to/data.csv
//! ```

use favinfo::data::{load_dataset, Schema};
use favinfo::inference::attach_covariance;
use favinfo::optimizer::{estimation_sample, fit, FitOptions};
use favinfo::report::{dataset_summary, fit_report};
use favinfo::spec::{BaselineVarSpec, ModelSpec, ThresholdSpec};

fn main() -> favinfo::error::Result<()> {
    let path = std::env::args().nth(1).unwrap_or_else(|| {
        concat!(env!("CARGO_MANIFEST_DIR"), "/tests/fixtures/probit500.csv").to_string()
    });
    let schema = Schema {
        observables: vec!["publications".into(), "age".into(), "female".into()],
        group_covariates: vec!["z1".into()],
        ..Schema::default()
    };
    let ds = load_dataset(&path, &schema)?;
    print!("{}", dataset_summary(&ds));

    let spec = ModelSpec::binary(
        BaselineVarSpec::PreferredSubset {
            included: vec!["publications".into()],
        },
        ThresholdSpec::GroupedEffects {
            covariates: vec!["z1".into()],
            intercept: true,
        },
    );
    let (sample, _) = estimation_sample(&spec, &ds);
    let mut result = fit(&spec, &sample, None, &FitOptions::default())?;
    attach_covariance(&spec.compile(&sample)?, &mut result)?;
    println!();
    print!("{}", fit_report(&result));
    Ok(())
}
