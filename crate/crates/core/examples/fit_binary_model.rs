//! Fit the model where any connection shifts both the grade and its noise,
//! then print the coefficient table and compare with the truth.

use favinfo::inference::attach_covariance;
use favinfo::optimizer::{fit, FitOptions};
use favinfo::report::fit_report;
use favinfo::sim::{simulate, DgpConfig};
use favinfo::spec::{BaselineVarSpec, Block, ModelSpec, ThresholdSpec};

fn main() -> favinfo::error::Result<()> {
    let cfg = DgpConfig {
        n_exams: 200,
        seed: 7,
        ..DgpConfig::default()
    };
    let (ds, _) = simulate(&cfg)?;

    let spec = ModelSpec::binary(
        BaselineVarSpec::Homoscedastic,
        ThresholdSpec::GroupedEffects {
            covariates: vec!["z1".into()],
            intercept: true,
        },
    );
    let model = spec.compile(&ds)?;
    let mut result = fit(&spec, &ds, None, &FitOptions::default())?;
    attach_covariance(&model, &mut result)?;
    print!("{}", fit_report(&result));

    let b = result.params.get(Block::Gamma, "connected").unwrap();
    let d = result.params.get(Block::DeltaInfo, "connected").unwrap();
    println!("\ntrue favor 0.2, estimated {b:.3}; true log scale 0.2, estimated {d:.3}");
    Ok(())
}
