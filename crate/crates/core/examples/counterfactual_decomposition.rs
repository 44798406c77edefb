//! What would one connection on the jury do for unconnected candidates?
//! Splits the change in promotion probability into the favor and the
//! information part, by subsample and along the baseline probability.

use favinfo::counterfactual::{average_effects, binned_curve, effects_where, Change, Subsample};
use favinfo::optimizer::{fit, FitOptions};
use favinfo::report::{curve_report, effects_report};
use favinfo::sim::{simulate, DgpConfig, InfoTruth};
use favinfo::spec::{BaselineVarSpec, InfoSpec, ModelSpec, ThresholdSpec};

fn main() -> favinfo::error::Result<()> {
    let cfg = DgpConfig {
        n_exams: 200,
        info: InfoTruth::Excess {
            spec: InfoSpec::ConstantConnected,
            delta: vec![0.3],
        },
        seed: 5,
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
    let result = fit(&spec, &ds, None, &FitOptions::default())?;
    let p = &result.params.values;

    let summaries = [
        Subsample::Unconnected,
        Subsample::UnconnectedWithPoolTies,
        Subsample::UnconnectedWithStrongAndWeakPoolTies,
    ]
    .into_iter()
    .map(|s| average_effects(&model, p, &ds, s, Change::Connect))
    .collect::<Result<Vec<_>, _>>()?;
    print!("{}", effects_report(&summaries, true));

    // Favors help everybody; extra noise helps the weak and hurts the strong.
    let effects = effects_where(&model, p, &ds, |c| !c.is_connected(), Change::Connect)?;
    println!();
    print!("{}", curve_report(&binned_curve(&effects, 10)));
    Ok(())
}
