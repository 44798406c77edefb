//! Are exam thresholds explained by exam characteristics? Compare grouped
//! effects `a_e = z_e·a` against one free threshold per exam.

use favinfo::inference::lr_test;
use favinfo::optimizer::{estimation_sample, fit, FitOptions};
use favinfo::report::lr_report;
use favinfo::sim::{simulate, DgpConfig};
use favinfo::spec::{BaselineVarSpec, ModelSpec, ThresholdSpec};

fn main() -> favinfo::error::Result<()> {
    let cfg = DgpConfig {
        n_exams: 40,
        candidates_per_exam: 150,
        seed: 3,
        ..DgpConfig::default()
    };
    let (ds, _) = simulate(&cfg)?;
    let fe = ModelSpec::binary(BaselineVarSpec::Homoscedastic, ThresholdSpec::FixedEffects);
    let ge = ModelSpec::binary(
        BaselineVarSpec::Homoscedastic,
        ThresholdSpec::GroupedEffects {
            covariates: vec!["z1".into()],
            intercept: true,
        },
    );

    // Both models must see the same candidates: exams where everybody
    // shares one outcome carry no information under fixed effects.
    let (sample, dropped) = estimation_sample(&fe, &ds);
    println!("exams without outcome variation dropped: {dropped}");
    let opts = FitOptions::default();
    let restricted = fit(&ge, &sample, None, &opts)?;
    let unrestricted = fit(&fe, &sample, None, &opts)?;
    print!("{}", lr_report("GE vs FE", &lr_test(&restricted, &unrestricted)?));

    // An omitted exam characteristic shows up as a rejection.
    let no_z = ModelSpec::binary(BaselineVarSpec::Homoscedastic, ThresholdSpec::default());
    let bare = fit(&no_z, &sample, None, &opts)?;
    print!("{}", lr_report("constant vs FE", &lr_test(&bare, &unrestricted)?));
    Ok(())
}
