//! Favors that grow with the number of strong and weak ties on the jury,
//! estimated with linear, quadratic and observable-interacted designs.

use favinfo::inference::{attach_covariance, lr_test};
use favinfo::optimizer::{fit, FitOptions};
use favinfo::report::{fit_report, lr_report};
use favinfo::sim::{simulate, BiasTruth, DgpConfig, InfoTruth, TieCount};
use favinfo::spec::{BaselineVarSpec, BiasSpec, InfoSpec, ModelSpec, ThresholdSpec};

fn main() -> favinfo::error::Result<()> {
    let cfg = DgpConfig {
        n_exams: 300,
        pool_min: 20,
        pool_max: 40,
        strong_ties: TieCount::Binomial {
            prob: 0.1,
            loadings: vec![],
        },
        weak_ties: TieCount::Binomial {
            prob: 0.15,
            loadings: vec![],
        },
        bias: BiasTruth {
            spec: BiasSpec::QuadraticCounts,
            gamma: vec![0.3, -0.04, 0.1, -0.01, 0.02],
        },
        info: InfoTruth::Excess {
            spec: InfoSpec::LinearCounts,
            delta: vec![0.12, 0.04],
        },
        seed: 11,
        ..DgpConfig::default()
    };
    let (ds, _) = simulate(&cfg)?;
    let groups = || ThresholdSpec::GroupedEffects {
        covariates: vec!["z1".into()],
        intercept: true,
    };
    let opts = FitOptions::default();

    let linear = ModelSpec::linear_counts(BaselineVarSpec::Homoscedastic, groups());
    let quadratic = ModelSpec::quadratic_counts(BaselineVarSpec::Homoscedastic, groups());
    let interacted = ModelSpec::by_observables(vec!["x1".into()], BaselineVarSpec::Homoscedastic, groups());

    let lin = fit(&linear, &ds, None, &opts)?;
    let mut quad = fit(&quadratic, &ds, None, &opts)?;
    attach_covariance(&quadratic.compile(&ds)?, &mut quad)?;
    let by_x = fit(&interacted, &ds, None, &opts)?;
    print!("{}", fit_report(&quad));

    println!();
    print!("{}", lr_report("linear vs quadratic", &lr_test(&lin, &quad)?));
    // The interacted design has no information main effects, so it does
    // not nest the quadratic one and the LR test refuses the pair.
    match lr_test(&quad, &by_x) {
        Ok(r) => print!("{}", lr_report("quadratic vs by x1", &r)),
        Err(e) => println!("quadratic vs by x1: {e}"),
    }
    println!("log-likelihood by x1: {:.3}", by_x.loglik);
    Ok(())
}
