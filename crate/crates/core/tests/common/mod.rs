#![allow(dead_code)]

use favinfo::counterfactual::CfDecomposition;
use favinfo::likelihood::loglik_and_gradient;
use favinfo::sim::{BiasTruth, DgpConfig, InfoTruth, ObservableConfig, ObservableDist, TieCount};
use favinfo::spec::{BiasSpec, InfoSpec, Model, ThresholdSpec};

pub fn grouped_z1() -> ThresholdSpec {
    ThresholdSpec::GroupedEffects {
        covariates: vec!["z1".into()],
        intercept: true,
    }
}

pub fn normal_observables(names: &[&str]) -> Vec<ObservableConfig> {
    names
        .iter()
        .map(|n| ObservableConfig {
            name: n.to_string(),
            dist: ObservableDist::Normal { mean: 0.0, sd: 1.0 },
        })
        .collect()
}

/// Constant favor `b` and constant log excess scale `d` for the connected.
pub fn binary_dgp(n_exams: usize, per_exam: usize, b: f64, d: f64, seed: u64) -> DgpConfig {
    DgpConfig {
        n_exams,
        candidates_per_exam: per_exam,
        bias: BiasTruth {
            spec: BiasSpec::ConstantConnected,
            gamma: vec![b],
        },
        info: InfoTruth::Excess {
            spec: InfoSpec::ConstantConnected,
            delta: vec![d],
        },
        strong_ties: TieCount::Binomial {
            prob: 0.06,
            loadings: vec![],
        },
        weak_ties: TieCount::Binomial {
            prob: 0.08,
            loadings: vec![],
        },
        seed,
        ..DgpConfig::default()
    }
}

/// Central differences of the mean log-likelihood, step
/// `1e-6·max(1, |θ_j|)`.
pub fn fd_gradient(model: &Model, params: &[f64]) -> Vec<f64> {
    let n = model.n() as f64;
    let mut theta = params.to_vec();
    (0..params.len())
        .map(|j| {
            let h = 1e-6 * params[j].abs().max(1.0);
            theta[j] = params[j] + h;
            let up = favinfo::likelihood::loglik(model, &theta).unwrap() / n;
            theta[j] = params[j] - h;
            let down = favinfo::likelihood::loglik(model, &theta).unwrap() / n;
            theta[j] = params[j];
            (up - down) / (2.0 * h)
        })
        .collect()
}

/// Worst violation of `|analytic − fd| ≤ max(1e-6·|fd|, 1e-8)`, as a ratio
/// (pass when ≤ 1).
pub fn gradient_mismatch(model: &Model, params: &[f64]) -> f64 {
    let n = model.n() as f64;
    let (_, g) = loglik_and_gradient(model, params).unwrap();
    let fd = fd_gradient(model, params);
    g.iter()
        .zip(&fd)
        .map(|(a, b)| (a / n - b).abs() / (1e-6 * b.abs()).max(1e-8))
        .fold(0.0, f64::max)
}

pub fn assert_additive(effects: &[CfDecomposition]) {
    for e in effects {
        let gap = (e.favor_part + e.info_part - e.total).abs();
        assert!(gap <= 1e-15, "decomposition of {} off by {gap:e}", e.candidate_id);
        let gap = (e.alt_favor_part + e.alt_info_part - e.total).abs();
        assert!(gap <= 1e-15, "alternative decomposition of {} off by {gap:e}", e.candidate_id);
    }
}

/// Mean and Monte Carlo standard error of the mean.
pub fn mc_summary(xs: &[f64]) -> (f64, f64) {
    let n = xs.len() as f64;
    let mean = xs.iter().sum::<f64>() / n;
    let var = xs.iter().map(|x| (x - mean).powi(2)).sum::<f64>() / (n - 1.0);
    (mean, (var / n).sqrt())
}
