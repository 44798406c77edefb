//! Randomization checks and selection of baseline variance regressors.

use nalgebra::{DMatrix, DVector};
use serde::{Deserialize, Serialize};

use crate::data::{Dataset, E_STRONG, E_WEAK};
use crate::error::{Error, Result};
use crate::inference::{attach_covariance, lr_test, stars, LrTestResult};
use crate::normal::norm_cdf;
use crate::optimizer::{fit, FitOptions, FitResult};
use crate::spec::{BaselineVarSpec, BiasSpec, Block, InfoSpec, ModelSpec, ThresholdSpec};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct OlsResult {
    pub names: Vec<String>,
    pub coef: Vec<f64>,
    pub se: Vec<f64>,
}

/// OLS of `y` on the columns of `x` (row-major, `names.len()` columns) with
/// a cluster-robust sandwich and `G/(G−1)` correction.
pub fn ols_clustered(y: &[f64], x: &[f64], names: &[String], cluster: &[usize]) -> Result<OlsResult> {
    let n = y.len();
    let k = names.len();
    if x.len() != n * k || cluster.len() != n {
        return Err(Error::Dimension {
            what: "regression design".into(),
            expected: n * k,
            got: x.len(),
        });
    }
    let xm = DMatrix::from_row_slice(n, k, x);
    let yv = DVector::from_column_slice(y);
    let xtx = xm.transpose() * &xm;
    let xtx_inv = xtx.clone().try_inverse().filter(|inv| {
        // Reject numerically singular designs.
        let eig = xtx.clone().symmetric_eigenvalues();
        let max = eig.iter().fold(0.0f64, |m, v| m.max(v.abs()));
        eig.iter().all(|&l| l > 1e-12 * max) && inv.iter().all(|v| v.is_finite())
    });
    let Some(xtx_inv) = xtx_inv else {
        return Err(Error::RankDeficient(names.to_vec()));
    };
    let coef = &xtx_inv * (xm.transpose() * &yv);
    let resid = &yv - &xm * &coef;
    let g = cluster.iter().max().map_or(0, |m| m + 1);
    let mut sums = vec![DVector::<f64>::zeros(k); g];
    for i in 0..n {
        sums[cluster[i]] += xm.row(i).transpose() * resid[i];
    }
    let mut present = vec![false; g];
    cluster.iter().for_each(|&c| present[c] = true);
    let used = present.iter().filter(|p| **p).count();
    if used < 2 {
        return Err(Error::TooFewClusters(used));
    }
    let mut meat = DMatrix::zeros(k, k);
    for s in &sums {
        meat.ger(1.0, s, s, 1.0);
    }
    meat *= used as f64 / (used as f64 - 1.0);
    let v = &xtx_inv * meat * &xtx_inv;
    Ok(OlsResult {
        names: names.to_vec(),
        coef: coef.iter().copied().collect(),
        se: (0..k).map(|j| v[(j, j)].max(0.0).sqrt()).collect(),
    })
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BalanceCell {
    pub observable: String,
    /// `n_S` or `n_W`.
    pub regressor: String,
    pub coef: f64,
    pub se: f64,
    pub p: f64,
    pub stars: String,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BalanceReport {
    /// Observable on realized connections only.
    pub unconditional: Vec<BalanceCell>,
    /// Adding the expected connection counts as controls.
    pub conditional: Vec<BalanceCell>,
    pub n: usize,
    pub n_clusters: usize,
}

/// Regresses each observable on `(n_S, n_W)`, then on
/// `(n_S, n_W, e_S, e_W)`, with exam-clustered standard errors.
pub fn balance_test(ds: &Dataset, observables: &[String]) -> Result<BalanceReport> {
    let cluster: Vec<usize> = ds.candidates().iter().map(|c| c.exam).collect();
    let mut unconditional = Vec::new();
    let mut conditional = Vec::new();
    for name in observables {
        let j = ds
            .observable_index(name)
            .ok_or_else(|| Error::InvalidSpec(format!("unknown observable `{name}`")))?;
        let y: Vec<f64> = ds.candidates().iter().map(|c| c.observables[j]).collect();
        for (controls, out) in [(false, &mut unconditional), (true, &mut conditional)] {
            let mut names: Vec<String> = vec!["const".into(), "n_S".into(), "n_W".into()];
            if controls {
                names.extend([E_STRONG.to_string(), E_WEAK.to_string()]);
            }
            let mut x = Vec::with_capacity(ds.len() * names.len());
            for c in ds.candidates() {
                x.extend([1.0, c.n_strong as f64, c.n_weak as f64]);
                if controls {
                    x.extend([c.e_strong, c.e_weak]);
                }
            }
            let r = ols_clustered(&y, &x, &names, &cluster)
                .map_err(|e| match e {
                    Error::RankDeficient(cols) => Error::RankDeficient(
                        cols.into_iter().map(|c| format!("{name} ~ {c}")).collect(),
                    ),
                    other => other,
                })?;
            for k in [1, 2] {
                let z = r.coef[k] / r.se[k];
                let p = 2.0 * norm_cdf(-z.abs());
                out.push(BalanceCell {
                    observable: name.clone(),
                    regressor: names[k].clone(),
                    coef: r.coef[k],
                    se: r.se[k],
                    p,
                    stars: stars(p).into(),
                });
            }
        }
    }
    Ok(BalanceReport {
        unconditional,
        conditional,
        n: ds.len(),
        n_clusters: ds.n_exams(),
    })
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct VarianceSelection {
    pub selected: BaselineVarSpec,
    /// `(variable, z)` from the full variance fit on unconnected candidates.
    pub z_scores: Vec<(String, f64)>,
    pub full: FitResult,
    pub restricted: FitResult,
    /// Restricted (selected) against full variance design.
    pub lr: LrTestResult,
}

/// Fits a probit with every observable and both expected connection counts
/// in the log-variance on unconnected candidates, then keeps the variables
/// whose `|z|` reaches `z_threshold`, plus `always_keep`. One pass, no
/// stepwise refitting.
pub fn select_baseline_variance(
    ds: &Dataset,
    z_threshold: f64,
    always_keep: &[String],
    threshold: &ThresholdSpec,
    opts: &FitOptions,
) -> Result<VarianceSelection> {
    let unconnected = ds.filter(|c| !c.is_connected());
    if unconnected.is_empty() {
        return Err(Error::EmptySubsample);
    }
    let spec_with = |baseline| ModelSpec {
        bias: BiasSpec::None,
        info: InfoSpec::None,
        baseline,
        threshold: threshold.clone(),
    };
    let full_spec = spec_with(BaselineVarSpec::Full);
    let (sample, _) = crate::optimizer::estimation_sample(&full_spec, &unconnected);
    let model = full_spec.compile(&sample)?;
    let mut full = fit(&full_spec, &sample, None, opts)?;
    attach_covariance(&model, &mut full)?;

    let names = full.params.layout.block_names(Block::DeltaBase).to_vec();
    let range = full.params.layout.range(Block::DeltaBase);
    let mut z_scores = Vec::new();
    let mut included = Vec::new();
    for (name, j) in names.iter().zip(range) {
        let se = full.se(j).unwrap_or(f64::NAN);
        let z = full.params.values[j] / se;
        z_scores.push((name.clone(), z));
        if z.abs() >= z_threshold || always_keep.contains(name) {
            included.push(name.clone());
        }
    }
    let selected = if included.len() == names.len() {
        BaselineVarSpec::Full
    } else if included.is_empty() {
        BaselineVarSpec::Homoscedastic
    } else {
        BaselineVarSpec::PreferredSubset { included }
    };
    let restricted = if selected == BaselineVarSpec::Full {
        full.clone()
    } else {
        fit(&spec_with(selected.clone()), &sample, None, opts)?
    };
    let lr = lr_test(&restricted, &full)?;
    Ok(VarianceSelection {
        selected,
        z_scores,
        full,
        restricted,
        lr,
    })
}
