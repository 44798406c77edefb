//! Sandwich covariance, Wald tests and likelihood-ratio tests.
//!
//! The bread is the negative Hessian of the log-likelihood, obtained by
//! central differences of the analytic gradient; the meat sums outer
//! products of exam-level score totals with a `G/(G−1)` correction.

use nalgebra::{DMatrix, DVector, SymmetricEigen};
use serde::{Deserialize, Serialize};
use statrs::distribution::{ChiSquared, ContinuousCDF};

use crate::error::{Error, Result};
use crate::likelihood::{candidate_scores, log_likelihood, loglik_and_gradient};
use crate::normal::norm_cdf;
use crate::optimizer::{ConditionFlag, FitResult};
use crate::spec::{Block, Model, ParamLayout};

/// Condition number of the information matrix above which a fit is
/// flagged as nearly unidentified.
pub const NEAR_SINGULAR_CONDITION: f64 = 1e10;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize, Default)]
#[serde(rename_all = "snake_case")]
pub enum Clustering {
    #[default]
    Exam,
    /// Every candidate its own cluster (heteroskedasticity-robust).
    Candidate,
}

#[derive(Debug, Clone)]
pub struct CovarianceEstimate {
    pub matrix: DMatrix<f64>,
    /// Inverse of the information matrix (the non-robust covariance).
    pub inverse_information: DMatrix<f64>,
    pub condition_number: f64,
    pub clipped: bool,
}

/// Negative Hessian of the log-likelihood by central differences of the
/// gradient, step `1e-5·max(1, |θ_j|)`, symmetrized.
pub fn information_matrix(model: &Model, params: &[f64]) -> Result<DMatrix<f64>> {
    let k = params.len();
    let mut h = DMatrix::zeros(k, k);
    let mut theta = params.to_vec();
    for j in 0..k {
        let step = 1e-5 * params[j].abs().max(1.0);
        theta[j] = params[j] + step;
        let (_, gp) = loglik_and_gradient(model, &theta)?;
        theta[j] = params[j] - step;
        let (_, gm) = loglik_and_gradient(model, &theta)?;
        theta[j] = params[j];
        for i in 0..k {
            h[(i, j)] = -(gp[i] - gm[i]) / (2.0 * step);
        }
    }
    Ok((&h + h.transpose()) * 0.5)
}

/// Inverts a symmetric positive definite information matrix, or names the
/// parameters loading on its (near-)null directions.
fn invert_information(a: &DMatrix<f64>, layout: &ParamLayout) -> Result<(DMatrix<f64>, f64)> {
    let eig = SymmetricEigen::new(a.clone());
    let max = eig.eigenvalues.iter().fold(0.0f64, |m, v| m.max(v.abs()));
    let mut null_dirs = Vec::new();
    for (c, &lambda) in eig.eigenvalues.iter().enumerate() {
        if lambda <= 1e-12 * max {
            let v = eig.eigenvectors.column(c);
            let mut load: Vec<(usize, f64)> = v.iter().map(|x| x.abs()).enumerate().collect();
            load.sort_by(|a, b| b.1.total_cmp(&a.1).then(a.0.cmp(&b.0)));
            let names: Vec<String> = load
                .iter()
                .take_while(|(_, w)| *w > 0.1)
                .take(4)
                .map(|(i, w)| format!("{} ({w:.2})", layout.qualified_name(*i)))
                .collect();
            null_dirs.push(format!("eigenvalue {lambda:.3e}: {}", names.join(", ")));
        }
    }
    if !null_dirs.is_empty() || max == 0.0 {
        return Err(Error::SingularInformation(null_dirs));
    }
    let min = eig.eigenvalues.iter().fold(f64::INFINITY, |m, v| m.min(*v));
    let inv_vals = eig.eigenvalues.map(|l| 1.0 / l);
    let inv = &eig.eigenvectors * DMatrix::from_diagonal(&inv_vals) * eig.eigenvectors.transpose();
    Ok(((&inv + inv.transpose()) * 0.5, max / min))
}

fn outer_sum(rows: &[Vec<f64>], k: usize) -> DMatrix<f64> {
    let mut b = DMatrix::zeros(k, k);
    for s in rows {
        let v = DVector::from_column_slice(s);
        b.ger(1.0, &v, &v, 1.0);
    }
    b
}

/// Score outer-product matrix with the `G/(G−1)` factor.
pub fn score_meat(model: &Model, params: &[f64], clustering: Clustering) -> Result<DMatrix<f64>> {
    let rows = match clustering {
        Clustering::Exam => log_likelihood(model, params)?.cluster_scores,
        Clustering::Candidate => candidate_scores(model, params)?,
    };
    let g = rows.len();
    if g < 2 {
        return Err(Error::TooFewClusters(g));
    }
    Ok(outer_sum(&rows, params.len()) * (g as f64 / (g as f64 - 1.0)))
}

/// `V = A⁻¹ B A⁻¹`, eigenvalues clipped at zero.
pub fn sandwich(a_inv: &DMatrix<f64>, b: &DMatrix<f64>) -> (DMatrix<f64>, bool) {
    let v = a_inv * b * a_inv;
    let v = (&v + v.transpose()) * 0.5;
    let eig = SymmetricEigen::new(v.clone());
    if eig.eigenvalues.iter().all(|&l| l >= 0.0) {
        return (v, false);
    }
    let clipped = eig.eigenvalues.map(|l| l.max(0.0));
    (
        &eig.eigenvectors * DMatrix::from_diagonal(&clipped) * eig.eigenvectors.transpose(),
        true,
    )
}

/// Cluster-robust covariance of the fitted parameters.
pub fn clustered_covariance(model: &Model, fit: &FitResult, clustering: Clustering) -> Result<CovarianceEstimate> {
    if !fit.converged {
        log::warn!("covariance evaluated at a non-converged estimate");
    }
    let params = &fit.params.values;
    let a = information_matrix(model, params)?;
    let (a_inv, condition_number) = invert_information(&a, model.layout())?;
    let b = score_meat(model, params, clustering)?;
    let (matrix, clipped) = sandwich(&a_inv, &b);
    if clipped {
        log::warn!("sandwich covariance had negative eigenvalues; clipped at zero");
    }
    Ok(CovarianceEstimate {
        matrix,
        inverse_information: a_inv,
        condition_number,
        clipped,
    })
}

/// Computes the exam-clustered covariance and stores it in `fit`, flagging
/// ill-conditioned information.
pub fn attach_covariance(model: &Model, fit: &mut FitResult) -> Result<CovarianceEstimate> {
    let cov = clustered_covariance(model, fit, Clustering::Exam)?;
    if cov.condition_number > NEAR_SINGULAR_CONDITION && fit.condition_flag == ConditionFlag::Ok {
        fit.condition_flag = ConditionFlag::NearSingularHessian;
    }
    if cov.clipped {
        fit.warnings.push("covariance eigenvalues clipped at zero".into());
    }
    fit.covariance = Some(
        (0..cov.matrix.nrows())
            .map(|i| cov.matrix.row(i).iter().copied().collect())
            .collect(),
    );
    Ok(cov)
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct LrTestResult {
    pub lr_stat: f64,
    pub df: usize,
    pub p_value: f64,
    pub loglik_restricted: f64,
    pub loglik_unrestricted: f64,
    /// The restricted fit beat the unrestricted one by more than 1e-6, so
    /// the unrestricted optimization went wrong.
    pub optimizer_failure: bool,
}

pub fn chi2_sf(stat: f64, df: usize) -> f64 {
    if df == 0 {
        return 1.0;
    }
    ChiSquared::new(df as f64).expect("positive df").sf(stat.max(0.0))
}

/// Likelihood-ratio test of `restricted` against `unrestricted`.
pub fn lr_test(restricted: &FitResult, unrestricted: &FitResult) -> Result<LrTestResult> {
    if restricted.data_fingerprint != unrestricted.data_fingerprint {
        return Err(Error::NotNested(
            "fits were estimated on different samples (under fixed effects, exams without outcome variation are dropped; fit the grouped model on the same reduced sample)".into(),
        ));
    }
    restricted
        .params
        .layout
        .nests_in(&unrestricted.params.layout)
        .map_err(Error::NotNested)?;
    let df = unrestricted.n_params() - restricted.n_params();
    let diff = unrestricted.loglik - restricted.loglik;
    let optimizer_failure = diff < -1e-6;
    if optimizer_failure {
        log::warn!("restricted log-likelihood exceeds unrestricted by {:.3e}", -diff);
    }
    let lr_stat = (2.0 * diff).max(0.0);
    Ok(LrTestResult {
        lr_stat,
        df,
        p_value: chi2_sf(lr_stat, df),
        loglik_restricted: restricted.loglik,
        loglik_unrestricted: unrestricted.loglik,
        optimizer_failure,
    })
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct WaldResult {
    pub stat: f64,
    pub df: usize,
    pub p_value: f64,
    /// Signed statistic for a single restriction.
    pub z: Option<f64>,
}

/// Tests `Rθ = r` (with `r = 0` when omitted) using the stored covariance.
pub fn wald_test(fit: &FitResult, r: &[Vec<f64>], rhs: Option<&[f64]>) -> Result<WaldResult> {
    let cov = fit
        .covariance
        .as_ref()
        .ok_or_else(|| Error::Config("fit has no covariance".into()))?;
    let k = fit.n_params();
    let q = r.len();
    if q == 0 {
        return Err(Error::Dimension {
            what: "restriction rows".into(),
            expected: 1,
            got: 0,
        });
    }
    if let Some(bad) = r.iter().find(|row| row.len() != k) {
        return Err(Error::Dimension {
            what: "restriction row".into(),
            expected: k,
            got: bad.len(),
        });
    }
    if let Some(rhs) = rhs {
        if rhs.len() != q {
            return Err(Error::Dimension {
                what: "restriction right-hand side".into(),
                expected: q,
                got: rhs.len(),
            });
        }
    }
    let rm = DMatrix::from_fn(q, k, |i, j| r[i][j]);
    let v = DMatrix::from_fn(k, k, |i, j| cov[i][j]);
    let theta = DVector::from_column_slice(&fit.params.values);
    let mut d = &rm * theta;
    if let Some(rhs) = rhs {
        d -= DVector::from_column_slice(rhs);
    }
    let m = &rm * v * rm.transpose();
    if q == 1 {
        let se = m[(0, 0)].max(0.0).sqrt();
        let z = if d[0] == 0.0 { 0.0 } else { d[0] / se };
        return Ok(WaldResult {
            stat: z * z,
            df: 1,
            p_value: 2.0 * norm_cdf(-z.abs()),
            z: Some(z),
        });
    }
    let inv = m
        .try_inverse()
        .ok_or_else(|| Error::SingularInformation(vec!["restriction covariance".into()]))?;
    let stat = (d.transpose() * inv * &d)[(0, 0)];
    Ok(WaldResult {
        stat,
        df: q,
        p_value: chi2_sf(stat, q),
        z: None,
    })
}

/// `***` at 1%, `**` at 5%, `*` at 10%.
pub fn stars(p: f64) -> &'static str {
    if p < 0.01 {
        "***"
    } else if p < 0.05 {
        "**"
    } else if p < 0.1 {
        "*"
    } else {
        ""
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CoefRow {
    pub name: String,
    pub block: Block,
    pub estimate: f64,
    pub se: Option<f64>,
    pub z: Option<f64>,
    pub p: Option<f64>,
    pub stars: String,
}

pub fn coefficient_table(fit: &FitResult) -> Vec<CoefRow> {
    let layout = &fit.params.layout;
    (0..fit.n_params())
        .map(|i| {
            let estimate = fit.params.values[i];
            let se = fit.se(i);
            let z = se.filter(|s| *s > 0.0).map(|s| estimate / s);
            let p = z.map(|z| 2.0 * norm_cdf(-z.abs()));
            CoefRow {
                name: layout.name(i).to_string(),
                block: layout.block_of(i),
                estimate,
                se,
                z,
                p,
                stars: p.map(stars).unwrap_or("").to_string(),
            }
        })
        .collect()
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn star_levels() {
        assert_eq!(stars(0.005), "***");
        assert_eq!(stars(0.01), "**");
        assert_eq!(stars(0.07), "*");
        assert_eq!(stars(0.5), "");
    }

    #[test]
    fn chi2_tail() {
        assert_eq!(chi2_sf(0.0, 0), 1.0);
        assert!((chi2_sf(3.841458820694124, 1) - 0.05).abs() < 1e-12);
    }
}
