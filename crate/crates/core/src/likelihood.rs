//! Heteroscedastic probit log-likelihood with analytic gradient.
//!
//! Sums run over candidates in ascending index order, so results are
//! bitwise reproducible for a given dataset ordering.

use crate::error::{Error, Result};
use crate::normal::{inv_mills, log_norm_cdf, norm_cdf};
use crate::spec::{Block, LinearIndex, Model, ThresholdDesign};

#[derive(Debug, Clone, PartialEq)]
pub struct LikelihoodValue {
    pub loglik: f64,
    pub gradient: Vec<f64>,
    /// One row per exam: the sum of its candidates' score vectors.
    pub cluster_scores: Vec<Vec<f64>>,
}

/// Log-likelihood contribution of one candidate and its derivatives with
/// respect to the grade index and the log scale.
#[derive(Debug, Clone, Copy)]
pub struct PointDerivs {
    pub loglik: f64,
    pub d_mean: f64,
    pub d_log_sigma: f64,
    /// Second derivative with respect to the grade index.
    pub d2_mean: f64,
}

pub fn point_derivs(y: u8, li: LinearIndex) -> PointDerivs {
    let s = if y == 1 { 1.0 } else { -1.0 };
    let inv_sigma = (-li.log_sigma).exp();
    let m = li.mean * inv_sigma;
    let u = s * m;
    let lambda = inv_mills(u);
    PointDerivs {
        loglik: log_norm_cdf(u),
        d_mean: s * lambda * inv_sigma,
        d_log_sigma: -u * lambda,
        d2_mean: -lambda * (u + lambda) * inv_sigma * inv_sigma,
    }
}

pub(crate) fn check_finite(params: &[f64]) -> Result<()> {
    match params.iter().position(|v| !v.is_finite()) {
        Some(i) => Err(Error::NonFiniteParameter(i)),
        None => Ok(()),
    }
}

fn check(model: &Model, params: &[f64]) -> Result<()> {
    if params.len() != model.n_params() {
        return Err(Error::Dimension {
            what: "parameter vector".into(),
            expected: model.n_params(),
            got: params.len(),
        });
    }
    check_finite(params)
}

/// Adds `d_mean · ∂mean/∂θ + d_log_sigma · ∂logσ/∂θ` for candidate `i`.
pub(crate) fn scatter(model: &Model, i: usize, d_mean: f64, d_ls: f64, out: &mut [f64]) {
    let layout = model.layout();
    let (x, g, wb, wi) = model.rows(i);
    for (o, v) in out[layout.range(Block::Beta)].iter_mut().zip(x) {
        *o += d_mean * v;
    }
    let t = layout.range(Block::Threshold);
    match model.threshold_design() {
        ThresholdDesign::Fixed { slot } => out[t.start + slot[i]] -= d_mean,
        ThresholdDesign::Grouped { z, k, exam } => {
            let row = &z[exam[i] * k..(exam[i] + 1) * k];
            for (o, v) in out[t].iter_mut().zip(row) {
                *o -= d_mean * v;
            }
        }
    }
    for (o, v) in out[layout.range(Block::Gamma)].iter_mut().zip(g) {
        *o += d_mean * v;
    }
    for (o, v) in out[layout.range(Block::DeltaBase)].iter_mut().zip(wb) {
        *o += d_ls * v;
    }
    for (o, v) in out[layout.range(Block::DeltaInfo)].iter_mut().zip(wi) {
        *o += d_ls * v;
    }
}

/// Log-likelihood, gradient and per-exam score sums.
pub fn log_likelihood(model: &Model, params: &[f64]) -> Result<LikelihoodValue> {
    check(model, params)?;
    let k = model.n_params();
    let mut cluster_scores = vec![vec![0.0; k]; model.n_clusters()];
    let mut loglik = 0.0;
    for i in 0..model.n() {
        let d = point_derivs(model.outcome(i), model.linear_index_unchecked(params, i));
        loglik += d.loglik;
        scatter(model, i, d.d_mean, d.d_log_sigma, &mut cluster_scores[model.cluster(i)]);
    }
    let mut gradient = vec![0.0; k];
    for row in &cluster_scores {
        for (g, s) in gradient.iter_mut().zip(row) {
            *g += s;
        }
    }
    Ok(LikelihoodValue {
        loglik,
        gradient,
        cluster_scores,
    })
}

/// Log-likelihood and gradient without the cluster breakdown.
pub fn loglik_and_gradient(model: &Model, params: &[f64]) -> Result<(f64, Vec<f64>)> {
    check(model, params)?;
    let mut grad = vec![0.0; model.n_params()];
    let mut loglik = 0.0;
    for i in 0..model.n() {
        let d = point_derivs(model.outcome(i), model.linear_index_unchecked(params, i));
        loglik += d.loglik;
        scatter(model, i, d.d_mean, d.d_log_sigma, &mut grad);
    }
    Ok((loglik, grad))
}

pub fn loglik(model: &Model, params: &[f64]) -> Result<f64> {
    check(model, params)?;
    Ok((0..model.n())
        .map(|i| point_derivs(model.outcome(i), model.linear_index_unchecked(params, i)).loglik)
        .sum())
}

/// Per-candidate score vectors, row-major `n × k`.
pub fn candidate_scores(model: &Model, params: &[f64]) -> Result<Vec<Vec<f64>>> {
    check(model, params)?;
    Ok((0..model.n())
        .map(|i| {
            let d = point_derivs(model.outcome(i), model.linear_index_unchecked(params, i));
            let mut row = vec![0.0; model.n_params()];
            scatter(model, i, d.d_mean, d.d_log_sigma, &mut row);
            row
        })
        .collect())
}

/// `Φ(mean / σ)` without clamping.
pub fn prob_of(li: LinearIndex) -> f64 {
    norm_cdf(li.z())
}

/// Promotion probability of candidate `i`, kept strictly inside (0, 1) for
/// reporting.
pub fn predict_prob(model: &Model, params: &[f64], i: usize) -> Result<f64> {
    let li = model.linear_index(params, i)?;
    Ok(clamp_open(prob_of(li)))
}

pub(crate) fn clamp_open(p: f64) -> f64 {
    p.clamp(f64::MIN_POSITIVE, 1.0 - f64::EPSILON / 2.0)
}
