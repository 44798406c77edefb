//! Maximum likelihood by BFGS with projected backtracking line search.
//!
//! Fits run in stages: a homoscedastic probit on the mean parameters first,
//! then everything at once starting from there. Exam fixed effects are
//! concentrated out: every objective evaluation solves the per-exam
//! threshold equations by Newton's method (each is a concave
//! one-dimensional problem), and BFGS only sees the remaining parameters.

use serde::{Deserialize, Serialize};

use crate::data::Dataset;
use crate::error::{Error, Result};
use crate::likelihood::{check_finite, loglik_and_gradient, point_derivs};
use crate::spec::{Block, Model, ModelSpec, ParamVector, ThresholdDesign};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Stage {
    /// Mean and threshold parameters only; bias and variance held at their
    /// starting values.
    Probit,
    /// All parameters.
    Full,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct FitOptions {
    pub max_iter: usize,
    pub grad_tol: f64,
    pub step_tol: f64,
    pub stages: Vec<Stage>,
    /// Box `[-b, b]` on every log-variance coefficient.
    pub delta_bound: f64,
    /// Newton iterations allowed per exam when concentrating out fixed
    /// effects.
    pub max_newton: usize,
}

impl Default for FitOptions {
    fn default() -> Self {
        FitOptions {
            max_iter: 500,
            grad_tol: 1e-6,
            step_tol: 1e-9,
            stages: vec![Stage::Probit, Stage::Full],
            delta_bound: 10.0,
            max_newton: 60,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ConditionFlag {
    Ok,
    NearSingularHessian,
    BoundaryLike,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FitResult {
    pub spec: ModelSpec,
    pub params: ParamVector,
    pub loglik: f64,
    pub n: usize,
    pub n_clusters: usize,
    pub iterations: usize,
    pub converged: bool,
    /// Max-norm of the gradient of the mean log-likelihood.
    pub gradient_norm: f64,
    /// Value `gradient_norm` had to fall below.
    pub gradient_threshold: f64,
    pub condition_flag: ConditionFlag,
    /// Exam-clustered sandwich covariance, once computed.
    pub covariance: Option<Vec<Vec<f64>>>,
    pub data_fingerprint: String,
    pub dropped_exams: usize,
    #[serde(default)]
    pub warnings: Vec<String>,
}

impl FitResult {
    pub fn se(&self, i: usize) -> Option<f64> {
        self.covariance.as_ref().map(|v| v[i][i].max(0.0).sqrt())
    }

    pub fn n_params(&self) -> usize {
        self.params.values.len()
    }
}

/// The estimation sample actually used for `spec`: under fixed effects,
/// exams whose candidates all share one outcome carry no information and
/// are removed.
pub fn estimation_sample(spec: &ModelSpec, ds: &Dataset) -> (Dataset, usize) {
    match spec.threshold {
        crate::spec::ThresholdSpec::FixedEffects => {
            let (reduced, dropped) = ds.drop_degenerate_exams();
            if dropped > 0 {
                log::info!("dropped {dropped} exams without outcome variation");
            }
            (reduced, dropped)
        }
        _ => (ds.clone(), 0),
    }
}

/// Fits `spec` to `ds`. Starting values default to probit intercepts
/// matched to promotion rates.
pub fn fit(spec: &ModelSpec, ds: &Dataset, init: Option<&ParamVector>, opts: &FitOptions) -> Result<FitResult> {
    let (sample, dropped) = estimation_sample(spec, ds);
    let model = spec.compile(&sample)?;
    let init = match init {
        Some(p) => Some(align_init(&model, p)?),
        None => None,
    };
    let mut res = fit_model(&model, init, opts)?;
    res.dropped_exams = dropped;
    Ok(res)
}

fn align_init(model: &Model, p: &ParamVector) -> Result<Vec<f64>> {
    if p.layout == *model.layout() {
        return Ok(p.values.clone());
    }
    let mut out = vec![0.0; model.n_params()];
    for block in Block::ALL {
        for (name, j) in model.layout().block_names(block).iter().zip(model.layout().range(block)) {
            out[j] = p.get(block, name).ok_or_else(|| {
                Error::InvalidSpec(format!("starting values lack {} parameter `{name}`", block.label()))
            })?;
        }
    }
    Ok(out)
}

/// Fits an already compiled model on its own sample.
pub fn fit_model(model: &Model, init: Option<Vec<f64>>, opts: &FitOptions) -> Result<FitResult> {
    let ones = (0..model.n()).filter(|&i| model.outcome(i) == 1).count();
    if ones == 0 || ones == model.n() {
        return Err(Error::DegenerateOutcome(model.outcome(0)));
    }
    model.rank_check()?;
    let layout = model.layout().clone();

    let (mut theta, stages) = match init {
        Some(v) => {
            if v.len() != layout.len() {
                return Err(Error::Dimension {
                    what: "starting values".into(),
                    expected: layout.len(),
                    got: v.len(),
                });
            }
            check_finite(&v)?;
            (v, vec![Stage::Full])
        }
        None => (model.default_init(), opts.stages.clone()),
    };
    for j in variance_indices(model) {
        theta[j] = theta[j].clamp(-opts.delta_bound, opts.delta_bound);
    }

    let probit_only = layout.range(Block::Gamma).is_empty()
        && layout.range(Block::DeltaBase).is_empty()
        && layout.range(Block::DeltaInfo).is_empty();
    let mut iterations = 0;
    let mut outcome = None;
    let mut warnings = Vec::new();
    for (k, stage) in stages.iter().enumerate() {
        if probit_only && k > 0 {
            break;
        }
        let free: Vec<usize> = match stage {
            Stage::Probit => layout
                .range(Block::Beta)
                .chain(layout.range(Block::Threshold))
                .collect(),
            Stage::Full => (0..layout.len()).collect(),
        };
        let r = minimize(model, &theta, &free, opts)?;
        iterations += r.iterations;
        theta = r.theta.clone();
        if !r.converged && k + 1 < stages.len() {
            warnings.push(format!("stage {stage:?} stopped before convergence"));
        }
        outcome = Some(r);
    }
    let r = outcome.ok_or_else(|| Error::Config("no estimation stages".into()))?;

    let n = model.n() as f64;
    let (loglik, grad) = loglik_and_gradient(model, &theta)?;
    let gradient_norm = projected_norm(model, &theta, &grad, opts.delta_bound) / n;
    let gradient_threshold = grad_threshold(opts.grad_tol, loglik, n);
    let at_box = variance_indices(model).any(|j| theta[j].abs() >= opts.delta_bound);
    let separated = separation_suspected(model, &theta);
    if at_box {
        warnings.push("a log-variance coefficient sits on its box bound".into());
    }
    if separated {
        warnings.push("some candidates are predicted with near certainty; likelihood may have no interior maximum".into());
    }
    let converged = r.converged && gradient_norm < gradient_threshold;
    if !converged {
        log::warn!("optimizer did not converge after {iterations} iterations (gradient {gradient_norm:.3e})");
    }
    Ok(FitResult {
        spec: model.spec().clone(),
        params: ParamVector {
            layout,
            values: theta,
        },
        loglik,
        n: model.n(),
        n_clusters: model.n_clusters(),
        iterations,
        converged,
        gradient_norm,
        gradient_threshold,
        condition_flag: if at_box || separated {
            crate::optimizer::ConditionFlag::BoundaryLike
        } else {
            ConditionFlag::Ok
        },
        covariance: None,
        data_fingerprint: model.fingerprint().to_string(),
        dropped_exams: 0,
        warnings,
    })
}

fn grad_threshold(tol: f64, loglik: f64, n: f64) -> f64 {
    tol * loglik.abs().max(1.0) / n
}

fn variance_indices(model: &Model) -> impl Iterator<Item = usize> + '_ {
    let l = model.layout();
    l.range(Block::DeltaBase).chain(l.range(Block::DeltaInfo))
}

/// Max-norm of the gradient with components pushing out of the box removed.
fn projected_norm(model: &Model, theta: &[f64], grad: &[f64], bound: f64) -> f64 {
    let var: Vec<usize> = variance_indices(model).collect();
    grad.iter()
        .enumerate()
        .map(|(j, g)| {
            if var.contains(&j) && ((theta[j] >= bound && *g > 0.0) || (theta[j] <= -bound && *g < 0.0)) {
                0.0
            } else {
                g.abs()
            }
        })
        .fold(0.0, f64::max)
}

/// Correct predictions six standard deviations from the threshold only
/// arise when the likelihood keeps improving as coefficients grow.
fn separation_suspected(model: &Model, theta: &[f64]) -> bool {
    (0..model.n()).any(|i| {
        let z = model.linear_index_unchecked(theta, i).z();
        let s = if model.outcome(i) == 1 { 1.0 } else { -1.0 };
        s * z > 6.0
    })
}

struct StageResult {
    theta: Vec<f64>,
    iterations: usize,
    converged: bool,
}

/// Objective `-ℓ/n` restricted to the `free` coordinates, with fixed
/// effects concentrated out when the model has them.
struct Objective<'a> {
    model: &'a Model,
    theta: Vec<f64>,
    free: Vec<usize>,
    /// Members of each exam when thresholds are concentrated out.
    profile: Option<Vec<Vec<usize>>>,
    max_newton: usize,
    n: f64,
}

impl<'a> Objective<'a> {
    fn new(model: &'a Model, theta: &[f64], free: &[usize], max_newton: usize) -> Self {
        let t = model.layout().range(Block::Threshold);
        let profile = match model.threshold_design() {
            ThresholdDesign::Fixed { .. } if free.iter().any(|j| t.contains(j)) => {
                let mut members = vec![Vec::new(); model.n_clusters()];
                for i in 0..model.n() {
                    members[model.cluster(i)].push(i);
                }
                Some(members)
            }
            _ => None,
        };
        let free = match profile {
            Some(_) => free.iter().copied().filter(|j| !t.contains(j)).collect(),
            None => free.to_vec(),
        };
        Objective {
            model,
            theta: theta.to_vec(),
            free,
            profile,
            max_newton,
            n: model.n() as f64,
        }
    }

    fn point(&self) -> Vec<f64> {
        self.free.iter().map(|&j| self.theta[j]).collect()
    }

    /// Evaluates at `z`, updating the stored full parameter vector.
    fn eval(&mut self, z: &[f64]) -> Result<(f64, Vec<f64>)> {
        let mut theta = self.theta.clone();
        for (&j, &v) in self.free.iter().zip(z) {
            theta[j] = v;
        }
        if let Some(members) = &self.profile {
            solve_fixed_effects(self.model, &mut theta, members, self.max_newton);
        }
        let (ll, g) = loglik_and_gradient(self.model, &theta)?;
        self.theta = theta;
        let grad = self.free.iter().map(|&j| -g[j] / self.n).collect();
        Ok((-ll / self.n, grad))
    }
}

/// Maximizes the likelihood in each exam's threshold with everything else
/// held fixed.
fn solve_fixed_effects(model: &Model, theta: &mut [f64], members: &[Vec<usize>], max_newton: usize) {
    let off = model.layout().range(Block::Threshold).start;
    let ThresholdDesign::Fixed { slot } = model.threshold_design() else {
        return;
    };
    for idx in members.iter().filter(|m| !m.is_empty()) {
        let j = off + slot[idx[0]];
        let exam_ll = |theta: &[f64]| -> (f64, f64, f64) {
            let (mut ll, mut g, mut h) = (0.0, 0.0, 0.0);
            for &i in idx {
                let d = point_derivs(model.outcome(i), model.linear_index_unchecked(theta, i));
                ll += d.loglik;
                g -= d.d_mean;
                h += d.d2_mean;
            }
            (ll, g, h)
        };
        let (mut ll, mut g, mut h) = exam_ll(theta);
        for _ in 0..max_newton {
            if g.abs() <= 1e-13 * idx.len() as f64 {
                break;
            }
            let step = if h < 0.0 { -g / h } else { g.signum() };
            let step = step.clamp(-4.0, 4.0);
            let a0 = theta[j];
            let mut t = 1.0;
            let mut improved = false;
            for _ in 0..40 {
                theta[j] = a0 + t * step;
                let (ll1, g1, h1) = exam_ll(theta);
                if ll1 >= ll {
                    improved = ll1 > ll || g1.abs() < g.abs();
                    ll = ll1;
                    g = g1;
                    h = h1;
                    break;
                }
                t *= 0.5;
            }
            if !improved {
                theta[j] = a0;
                break;
            }
        }
    }
}

fn minimize(model: &Model, theta0: &[f64], free: &[usize], opts: &FitOptions) -> Result<StageResult> {
    let mut obj = Objective::new(model, theta0, free, opts.max_newton);
    let k = obj.free.len();
    let bound: Vec<Option<f64>> = {
        let var: Vec<usize> = variance_indices(model).collect();
        obj.free
            .iter()
            .map(|j| var.contains(j).then_some(opts.delta_bound))
            .collect()
    };
    let project = |z: &mut [f64]| {
        for (v, b) in z.iter_mut().zip(&bound) {
            if let Some(b) = b {
                *v = v.clamp(-b, *b);
            }
        }
    };
    let active = |z: &[f64], g: &[f64], j: usize| match bound[j] {
        Some(b) => (z[j] >= b && g[j] < 0.0) || (z[j] <= -b && g[j] > 0.0),
        None => false,
    };

    let mut x = obj.point();
    project(&mut x);
    let (mut f, mut g) = obj.eval(&x)?;
    let n = model.n() as f64;
    let grad_ok = |f: f64, g: &[f64], x: &[f64]| {
        let norm = g
            .iter()
            .enumerate()
            .filter(|&(j, _)| !active(x, g, j))
            .map(|(_, v)| v.abs())
            .fold(0.0, f64::max);
        norm < grad_threshold(opts.grad_tol, f * n, n)
    };

    if k == 0 {
        return Ok(StageResult {
            theta: obj.theta,
            iterations: 0,
            converged: true,
        });
    }
    let mut h = identity(k, 1.0 / g.iter().fold(1.0f64, |m, v| m.max(v.abs())));
    let mut scaled = false;
    let mut last_step = f64::INFINITY;
    let mut converged = false;
    let mut iterations = 0;

    while iterations < opts.max_iter {
        if grad_ok(f, &g, &x) && last_step < opts.step_tol {
            converged = true;
            break;
        }
        iterations += 1;
        let mut d = mat_vec(&h, &g).into_iter().map(|v| -v).collect::<Vec<_>>();
        for j in 0..k {
            if active(&x, &g, j) {
                d[j] = 0.0;
            }
        }
        let mut slope = dot(&g, &d);
        if !(slope < 0.0) {
            h = identity(k, 1.0 / g.iter().fold(1.0f64, |m, v| m.max(v.abs())));
            d = g.iter().map(|v| -v * h[0][0]).collect();
            for j in 0..k {
                if active(&x, &g, j) {
                    d[j] = 0.0;
                }
            }
            slope = dot(&g, &d);
            if !(slope < 0.0) {
                converged = grad_ok(f, &g, &x);
                break;
            }
        }

        let roundoff = 1e-13 * f.abs().max(1e-300);
        let mut t = 1.0;
        let mut accepted = None;
        for _ in 0..60 {
            let mut xt: Vec<f64> = x.iter().zip(&d).map(|(a, b)| a + t * b).collect();
            project(&mut xt);
            let decrease: f64 = g.iter().zip(xt.iter().zip(&x)).map(|(gj, (a, b))| gj * (a - b)).sum();
            let (ft, gt) = obj.eval(&xt)?;
            if ft.is_finite() && (ft <= f + 1e-4 * decrease || (ft <= f && (f - ft) <= roundoff)) {
                accepted = Some((xt, ft, gt));
                break;
            }
            t *= 0.5;
        }
        let Some((xt, ft, gt)) = accepted else {
            // Restore the stored point to the last accepted iterate.
            obj.eval(&x)?;
            converged = grad_ok(f, &g, &x);
            break;
        };
        let s: Vec<f64> = xt.iter().zip(&x).map(|(a, b)| a - b).collect();
        let y: Vec<f64> = gt.iter().zip(&g).map(|(a, b)| a - b).collect();
        let sy = dot(&s, &y);
        let yy = dot(&y, &y);
        if sy > 1e-12 * dot(&s, &s).sqrt() * yy.sqrt() && sy > 0.0 {
            if !scaled {
                h = identity(k, sy / yy);
                scaled = true;
            }
            bfgs_update(&mut h, &s, &y, sy);
        }
        let xnorm = x.iter().fold(1.0f64, |m, v| m.max(v.abs()));
        last_step = s.iter().fold(0.0f64, |m, v| m.max(v.abs())) / xnorm;
        let stalled = f - ft <= roundoff;
        x = xt;
        f = ft;
        g = gt;
        if stalled && grad_ok(f, &g, &x) {
            converged = true;
            break;
        }
    }
    if !converged && grad_ok(f, &g, &x) && last_step < opts.step_tol {
        converged = true;
    }
    obj.eval(&x)?;
    Ok(StageResult {
        theta: obj.theta,
        iterations,
        converged,
    })
}

fn identity(k: usize, scale: f64) -> Vec<Vec<f64>> {
    (0..k)
        .map(|i| (0..k).map(|j| if i == j { scale } else { 0.0 }).collect())
        .collect()
}

fn mat_vec(a: &[Vec<f64>], v: &[f64]) -> Vec<f64> {
    a.iter().map(|row| dot(row, v)).collect()
}

fn dot(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| x * y).sum()
}

/// `H ← (I − ρ s yᵀ) H (I − ρ y sᵀ) + ρ s sᵀ`.
fn bfgs_update(h: &mut [Vec<f64>], s: &[f64], y: &[f64], sy: f64) {
    let rho = 1.0 / sy;
    let hy = mat_vec(h, y);
    let yhy = dot(y, &hy);
    let k = s.len();
    for i in 0..k {
        for j in 0..k {
            h[i][j] += -rho * (s[i] * hy[j] + hy[i] * s[j]) + (rho * rho * yhy + rho) * s[i] * s[j];
        }
    }
}
