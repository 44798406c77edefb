//! Synthetic promotion data from the structural grading model.
//!
//! Each exam draws a pool of eligible evaluators and a jury from that pool.
//! Candidates hold random sets of strong and weak ties to pool members, so
//! the realized counts `n_S, n_W` follow the hypergeometric law implied by
//! the jury draw, and `e_S = J·ties_S/P` is their expectation.
//!
//! A candidate's true ability is `xβ + u + v`. The jury sees `xβ + v` for
//! everybody and, through connected members, a signal `θ = u + ε` about the
//! rest. Its grade for a connected candidate is
//! `xβ + κθ + v + B(n_S, n_W, x)` with `κ = σ_u²/(σ_u² + σ_ε²)`.
//!
//! Every exam uses its own ChaCha stream derived from the master seed, so
//! output does not depend on how exams are scheduled across threads.

use std::path::Path;

use rand::seq::index;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::{Binomial, Distribution, Normal, StandardNormal};
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::data::{Candidate, Dataset, Exam, E_STRONG, E_WEAK};
use crate::error::{Error, Result};
use crate::spec::{BiasSpec, Block, InfoSpec, Model, ThresholdDesign};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "dist", rename_all = "snake_case")]
pub enum ObservableDist {
    Normal { mean: f64, sd: f64 },
    Uniform { low: f64, high: f64 },
    Bernoulli { p: f64 },
}

impl ObservableDist {
    fn draw(&self, rng: &mut ChaCha8Rng) -> f64 {
        match *self {
            ObservableDist::Normal { mean, sd } => {
                let z: f64 = rng.sample(StandardNormal);
                mean + sd * z
            }
            ObservableDist::Uniform { low, high } => low + (high - low) * rng.random::<f64>(),
            ObservableDist::Bernoulli { p } => (rng.random::<f64>() < p) as u8 as f64,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ObservableConfig {
    pub name: String,
    #[serde(flatten)]
    pub dist: ObservableDist,
}

/// Number of ties a candidate has to members of the evaluator pool.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case", deny_unknown_fields)]
pub enum TieCount {
    Fixed {
        count: u32,
    },
    /// `Binomial(P, p_i)` with `p_i = min(1, prob·exp(loadings·x_i))`, so
    /// tie counts may depend on observables.
    Binomial {
        prob: f64,
        #[serde(default)]
        loadings: Vec<f64>,
    },
}

impl TieCount {
    fn draw(&self, pool: u32, x: &[f64], rng: &mut ChaCha8Rng) -> u32 {
        match self {
            TieCount::Fixed { count } => (*count).min(pool),
            TieCount::Binomial { prob, loadings } => {
                let tilt: f64 = loadings.iter().zip(x).map(|(l, v)| l * v).sum();
                let p = (prob * tilt.exp()).clamp(0.0, 1.0);
                Binomial::new(pool as u64, p).expect("probability in [0, 1]").sample(rng) as u32
            }
        }
    }
}

/// True favor function, in any of the estimable forms.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize, Default)]
#[serde(deny_unknown_fields)]
pub struct BiasTruth {
    pub spec: BiasSpec,
    #[serde(default)]
    pub gamma: Vec<f64>,
}

/// Source of the jury's extra information about connected candidates.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize, Default)]
#[serde(tag = "kind", rename_all = "snake_case", deny_unknown_fields)]
pub enum InfoTruth {
    /// Connections carry no information.
    #[default]
    None,
    /// Each connected juror observes `u + ε` with `ε ~ N(0, σ_ε²)` by tie
    /// type; the jury pools signals by precision.
    Signal { sigma_eps_strong: f64, sigma_eps_weak: f64 },
    /// Connected latent-error scale `σ = exp(h·δ)` in one of the estimable
    /// forms. Realized structurally through `κθ` whenever the implied
    /// `κ = σ_v²(σ² − 1)/σ_u²` lies in `[0, 1)`, otherwise by rescaling `v`.
    Excess { spec: InfoSpec, delta: Vec<f64> },
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize, Default)]
#[serde(tag = "kind", rename_all = "snake_case", deny_unknown_fields)]
pub enum ThresholdMode {
    /// Promote whenever the grade clears `a_e = z_e·a`.
    #[default]
    FixedThreshold,
    /// Promote the `positions` best grades of each exam.
    TopK { positions: u32 },
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct DgpConfig {
    pub n_exams: usize,
    pub candidates_per_exam: usize,
    pub pool_min: u32,
    pub pool_max: u32,
    pub jury_size: u32,
    pub observables: Vec<ObservableConfig>,
    pub beta: Vec<f64>,
    /// Grade effects of `(e_strong, e_weak)`.
    pub beta_expected: [f64; 2],
    pub group_covariates: Vec<String>,
    /// Threshold coefficients, intercept first then one per group covariate.
    pub a_true: Vec<f64>,
    pub sigma_u: f64,
    /// Baseline log-variance coefficients, one per observable (empty means
    /// homoscedastic).
    pub delta_base: Vec<f64>,
    pub strong_ties: TieCount,
    pub weak_ties: TieCount,
    pub bias: BiasTruth,
    pub info: InfoTruth,
    pub threshold_mode: ThresholdMode,
    pub seed: u64,
}

impl Default for DgpConfig {
    fn default() -> Self {
        DgpConfig {
            n_exams: 100,
            candidates_per_exam: 100,
            pool_min: 60,
            pool_max: 140,
            jury_size: 7,
            observables: vec![
                ObservableConfig {
                    name: "x1".into(),
                    dist: ObservableDist::Normal { mean: 0.0, sd: 1.0 },
                },
                ObservableConfig {
                    name: "x2".into(),
                    dist: ObservableDist::Normal { mean: 0.0, sd: 1.0 },
                },
            ],
            beta: vec![0.5, -0.3],
            beta_expected: [0.0, 0.0],
            group_covariates: vec!["z1".into()],
            a_true: vec![1.2, 0.2],
            sigma_u: 1.0,
            delta_base: vec![],
            strong_ties: TieCount::Binomial {
                prob: 0.03,
                loadings: vec![],
            },
            weak_ties: TieCount::Binomial {
                prob: 0.05,
                loadings: vec![],
            },
            bias: BiasTruth {
                spec: BiasSpec::ConstantConnected,
                gamma: vec![0.2],
            },
            info: InfoTruth::Excess {
                spec: InfoSpec::ConstantConnected,
                delta: vec![0.2],
            },
            threshold_mode: ThresholdMode::default(),
            seed: 1,
        }
    }
}

/// Latent draws and derived quantities for one candidate.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TruthRow {
    pub candidate_id: String,
    pub exam_id: String,
    pub u: f64,
    pub v: f64,
    /// Jury signal; NaN when unconnected or when excess variance is realized
    /// by rescaling.
    pub theta: f64,
    pub kappa: f64,
    pub grade: f64,
    pub bias: f64,
    /// `ln σ_v(x) + ln σ(n_S, n_W, x)` of the reduced form.
    pub log_sigma: f64,
    pub threshold: f64,
    /// Outcome had the candidate one more strong tie on the jury, with the
    /// favor applied but the information held at the current state.
    pub y_favor_only: u8,
    /// Outcome with one more strong tie on the jury, favor and information
    /// both applied.
    pub y_one_more_strong: u8,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Truth {
    pub config: DgpConfig,
    pub exam_thresholds: Vec<f64>,
    pub rows: Vec<TruthRow>,
}

/// Mean number of jury members among `ties` pool members.
pub fn expected_connections(pool_size: u32, ties: u32, jury_size: u32) -> f64 {
    debug_assert!(ties <= pool_size);
    jury_size as f64 * ties as f64 / pool_size as f64
}

impl DgpConfig {
    pub fn validate(&self) -> Result<()> {
        let fail = |m: String| Err(Error::Config(m));
        if self.n_exams == 0 || self.candidates_per_exam == 0 {
            return fail("n_exams and candidates_per_exam must be positive".into());
        }
        if self.pool_min == 0 || self.pool_min > self.pool_max {
            return fail(format!("invalid pool size range {}..={}", self.pool_min, self.pool_max));
        }
        if self.jury_size > self.pool_min {
            return fail(format!("jury of {} exceeds pool of {}", self.jury_size, self.pool_min));
        }
        let m = self.observables.len();
        if self.beta.len() != m {
            return fail(format!("beta has {} entries for {m} observables", self.beta.len()));
        }
        if !self.delta_base.is_empty() && self.delta_base.len() != m {
            return fail(format!("delta_base has {} entries for {m} observables", self.delta_base.len()));
        }
        if self.a_true.len() != self.group_covariates.len() + 1 {
            return fail("a_true needs an intercept plus one entry per group covariate".into());
        }
        if !(self.sigma_u > 0.0) {
            return fail("sigma_u must be positive".into());
        }
        for o in &self.observables {
            if o.name == E_STRONG || o.name == E_WEAK {
                return fail(format!("observable name `{}` is reserved", o.name));
            }
            match o.dist {
                ObservableDist::Normal { sd, .. } if !(sd > 0.0) => return fail(format!("{}: sd must be positive", o.name)),
                ObservableDist::Uniform { low, high } if !(high > low) => {
                    return fail(format!("{}: empty uniform range", o.name))
                }
                ObservableDist::Bernoulli { p } if !(0.0..=1.0).contains(&p) => {
                    return fail(format!("{}: probability outside [0, 1]", o.name))
                }
                _ => {}
            }
        }
        for t in [&self.strong_ties, &self.weak_ties] {
            if let TieCount::Binomial { prob, loadings } = t {
                if !(0.0..=1.0).contains(prob) || (!loadings.is_empty() && loadings.len() != m) {
                    return fail("tie probabilities must lie in [0, 1] with one loading per observable".into());
                }
            }
        }
        let names = self.variable_names();
        let resolve_all = |xs: &[String]| -> Result<()> {
            for x in xs {
                if !names.contains(x) {
                    return Err(Error::Config(format!("unknown interacted variable `{x}`")));
                }
            }
            Ok(())
        };
        if self.bias.gamma.len() != self.bias.spec.names().len() {
            return fail(format!(
                "bias truth needs {} coefficients, got {}",
                self.bias.spec.names().len(),
                self.bias.gamma.len()
            ));
        }
        if let BiasSpec::CountsByObservables { interacted } = &self.bias.spec {
            resolve_all(interacted)?;
        }
        match &self.info {
            InfoTruth::None => {}
            InfoTruth::Signal {
                sigma_eps_strong,
                sigma_eps_weak,
            } => {
                if !(*sigma_eps_strong > 0.0) || !(*sigma_eps_weak > 0.0) {
                    return fail("signal noise must be positive (infinity allowed)".into());
                }
            }
            InfoTruth::Excess { spec, delta } => {
                if delta.len() != spec.names().len() {
                    return fail(format!(
                        "information truth needs {} coefficients, got {}",
                        spec.names().len(),
                        delta.len()
                    ));
                }
                if let InfoSpec::CountsByObservables { interacted } = spec {
                    resolve_all(interacted)?;
                }
            }
        }
        if let ThresholdMode::TopK { positions } = self.threshold_mode {
            if positions as usize > self.candidates_per_exam {
                return fail("more positions than candidates".into());
            }
        }
        Ok(())
    }

    fn variable_names(&self) -> Vec<String> {
        let mut v: Vec<String> = self.observables.iter().map(|o| o.name.clone()).collect();
        v.push(E_STRONG.into());
        v.push(E_WEAK.into());
        v
    }

    /// Maps the truth into the parameter layout of `model`. Fails when the
    /// truth has no exact counterpart there (for instance a signal-based
    /// information truth, which has no closed log-linear form).
    pub fn true_params(&self, model: &Model, truth: &Truth) -> Result<Vec<f64>> {
        let layout = model.layout();
        let mut p = vec![0.0; layout.len()];
        let mut set = |block: Block, name: &str, value: f64| -> Result<()> {
            match layout.index_of(block, name) {
                Some(j) => {
                    p[j] = value;
                    Ok(())
                }
                None if value == 0.0 => Ok(()),
                None => Err(Error::InvalidSpec(format!(
                    "true {} parameter `{name}` has no slot in the model",
                    block.label()
                ))),
            }
        };
        for (o, b) in self.observables.iter().zip(&self.beta) {
            set(Block::Beta, &o.name, *b)?;
        }
        set(Block::Beta, E_STRONG, self.beta_expected[0])?;
        set(Block::Beta, E_WEAK, self.beta_expected[1])?;
        for (o, d) in self.observables.iter().zip(&self.delta_base) {
            set(Block::DeltaBase, &o.name, *d)?;
        }
        if self.bias.spec != model.spec().bias && self.bias.gamma.iter().any(|g| *g != 0.0) {
            return Err(Error::InvalidSpec("bias truth has a different functional form".into()));
        }
        for (name, g) in self.bias.spec.names().iter().zip(&self.bias.gamma) {
            set(Block::Gamma, name, *g)?;
        }
        match &self.info {
            InfoTruth::None => {}
            InfoTruth::Excess { spec, delta } => {
                if *spec != model.spec().info && delta.iter().any(|d| *d != 0.0) {
                    return Err(Error::InvalidSpec("information truth has a different functional form".into()));
                }
                for (name, d) in spec.names().iter().zip(delta) {
                    set(Block::DeltaInfo, name, *d)?;
                }
            }
            InfoTruth::Signal { .. } => {
                return Err(Error::InvalidSpec("signal-based information has no log-linear counterpart".into()))
            }
        }
        let off = layout.range(Block::Threshold).start;
        match model.threshold_design() {
            ThresholdDesign::Fixed { .. } => {
                for (slot, id) in layout.block_names(Block::Threshold).iter().enumerate() {
                    let e = exam_index(id)
                        .filter(|&e| e < truth.exam_thresholds.len())
                        .ok_or_else(|| Error::InvalidSpec(format!("exam {id} not in truth record")))?;
                    p[off + slot] = truth.exam_thresholds[e];
                }
            }
            ThresholdDesign::Grouped { .. } => {
                set(Block::Threshold, "const", self.a_true[0])?;
                for (name, a) in self.group_covariates.iter().zip(&self.a_true[1..]) {
                    set(Block::Threshold, name, *a)?;
                }
            }
        }
        if let ThresholdMode::TopK { .. } = self.threshold_mode {
            log::warn!("top-k promotion has no fixed threshold; thresholds reported are the nominal z_e·a");
        }
        Ok(p)
    }
}

fn exam_id(e: usize) -> String {
    format!("E{e:05}")
}

fn exam_index(id: &str) -> Option<usize> {
    id.strip_prefix('E')?.parse().ok()
}

struct CandidateDraw {
    candidate: Candidate,
    truth: TruthRow,
}

/// Evaluation of names against one candidate's characteristics.
struct Lookup<'a> {
    names: &'a [String],
    x: &'a [f64],
    e: [f64; 2],
}

impl Lookup<'_> {
    fn values(&self, wanted: &[String]) -> Vec<f64> {
        wanted
            .iter()
            .map(|w| match w.as_str() {
                E_STRONG => self.e[0],
                E_WEAK => self.e[1],
                _ => self.x[self.names.iter().position(|n| n == w).expect("validated name")],
            })
            .collect()
    }
}

fn bias_value(bias: &BiasTruth, look: &Lookup, s: u32, w: u32) -> f64 {
    let xs = match &bias.spec {
        BiasSpec::CountsByObservables { interacted } => look.values(interacted),
        _ => vec![],
    };
    let mut row = Vec::new();
    bias.spec.row(s as f64, w as f64, &xs, &mut row);
    row.iter().zip(&bias.gamma).map(|(a, b)| a * b).sum()
}

/// Connected latent error `κθ + v` (or its rescaled stand-in) and the
/// reduced-form log scale for tie counts `(s, w)`.
struct ErrorDraw {
    error: f64,
    theta: f64,
    kappa: f64,
    log_sigma_info: f64,
}

fn connected_error(
    cfg: &DgpConfig,
    look: &Lookup,
    s: u32,
    w: u32,
    u: f64,
    v: f64,
    sigma_v: f64,
    rng: &mut ChaCha8Rng,
) -> ErrorDraw {
    let su2 = cfg.sigma_u * cfg.sigma_u;
    let plain = ErrorDraw {
        error: v,
        theta: f64::NAN,
        kappa: 0.0,
        log_sigma_info: 0.0,
    };
    if s + w == 0 {
        return plain;
    }
    let z: f64 = rng.sample(StandardNormal);
    match &cfg.info {
        InfoTruth::None => plain,
        InfoTruth::Signal {
            sigma_eps_strong,
            sigma_eps_weak,
        } => {
            let tau = s as f64 / (sigma_eps_strong * sigma_eps_strong) + w as f64 / (sigma_eps_weak * sigma_eps_weak);
            if tau == 0.0 {
                return plain;
            }
            let theta = u + z / tau.sqrt();
            let kappa = su2 / (su2 + 1.0 / tau);
            let excess = kappa * su2 / (sigma_v * sigma_v);
            ErrorDraw {
                error: v + kappa * theta,
                theta,
                kappa,
                log_sigma_info: 0.5 * (1.0 + excess).ln(),
            }
        }
        InfoTruth::Excess { spec, delta } => {
            let xs = match spec {
                InfoSpec::CountsByObservables { interacted } => look.values(interacted),
                _ => vec![],
            };
            let mut row = Vec::new();
            spec.row(s as f64, w as f64, &xs, &mut row);
            let ls: f64 = row.iter().zip(delta).map(|(a, b)| a * b).sum();
            let sigma2 = (2.0 * ls).exp();
            let kappa = sigma_v * sigma_v * (sigma2 - 1.0) / su2;
            if (0.0..1.0).contains(&kappa) && kappa > 0.0 {
                // var(κθ) = κ σ_u² requires σ_ε² = σ_u² (1 − κ) / κ.
                let sigma_eps = (su2 * (1.0 - kappa) / kappa).sqrt();
                let theta = u + sigma_eps * z;
                ErrorDraw {
                    error: v + kappa * theta,
                    theta,
                    kappa,
                    log_sigma_info: ls,
                }
            } else {
                ErrorDraw {
                    error: v * ls.exp(),
                    theta: f64::NAN,
                    kappa: 0.0,
                    log_sigma_info: ls,
                }
            }
        }
    }
}

fn simulate_exam(cfg: &DgpConfig, e: usize) -> (Exam, f64, Vec<CandidateDraw>) {
    let mut rng = ChaCha8Rng::seed_from_u64(cfg.seed);
    rng.set_stream(e as u64);
    let names: Vec<String> = cfg.observables.iter().map(|o| o.name.clone()).collect();

    let z: Vec<f64> = cfg.group_covariates.iter().map(|_| rng.sample(StandardNormal)).collect();
    let threshold = cfg.a_true[0] + z.iter().zip(&cfg.a_true[1..]).map(|(a, b)| a * b).sum::<f64>();
    let pool = rng.random_range(cfg.pool_min..=cfg.pool_max);
    let mut on_jury = vec![false; pool as usize];
    for j in index::sample(&mut rng, pool as usize, cfg.jury_size as usize) {
        on_jury[j] = true;
    }
    let exam = Exam {
        id: exam_id(e),
        group_covariates: z,
        jury_size: cfg.jury_size,
        positions: match cfg.threshold_mode {
            ThresholdMode::TopK { positions } => Some(positions),
            ThresholdMode::FixedThreshold => None,
        },
    };
    let v_dist = Normal::new(0.0, 1.0).expect("unit normal");

    let mut draws = Vec::with_capacity(cfg.candidates_per_exam);
    for c in 0..cfg.candidates_per_exam {
        let x: Vec<f64> = cfg.observables.iter().map(|o| o.dist.draw(&mut rng)).collect();
        let ties_s = cfg.strong_ties.draw(pool, &x, &mut rng);
        let ties_w = cfg.weak_ties.draw(pool, &x, &mut rng).min(pool - ties_s);
        let tie_set = index::sample(&mut rng, pool as usize, (ties_s + ties_w) as usize).into_vec();
        let n_s = tie_set[..ties_s as usize].iter().filter(|&&j| on_jury[j]).count() as u32;
        let n_w = tie_set[ties_s as usize..].iter().filter(|&&j| on_jury[j]).count() as u32;
        let e_s = expected_connections(pool, ties_s, cfg.jury_size);
        let e_w = expected_connections(pool, ties_w, cfg.jury_size);
        let look = Lookup {
            names: &names,
            x: &x,
            e: [e_s, e_w],
        };

        let log_sigma_v: f64 = cfg.delta_base.iter().zip(&x).map(|(d, v)| d * v).sum();
        let sigma_v = log_sigma_v.exp();
        let u = cfg.sigma_u * rng.sample::<f64, _>(StandardNormal);
        let v = sigma_v * v_dist.sample(&mut rng);
        let xb = x.iter().zip(&cfg.beta).map(|(a, b)| a * b).sum::<f64>()
            + cfg.beta_expected[0] * e_s
            + cfg.beta_expected[1] * e_w;

        let now = connected_error(cfg, &look, n_s, n_w, u, v, sigma_v, &mut rng);
        let bias = bias_value(&cfg.bias, &look, n_s, n_w);
        let grade = xb + now.error + bias;
        let alt = connected_error(cfg, &look, n_s + 1, n_w, u, v, sigma_v, &mut rng);
        let alt_bias = bias_value(&cfg.bias, &look, n_s + 1, n_w);

        let outcome = (grade >= threshold) as u8;
        draws.push(CandidateDraw {
            candidate: Candidate {
                id: format!("{}-{c:05}", exam.id),
                outcome,
                observables: x,
                n_strong: n_s,
                n_weak: n_w,
                e_strong: e_s,
                e_weak: e_w,
                exam: e,
            },
            truth: TruthRow {
                candidate_id: format!("{}-{c:05}", exam.id),
                exam_id: exam.id.clone(),
                u,
                v,
                theta: now.theta,
                kappa: now.kappa,
                grade,
                bias,
                log_sigma: log_sigma_v + now.log_sigma_info,
                threshold,
                y_favor_only: (xb + now.error + alt_bias >= threshold) as u8,
                y_one_more_strong: (xb + alt.error + alt_bias >= threshold) as u8,
            },
        });
    }

    if let ThresholdMode::TopK { positions } = cfg.threshold_mode {
        let mut order: Vec<usize> = (0..draws.len()).collect();
        order.sort_by(|&a, &b| draws[b].truth.grade.total_cmp(&draws[a].truth.grade).then(a.cmp(&b)));
        for d in draws.iter_mut() {
            d.candidate.outcome = 0;
        }
        for &i in order.iter().take(positions as usize) {
            draws[i].candidate.outcome = 1;
        }
    }
    (exam, threshold, draws)
}

/// Draws a dataset together with every latent quantity behind it.
pub fn simulate(cfg: &DgpConfig) -> Result<(Dataset, Truth)> {
    cfg.validate()?;
    let per_exam: Vec<(Exam, f64, Vec<CandidateDraw>)> =
        (0..cfg.n_exams).into_par_iter().map(|e| simulate_exam(cfg, e)).collect();
    let mut exams = Vec::with_capacity(cfg.n_exams);
    let mut thresholds = Vec::with_capacity(cfg.n_exams);
    let mut candidates = Vec::with_capacity(cfg.n_exams * cfg.candidates_per_exam);
    let mut rows = Vec::with_capacity(cfg.n_exams * cfg.candidates_per_exam);
    for (exam, a, draws) in per_exam {
        exams.push(exam);
        thresholds.push(a);
        for d in draws {
            candidates.push(d.candidate);
            rows.push(d.truth);
        }
    }
    let ds = Dataset::new(
        candidates,
        exams,
        cfg.observables.iter().map(|o| o.name.clone()).collect(),
        cfg.group_covariates.clone(),
    )?;
    Ok((
        ds,
        Truth {
            config: cfg.clone(),
            exam_thresholds: thresholds,
            rows,
        },
    ))
}

/// Writes the per-candidate truth CSV and the configuration as JSON next
/// to it (`<stem>.json`).
pub fn save_truth(truth: &Truth, csv_path: impl AsRef<Path>) -> Result<()> {
    let csv_path = csv_path.as_ref();
    let mut w = csv::Writer::from_path(csv_path)?;
    for r in &truth.rows {
        w.serialize(r)?;
    }
    w.flush()?;
    let meta = serde_json::json!({
        "config": truth.config,
        "exam_thresholds": truth.exam_thresholds,
    });
    let json_path = csv_path.with_extension("json");
    std::fs::write(json_path, serde_json::to_string_pretty(&meta)? + "\n")?;
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn expected_connections_examples() {
        assert_eq!(expected_connections(100, 0, 7), 0.0);
        assert!((expected_connections(100, 10, 7) - 0.7).abs() < 1e-15);
    }

    #[test]
    fn rejects_inconsistent_config() {
        let cfg = DgpConfig {
            jury_size: 200,
            ..DgpConfig::default()
        };
        assert!(matches!(cfg.validate(), Err(Error::Config(_))));
        let cfg = DgpConfig {
            beta: vec![1.0],
            ..DgpConfig::default()
        };
        assert!(cfg.validate().is_err());
    }

    #[test]
    fn top_k_fills_positions() {
        let cfg = DgpConfig {
            n_exams: 5,
            candidates_per_exam: 40,
            threshold_mode: ThresholdMode::TopK { positions: 3 },
            ..DgpConfig::default()
        };
        let (ds, _) = simulate(&cfg).unwrap();
        for members in ds.exam_members() {
            let promoted: u32 = members.iter().map(|&i| ds.candidates()[i].outcome as u32).sum();
            assert_eq!(promoted, 3);
        }
    }

    #[test]
    fn same_seed_same_data() {
        let cfg = DgpConfig {
            n_exams: 7,
            candidates_per_exam: 30,
            ..DgpConfig::default()
        };
        let (a, _) = simulate(&cfg).unwrap();
        let (b, _) = simulate(&cfg).unwrap();
        assert_eq!(a, b);
        let (c, _) = simulate(&DgpConfig { seed: 2, ..cfg }).unwrap();
        assert_ne!(a, c);
    }
}
