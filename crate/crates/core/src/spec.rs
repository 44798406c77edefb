//! Model variants and their compilation into per-candidate design rows.
//!
//! Every variant is linear in its parameters: the grade index is
//! `x·β + g·γ − a_e` and the log scale is `w·δ_base + h·δ_info`. Compiling a
//! [`ModelSpec`] against a [`Dataset`] materializes the rows `x, g, w, h` and
//! the threshold design once, so likelihood evaluation is a pair of dot
//! products per candidate.
//!
//! Neither log-variance design carries an intercept, which pins
//! `σ_v(0) = 1` and `σ(0, 0, x) = 1`.

use std::collections::HashMap;
use std::ops::Range;

use serde::{Deserialize, Serialize};

use crate::data::{Candidate, Dataset, Variable};
use crate::error::{Error, Result};

/// How favors shift the grade of a connected candidate.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize, Default)]
#[serde(tag = "variant", rename_all = "snake_case", deny_unknown_fields)]
pub enum BiasSpec {
    #[default]
    None,
    /// One premium `B` for any connected candidate.
    ConstantConnected,
    /// `γ_S n_S + γ_W n_W`.
    LinearCounts,
    /// `γ_1S n_S + γ_2S n_S² + γ_1W n_W + γ_2W n_W² + γ_SW n_S n_W`.
    QuadraticCounts,
    /// `(γ_0S + γ_S·x) n_S + (γ_0W + γ_W·x) n_W` plus the quadratic count
    /// terms.
    CountsByObservables { interacted: Vec<String> },
}

/// How jury-side information inflates the latent-error scale.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize, Default)]
#[serde(tag = "variant", rename_all = "snake_case", deny_unknown_fields)]
pub enum InfoSpec {
    #[default]
    None,
    /// `ln σ = δ_c` for any connected candidate.
    ConstantConnected,
    /// `ln σ = δ_S n_S + δ_W n_W`.
    LinearCounts,
    /// `ln σ = (δ_S·x) n_S + (δ_W·x) n_W`.
    CountsByObservables { interacted: Vec<String> },
}

/// Baseline heteroscedasticity `ln σ_v(x) = δ·x`.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize, Default)]
#[serde(tag = "variant", rename_all = "snake_case", deny_unknown_fields)]
pub enum BaselineVarSpec {
    #[default]
    Homoscedastic,
    PreferredSubset { included: Vec<String> },
    /// Every observable plus both expected connection counts.
    Full,
}

/// Exam-specific promotion thresholds.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(tag = "variant", rename_all = "snake_case", deny_unknown_fields)]
pub enum ThresholdSpec {
    /// One free `a_e` per exam.
    FixedEffects,
    /// `a_e = z_e·a`, optionally with an intercept column.
    GroupedEffects { covariates: Vec<String>, intercept: bool },
}

impl Default for ThresholdSpec {
    fn default() -> Self {
        ThresholdSpec::GroupedEffects {
            covariates: Vec::new(),
            intercept: true,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize, Default)]
#[serde(default, deny_unknown_fields)]
pub struct ModelSpec {
    pub bias: BiasSpec,
    pub info: InfoSpec,
    pub baseline: BaselineVarSpec,
    pub threshold: ThresholdSpec,
}

impl ModelSpec {
    /// Constant favors and information for any connected candidate.
    pub fn binary(baseline: BaselineVarSpec, threshold: ThresholdSpec) -> Self {
        ModelSpec {
            bias: BiasSpec::ConstantConnected,
            info: InfoSpec::ConstantConnected,
            baseline,
            threshold,
        }
    }

    /// Linear bias and log-linear information in tie counts.
    pub fn linear_counts(baseline: BaselineVarSpec, threshold: ThresholdSpec) -> Self {
        ModelSpec {
            bias: BiasSpec::LinearCounts,
            info: InfoSpec::LinearCounts,
            baseline,
            threshold,
        }
    }

    /// Quadratic bias and log-linear information in tie counts.
    pub fn quadratic_counts(baseline: BaselineVarSpec, threshold: ThresholdSpec) -> Self {
        ModelSpec {
            bias: BiasSpec::QuadraticCounts,
            info: InfoSpec::LinearCounts,
            baseline,
            threshold,
        }
    }

    /// Bias and information interacted with the given observables.
    pub fn by_observables(interacted: Vec<String>, baseline: BaselineVarSpec, threshold: ThresholdSpec) -> Self {
        ModelSpec {
            bias: BiasSpec::CountsByObservables {
                interacted: interacted.clone(),
            },
            info: InfoSpec::CountsByObservables { interacted },
            baseline,
            threshold,
        }
    }

    /// Plain probit: no bias, no information, no baseline heteroscedasticity.
    pub fn homoscedastic_probit(threshold: ThresholdSpec) -> Self {
        ModelSpec {
            threshold,
            ..ModelSpec::default()
        }
    }

    pub fn compile(&self, ds: &Dataset) -> Result<Model> {
        Model::compile(self, ds)
    }
}

/// Parameter blocks, in layout order.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Block {
    Beta,
    Threshold,
    Gamma,
    DeltaBase,
    DeltaInfo,
}

impl Block {
    pub const ALL: [Block; 5] = [
        Block::Beta,
        Block::Threshold,
        Block::Gamma,
        Block::DeltaBase,
        Block::DeltaInfo,
    ];

    pub fn label(self) -> &'static str {
        match self {
            Block::Beta => "Mean",
            Block::Threshold => "Threshold",
            Block::Gamma => "Bias",
            Block::DeltaBase => "Baseline variance",
            Block::DeltaInfo => "Information",
        }
    }

    /// Log-variance blocks, box-limited during estimation.
    pub fn is_variance(self) -> bool {
        matches!(self, Block::DeltaBase | Block::DeltaInfo)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ThresholdKind {
    Fixed,
    Grouped,
}

/// Flat parameter layout `(beta | threshold | gamma | delta_base | delta_info)`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ParamLayout {
    names: Vec<String>,
    sizes: [usize; 5],
    threshold_kind: ThresholdKind,
}

impl ParamLayout {
    fn new(blocks: [Vec<String>; 5], threshold_kind: ThresholdKind) -> Self {
        let sizes = [
            blocks[0].len(),
            blocks[1].len(),
            blocks[2].len(),
            blocks[3].len(),
            blocks[4].len(),
        ];
        ParamLayout {
            names: blocks.into_iter().flatten().collect(),
            sizes,
            threshold_kind,
        }
    }

    pub fn len(&self) -> usize {
        self.names.len()
    }

    pub fn is_empty(&self) -> bool {
        self.names.is_empty()
    }

    pub fn threshold_kind(&self) -> ThresholdKind {
        self.threshold_kind
    }

    pub fn range(&self, block: Block) -> Range<usize> {
        let k = block as usize;
        let start: usize = self.sizes[..k].iter().sum();
        start..start + self.sizes[k]
    }

    pub fn block_names(&self, block: Block) -> &[String] {
        &self.names[self.range(block)]
    }

    pub fn name(&self, i: usize) -> &str {
        &self.names[i]
    }

    pub fn block_of(&self, i: usize) -> Block {
        Block::ALL
            .into_iter()
            .find(|&b| self.range(b).contains(&i))
            .expect("index within layout")
    }

    /// `block:name`, unique across the layout.
    pub fn qualified_name(&self, i: usize) -> String {
        let b = match self.block_of(i) {
            Block::Beta => "beta",
            Block::Threshold => "threshold",
            Block::Gamma => "bias",
            Block::DeltaBase => "var",
            Block::DeltaInfo => "info",
        };
        format!("{b}:{}", self.names[i])
    }

    pub fn index_of(&self, block: Block, name: &str) -> Option<usize> {
        let r = self.range(block);
        self.names[r.clone()].iter().position(|n| n == name).map(|p| r.start + p)
    }

    /// Whether every parameter of `self` has a counterpart in `other`, so
    /// that zero-padding (or, for thresholds, grouped-to-fixed projection)
    /// embeds this model in `other`.
    pub fn nests_in(&self, other: &ParamLayout) -> std::result::Result<(), String> {
        for block in Block::ALL {
            if block == Block::Threshold {
                match (self.threshold_kind, other.threshold_kind) {
                    (ThresholdKind::Grouped, ThresholdKind::Fixed) => continue,
                    (ThresholdKind::Fixed, ThresholdKind::Grouped) => {
                        return Err("fixed exam effects do not nest in grouped effects".into())
                    }
                    _ => {}
                }
            }
            for name in self.block_names(block) {
                if other.index_of(block, name).is_none() {
                    return Err(format!("{} parameter `{name}` has no counterpart", block.label()));
                }
            }
        }
        Ok(())
    }
}

/// Parameter values together with their layout.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ParamVector {
    pub layout: ParamLayout,
    pub values: Vec<f64>,
}

impl ParamVector {
    pub fn zeros(layout: &ParamLayout) -> Self {
        ParamVector {
            values: vec![0.0; layout.len()],
            layout: layout.clone(),
        }
    }

    pub fn block(&self, block: Block) -> &[f64] {
        &self.values[self.layout.range(block)]
    }

    pub fn get(&self, block: Block, name: &str) -> Option<f64> {
        self.layout.index_of(block, name).map(|i| self.values[i])
    }

    pub fn set(&mut self, block: Block, name: &str, value: f64) -> Result<()> {
        let i = self
            .layout
            .index_of(block, name)
            .ok_or_else(|| Error::InvalidSpec(format!("no {} parameter `{name}`", block.label())))?;
        self.values[i] = value;
        Ok(())
    }
}

fn resolve(ds: &Dataset, names: &[String]) -> Result<Vec<Variable>> {
    names.iter().map(|n| ds.variable(n)).collect()
}

fn check_unique(what: &str, names: &[String]) -> Result<()> {
    let mut seen = std::collections::HashSet::new();
    for n in names {
        if !seen.insert(n) {
            return Err(Error::InvalidSpec(format!("{what} lists `{n}` twice")));
        }
    }
    Ok(())
}

impl BiasSpec {
    fn interacted(&self) -> &[String] {
        match self {
            BiasSpec::CountsByObservables { interacted } => interacted,
            _ => &[],
        }
    }

    pub fn names(&self) -> Vec<String> {
        match self {
            BiasSpec::None => vec![],
            BiasSpec::ConstantConnected => vec!["connected".into()],
            BiasSpec::LinearCounts => vec!["n_S".into(), "n_W".into()],
            BiasSpec::QuadraticCounts => quadratic_names(),
            BiasSpec::CountsByObservables { interacted } => {
                let mut v = vec!["n_S".to_string()];
                v.extend(interacted.iter().map(|x| format!("n_S*{x}")));
                v.push("n_W".into());
                v.extend(interacted.iter().map(|x| format!("n_W*{x}")));
                v.extend(["n_S^2".to_string(), "n_W^2".into(), "n_S*n_W".into()]);
                v
            }
        }
    }

    /// Design row for tie counts `(s, w)` and interacted values `xs`.
    pub fn row(&self, s: f64, w: f64, xs: &[f64], out: &mut Vec<f64>) {
        match self {
            BiasSpec::None => {}
            BiasSpec::ConstantConnected => out.push(if s + w > 0.0 { 1.0 } else { 0.0 }),
            BiasSpec::LinearCounts => out.extend([s, w]),
            BiasSpec::QuadraticCounts => out.extend([s, s * s, w, w * w, s * w]),
            BiasSpec::CountsByObservables { .. } => {
                out.push(s);
                out.extend(xs.iter().map(|x| s * x));
                out.push(w);
                out.extend(xs.iter().map(|x| w * x));
                out.extend([s * s, w * w, s * w]);
            }
        }
    }

    /// Whether the design depends on ties only through the connected dummy.
    pub fn is_binary(&self) -> bool {
        matches!(self, BiasSpec::None | BiasSpec::ConstantConnected)
    }
}

fn quadratic_names() -> Vec<String> {
    ["n_S", "n_S^2", "n_W", "n_W^2", "n_S*n_W"]
        .iter()
        .map(|s| s.to_string())
        .collect()
}

impl InfoSpec {
    fn interacted(&self) -> &[String] {
        match self {
            InfoSpec::CountsByObservables { interacted } => interacted,
            _ => &[],
        }
    }

    pub fn names(&self) -> Vec<String> {
        match self {
            InfoSpec::None => vec![],
            InfoSpec::ConstantConnected => vec!["connected".into()],
            InfoSpec::LinearCounts => vec!["n_S".into(), "n_W".into()],
            InfoSpec::CountsByObservables { interacted } => interacted
                .iter()
                .map(|x| format!("n_S*{x}"))
                .chain(interacted.iter().map(|x| format!("n_W*{x}")))
                .collect(),
        }
    }

    pub fn row(&self, s: f64, w: f64, xs: &[f64], out: &mut Vec<f64>) {
        match self {
            InfoSpec::None => {}
            InfoSpec::ConstantConnected => out.push(if s + w > 0.0 { 1.0 } else { 0.0 }),
            InfoSpec::LinearCounts => out.extend([s, w]),
            InfoSpec::CountsByObservables { .. } => {
                out.extend(xs.iter().map(|x| s * x));
                out.extend(xs.iter().map(|x| w * x));
            }
        }
    }

    pub fn is_binary(&self) -> bool {
        matches!(self, InfoSpec::None | InfoSpec::ConstantConnected)
    }
}

impl BaselineVarSpec {
    pub fn variables(&self, ds: &Dataset) -> Vec<String> {
        match self {
            BaselineVarSpec::Homoscedastic => vec![],
            BaselineVarSpec::PreferredSubset { included } => included.clone(),
            BaselineVarSpec::Full => ds.variable_names(),
        }
    }
}

#[derive(Debug, Clone)]
pub(crate) enum ThresholdDesign {
    /// Slot of each candidate's exam within the threshold block.
    Fixed { slot: Vec<usize> },
    /// Row-major exam covariates (`n_exams × k`), intercept first when used.
    Grouped { z: Vec<f64>, k: usize, exam: Vec<usize> },
}

/// A [`ModelSpec`] compiled against a dataset.
#[derive(Debug, Clone)]
pub struct Model {
    spec: ModelSpec,
    layout: ParamLayout,
    n: usize,
    k_beta: usize,
    k_gamma: usize,
    k_base: usize,
    k_info: usize,
    x: Vec<f64>,
    g: Vec<f64>,
    wb: Vec<f64>,
    wi: Vec<f64>,
    threshold: ThresholdDesign,
    y: Vec<u8>,
    cluster: Vec<usize>,
    n_clusters: usize,
    bias_inter: Vec<f64>,
    info_inter: Vec<f64>,
    counts: Vec<(u32, u32)>,
    candidate_ids: Vec<String>,
    exam_ids: Vec<String>,
    fingerprint: String,
}

/// Grade index and log scale of one candidate.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct LinearIndex {
    /// `x·β + B − a_e`.
    pub mean: f64,
    /// `ln σ_v(x) + ln σ(n_S, n_W, x)`.
    pub log_sigma: f64,
}

impl LinearIndex {
    /// Standardized index `mean / σ`.
    pub fn z(&self) -> f64 {
        self.mean * (-self.log_sigma).exp()
    }
}

impl Model {
    pub fn compile(spec: &ModelSpec, ds: &Dataset) -> Result<Model> {
        if ds.is_empty() {
            return Err(Error::InvalidDataset("no candidates".into()));
        }
        let beta_names = ds.variable_names();
        let beta_vars = resolve(ds, &beta_names)?;
        let base_names = spec.baseline.variables(ds);
        check_unique("baseline variance", &base_names)?;
        let base_vars = resolve(ds, &base_names)?;
        check_unique("bias interactions", spec.bias.interacted())?;
        check_unique("information interactions", spec.info.interacted())?;
        let bias_inter_vars = resolve(ds, spec.bias.interacted())?;
        let info_inter_vars = resolve(ds, spec.info.interacted())?;

        let n = ds.len();
        let mut threshold_names = Vec::new();
        let threshold = match &spec.threshold {
            ThresholdSpec::FixedEffects => {
                threshold_names = ds.exams().iter().map(|e| e.id.clone()).collect();
                ThresholdDesign::Fixed {
                    slot: ds.candidates().iter().map(|c| c.exam).collect(),
                }
            }
            ThresholdSpec::GroupedEffects { covariates, intercept } => {
                check_unique("threshold covariates", covariates)?;
                let cols = covariates
                    .iter()
                    .map(|name| {
                        ds.group_names()
                            .iter()
                            .position(|g| g == name)
                            .ok_or_else(|| Error::InvalidSpec(format!("unknown group covariate `{name}`")))
                    })
                    .collect::<Result<Vec<_>>>()?;
                if *intercept {
                    threshold_names.push("const".to_string());
                }
                threshold_names.extend(covariates.iter().cloned());
                let k = threshold_names.len();
                if k == 0 {
                    return Err(Error::InvalidSpec("grouped thresholds need at least one column".into()));
                }
                let mut z = Vec::with_capacity(ds.n_exams() * k);
                for e in ds.exams() {
                    if *intercept {
                        z.push(1.0);
                    }
                    z.extend(cols.iter().map(|&j| e.group_covariates[j]));
                }
                ThresholdDesign::Grouped {
                    z,
                    k,
                    exam: ds.candidates().iter().map(|c| c.exam).collect(),
                }
            }
        };
        let threshold_kind = match threshold {
            ThresholdDesign::Fixed { .. } => ThresholdKind::Fixed,
            ThresholdDesign::Grouped { .. } => ThresholdKind::Grouped,
        };

        let layout = ParamLayout::new(
            [
                beta_names,
                threshold_names,
                spec.bias.names(),
                base_names,
                spec.info.names(),
            ],
            threshold_kind,
        );
        let k_beta = layout.sizes[0];
        let k_gamma = layout.sizes[2];
        let k_base = layout.sizes[3];
        let k_info = layout.sizes[4];

        let mut x = Vec::with_capacity(n * k_beta);
        let mut g = Vec::with_capacity(n * k_gamma);
        let mut wb = Vec::with_capacity(n * k_base);
        let mut wi = Vec::with_capacity(n * k_info);
        let mut bias_inter = Vec::with_capacity(n * bias_inter_vars.len());
        let mut info_inter = Vec::with_capacity(n * info_inter_vars.len());
        let values = |vars: &[Variable], c: &Candidate| -> Vec<f64> { vars.iter().map(|v| v.value(c)).collect() };
        for c in ds.candidates() {
            x.extend(values(&beta_vars, c));
            wb.extend(values(&base_vars, c));
            let bx = values(&bias_inter_vars, c);
            let ix = values(&info_inter_vars, c);
            let (s, w) = (c.n_strong as f64, c.n_weak as f64);
            spec.bias.row(s, w, &bx, &mut g);
            spec.info.row(s, w, &ix, &mut wi);
            bias_inter.extend(bx);
            info_inter.extend(ix);
        }

        Ok(Model {
            spec: spec.clone(),
            layout,
            n,
            k_beta,
            k_gamma,
            k_base,
            k_info,
            x,
            g,
            wb,
            wi,
            threshold,
            y: ds.candidates().iter().map(|c| c.outcome).collect(),
            cluster: ds.candidates().iter().map(|c| c.exam).collect(),
            n_clusters: ds.n_exams(),
            bias_inter,
            info_inter,
            counts: ds.candidates().iter().map(|c| (c.n_strong, c.n_weak)).collect(),
            candidate_ids: ds.candidates().iter().map(|c| c.id.clone()).collect(),
            exam_ids: ds.exams().iter().map(|e| e.id.clone()).collect(),
            fingerprint: ds.fingerprint(),
        })
    }

    pub fn spec(&self) -> &ModelSpec {
        &self.spec
    }

    pub fn layout(&self) -> &ParamLayout {
        &self.layout
    }

    pub fn n_params(&self) -> usize {
        self.layout.len()
    }

    pub fn n(&self) -> usize {
        self.n
    }

    pub fn outcome(&self, i: usize) -> u8 {
        self.y[i]
    }

    pub fn cluster(&self, i: usize) -> usize {
        self.cluster[i]
    }

    pub fn n_clusters(&self) -> usize {
        self.n_clusters
    }

    pub fn candidate_id(&self, i: usize) -> &str {
        &self.candidate_ids[i]
    }

    pub fn exam_ids(&self) -> &[String] {
        &self.exam_ids
    }

    pub fn counts(&self, i: usize) -> (u32, u32) {
        self.counts[i]
    }

    pub fn is_connected(&self, i: usize) -> bool {
        let (s, w) = self.counts[i];
        s + w > 0
    }

    /// Content hash of the estimation sample.
    pub fn fingerprint(&self) -> &str {
        &self.fingerprint
    }

    pub(crate) fn threshold_design(&self) -> &ThresholdDesign {
        &self.threshold
    }

    pub(crate) fn rows(&self, i: usize) -> (&[f64], &[f64], &[f64], &[f64]) {
        (
            &self.x[i * self.k_beta..(i + 1) * self.k_beta],
            &self.g[i * self.k_gamma..(i + 1) * self.k_gamma],
            &self.wb[i * self.k_base..(i + 1) * self.k_base],
            &self.wi[i * self.k_info..(i + 1) * self.k_info],
        )
    }

    fn check_params(&self, params: &[f64]) -> Result<()> {
        if params.len() != self.layout.len() {
            return Err(Error::Dimension {
                what: "parameter vector".into(),
                expected: self.layout.len(),
                got: params.len(),
            });
        }
        Ok(())
    }

    /// Threshold `a_e` of candidate `i`'s exam.
    pub fn threshold_value(&self, params: &[f64], i: usize) -> f64 {
        let off = self.layout.range(Block::Threshold).start;
        match &self.threshold {
            ThresholdDesign::Fixed { slot } => params[off + slot[i]],
            ThresholdDesign::Grouped { z, k, exam } => {
                let row = &z[exam[i] * k..(exam[i] + 1) * k];
                dot(row, &params[off..off + k])
            }
        }
    }

    /// `x·β` for candidate `i`, expected connections included.
    pub fn xb(&self, params: &[f64], i: usize) -> f64 {
        let (x, ..) = self.rows(i);
        dot(x, &params[..self.k_beta])
    }

    /// Baseline log scale `ln σ_v(x_i)`.
    pub fn log_sigma_base(&self, params: &[f64], i: usize) -> f64 {
        let (_, _, wb, _) = self.rows(i);
        dot(wb, &params[self.layout.range(Block::DeltaBase)])
    }

    /// Grade index and log scale at the candidate's observed ties.
    pub fn linear_index(&self, params: &[f64], i: usize) -> Result<LinearIndex> {
        self.check_params(params)?;
        Ok(self.linear_index_unchecked(params, i))
    }

    pub(crate) fn linear_index_unchecked(&self, params: &[f64], i: usize) -> LinearIndex {
        let (x, g, wb, wi) = self.rows(i);
        let l = &self.layout;
        let mean = dot(x, &params[..self.k_beta]) + dot(g, &params[l.range(Block::Gamma)])
            - self.threshold_value(params, i);
        let log_sigma = dot(wb, &params[l.range(Block::DeltaBase)]) + dot(wi, &params[l.range(Block::DeltaInfo)]);
        LinearIndex { mean, log_sigma }
    }

    /// Bias and information contributions at hypothetical tie counts.
    pub fn bias_and_info_at(&self, params: &[f64], i: usize, strong: u32, weak: u32) -> (f64, f64) {
        let nb = self.bias_inter.len() / self.n;
        let ni = self.info_inter.len() / self.n;
        let bx = &self.bias_inter[i * nb..(i + 1) * nb];
        let ix = &self.info_inter[i * ni..(i + 1) * ni];
        let (s, w) = (strong as f64, weak as f64);
        let mut row = Vec::with_capacity(self.k_gamma.max(self.k_info));
        self.spec.bias.row(s, w, bx, &mut row);
        let bias = dot(&row, &params[self.layout.range(Block::Gamma)]);
        row.clear();
        self.spec.info.row(s, w, ix, &mut row);
        let info = dot(&row, &params[self.layout.range(Block::DeltaInfo)]);
        (bias, info)
    }

    /// Grade index and log scale if candidate `i` had ties `(strong, weak)`,
    /// everything else (including the exam threshold) held fixed.
    pub fn linear_index_at(&self, params: &[f64], i: usize, strong: u32, weak: u32) -> Result<LinearIndex> {
        self.check_params(params)?;
        let (bias, info) = self.bias_and_info_at(params, i, strong, weak);
        Ok(LinearIndex {
            mean: self.xb(params, i) + bias - self.threshold_value(params, i),
            log_sigma: self.log_sigma_base(params, i) + info,
        })
    }

    /// Reasonable starting point: probit intercepts matched to promotion
    /// rates, everything else zero.
    pub fn default_init(&self) -> Vec<f64> {
        let mut p = vec![0.0; self.layout.len()];
        let off = self.layout.range(Block::Threshold).start;
        let rate_quantile = |ones: usize, total: usize| {
            let r = ((ones as f64 + 0.5) / (total as f64 + 1.0)).clamp(1e-4, 1.0 - 1e-4);
            crate::normal::norm_quantile(r).unwrap_or(0.0)
        };
        match &self.threshold {
            ThresholdDesign::Fixed { slot } => {
                let k = self.layout.sizes[1];
                let mut ones = vec![0usize; k];
                let mut total = vec![0usize; k];
                for i in 0..self.n {
                    total[slot[i]] += 1;
                    ones[slot[i]] += self.y[i] as usize;
                }
                for e in 0..k {
                    p[off + e] = -rate_quantile(ones[e], total[e]);
                }
            }
            ThresholdDesign::Grouped { z, k, .. } => {
                // Only the intercept column, if any, is initialized.
                let ones = self.y.iter().map(|&v| v as usize).sum();
                let has_intercept = self.layout.block_names(Block::Threshold).first().map(String::as_str) == Some("const")
                    && z.chunks(*k).all(|r| r[0] == 1.0);
                if has_intercept {
                    p[off] = -rate_quantile(ones, self.n);
                }
            }
        }
        p
    }

    /// Embeds parameters of a nested `restricted` model into this model's
    /// layout: shared names are copied, missing ones stay zero, and grouped
    /// thresholds are projected onto fixed effects as `a_e = z_e·a`.
    pub fn embed_from(&self, restricted: &Model, params: &[f64]) -> Result<Vec<f64>> {
        restricted.check_params(params)?;
        restricted
            .layout
            .nests_in(&self.layout)
            .map_err(Error::NotNested)?;
        let mut out = vec![0.0; self.layout.len()];
        for block in Block::ALL {
            if block == Block::Threshold
                && restricted.layout.threshold_kind == ThresholdKind::Grouped
                && self.layout.threshold_kind == ThresholdKind::Fixed
            {
                let ThresholdDesign::Grouped { z, k, .. } = &restricted.threshold else {
                    unreachable!()
                };
                let r_off = restricted.layout.range(Block::Threshold).start;
                let a = &params[r_off..r_off + k];
                let by_id: HashMap<&str, usize> =
                    restricted.exam_ids.iter().enumerate().map(|(e, id)| (id.as_str(), e)).collect();
                let u_off = self.layout.range(Block::Threshold).start;
                for (slot, id) in self.layout.block_names(Block::Threshold).iter().enumerate() {
                    let e = *by_id
                        .get(id.as_str())
                        .ok_or_else(|| Error::NotNested(format!("exam {id} missing from restricted sample")))?;
                    out[u_off + slot] = dot(&z[e * k..(e + 1) * k], a);
                }
                continue;
            }
            for (name, i) in restricted
                .layout
                .block_names(block)
                .iter()
                .zip(restricted.layout.range(block))
            {
                let j = self.layout.index_of(block, name).expect("checked by nests_in");
                out[j] = params[i];
            }
        }
        Ok(out)
    }

    /// Checks the mean and variance designs for exact collinearity, and the
    /// mean design on the unconnected subsample.
    pub fn rank_check(&self) -> Result<()> {
        let mut offending = Vec::new();
        let fixed = matches!(self.threshold, ThresholdDesign::Fixed { .. });

        let mut mean_cols: Vec<(String, Vec<f64>)> = Vec::new();
        if let ThresholdDesign::Grouped { z, k, exam } = &self.threshold {
            for (j, name) in self.layout.block_names(Block::Threshold).iter().enumerate() {
                mean_cols.push((format!("threshold:{name}"), (0..self.n).map(|i| z[exam[i] * k + j]).collect()));
            }
        }
        for j in 0..self.k_beta {
            mean_cols.push((
                format!("beta:{}", self.layout.names[j]),
                (0..self.n).map(|i| self.x[i * self.k_beta + j]).collect(),
            ));
        }
        let unconnected: Vec<usize> = (0..self.n).filter(|&i| !self.is_connected(i)).collect();
        let unconnected_cols: Vec<(String, Vec<f64>)> = mean_cols
            .iter()
            .map(|(name, col)| (name.clone(), unconnected.iter().map(|&i| col[i]).collect()))
            .collect();
        let g_off = self.layout.range(Block::Gamma).start;
        for j in 0..self.k_gamma {
            mean_cols.push((
                format!("bias:{}", self.layout.names[g_off + j]),
                (0..self.n).map(|i| self.g[i * self.k_gamma + j]).collect(),
            ));
        }
        if fixed {
            let demean = |cols: &mut Vec<(String, Vec<f64>)>, rows: &[usize]| {
                for (_, col) in cols.iter_mut() {
                    let mut sum = vec![0.0; self.n_clusters];
                    let mut cnt = vec![0usize; self.n_clusters];
                    for (r, &i) in rows.iter().enumerate() {
                        sum[self.cluster[i]] += col[r];
                        cnt[self.cluster[i]] += 1;
                    }
                    for (r, &i) in rows.iter().enumerate() {
                        let c = self.cluster[i];
                        col[r] -= sum[c] / cnt[c] as f64;
                    }
                }
            };
            let all: Vec<usize> = (0..self.n).collect();
            demean(&mut mean_cols, &all);
            let mut unc = unconnected_cols;
            demean(&mut unc, &unconnected);
            offending.extend(dependent_columns(&mean_cols));
            if !unconnected.is_empty() {
                offending.extend(dependent_columns(&unc).into_iter().map(|c| format!("unconnected:{c}")));
            }
        } else {
            offending.extend(dependent_columns(&mean_cols));
            if !unconnected.is_empty() {
                offending.extend(
                    dependent_columns(&unconnected_cols)
                        .into_iter()
                        .map(|c| format!("unconnected:{c}")),
                );
            }
        }

        let mut var_cols = Vec::new();
        let b_off = self.layout.range(Block::DeltaBase).start;
        for j in 0..self.k_base {
            var_cols.push((
                format!("var:{}", self.layout.names[b_off + j]),
                (0..self.n).map(|i| self.wb[i * self.k_base + j]).collect(),
            ));
        }
        let i_off = self.layout.range(Block::DeltaInfo).start;
        for j in 0..self.k_info {
            var_cols.push((
                format!("info:{}", self.layout.names[i_off + j]),
                (0..self.n).map(|i| self.wi[i * self.k_info + j]).collect(),
            ));
        }
        offending.extend(dependent_columns(&var_cols));

        if offending.is_empty() {
            Ok(())
        } else {
            Err(Error::RankDeficient(offending))
        }
    }
}

/// Alternative bias value and the total error scale that reproduces the
/// original promotion probability for one candidate.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Reparam {
    pub bias: f64,
    /// `σ_v(x)·σ′(n_S, n_W, x)`; negative when the index changes sign.
    pub sigma: f64,
}

impl Reparam {
    /// Index numerator under the alternative bias, given `x·β − a_e`.
    pub fn prob(&self, xb_minus_threshold: f64) -> f64 {
        crate::normal::norm_cdf((xb_minus_threshold + self.bias) / self.sigma)
    }
}

/// For each candidate, rescales the error so that bias `new_bias[i]` yields
/// the same promotion probability as the fitted bias:
/// `σ′ = (xβ + B′ − a_e) / (xβ + B − a_e) · σ`.
///
/// Any bias function paired with a suitable variance function fits the data
/// equally well, so bias and information are not separable without
/// restrictions on how they vary.
pub fn equivalent_reparam(model: &Model, params: &[f64], new_bias: &[f64]) -> Result<Vec<Reparam>> {
    if new_bias.len() != model.n() {
        return Err(Error::Dimension {
            what: "alternative bias values".into(),
            expected: model.n(),
            got: new_bias.len(),
        });
    }
    (0..model.n())
        .map(|i| {
            let li = model.linear_index(params, i)?;
            let (bias, _) = model.bias_and_info_at(params, i, model.counts[i].0, model.counts[i].1);
            let base = li.mean - bias;
            let num_new = base + new_bias[i];
            if li.mean.abs() < 1e-12 {
                return Err(Error::ZeroIndex {
                    candidate: model.candidate_ids[i].clone(),
                });
            }
            Ok(Reparam {
                bias: new_bias[i],
                sigma: num_new / li.mean * li.log_sigma.exp(),
            })
        })
        .collect()
}

/// Greedy modified Gram-Schmidt; returns names of columns that are
/// (numerically) in the span of the columns before them.
fn dependent_columns(cols: &[(String, Vec<f64>)]) -> Vec<String> {
    let mut basis: Vec<Vec<f64>> = Vec::new();
    let mut bad = Vec::new();
    for (name, col) in cols {
        let norm0 = dot(col, col).sqrt();
        if norm0 == 0.0 {
            bad.push(name.clone());
            continue;
        }
        let mut r = col.clone();
        for q in &basis {
            let c = dot(&r, q);
            for (ri, qi) in r.iter_mut().zip(q) {
                *ri -= c * qi;
            }
        }
        let norm = dot(&r, &r).sqrt();
        if norm <= 1e-8 * norm0 {
            bad.push(name.clone());
        } else {
            r.iter_mut().for_each(|v| *v /= norm);
            basis.push(r);
        }
    }
    bad
}

#[inline]
pub(crate) fn dot(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| x * y).sum()
}
