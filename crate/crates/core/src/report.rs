//! Fixed-width text tables and machine-readable records.

use std::fmt::Write;

use serde::{Deserialize, Serialize};

use crate::counterfactual::{CurvePoint, EffectSummary};
use crate::data::Dataset;
use crate::diagnostics::{BalanceCell, BalanceReport, VarianceSelection};
use crate::inference::{coefficient_table, CoefRow, LrTestResult};
use crate::optimizer::FitResult;
use crate::spec::{BaselineVarSpec, BiasSpec, Block, InfoSpec, ModelSpec, ThresholdSpec};

/// One line per coefficient, the stable JSON layout of fit reports.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CoefficientRecord {
    pub name: String,
    pub block: Block,
    pub estimate: f64,
    pub se: Option<f64>,
    pub z: Option<f64>,
    pub p: Option<f64>,
    pub stars: String,
}

impl From<CoefRow> for CoefficientRecord {
    fn from(r: CoefRow) -> Self {
        CoefficientRecord {
            name: r.name,
            block: r.block,
            estimate: r.estimate,
            se: r.se,
            z: r.z,
            p: r.p,
            stars: r.stars,
        }
    }
}

pub fn coefficient_records(fit: &FitResult) -> Vec<CoefficientRecord> {
    coefficient_table(fit).into_iter().map(Into::into).collect()
}

pub fn describe_spec(spec: &ModelSpec) -> String {
    let bias = match &spec.bias {
        BiasSpec::None => "none".to_string(),
        BiasSpec::ConstantConnected => "constant if connected".into(),
        BiasSpec::LinearCounts => "linear in tie counts".into(),
        BiasSpec::QuadraticCounts => "quadratic in tie counts".into(),
        BiasSpec::CountsByObservables { interacted } => format!("tie counts by {}", interacted.join(", ")),
    };
    let info = match &spec.info {
        InfoSpec::None => "none".to_string(),
        InfoSpec::ConstantConnected => "constant if connected".into(),
        InfoSpec::LinearCounts => "log-linear in tie counts".into(),
        InfoSpec::CountsByObservables { interacted } => format!("tie counts by {}", interacted.join(", ")),
    };
    let baseline = match &spec.baseline {
        BaselineVarSpec::Homoscedastic => "homoscedastic".to_string(),
        BaselineVarSpec::PreferredSubset { included } => format!("log-linear in {}", included.join(", ")),
        BaselineVarSpec::Full => "log-linear in all characteristics".into(),
    };
    let threshold = match &spec.threshold {
        ThresholdSpec::FixedEffects => "exam fixed effects".to_string(),
        ThresholdSpec::GroupedEffects { covariates, intercept } => {
            let mut cols: Vec<&str> = Vec::new();
            if *intercept {
                cols.push("const");
            }
            cols.extend(covariates.iter().map(String::as_str));
            format!("grouped effects ({})", cols.join(", "))
        }
    };
    format!("bias: {bias}\ninformation: {info}\nbaseline variance: {baseline}\nthresholds: {threshold}\n")
}

fn fmt_opt(v: Option<f64>, prec: usize) -> String {
    v.map_or_else(|| "-".to_string(), |v| format!("{v:.prec$}"))
}

fn panel_title(fit: &FitResult, block: Block) -> String {
    let connected_only = |names: &[String]| names.len() == 1 && names[0] == "connected";
    match block {
        Block::Gamma if connected_only(fit.params.layout.block_names(block)) => "Bias (connected)".into(),
        Block::DeltaInfo if connected_only(fit.params.layout.block_names(block)) => "Information (connected)".into(),
        Block::Beta => "Characteristics".into(),
        Block::Threshold => "Thresholds".into(),
        b => b.label().into(),
    }
}

/// Human-readable coefficient table: favors and information first, then
/// the characteristics, baseline variance and thresholds. Exam fixed
/// effects are counted rather than listed.
pub fn fit_report(fit: &FitResult) -> String {
    let rows = coefficient_table(fit);
    let mut out = String::new();
    out.push_str("Heteroscedastic probit\n");
    out.push_str(&describe_spec(&fit.spec));
    let _ = writeln!(
        out,
        "candidates: {}  exams: {}  dropped exams: {}",
        fit.n, fit.n_clusters, fit.dropped_exams
    );
    let _ = writeln!(
        out,
        "log-likelihood: {:.6}  parameters: {}  iterations: {}",
        fit.loglik,
        fit.n_params(),
        fit.iterations
    );
    let _ = writeln!(
        out,
        "converged: {}  gradient: {:.3e}  condition: {}",
        if fit.converged { "yes" } else { "no" },
        fit.gradient_norm,
        serde_json::to_value(fit.condition_flag).ok().and_then(|v| v.as_str().map(String::from)).unwrap_or_default()
    );
    let fixed = matches!(fit.spec.threshold, ThresholdSpec::FixedEffects);
    for block in [Block::Gamma, Block::DeltaInfo, Block::Beta, Block::DeltaBase, Block::Threshold] {
        let members: Vec<&CoefRow> = rows.iter().filter(|r| r.block == block).collect();
        if members.is_empty() {
            continue;
        }
        let _ = writeln!(out, "\n{}", panel_title(fit, block));
        if block == Block::Threshold && fixed {
            let _ = writeln!(out, "  {} exam fixed effects (see fit.json)", members.len());
            continue;
        }
        for r in members {
            let _ = writeln!(
                out,
                "  {:<24}{:>11.4}{:<3} ({})",
                r.name,
                r.estimate,
                r.stars,
                fmt_opt(r.se, 4)
            );
        }
    }
    out.push_str("\nStandard errors clustered by exam in parentheses. *** p<0.01, ** p<0.05, * p<0.1\n");
    for w in &fit.warnings {
        let _ = writeln!(out, "warning: {w}");
    }
    out
}

pub fn lr_report(label: &str, r: &LrTestResult) -> String {
    let mut out = String::new();
    let _ = writeln!(out, "{:<28}{:>14}{:>8}{:>10}", "", "LR", "df", "p");
    let _ = writeln!(out, "{:<28}{:>14.3}{:>8}{:>10.4}", label, r.lr_stat, r.df, r.p_value);
    let _ = writeln!(
        out,
        "log-likelihoods: restricted {:.6}, unrestricted {:.6}",
        r.loglik_restricted, r.loglik_unrestricted
    );
    if r.optimizer_failure {
        out.push_str("warning: restricted fit is better than the unrestricted one; the unrestricted optimization failed\n");
    }
    out
}

pub fn effects_report(summaries: &[EffectSummary], always_alternative: bool) -> String {
    let mut out = String::new();
    let _ = writeln!(
        out,
        "{:<44}{:>8}{:>11}{:>11}{:>11}{:>11}",
        "", "n", "Baseline", "Total", "Info", "Bias"
    );
    for s in summaries {
        let _ = writeln!(
            out,
            "{:<44}{:>8}{:>11.4}{:>11.4}{:>11.4}{:>11.4}",
            s.label, s.n, s.baseline_p.mean, s.total.mean, s.info_part.mean, s.favor_part.mean
        );
        let _ = writeln!(
            out,
            "{:<44}{:>8}{:>11}{:>11}{:>11}{:>11}",
            "",
            "",
            format!("({:.4})", s.baseline_p.sd),
            format!("({:.4})", s.total.sd),
            format!("({:.4})", s.info_part.sd),
            format!("({:.4})", s.favor_part.sd)
        );
        if always_alternative || s.orders_differ() {
            let _ = writeln!(
                out,
                "{:<44}{:>8}{:>11}{:>11}{:>11.4}{:>11.4}",
                "  information applied first", "", "", "", s.alt_info_part.mean, s.alt_favor_part.mean
            );
        }
    }
    out.push_str("Means with standard deviations in parentheses.\n");
    out
}

pub fn curve_report(points: &[CurvePoint]) -> String {
    let mut out = String::new();
    let _ = writeln!(out, "{:>10}{:>11}{:>11}{:>11}", "Baseline", "Total", "Info", "Bias");
    for p in points {
        let _ = writeln!(
            out,
            "{:>10.4}{:>11.4}{:>11.4}{:>11.4}",
            p.baseline_p, p.total, p.info_part, p.favor_part
        );
    }
    out
}

fn balance_panel(out: &mut String, title: &str, cells: &[BalanceCell]) {
    let mut observables: Vec<&str> = Vec::new();
    for c in cells {
        if !observables.contains(&c.observable.as_str()) {
            observables.push(&c.observable);
        }
    }
    let _ = writeln!(out, "\n{title}");
    let _ = write!(out, "{:<10}", "");
    for o in &observables {
        let _ = write!(out, "{o:>16}");
    }
    out.push('\n');
    for (label, reg) in [("Strong", "n_S"), ("Weak", "n_W")] {
        let _ = write!(out, "{label:<10}");
        for o in &observables {
            let c = cells.iter().find(|c| c.observable == *o && c.regressor == reg).expect("cell");
            let _ = write!(out, "{:>16}", format!("{:.4}{}", c.coef, c.stars));
        }
        out.push('\n');
        let _ = write!(out, "{:<10}", "");
        for o in &observables {
            let c = cells.iter().find(|c| c.observable == *o && c.regressor == reg).expect("cell");
            let _ = write!(out, "{:>16}", format!("({:.4})", c.se));
        }
        out.push('\n');
    }
}

pub fn balance_report(r: &BalanceReport) -> String {
    let mut out = String::new();
    let _ = writeln!(
        out,
        "Regressions of characteristics on realized connections ({} candidates, {} exams)",
        r.n, r.n_clusters
    );
    balance_panel(&mut out, "Without controls", &r.unconditional);
    balance_panel(&mut out, "Controlling for expected connections", &r.conditional);
    out.push_str("\nStandard errors clustered by exam in parentheses. *** p<0.01, ** p<0.05, * p<0.1\n");
    out
}

pub fn selection_report(s: &VarianceSelection) -> String {
    let mut out = String::new();
    out.push_str("Baseline variance selection on unconnected candidates\n");
    for (name, z) in &s.z_scores {
        let _ = writeln!(out, "  {name:<24}{z:>9.3}");
    }
    let chosen = match &s.selected {
        BaselineVarSpec::PreferredSubset { included } => included.join(", "),
        BaselineVarSpec::Full => "all".into(),
        BaselineVarSpec::Homoscedastic => "none".into(),
    };
    let _ = writeln!(out, "selected: {chosen}");
    out.push_str(&lr_report("selected vs full", &s.lr));
    out
}

/// Sample composition: candidates, exams, promotion rate and connection
/// shares.
pub fn dataset_summary(ds: &Dataset) -> String {
    let (s, w) = ds.connection_shares();
    let any = ds.candidates().iter().filter(|c| c.is_connected()).count() as f64 / ds.len().max(1) as f64;
    let mut out = String::new();
    let _ = writeln!(out, "{:<40}{:>10}", "Candidates", ds.len());
    let _ = writeln!(out, "{:<40}{:>10}", "Exams", ds.n_exams());
    let _ = writeln!(out, "{:<40}{:>10.4}", "Promotion rate", ds.promotion_rate());
    let _ = writeln!(out, "{:<40}{:>10.4}", "Share with >= 1 strong tie on jury", s);
    let _ = writeln!(out, "{:<40}{:>10.4}", "Share with >= 1 weak tie on jury", w);
    let _ = writeln!(out, "{:<40}{:>10.4}", "Share connected", any);
    out
}
