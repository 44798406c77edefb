//! Subcommand implementations behind the `favinfo` binary.
//!
//! Each command reads a [`RunConfig`], writes its files under the output
//! directory and returns the text printed on stdout together with the exit
//! code.

use std::fs;
use std::path::{Path, PathBuf};

use serde::Serialize;

use crate::config::RunConfig;
use crate::counterfactual::{binned_curve, effects_where, save_effects_csv, summarize, Change};
use crate::data::save_dataset;
use crate::diagnostics::{balance_test, select_baseline_variance};
use crate::error::{Error, Result};
use crate::inference::{attach_covariance, lr_test};
use crate::optimizer::{estimation_sample, fit, FitResult};
use crate::report;
use crate::sim::{save_truth, simulate};

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Command {
    Simulate,
    Fit,
    Lrtest,
    Counterfactual,
    Balance,
    Defaults,
}

#[derive(Debug, Clone, Default)]
pub struct Overrides {
    pub seed: Option<u64>,
    pub out: Option<PathBuf>,
    pub allow_nonconverged: bool,
}

#[derive(Debug, Clone, PartialEq)]
pub struct Outcome {
    pub stdout: String,
    pub exit_code: i32,
}

impl Outcome {
    fn ok(stdout: String) -> Self {
        Outcome { stdout, exit_code: 0 }
    }
}

/// Exit code of a fit that stopped before convergence.
pub const EXIT_NONCONVERGED: i32 = 2;

pub fn run(cmd: Command, config: Option<&Path>, ov: &Overrides) -> Result<Outcome> {
    if cmd == Command::Defaults {
        return Ok(Outcome::ok(RunConfig::defaults_toml()));
    }
    let mut cfg = match config {
        Some(p) => RunConfig::load(p)?,
        None => RunConfig::default(),
    };
    if let Some(out) = &ov.out {
        cfg.output = out.clone();
    }
    if let Some(seed) = ov.seed {
        cfg.seed = Some(seed);
    }
    fs::create_dir_all(&cfg.output)?;
    match cmd {
        Command::Simulate => cmd_simulate(&cfg),
        Command::Fit => cmd_fit(&cfg, ov.allow_nonconverged),
        Command::Lrtest => cmd_lrtest(&cfg),
        Command::Counterfactual => cmd_counterfactual(&cfg),
        Command::Balance => cmd_balance(&cfg),
        Command::Defaults => unreachable!(),
    }
}

fn write_json<T: Serialize>(path: impl AsRef<Path>, value: &T) -> Result<()> {
    fs::write(path, serde_json::to_string_pretty(value)? + "\n")?;
    Ok(())
}

pub fn cmd_simulate(cfg: &RunConfig) -> Result<Outcome> {
    let mut dgp = cfg
        .simulate
        .clone()
        .ok_or_else(|| Error::Config("simulate needs a [simulate] table".into()))?;
    if let Some(seed) = cfg.seed {
        dgp.seed = seed;
    }
    let (ds, truth) = simulate(&dgp)?;
    save_dataset(&ds, cfg.output.join("dataset.csv"))?;
    save_truth(&truth, cfg.output.join("truth.csv"))?;
    let summary = report::dataset_summary(&ds);
    fs::write(cfg.output.join("summary.txt"), &summary)?;
    Ok(Outcome::ok(summary))
}

pub fn cmd_fit(cfg: &RunConfig, allow_nonconverged: bool) -> Result<Outcome> {
    let ds = cfg.require_data()?.load()?;
    let spec = cfg.model.to_spec()?;
    let mut result = fit(&spec, &ds, None, &cfg.optimizer)?;
    if result.converged || allow_nonconverged {
        let (sample, _) = estimation_sample(&spec, &ds);
        let model = spec.compile(&sample)?;
        match attach_covariance(&model, &mut result) {
            Ok(_) => {}
            // Away from the optimum the information need not be positive
            // definite; keep the estimates and report no standard errors.
            Err(e) if !result.converged => result.warnings.push(format!("no standard errors: {e}")),
            Err(e) => return Err(e),
        }
    }
    write_json(cfg.output.join("fit.json"), &result)?;
    write_json(cfg.output.join("coefficients.json"), &report::coefficient_records(&result))?;
    let text = report::fit_report(&result);
    fs::write(cfg.output.join("report.txt"), &text)?;
    let exit_code = if result.converged || allow_nonconverged {
        0
    } else {
        EXIT_NONCONVERGED
    };
    Ok(Outcome { stdout: text, exit_code })
}

pub fn read_fit(path: impl AsRef<Path>) -> Result<FitResult> {
    let path = path.as_ref();
    let text = fs::read_to_string(path)
        .map_err(|e| Error::Config(format!("cannot read fit result {}: {e}", path.display())))?;
    Ok(serde_json::from_str(&text)?)
}

pub fn cmd_lrtest(cfg: &RunConfig) -> Result<Outcome> {
    let lr_cfg = cfg
        .lrtest
        .as_ref()
        .ok_or_else(|| Error::Config("lrtest needs an [lrtest] table".into()))?;
    let restricted = read_fit(&lr_cfg.restricted)?;
    let unrestricted = read_fit(&lr_cfg.unrestricted)?;
    let r = lr_test(&restricted, &unrestricted)?;
    let label = if restricted.spec.threshold != unrestricted.spec.threshold {
        "GE vs FE"
    } else {
        "restricted vs unrestricted"
    };
    let text = report::lr_report(label, &r);
    fs::write(cfg.output.join("lrtest.txt"), &text)?;
    write_json(cfg.output.join("lrtest.json"), &r)?;
    Ok(Outcome::ok(text))
}

pub fn cmd_counterfactual(cfg: &RunConfig) -> Result<Outcome> {
    let cf = &cfg.counterfactual;
    let fit_path = cf.fit.clone().unwrap_or_else(|| cfg.output.join("fit.json"));
    let result = read_fit(&fit_path)?;
    let ds = cfg.require_data()?.load()?;
    let (sample, _) = estimation_sample(&result.spec, &ds);
    if sample.fingerprint() != result.data_fingerprint {
        return Err(Error::Config(format!(
            "dataset does not match the one {} was estimated on",
            fit_path.display()
        )));
    }
    let model = result.spec.compile(&sample)?;
    let params = &result.params.values;
    if cf.subsamples.is_empty() {
        return Err(Error::Config("no subsamples requested".into()));
    }
    let mut summaries = Vec::new();
    let mut first = None;
    for &sub in &cf.subsamples {
        let keep = |c: &crate::data::Candidate| sub.contains(c) && (cf.change != Change::Connect || !c.is_connected());
        let effects = effects_where(&model, params, &sample, keep, cf.change)?;
        summaries.push(summarize(sub.label(), &effects)?);
        if first.is_none() {
            first = Some(effects);
        }
    }
    let effects = first.expect("at least one subsample");
    save_effects_csv(&effects, &sample, cfg.output.join("effects.csv"))?;
    let curve = binned_curve(&effects, cf.bins);
    let mut text = report::effects_report(&summaries, cf.alternative_order);
    text.push('\n');
    text.push_str(&format!("Binned by baseline probability ({}):\n", cf.subsamples[0].label()));
    text.push_str(&report::curve_report(&curve));
    fs::write(cfg.output.join("counterfactual.txt"), &text)?;
    write_json(
        cfg.output.join("counterfactual.json"),
        &serde_json::json!({ "change": cf.change, "summaries": summaries, "curve": curve }),
    )?;
    Ok(Outcome::ok(text))
}

pub fn cmd_balance(cfg: &RunConfig) -> Result<Outcome> {
    let ds = cfg.require_data()?.load()?;
    let b = &cfg.balance;
    let observables = if b.observables.is_empty() {
        ds.observable_names().to_vec()
    } else {
        b.observables.clone()
    };
    let rep = balance_test(&ds, &observables)?;
    let mut text = report::balance_report(&rep);
    let mut json = serde_json::json!({ "balance": rep });
    if b.select_variance {
        let spec = cfg.model.to_spec()?;
        let sel = select_baseline_variance(&ds, b.z_threshold, &b.always_keep, &spec.threshold, &cfg.optimizer)?;
        text.push('\n');
        text.push_str(&report::selection_report(&sel));
        json["variance_selection"] = serde_json::json!({
            "selected": sel.selected,
            "z_scores": sel.z_scores,
            "lr": sel.lr,
        });
    }
    fs::write(cfg.output.join("balance.txt"), &text)?;
    write_json(cfg.output.join("balance.json"), &json)?;
    Ok(Outcome::ok(text))
}
