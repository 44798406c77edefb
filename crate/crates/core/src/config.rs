//! TOML run configuration shared by the command-line subcommands.
//!
//! ```toml
//! seed = 1
//! output = "out"
//!
//! [data]
//! path = "out/dataset.csv"
//! schema = { observables = ["x1", "x2"], group_covariates = ["z1"] }
//!
//! [model]
//! bias = "quadratic_counts"
//! info = "linear_counts"
//! baseline = "preferred_subset"
//! baseline_observables = ["x1", "e_strong", "e_weak"]
//! threshold = "grouped_effects"
//! threshold_covariates = ["z1"]
//! ```
//!
//! Every table is optional; a subcommand only complains about the tables it
//! needs. `favinfo defaults` prints a file with every default spelled out.

use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};

use crate::counterfactual::{Change, Subsample};
use crate::data::{load_dataset, Dataset, Schema};
use crate::error::{Error, Result};
use crate::optimizer::FitOptions;
use crate::sim::DgpConfig;
use crate::spec::{BaselineVarSpec, BiasSpec, InfoSpec, ModelSpec, ThresholdSpec};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct DataConfig {
    pub path: PathBuf,
    #[serde(default)]
    pub schema: Schema,
}

impl DataConfig {
    pub fn load(&self) -> Result<Dataset> {
        load_dataset(&self.path, &self.schema)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum BiasKind {
    None,
    ConstantConnected,
    LinearCounts,
    QuadraticCounts,
    CountsByObservables,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum InfoKind {
    None,
    ConstantConnected,
    LinearCounts,
    CountsByObservables,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum BaselineKind {
    Homoscedastic,
    PreferredSubset,
    Full,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ThresholdKindConfig {
    FixedEffects,
    GroupedEffects,
}

/// Flat, hand-editable form of [`ModelSpec`].
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct ModelConfig {
    pub bias: BiasKind,
    pub bias_interacted: Vec<String>,
    pub info: InfoKind,
    pub info_interacted: Vec<String>,
    pub baseline: BaselineKind,
    pub baseline_observables: Vec<String>,
    pub threshold: ThresholdKindConfig,
    pub threshold_covariates: Vec<String>,
    pub threshold_intercept: bool,
}

impl Default for ModelConfig {
    fn default() -> Self {
        ModelConfig {
            bias: BiasKind::ConstantConnected,
            bias_interacted: vec![],
            info: InfoKind::ConstantConnected,
            info_interacted: vec![],
            baseline: BaselineKind::Homoscedastic,
            baseline_observables: vec![],
            threshold: ThresholdKindConfig::GroupedEffects,
            threshold_covariates: vec![],
            threshold_intercept: true,
        }
    }
}

impl ModelConfig {
    pub fn to_spec(&self) -> Result<ModelSpec> {
        let unused = |what: &str, list: &[String], used: bool| {
            if !used && !list.is_empty() {
                Err(Error::Config(format!("`{what}` is set but not used by the chosen variant")))
            } else {
                Ok(())
            }
        };
        unused("bias_interacted", &self.bias_interacted, self.bias == BiasKind::CountsByObservables)?;
        unused("info_interacted", &self.info_interacted, self.info == InfoKind::CountsByObservables)?;
        unused(
            "baseline_observables",
            &self.baseline_observables,
            self.baseline == BaselineKind::PreferredSubset,
        )?;
        unused(
            "threshold_covariates",
            &self.threshold_covariates,
            self.threshold == ThresholdKindConfig::GroupedEffects,
        )?;
        Ok(ModelSpec {
            bias: match self.bias {
                BiasKind::None => BiasSpec::None,
                BiasKind::ConstantConnected => BiasSpec::ConstantConnected,
                BiasKind::LinearCounts => BiasSpec::LinearCounts,
                BiasKind::QuadraticCounts => BiasSpec::QuadraticCounts,
                BiasKind::CountsByObservables => BiasSpec::CountsByObservables {
                    interacted: self.bias_interacted.clone(),
                },
            },
            info: match self.info {
                InfoKind::None => InfoSpec::None,
                InfoKind::ConstantConnected => InfoSpec::ConstantConnected,
                InfoKind::LinearCounts => InfoSpec::LinearCounts,
                InfoKind::CountsByObservables => InfoSpec::CountsByObservables {
                    interacted: self.info_interacted.clone(),
                },
            },
            baseline: match self.baseline {
                BaselineKind::Homoscedastic => BaselineVarSpec::Homoscedastic,
                BaselineKind::PreferredSubset => BaselineVarSpec::PreferredSubset {
                    included: self.baseline_observables.clone(),
                },
                BaselineKind::Full => BaselineVarSpec::Full,
            },
            threshold: match self.threshold {
                ThresholdKindConfig::FixedEffects => ThresholdSpec::FixedEffects,
                ThresholdKindConfig::GroupedEffects => ThresholdSpec::GroupedEffects {
                    covariates: self.threshold_covariates.clone(),
                    intercept: self.threshold_intercept,
                },
            },
        })
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct LrTestConfig {
    pub restricted: PathBuf,
    pub unrestricted: PathBuf,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct CounterfactualConfig {
    /// Fit result written by `fit`; defaults to `<output>/fit.json`.
    pub fit: Option<PathBuf>,
    pub change: Change,
    pub subsamples: Vec<Subsample>,
    pub bins: usize,
    /// Always report the information-first split, not only when it differs.
    pub alternative_order: bool,
}

impl Default for CounterfactualConfig {
    fn default() -> Self {
        CounterfactualConfig {
            fit: None,
            change: Change::Connect,
            subsamples: vec![
                Subsample::Unconnected,
                Subsample::UnconnectedWithPoolTies,
                Subsample::UnconnectedWithStrongAndWeakPoolTies,
            ],
            bins: 20,
            alternative_order: false,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct BalanceConfig {
    /// Observables to test; empty means all.
    pub observables: Vec<String>,
    /// Also run the baseline-variance selection on unconnected candidates.
    pub select_variance: bool,
    pub z_threshold: f64,
    pub always_keep: Vec<String>,
}

impl Default for BalanceConfig {
    fn default() -> Self {
        BalanceConfig {
            observables: vec![],
            select_variance: false,
            z_threshold: 1.96,
            always_keep: vec![crate::data::E_STRONG.into(), crate::data::E_WEAK.into()],
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct RunConfig {
    pub seed: Option<u64>,
    pub output: PathBuf,
    pub data: Option<DataConfig>,
    pub model: ModelConfig,
    pub optimizer: FitOptions,
    pub simulate: Option<DgpConfig>,
    pub lrtest: Option<LrTestConfig>,
    pub counterfactual: CounterfactualConfig,
    pub balance: BalanceConfig,
}

impl Default for RunConfig {
    fn default() -> Self {
        RunConfig {
            seed: None,
            output: PathBuf::from("out"),
            data: None,
            model: ModelConfig::default(),
            optimizer: FitOptions::default(),
            simulate: None,
            lrtest: None,
            counterfactual: CounterfactualConfig::default(),
            balance: BalanceConfig::default(),
        }
    }
}

impl RunConfig {
    pub fn from_toml(text: &str) -> Result<Self> {
        toml::from_str(text).map_err(|e| Error::Config(e.to_string()))
    }

    /// Reads a config file; relative paths inside it resolve against the
    /// file's directory.
    pub fn load(path: impl AsRef<Path>) -> Result<Self> {
        let path = path.as_ref();
        let text = std::fs::read_to_string(path)?;
        let mut cfg = Self::from_toml(&text)?;
        let base = path.parent().unwrap_or(Path::new(""));
        let rebase = |p: &mut PathBuf| {
            if p.is_relative() {
                *p = base.join(&*p);
            }
        };
        rebase(&mut cfg.output);
        if let Some(d) = cfg.data.as_mut() {
            rebase(&mut d.path);
        }
        if let Some(l) = cfg.lrtest.as_mut() {
            rebase(&mut l.restricted);
            rebase(&mut l.unrestricted);
        }
        if let Some(f) = cfg.counterfactual.fit.as_mut() {
            rebase(f);
        }
        Ok(cfg)
    }

    /// Every default, with a populated simulation table, as TOML.
    pub fn defaults_toml() -> String {
        let cfg = RunConfig {
            seed: Some(1),
            data: Some(DataConfig {
                path: PathBuf::from("out/dataset.csv"),
                schema: Schema::canonical(&["x1".into(), "x2".into()], &["z1".into()]),
            }),
            simulate: Some(DgpConfig::default()),
            ..RunConfig::default()
        };
        toml::to_string_pretty(&cfg).expect("defaults serialize")
    }

    pub fn require_data(&self) -> Result<&DataConfig> {
        self.data
            .as_ref()
            .ok_or_else(|| Error::Config("this subcommand needs a [data] table".into()))
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn defaults_round_trip() {
        let text = RunConfig::defaults_toml();
        let back = RunConfig::from_toml(&text).unwrap();
        assert_eq!(back.simulate, Some(DgpConfig::default()));
        assert_eq!(back.optimizer, FitOptions::default());
        assert_eq!(back.model, ModelConfig::default());
    }

    #[test]
    fn model_table_to_spec() {
        let cfg = RunConfig::from_toml(
            r#"
            [model]
            bias = "counts_by_observables"
            bias_interacted = ["x1"]
            info = "counts_by_observables"
            info_interacted = ["x1"]
            threshold = "fixed_effects"
            "#,
        )
        .unwrap();
        let spec = cfg.model.to_spec().unwrap();
        assert_eq!(spec.threshold, ThresholdSpec::FixedEffects);
        assert_eq!(spec.bias.names().len(), 7);
    }

    #[test]
    fn unknown_keys_rejected() {
        assert!(RunConfig::from_toml("[model]\nbias = \"linear_counts\"\ncolour = 1\n").is_err());
        assert!(RunConfig::from_toml("[model]\nbias = \"cubic\"\n").is_err());
    }

    #[test]
    fn stray_lists_rejected() {
        let m = ModelConfig {
            bias_interacted: vec!["x1".into()],
            ..ModelConfig::default()
        };
        assert!(matches!(m.to_spec(), Err(Error::Config(_))));
    }
}
