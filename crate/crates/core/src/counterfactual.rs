//! Effects of gaining a connection, split into a favor and an information
//! part.
//!
//! Gaining a connection moves a candidate from `(B₀, σ₀)` to `(B₁, σ₁)`.
//! The favor part applies the new bias at the old scale, the information
//! part then swaps in the new scale:
//!
//! ```text
//! total = Φ(m₁/σ₁) − Φ(m₀/σ₀)
//!       = [Φ(m₁/σ₀) − Φ(m₀/σ₀)] + [Φ(m₁/σ₁) − Φ(m₁/σ₀)]
//! ```
//!
//! The exam threshold does not react. Reversing the order gives a second,
//! generally different split that is reported alongside when the two
//! disagree noticeably.

use std::io::Write;
use std::path::Path;

use serde::{Deserialize, Serialize};

use crate::data::{Candidate, Dataset};
use crate::error::{Error, Result};
use crate::normal::norm_cdf;
use crate::spec::{LinearIndex, Model};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Change {
    /// Unconnected to connected; only meaningful when bias and information
    /// depend on ties through the connected indicator alone.
    Connect,
    AddStrong,
    AddWeak,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CfDecomposition {
    pub candidate_id: String,
    pub baseline_p: f64,
    pub total: f64,
    pub favor_part: f64,
    pub info_part: f64,
    /// Information applied first, then the favor.
    pub alt_info_part: f64,
    pub alt_favor_part: f64,
}

fn phi(li: LinearIndex) -> f64 {
    norm_cdf(li.z())
}

/// Tie counts after `change`, or an error when the change does not apply.
fn changed_counts(model: &Model, i: usize, change: Change) -> Result<(u32, u32)> {
    let (s, w) = model.counts(i);
    match change {
        Change::Connect => {
            let spec = model.spec();
            if !(spec.bias.is_binary() && spec.info.is_binary()) {
                return Err(Error::InvalidChange(
                    "connect applies to models where only the connected indicator matters; use add_strong or add_weak".into(),
                ));
            }
            if s + w > 0 {
                return Err(Error::InvalidChange(format!(
                    "candidate {} is already connected",
                    model.candidate_id(i)
                )));
            }
            Ok((1, 0))
        }
        Change::AddStrong => Ok((s + 1, w)),
        Change::AddWeak => Ok((s, w + 1)),
    }
}

/// Decomposes the probability change of candidate `i`.
pub fn marginal_effect(model: &Model, params: &[f64], i: usize, change: Change) -> Result<CfDecomposition> {
    let (s1, w1) = changed_counts(model, i, change)?;
    let now = model.linear_index(params, i)?;
    let new = model.linear_index_at(params, i, s1, w1)?;
    let p0 = phi(now);
    let p1 = phi(new);
    let bias_only = phi(LinearIndex {
        mean: new.mean,
        log_sigma: now.log_sigma,
    });
    let info_only = phi(LinearIndex {
        mean: now.mean,
        log_sigma: new.log_sigma,
    });
    Ok(CfDecomposition {
        candidate_id: model.candidate_id(i).to_string(),
        baseline_p: p0,
        total: p1 - p0,
        favor_part: bias_only - p0,
        info_part: p1 - bias_only,
        alt_info_part: info_only - p0,
        alt_favor_part: p1 - info_only,
    })
}

/// Named candidate filters.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Subsample {
    All,
    Unconnected,
    /// Unconnected, with at least one tie in the evaluator pool.
    UnconnectedWithPoolTies,
    /// Unconnected, with both strong and weak ties in the pool.
    UnconnectedWithStrongAndWeakPoolTies,
}

impl Subsample {
    pub fn contains(self, c: &Candidate) -> bool {
        match self {
            Subsample::All => true,
            Subsample::Unconnected => !c.is_connected(),
            Subsample::UnconnectedWithPoolTies => !c.is_connected() && c.e_strong + c.e_weak > 0.0,
            Subsample::UnconnectedWithStrongAndWeakPoolTies => {
                !c.is_connected() && c.e_strong > 0.0 && c.e_weak > 0.0
            }
        }
    }

    pub fn label(self) -> &'static str {
        match self {
            Subsample::All => "All",
            Subsample::Unconnected => "Unconnected",
            Subsample::UnconnectedWithPoolTies => "Unconnected, ties in pool",
            Subsample::UnconnectedWithStrongAndWeakPoolTies => "Unconnected, strong and weak ties in pool",
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct MeanSd {
    pub mean: f64,
    /// Sample standard deviation (`n − 1`), zero for a single candidate.
    pub sd: f64,
}

impl MeanSd {
    pub fn of(values: impl Iterator<Item = f64> + Clone) -> MeanSd {
        let n = values.clone().count() as f64;
        let mean = values.clone().sum::<f64>() / n;
        let sd = if n > 1.0 {
            (values.map(|v| (v - mean).powi(2)).sum::<f64>() / (n - 1.0)).sqrt()
        } else {
            0.0
        };
        MeanSd { mean, sd }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EffectSummary {
    pub label: String,
    pub n: usize,
    pub baseline_p: MeanSd,
    pub total: MeanSd,
    pub info_part: MeanSd,
    pub favor_part: MeanSd,
    pub alt_info_part: MeanSd,
    pub alt_favor_part: MeanSd,
}

impl EffectSummary {
    /// Whether the two decomposition orders disagree by more than 10% on
    /// either part.
    pub fn orders_differ(&self) -> bool {
        let rel = |a: f64, b: f64| (a - b).abs() > 0.1 * a.abs().max(b.abs()) && a != b;
        rel(self.info_part.mean, self.alt_info_part.mean) || rel(self.favor_part.mean, self.alt_favor_part.mean)
    }
}

/// Decompositions for every candidate of `ds` passing `keep`. `ds` must be
/// the sample `model` was compiled from.
pub fn effects_where(
    model: &Model,
    params: &[f64],
    ds: &Dataset,
    keep: impl Fn(&Candidate) -> bool,
    change: Change,
) -> Result<Vec<CfDecomposition>> {
    if ds.len() != model.n() {
        return Err(Error::Dimension {
            what: "dataset rows".into(),
            expected: model.n(),
            got: ds.len(),
        });
    }
    ds.candidates()
        .iter()
        .enumerate()
        .filter(|(_, c)| keep(c))
        .map(|(i, _)| marginal_effect(model, params, i, change))
        .collect()
}

pub fn summarize(label: &str, effects: &[CfDecomposition]) -> Result<EffectSummary> {
    if effects.is_empty() {
        return Err(Error::EmptySubsample);
    }
    let col = |f: fn(&CfDecomposition) -> f64| MeanSd::of(effects.iter().map(f));
    Ok(EffectSummary {
        label: label.to_string(),
        n: effects.len(),
        baseline_p: col(|e| e.baseline_p),
        total: col(|e| e.total),
        info_part: col(|e| e.info_part),
        favor_part: col(|e| e.favor_part),
        alt_info_part: col(|e| e.alt_info_part),
        alt_favor_part: col(|e| e.alt_favor_part),
    })
}

/// Means and standard deviations over a named subsample.
pub fn average_effects(
    model: &Model,
    params: &[f64],
    ds: &Dataset,
    subsample: Subsample,
    change: Change,
) -> Result<EffectSummary> {
    let effects = effects_where(model, params, ds, |c| subsample.contains(c), change)?;
    summarize(subsample.label(), &effects)
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct CurvePoint {
    pub baseline_p: f64,
    pub total: f64,
    pub info_part: f64,
    pub favor_part: f64,
}

/// Bin means over `bins` equal-count groups ordered by baseline probability.
pub fn binned_curve(effects: &[CfDecomposition], bins: usize) -> Vec<CurvePoint> {
    let mut order: Vec<usize> = (0..effects.len()).collect();
    order.sort_by(|&a, &b| effects[a].baseline_p.total_cmp(&effects[b].baseline_p).then(a.cmp(&b)));
    let bins = bins.min(effects.len()).max(1);
    (0..bins)
        .map(|b| {
            let lo = b * effects.len() / bins;
            let hi = (b + 1) * effects.len() / bins;
            let members = &order[lo..hi];
            let mean = |f: fn(&CfDecomposition) -> f64| {
                members.iter().map(|&i| f(&effects[i])).sum::<f64>() / members.len() as f64
            };
            CurvePoint {
                baseline_p: mean(|e| e.baseline_p),
                total: mean(|e| e.total),
                info_part: mean(|e| e.info_part),
                favor_part: mean(|e| e.favor_part),
            }
        })
        .collect()
}

/// Per-candidate CSV with subsample tags.
pub fn write_effects_csv<W: Write>(effects: &[CfDecomposition], ds: &Dataset, sink: W) -> Result<()> {
    let mut w = csv::Writer::from_writer(sink);
    w.write_record([
        "candidate_id",
        "exam_id",
        "connected",
        "pool_ties",
        "baseline_p",
        "total",
        "info_part",
        "favor_part",
        "alt_info_part",
        "alt_favor_part",
    ])?;
    let by_id: std::collections::HashMap<&str, &Candidate> =
        ds.candidates().iter().map(|c| (c.id.as_str(), c)).collect();
    for e in effects {
        let c = by_id
            .get(e.candidate_id.as_str())
            .ok_or_else(|| Error::InvalidDataset(format!("unknown candidate {}", e.candidate_id)))?;
        w.write_record([
            e.candidate_id.clone(),
            ds.exam_of(c).id.clone(),
            (c.is_connected() as u8).to_string(),
            ((c.e_strong + c.e_weak > 0.0) as u8).to_string(),
            e.baseline_p.to_string(),
            e.total.to_string(),
            e.info_part.to_string(),
            e.favor_part.to_string(),
            e.alt_info_part.to_string(),
            e.alt_favor_part.to_string(),
        ])?;
    }
    w.flush()?;
    Ok(())
}

pub fn save_effects_csv(effects: &[CfDecomposition], ds: &Dataset, path: impl AsRef<Path>) -> Result<()> {
    let f = std::fs::File::create(path)?;
    write_effects_csv(effects, ds, std::io::BufWriter::new(f))
}
