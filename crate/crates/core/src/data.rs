//! Promotion datasets: candidates grouped into exams.
//!
//! A dataset lives in a single CSV file with one row per candidate. Exam-level
//! quantities (group covariates, jury size, positions) are repeated on every
//! row of the exam and must agree across those rows.

use std::collections::HashMap;
use std::path::Path;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Pseudo-observable names for the expected connection counts. They can be
/// referenced anywhere an observable name is accepted.
pub const E_STRONG: &str = "e_strong";
pub const E_WEAK: &str = "e_weak";

#[derive(Debug, Clone, PartialEq)]
pub struct Candidate {
    pub id: String,
    /// 1 = promoted.
    pub outcome: u8,
    pub observables: Vec<f64>,
    pub n_strong: u32,
    pub n_weak: u32,
    pub e_strong: f64,
    pub e_weak: f64,
    /// Index into [`Dataset::exams`].
    pub exam: usize,
}

impl Candidate {
    pub fn is_connected(&self) -> bool {
        self.n_strong + self.n_weak > 0
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct Exam {
    pub id: String,
    pub group_covariates: Vec<f64>,
    pub jury_size: u32,
    pub positions: Option<u32>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct Dataset {
    candidates: Vec<Candidate>,
    exams: Vec<Exam>,
    observable_names: Vec<String>,
    group_names: Vec<String>,
}

impl Dataset {
    /// Builds a dataset and checks its invariants.
    pub fn new(
        candidates: Vec<Candidate>,
        exams: Vec<Exam>,
        observable_names: Vec<String>,
        group_names: Vec<String>,
    ) -> Result<Self> {
        let m = observable_names.len();
        let g = group_names.len();
        for e in &exams {
            if e.group_covariates.len() != g {
                return Err(Error::InvalidDataset(format!(
                    "exam {} has {} group covariates, expected {g}",
                    e.id,
                    e.group_covariates.len()
                )));
            }
            if e.jury_size == 0 {
                return Err(Error::InvalidDataset(format!("exam {} has jury size 0", e.id)));
            }
        }
        for (row, c) in candidates.iter().enumerate() {
            let exam = exams.get(c.exam).ok_or_else(|| {
                Error::InvalidDataset(format!("candidate {} refers to unknown exam #{}", c.id, c.exam))
            })?;
            if c.observables.len() != m {
                return Err(Error::Dimension {
                    what: format!("observables of candidate {}", c.id),
                    expected: m,
                    got: c.observables.len(),
                });
            }
            if c.outcome > 1 {
                return Err(Error::Data {
                    row: row + 1,
                    column: "outcome".into(),
                    message: format!("outcome must be 0 or 1, got {}", c.outcome),
                });
            }
            if c.n_strong > exam.jury_size || c.n_weak > exam.jury_size {
                return Err(Error::InvalidDataset(format!(
                    "candidate {} has more ties than jury members ({} strong, {} weak, jury {})",
                    c.id, c.n_strong, c.n_weak, exam.jury_size
                )));
            }
            if !(c.e_strong.is_finite() && c.e_strong >= 0.0 && c.e_weak.is_finite() && c.e_weak >= 0.0) {
                return Err(Error::InvalidDataset(format!(
                    "candidate {} has invalid expected connections ({}, {})",
                    c.id, c.e_strong, c.e_weak
                )));
            }
            if let Some(j) = c.observables.iter().position(|v| !v.is_finite()) {
                return Err(Error::Data {
                    row: row + 1,
                    column: observable_names[j].clone(),
                    message: "non-finite value".into(),
                });
            }
        }
        Ok(Dataset {
            candidates,
            exams,
            observable_names,
            group_names,
        })
    }

    pub fn candidates(&self) -> &[Candidate] {
        &self.candidates
    }

    pub fn exams(&self) -> &[Exam] {
        &self.exams
    }

    pub fn observable_names(&self) -> &[String] {
        &self.observable_names
    }

    pub fn group_names(&self) -> &[String] {
        &self.group_names
    }

    pub fn len(&self) -> usize {
        self.candidates.len()
    }

    pub fn is_empty(&self) -> bool {
        self.candidates.is_empty()
    }

    pub fn n_exams(&self) -> usize {
        self.exams.len()
    }

    pub fn exam_of(&self, c: &Candidate) -> &Exam {
        &self.exams[c.exam]
    }

    /// Column index of an observable, if present.
    pub fn observable_index(&self, name: &str) -> Option<usize> {
        self.observable_names.iter().position(|n| n == name)
    }

    /// Names usable as characteristics: observables plus the expected
    /// connection counts.
    pub fn variable_names(&self) -> Vec<String> {
        let mut v = self.observable_names.clone();
        v.push(E_STRONG.into());
        v.push(E_WEAK.into());
        v
    }

    /// Resolves a characteristic name to an accessor.
    pub fn variable(&self, name: &str) -> Result<Variable> {
        match name {
            E_STRONG => Ok(Variable::ExpectedStrong),
            E_WEAK => Ok(Variable::ExpectedWeak),
            _ => self
                .observable_index(name)
                .map(Variable::Observable)
                .ok_or_else(|| Error::InvalidSpec(format!("unknown observable `{name}`"))),
        }
    }

    /// Candidate indices per exam, in ascending candidate order.
    pub fn exam_members(&self) -> Vec<Vec<usize>> {
        let mut members = vec![Vec::new(); self.exams.len()];
        for (i, c) in self.candidates.iter().enumerate() {
            members[c.exam].push(i);
        }
        members
    }

    /// Exams whose candidates all share one outcome.
    pub fn degenerate_exams(&self) -> Vec<usize> {
        let mut seen = vec![[false; 2]; self.exams.len()];
        for c in &self.candidates {
            seen[c.exam][c.outcome as usize] = true;
        }
        seen.iter()
            .enumerate()
            .filter(|(_, s)| !(s[0] && s[1]))
            .map(|(e, _)| e)
            .collect()
    }

    /// Keeps the candidates matching `keep`; exams left without candidates
    /// are removed and indices are renumbered.
    pub fn filter<F: Fn(&Candidate) -> bool>(&self, keep: F) -> Dataset {
        let kept: Vec<&Candidate> = self.candidates.iter().filter(|c| keep(c)).collect();
        let mut remap = vec![usize::MAX; self.exams.len()];
        let mut exams = Vec::new();
        for c in &kept {
            if remap[c.exam] == usize::MAX {
                remap[c.exam] = exams.len();
                exams.push(self.exams[c.exam].clone());
            }
        }
        let candidates = kept
            .into_iter()
            .map(|c| Candidate {
                exam: remap[c.exam],
                ..c.clone()
            })
            .collect();
        Dataset {
            candidates,
            exams,
            observable_names: self.observable_names.clone(),
            group_names: self.group_names.clone(),
        }
    }

    /// Drops degenerate exams, returning the reduced dataset and the number
    /// of exams removed.
    pub fn drop_degenerate_exams(&self) -> (Dataset, usize) {
        let bad = self.degenerate_exams();
        if bad.is_empty() {
            return (self.clone(), 0);
        }
        let mut is_bad = vec![false; self.exams.len()];
        for &e in &bad {
            is_bad[e] = true;
        }
        (self.filter(|c| !is_bad[c.exam]), bad.len())
    }

    /// Candidate order permuted; used to check order invariance.
    pub fn permuted(&self, order: &[usize]) -> Result<Dataset> {
        if order.len() != self.len() {
            return Err(Error::Dimension {
                what: "permutation".into(),
                expected: self.len(),
                got: order.len(),
            });
        }
        let candidates = order.iter().map(|&i| self.candidates[i].clone()).collect();
        Ok(Dataset {
            candidates,
            ..self.clone()
        })
    }

    pub fn promotion_rate(&self) -> f64 {
        let promoted = self.candidates.iter().filter(|c| c.outcome == 1).count();
        promoted as f64 / self.len().max(1) as f64
    }

    /// Shares of candidates with at least one strong / weak tie to the jury.
    pub fn connection_shares(&self) -> (f64, f64) {
        let n = self.len().max(1) as f64;
        let s = self.candidates.iter().filter(|c| c.n_strong > 0).count() as f64;
        let w = self.candidates.iter().filter(|c| c.n_weak > 0).count() as f64;
        (s / n, w / n)
    }

    /// Content hash of the estimation sample. Two fits can only be compared
    /// when their fingerprints agree.
    pub fn fingerprint(&self) -> String {
        use sha2::{Digest, Sha256};
        let mut h = Sha256::new();
        for name in self.observable_names.iter().chain(&self.group_names) {
            h.update(name.as_bytes());
            h.update([0u8]);
        }
        for c in &self.candidates {
            let exam = &self.exams[c.exam];
            h.update(exam.id.as_bytes());
            h.update([0u8, c.outcome]);
            h.update(c.n_strong.to_le_bytes());
            h.update(c.n_weak.to_le_bytes());
            h.update(c.e_strong.to_le_bytes());
            h.update(c.e_weak.to_le_bytes());
            for v in c.observables.iter().chain(&exam.group_covariates) {
                h.update(v.to_le_bytes());
            }
        }
        let digest = h.finalize();
        digest[..16].iter().map(|b| format!("{b:02x}")).collect()
    }
}

/// Accessor for a named characteristic of a candidate.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Variable {
    Observable(usize),
    ExpectedStrong,
    ExpectedWeak,
}

impl Variable {
    pub fn value(self, c: &Candidate) -> f64 {
        match self {
            Variable::Observable(j) => c.observables[j],
            Variable::ExpectedStrong => c.e_strong,
            Variable::ExpectedWeak => c.e_weak,
        }
    }
}

/// Maps dataset roles onto CSV column names.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct Schema {
    pub candidate_id: Option<String>,
    pub outcome: String,
    pub exam_id: String,
    pub n_strong: String,
    pub n_weak: String,
    pub e_strong: String,
    pub e_weak: String,
    pub observables: Vec<String>,
    pub group_covariates: Vec<String>,
    pub jury_size: Option<String>,
    pub positions: Option<String>,
    /// Used when `jury_size` names no column.
    pub default_jury_size: u32,
}

impl Default for Schema {
    fn default() -> Self {
        Schema {
            candidate_id: Some("candidate_id".into()),
            outcome: "outcome".into(),
            exam_id: "exam_id".into(),
            n_strong: "n_strong".into(),
            n_weak: "n_weak".into(),
            e_strong: E_STRONG.into(),
            e_weak: E_WEAK.into(),
            observables: Vec::new(),
            group_covariates: Vec::new(),
            jury_size: Some("jury_size".into()),
            positions: Some("positions".into()),
            default_jury_size: 7,
        }
    }
}

impl Schema {
    /// The layout written by [`save_dataset`].
    pub fn canonical(observables: &[String], group_covariates: &[String]) -> Self {
        Schema {
            observables: observables.to_vec(),
            group_covariates: group_covariates.to_vec(),
            ..Schema::default()
        }
    }

    pub fn for_dataset(ds: &Dataset) -> Self {
        Self::canonical(ds.observable_names(), ds.group_names())
    }
}

struct ColumnIndex {
    headers: Vec<String>,
    by_name: HashMap<String, usize>,
}

impl ColumnIndex {
    fn require(&self, name: &str) -> Result<usize> {
        self.by_name
            .get(name)
            .copied()
            .ok_or_else(|| Error::MissingColumn(name.to_string()))
    }
}

fn cell<'a>(rec: &'a csv::StringRecord, col: usize, row: usize, idx: &ColumnIndex) -> Result<&'a str> {
    let s = rec.get(col).unwrap_or("").trim();
    if s.is_empty() {
        return Err(Error::Data {
            row,
            column: idx.headers[col].clone(),
            message: "missing value".into(),
        });
    }
    Ok(s)
}

fn parse_real(rec: &csv::StringRecord, col: usize, row: usize, idx: &ColumnIndex) -> Result<f64> {
    let s = cell(rec, col, row, idx)?;
    let v: f64 = s.parse().map_err(|_| Error::Data {
        row,
        column: idx.headers[col].clone(),
        message: format!("non-numeric value `{s}`"),
    })?;
    if !v.is_finite() {
        return Err(Error::Data {
            row,
            column: idx.headers[col].clone(),
            message: format!("non-finite value `{s}`"),
        });
    }
    Ok(v)
}

fn parse_count(rec: &csv::StringRecord, col: usize, row: usize, idx: &ColumnIndex) -> Result<u32> {
    let v = parse_real(rec, col, row, idx)?;
    if v < 0.0 || v.fract() != 0.0 || v > u32::MAX as f64 {
        return Err(Error::Data {
            row,
            column: idx.headers[col].clone(),
            message: format!("expected a nonnegative integer, got {v}"),
        });
    }
    Ok(v as u32)
}

/// Reads a dataset from CSV according to `schema`.
pub fn load_dataset(path: impl AsRef<Path>, schema: &Schema) -> Result<Dataset> {
    let file = std::fs::File::open(path.as_ref())?;
    read_dataset(file, schema)
}

/// Reads a dataset from any CSV source.
pub fn read_dataset<R: std::io::Read>(source: R, schema: &Schema) -> Result<Dataset> {
    let mut reader = csv::ReaderBuilder::new().has_headers(true).from_reader(source);
    let headers: Vec<String> = reader.headers()?.iter().map(|h| h.trim().to_string()).collect();
    let by_name = headers.iter().enumerate().map(|(i, h)| (h.clone(), i)).collect();
    let idx = ColumnIndex { headers, by_name };

    let outcome_col = idx.require(&schema.outcome)?;
    let exam_col = idx.require(&schema.exam_id)?;
    let ns_col = idx.require(&schema.n_strong)?;
    let nw_col = idx.require(&schema.n_weak)?;
    let es_col = idx.require(&schema.e_strong)?;
    let ew_col = idx.require(&schema.e_weak)?;
    let id_col = match &schema.candidate_id {
        Some(name) => idx.by_name.get(name).copied(),
        None => None,
    };
    let jury_col = match &schema.jury_size {
        Some(name) => idx.by_name.get(name).copied(),
        None => None,
    };
    let pos_col = match &schema.positions {
        Some(name) => idx.by_name.get(name).copied(),
        None => None,
    };
    let obs_cols = schema
        .observables
        .iter()
        .map(|n| idx.require(n))
        .collect::<Result<Vec<_>>>()?;
    let grp_cols = schema
        .group_covariates
        .iter()
        .map(|n| idx.require(n))
        .collect::<Result<Vec<_>>>()?;

    let mut exams: Vec<Exam> = Vec::new();
    let mut exam_index: HashMap<String, usize> = HashMap::new();
    let mut candidates = Vec::new();

    for (k, rec) in reader.records().enumerate() {
        let rec = rec?;
        let row = k + 1;
        let exam_id = rec.get(exam_col).unwrap_or("").trim();
        if exam_id.is_empty() {
            return Err(Error::Data {
                row,
                column: schema.exam_id.clone(),
                message: "unresolvable exam id (empty)".into(),
            });
        }
        let outcome_raw = parse_real(&rec, outcome_col, row, &idx)?;
        let outcome = if outcome_raw == 0.0 {
            0
        } else if outcome_raw == 1.0 {
            1
        } else {
            return Err(Error::Data {
                row,
                column: schema.outcome.clone(),
                message: format!("outcome must be 0 or 1, got {outcome_raw}"),
            });
        };
        let jury_size = match jury_col {
            Some(c) => parse_count(&rec, c, row, &idx)?,
            None => schema.default_jury_size,
        };
        let positions = match pos_col {
            Some(c) if !rec.get(c).unwrap_or("").trim().is_empty() => Some(parse_count(&rec, c, row, &idx)?),
            _ => None,
        };
        let group = grp_cols
            .iter()
            .map(|&c| parse_real(&rec, c, row, &idx))
            .collect::<Result<Vec<_>>>()?;

        let exam = match exam_index.get(exam_id) {
            Some(&e) => {
                let ex = &exams[e];
                if ex.group_covariates != group {
                    return Err(Error::Data {
                        row,
                        column: schema.group_covariates.join("|"),
                        message: format!("group covariates differ from earlier rows of exam {exam_id}"),
                    });
                }
                if ex.jury_size != jury_size || ex.positions != positions {
                    return Err(Error::Data {
                        row,
                        column: schema.jury_size.clone().unwrap_or_default(),
                        message: format!("jury size or positions differ from earlier rows of exam {exam_id}"),
                    });
                }
                e
            }
            None => {
                exams.push(Exam {
                    id: exam_id.to_string(),
                    group_covariates: group,
                    jury_size,
                    positions,
                });
                exam_index.insert(exam_id.to_string(), exams.len() - 1);
                exams.len() - 1
            }
        };

        let n_strong = parse_count(&rec, ns_col, row, &idx)?;
        let n_weak = parse_count(&rec, nw_col, row, &idx)?;
        if n_strong > jury_size || n_weak > jury_size {
            return Err(Error::Data {
                row,
                column: schema.n_strong.clone(),
                message: format!("connection count exceeds jury size {jury_size}"),
            });
        }
        let e_strong = parse_real(&rec, es_col, row, &idx)?;
        let e_weak = parse_real(&rec, ew_col, row, &idx)?;
        for (v, c) in [(e_strong, es_col), (e_weak, ew_col)] {
            if v < 0.0 {
                return Err(Error::Data {
                    row,
                    column: idx.headers[c].clone(),
                    message: "expected connections must be nonnegative".into(),
                });
            }
        }
        let observables = obs_cols
            .iter()
            .map(|&c| parse_real(&rec, c, row, &idx))
            .collect::<Result<Vec<_>>>()?;
        let id = match id_col {
            Some(c) => rec.get(c).unwrap_or("").trim().to_string(),
            None => row.to_string(),
        };
        candidates.push(Candidate {
            id,
            outcome,
            observables,
            n_strong,
            n_weak,
            e_strong,
            e_weak,
            exam,
        });
    }

    Dataset::new(
        candidates,
        exams,
        schema.observables.clone(),
        schema.group_covariates.clone(),
    )
}

/// Writes the canonical CSV layout (see [`Schema::canonical`]).
pub fn save_dataset(ds: &Dataset, path: impl AsRef<Path>) -> Result<()> {
    let file = std::fs::File::create(path.as_ref())?;
    write_dataset(ds, file)
}

pub fn write_dataset<W: std::io::Write>(ds: &Dataset, sink: W) -> Result<()> {
    let s = Schema::for_dataset(ds);
    let mut w = csv::Writer::from_writer(sink);
    let mut header = vec![
        s.candidate_id.clone().unwrap_or_default(),
        s.exam_id.clone(),
        s.outcome.clone(),
        s.n_strong.clone(),
        s.n_weak.clone(),
        s.e_strong.clone(),
        s.e_weak.clone(),
        s.jury_size.clone().unwrap_or_default(),
        s.positions.clone().unwrap_or_default(),
    ];
    header.extend(ds.observable_names.iter().cloned());
    header.extend(ds.group_names.iter().cloned());
    w.write_record(&header)?;
    for c in &ds.candidates {
        let e = &ds.exams[c.exam];
        let mut rec = vec![
            c.id.clone(),
            e.id.clone(),
            c.outcome.to_string(),
            c.n_strong.to_string(),
            c.n_weak.to_string(),
            c.e_strong.to_string(),
            c.e_weak.to_string(),
            e.jury_size.to_string(),
            e.positions.map(|p| p.to_string()).unwrap_or_default(),
        ];
        rec.extend(c.observables.iter().map(|v| v.to_string()));
        rec.extend(e.group_covariates.iter().map(|v| v.to_string()));
        w.write_record(&rec)?;
    }
    w.flush()?;
    Ok(())
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Scaling {
    /// Subtract the exam mean.
    MeanOnly,
    /// Subtract the exam mean and divide by the exam standard deviation
    /// (n−1 denominator).
    MeanVariance,
}

#[derive(Debug, Clone)]
pub struct Standardized {
    pub dataset: Dataset,
    /// (column, exam id) pairs that had zero within-exam variance and were
    /// only mean-centered.
    pub zero_variance: Vec<(String, String)>,
}

/// Standardizes the selected observables within each exam.
pub fn standardize_within_exam(ds: &Dataset, columns: &[String], scaling: Scaling) -> Result<Standardized> {
    let cols = columns
        .iter()
        .map(|name| {
            ds.observable_index(name)
                .ok_or_else(|| Error::InvalidSpec(format!("unknown observable `{name}`")))
        })
        .collect::<Result<Vec<_>>>()?;
    let members = ds.exam_members();
    let mut out = ds.clone();
    let mut zero_variance = Vec::new();
    for &j in &cols {
        for (e, idx) in members.iter().enumerate() {
            if idx.is_empty() {
                continue;
            }
            let n = idx.len() as f64;
            let mean = idx.iter().map(|&i| ds.candidates[i].observables[j]).sum::<f64>() / n;
            let mut scale = 1.0;
            if scaling == Scaling::MeanVariance {
                let ss: f64 = idx
                    .iter()
                    .map(|&i| (ds.candidates[i].observables[j] - mean).powi(2))
                    .sum();
                let var = if idx.len() > 1 { ss / n } else { 0.0 };
                if var > 0.0 {
                    scale = var.sqrt();
                } else {
                    log::warn!(
                        "column `{}` has zero variance in exam {}; mean-centered only",
                        ds.observable_names[j],
                        ds.exams[e].id
                    );
                    zero_variance.push((ds.observable_names[j].clone(), ds.exams[e].id.clone()));
                }
            }
            for &i in idx {
                let v = &mut out.candidates[i].observables[j];
                *v = (*v - mean) / scale;
            }
        }
    }
    Ok(Standardized {
        dataset: out,
        zero_variance,
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    const FIXTURE: &str = "\
candidate_id,exam_id,outcome,n_strong,n_weak,e_strong,e_weak,jury_size,positions,pubs,age,z1
c1,A,1,1,0,0.7,0.1,7,2,1.0,40,3
c2,A,0,0,0,0.2,0.0,7,2,2.0,41,3
c3,A,0,0,1,0.0,0.3,7,2,3.0,39,3
c4,B,1,2,0,1.4,0.0,7,1,0.5,50,5
c5,B,0,0,0,0.0,0.0,7,1,0.7,45,5
c6,B,1,0,0,0.3,0.2,7,1,0.9,47,5
";

    fn schema() -> Schema {
        Schema::canonical(&["pubs".into(), "age".into()], &["z1".into()])
    }

    #[test]
    fn loads_fixture() {
        let ds = read_dataset(FIXTURE.as_bytes(), &schema()).unwrap();
        assert_eq!(ds.len(), 6);
        assert_eq!(ds.n_exams(), 2);
        assert_eq!(ds.exams()[1].group_covariates, vec![5.0]);
        assert_eq!(ds.candidates()[3].n_strong, 2);
        assert_eq!(ds.exams()[0].positions, Some(2));
    }

    #[test]
    fn rejects_non_binary_outcome_with_row() {
        let bad = FIXTURE.replace("c3,A,0,", "c3,A,2,");
        let err = read_dataset(bad.as_bytes(), &schema()).unwrap_err();
        match err {
            Error::Data { row, column, .. } => {
                assert_eq!(row, 3);
                assert_eq!(column, "outcome");
            }
            other => panic!("unexpected {other}"),
        }
    }

    #[test]
    fn rejects_missing_and_non_numeric() {
        let mut s = schema();
        s.observables.push("hindex".into());
        assert!(matches!(
            read_dataset(FIXTURE.as_bytes(), &s).unwrap_err(),
            Error::MissingColumn(c) if c == "hindex"
        ));
        let bad = FIXTURE.replace("c5,B,0,0,0,0.0,0.0,7,1,0.7", "c5,B,0,0,0,0.0,0.0,7,1,abc");
        let err = read_dataset(bad.as_bytes(), &schema()).unwrap_err();
        assert!(matches!(err, Error::Data { row: 5, ref column, .. } if column == "pubs"), "{err}");
        let empty = FIXTURE.replace("c2,A,0,0,0,0.2,0.0,7,2,2.0", "c2,A,0,0,0,0.2,0.0,7,2,");
        assert!(matches!(
            read_dataset(empty.as_bytes(), &schema()).unwrap_err(),
            Error::Data { row: 2, .. }
        ));
        let no_exam = FIXTURE.replace("c6,B,", "c6,,");
        assert!(matches!(
            read_dataset(no_exam.as_bytes(), &schema()).unwrap_err(),
            Error::Data { row: 6, .. }
        ));
    }

    #[test]
    fn rejects_inconsistent_group_covariates() {
        let bad = FIXTURE.replace("0.9,47,5", "0.9,47,6");
        assert!(read_dataset(bad.as_bytes(), &schema()).is_err());
    }

    #[test]
    fn save_load_round_trip() {
        let ds = read_dataset(FIXTURE.as_bytes(), &schema()).unwrap();
        let mut buf = Vec::new();
        write_dataset(&ds, &mut buf).unwrap();
        let back = read_dataset(buf.as_slice(), &Schema::for_dataset(&ds)).unwrap();
        assert_eq!(ds, back);
    }

    #[test]
    fn standardize_mean_variance() {
        let ds = read_dataset(FIXTURE.as_bytes(), &schema()).unwrap();
        let st = standardize_within_exam(&ds, &["pubs".into()], Scaling::MeanVariance).unwrap();
        let a: Vec<f64> = st.dataset.candidates()[..3].iter().map(|c| c.observables[0]).collect();
        let want = [-1.224_744_871_391_589, 0.0, 1.224_744_871_391_589];
        for (g, w) in a.iter().zip(want) {
            assert!((g - w).abs() < 1e-4);
        }
        // untouched column
        assert_eq!(st.dataset.candidates()[0].observables[1], 40.0);
    }

    #[test]
    fn standardize_constant_column() {
        let ds = read_dataset(FIXTURE.as_bytes(), &schema()).unwrap();
        let ds = ds.filter(|_| true);
        let constant = Dataset::new(
            ds.candidates()
                .iter()
                .map(|c| Candidate {
                    observables: vec![4.0, c.observables[1]],
                    ..c.clone()
                })
                .collect(),
            ds.exams().to_vec(),
            ds.observable_names().to_vec(),
            ds.group_names().to_vec(),
        )
        .unwrap();
        let st = standardize_within_exam(&constant, &["pubs".into()], Scaling::MeanOnly).unwrap();
        assert!(st.dataset.candidates().iter().all(|c| c.observables[0] == 0.0));
        let st = standardize_within_exam(&constant, &["pubs".into()], Scaling::MeanVariance).unwrap();
        assert_eq!(st.zero_variance.len(), 2);
        assert!(st.dataset.candidates().iter().all(|c| c.observables[0] == 0.0));
    }

    #[test]
    fn standardize_is_idempotent() {
        let ds = read_dataset(FIXTURE.as_bytes(), &schema()).unwrap();
        let cols = ["pubs".to_string(), "age".to_string()];
        let once = standardize_within_exam(&ds, &cols, Scaling::MeanVariance).unwrap().dataset;
        let twice = standardize_within_exam(&once, &cols, Scaling::MeanVariance).unwrap().dataset;
        for (a, b) in once.candidates().iter().zip(twice.candidates()) {
            for (x, y) in a.observables.iter().zip(&b.observables) {
                assert!((x - y).abs() < 1e-12);
            }
        }
    }

    #[test]
    fn degenerate_exams_detected_and_dropped() {
        let ds = read_dataset(FIXTURE.replace("c1,A,1", "c1,A,0").as_bytes(), &schema()).unwrap();
        assert_eq!(ds.degenerate_exams(), vec![0]);
        let (kept, dropped) = ds.drop_degenerate_exams();
        assert_eq!(dropped, 1);
        assert_eq!(kept.len(), 3);
        assert_eq!(kept.n_exams(), 1);
        assert_eq!(kept.candidates()[0].exam, 0);
    }
}
