//! Per-recording feature vectors, the stacked dataset matrix, and its CSV
//! serialization.
//!
//! CSV layout: optional `# key=value` comment lines, then a header row
//! `id,<feature names...>,label`, then one row per recording. Values use
//! Rust's shortest round-trip float formatting, so `read(write(ds))`
//! reproduces the matrix exactly; NaN sentinels serialize as the literal
//! `NaN`.

use std::collections::HashSet;
use std::fmt;
use std::path::Path;
use std::str::FromStr;

use crate::error::{Error, Result};

/// Class label of a recording: control (CR) or MCI.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, serde::Serialize)]
pub enum ClassLabel {
    Cr,
    Mci,
}

impl ClassLabel {
    pub const ALL: [ClassLabel; 2] = [ClassLabel::Cr, ClassLabel::Mci];

    pub fn index(self) -> usize {
        match self {
            ClassLabel::Cr => 0,
            ClassLabel::Mci => 1,
        }
    }

    /// The other class.
    pub fn flipped(self) -> ClassLabel {
        match self {
            ClassLabel::Cr => ClassLabel::Mci,
            ClassLabel::Mci => ClassLabel::Cr,
        }
    }
}

impl fmt::Display for ClassLabel {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            ClassLabel::Cr => write!(f, "CR"),
            ClassLabel::Mci => write!(f, "MCI"),
        }
    }
}

impl FromStr for ClassLabel {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s.trim() {
            "CR" => Ok(ClassLabel::Cr),
            "MCI" => Ok(ClassLabel::Mci),
            other => Err(Error::UnknownLabel(other.to_string())),
        }
    }
}

/// Ordered (name, value) pairs for one recording.
#[derive(Debug, Clone, PartialEq)]
pub struct NamedFeatureVector {
    pub id: String,
    pub label: Option<ClassLabel>,
    pub names: Vec<String>,
    pub values: Vec<f64>,
}

impl NamedFeatureVector {
    pub fn dim(&self) -> usize {
        self.values.len()
    }
}

/// N_recordings x D feature matrix with labels and provenance.
#[derive(Debug, Clone, PartialEq)]
pub struct Dataset {
    pub feature_names: Vec<String>,
    pub ids: Vec<String>,
    pub rows: Vec<Vec<f64>>,
    pub labels: Vec<ClassLabel>,
    /// `key=value` provenance entries (config hash, inventory version),
    /// serialized as `#`-prefixed comment lines.
    pub provenance: Vec<(String, String)>,
}

impl Dataset {
    pub fn n_rows(&self) -> usize {
        self.rows.len()
    }

    pub fn dim(&self) -> usize {
        self.feature_names.len()
    }

    /// Stack per-recording vectors (which must share an identical name order).
    pub fn from_vectors(vectors: &[NamedFeatureVector]) -> Result<Dataset> {
        let first = vectors.first().ok_or(Error::MalformedCsv {
            line: 0,
            detail: "no recordings".into(),
        })?;
        let names = first.names.clone();
        check_unique(&names)?;
        let mut ids = Vec::new();
        let mut rows = Vec::new();
        let mut labels = Vec::new();
        for v in vectors {
            if v.names != names {
                return Err(Error::MalformedCsv {
                    line: 0,
                    detail: format!("feature order of {} differs from {}", v.id, first.id),
                });
            }
            let label = v.label.ok_or_else(|| Error::UnknownLabel(v.id.clone()))?;
            ids.push(v.id.clone());
            rows.push(v.values.clone());
            labels.push(label);
        }
        Ok(Dataset {
            feature_names: names,
            ids,
            rows,
            labels,
            provenance: Vec::new(),
        })
    }

    /// Column `j` over all rows.
    pub fn column(&self, j: usize) -> Vec<f64> {
        self.rows.iter().map(|r| r[j]).collect()
    }

    /// Column `j` restricted to rows of one class.
    pub fn column_of_class(&self, j: usize, class: ClassLabel) -> Vec<f64> {
        self.rows
            .iter()
            .zip(&self.labels)
            .filter(|(_, &l)| l == class)
            .map(|(r, _)| r[j])
            .collect()
    }

    /// Number of rows per class, indexed by [`ClassLabel::index`].
    pub fn class_counts(&self) -> [usize; 2] {
        let mut counts = [0usize; 2];
        for l in &self.labels {
            counts[l.index()] += 1;
        }
        counts
    }

    /// New dataset keeping only the given feature columns (in the given order).
    pub fn select_columns(&self, keep: &[usize]) -> Dataset {
        Dataset {
            feature_names: keep.iter().map(|&j| self.feature_names[j].clone()).collect(),
            ids: self.ids.clone(),
            rows: self
                .rows
                .iter()
                .map(|r| keep.iter().map(|&j| r[j]).collect())
                .collect(),
            labels: self.labels.clone(),
            provenance: self.provenance.clone(),
        }
    }

    /// New dataset keeping only the given rows (in the given order).
    pub fn select_rows(&self, keep: &[usize]) -> Dataset {
        Dataset {
            feature_names: self.feature_names.clone(),
            ids: keep.iter().map(|&i| self.ids[i].clone()).collect(),
            rows: keep.iter().map(|&i| self.rows[i].clone()).collect(),
            labels: keep.iter().map(|&i| self.labels[i]).collect(),
            provenance: self.provenance.clone(),
        }
    }

    /// Replace NaN sentinels with the per-feature median over non-sentinel
    /// rows (0.0 when a column is entirely sentinel). Selection and training
    /// require complete columns.
    pub fn impute_sentinels(&mut self) {
        for j in 0..self.dim() {
            let mut finite: Vec<f64> = self
                .rows
                .iter()
                .map(|r| r[j])
                .filter(|v| v.is_finite())
                .collect();
            if finite.len() == self.n_rows() {
                continue;
            }
            let fill = if finite.is_empty() {
                0.0
            } else {
                finite.sort_by(f64::total_cmp);
                let m = finite.len();
                if m % 2 == 1 {
                    finite[m / 2]
                } else {
                    0.5 * (finite[m / 2 - 1] + finite[m / 2])
                }
            };
            for row in &mut self.rows {
                if !row[j].is_finite() {
                    row[j] = fill;
                }
            }
        }
    }
}

fn check_unique(names: &[String]) -> Result<()> {
    let mut seen = HashSet::new();
    for n in names {
        if !seen.insert(n) {
            return Err(Error::DuplicateFeature(n.clone()));
        }
    }
    Ok(())
}

/// Serialize a dataset to CSV text.
pub fn dataset_to_csv(ds: &Dataset) -> String {
    let mut out = String::new();
    for (k, v) in &ds.provenance {
        out.push_str(&format!("# {k}={v}\n"));
    }
    out.push_str("id,");
    out.push_str(&ds.feature_names.join(","));
    out.push_str(",label\n");
    for i in 0..ds.n_rows() {
        out.push_str(&ds.ids[i]);
        for v in &ds.rows[i] {
            out.push(',');
            out.push_str(&format_value(*v));
        }
        out.push(',');
        out.push_str(&ds.labels[i].to_string());
        out.push('\n');
    }
    out
}

fn format_value(v: f64) -> String {
    if v.is_nan() {
        "NaN".to_string()
    } else {
        format!("{v}")
    }
}

pub fn write_dataset(ds: &Dataset, path: &Path) -> Result<()> {
    std::fs::write(path, dataset_to_csv(ds)).map_err(|source| Error::Io {
        path: path.to_owned(),
        source,
    })
}

/// Parse CSV text produced by [`dataset_to_csv`].
pub fn dataset_from_csv(text: &str) -> Result<Dataset> {
    let mut provenance = Vec::new();
    let mut lines = text.lines().enumerate().peekable();
    while let Some((_, line)) = lines.peek() {
        if let Some(comment) = line.strip_prefix('#') {
            if let Some((k, v)) = comment.trim().split_once('=') {
                provenance.push((k.trim().to_string(), v.trim().to_string()));
            }
            lines.next();
        } else {
            break;
        }
    }

    let (header_line_no, header) = lines.next().ok_or(Error::MalformedCsv {
        line: 0,
        detail: "missing header".into(),
    })?;
    let cols: Vec<&str> = header.split(',').collect();
    if cols.len() < 3 || cols[0] != "id" || *cols.last().unwrap() != "label" {
        return Err(Error::MalformedCsv {
            line: header_line_no + 1,
            detail: "header must be id,<features...>,label".into(),
        });
    }
    let feature_names: Vec<String> = cols[1..cols.len() - 1]
        .iter()
        .map(|s| s.to_string())
        .collect();
    check_unique(&feature_names)?;

    let mut ids = Vec::new();
    let mut rows = Vec::new();
    let mut labels = Vec::new();
    for (line_no, line) in lines {
        if line.trim().is_empty() {
            continue;
        }
        let fields: Vec<&str> = line.split(',').collect();
        if fields.len() != cols.len() {
            return Err(Error::MalformedCsv {
                line: line_no + 1,
                detail: format!("expected {} fields, got {}", cols.len(), fields.len()),
            });
        }
        ids.push(fields[0].to_string());
        let mut row = Vec::with_capacity(feature_names.len());
        for f in &fields[1..fields.len() - 1] {
            let v = if *f == "NaN" {
                f64::NAN
            } else {
                f.parse::<f64>().map_err(|e| Error::MalformedCsv {
                    line: line_no + 1,
                    detail: format!("bad value {f:?}: {e}"),
                })?
            };
            row.push(v);
        }
        rows.push(row);
        labels.push(fields[fields.len() - 1].parse::<ClassLabel>()?);
    }
    Ok(Dataset {
        feature_names,
        ids,
        rows,
        labels,
        provenance,
    })
}

pub fn read_dataset(path: &Path) -> Result<Dataset> {
    let text = std::fs::read_to_string(path).map_err(|source| Error::Io {
        path: path.to_owned(),
        source,
    })?;
    dataset_from_csv(&text)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn toy() -> Dataset {
        Dataset {
            feature_names: vec!["a".into(), "b".into(), "c".into()],
            ids: vec!["r0".into(), "r1".into()],
            rows: vec![
                vec![1.25, -1.0 / 3.0, 1e-17],
                vec![f64::NAN, 2.0, 3.5],
            ],
            labels: vec![ClassLabel::Cr, ClassLabel::Mci],
            provenance: vec![("config".into(), "deadbeef".into())],
        }
    }

    #[test]
    fn round_trip_is_exact() {
        let ds = toy();
        let csv = dataset_to_csv(&ds);
        let back = dataset_from_csv(&csv).unwrap();
        assert_eq!(back.feature_names, ds.feature_names);
        assert_eq!(back.ids, ds.ids);
        assert_eq!(back.labels, ds.labels);
        assert_eq!(back.provenance, ds.provenance);
        for (r1, r2) in ds.rows.iter().zip(&back.rows) {
            for (a, b) in r1.iter().zip(r2) {
                if a.is_nan() {
                    assert!(b.is_nan());
                } else {
                    assert_eq!(a, b); // bit-exact, not just 1e-12
                }
            }
        }
    }

    #[test]
    fn nan_serializes_as_literal() {
        let csv = dataset_to_csv(&toy());
        assert!(csv.contains("r1,NaN,2,3.5,MCI"));
    }

    #[test]
    fn duplicate_feature_name_is_an_error() {
        let csv = "id,a,a,label\nr0,1,2,CR\n";
        assert!(matches!(
            dataset_from_csv(csv),
            Err(Error::DuplicateFeature(_))
        ));
    }

    #[test]
    fn unknown_label_is_an_error() {
        let csv = "id,a,label\nr0,1,HEALTHY\n";
        assert!(matches!(dataset_from_csv(csv), Err(Error::UnknownLabel(_))));
    }

    #[test]
    fn malformed_rows_are_errors() {
        assert!(matches!(
            dataset_from_csv("id,a,label\nr0,1\n"),
            Err(Error::MalformedCsv { .. })
        ));
        assert!(matches!(
            dataset_from_csv("noheader\n"),
            Err(Error::MalformedCsv { .. })
        ));
        assert!(matches!(
            dataset_from_csv("id,a,label\nr0,zzz,CR\n"),
            Err(Error::MalformedCsv { .. })
        ));
    }

    #[test]
    fn sentinel_imputation_uses_training_median() {
        let mut ds = Dataset {
            feature_names: vec!["a".into()],
            ids: (0..5).map(|i| format!("r{i}")).collect(),
            rows: vec![
                vec![1.0],
                vec![f64::NAN],
                vec![3.0],
                vec![2.0],
                vec![f64::NAN],
            ],
            labels: vec![
                ClassLabel::Cr,
                ClassLabel::Cr,
                ClassLabel::Mci,
                ClassLabel::Mci,
                ClassLabel::Cr,
            ],
            provenance: Vec::new(),
        };
        ds.impute_sentinels();
        assert_eq!(ds.rows[1][0], 2.0);
        assert_eq!(ds.rows[4][0], 2.0);
    }

    #[test]
    fn label_parsing() {
        assert_eq!("CR".parse::<ClassLabel>().unwrap(), ClassLabel::Cr);
        assert_eq!("MCI".parse::<ClassLabel>().unwrap(), ClassLabel::Mci);
        assert!("cr".parse::<ClassLabel>().is_err());
        assert_eq!(ClassLabel::Cr.flipped(), ClassLabel::Mci);
    }
}
