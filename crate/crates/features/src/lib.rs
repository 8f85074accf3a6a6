//! Predictor encoding and assembly of the labeled training set.
//!
//! The schema fixes column order: gender, employment, course level, the
//! common-name dummy, then the two standardized counts. Categoricals are
//! treatment-coded against a reference level.

use std::collections::BTreeMap;

use log::{info, warn};
use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};
use thiserror::Error;

use mbid_ingest::{
    is_common_name, AdminRecord, CommonNameRule, CourseLevel, Employment, Gender, LinkedDataset,
    NameFrequencyTable,
};
use mbid_core::scalar::Scalar;

pub const SCHEMA_FORMAT: &str = "mbid-feature-schema";
pub const SCHEMA_VERSION: u32 = 1;

pub type LabeledDatasetF64 = LabeledDataset<f64>;

#[derive(Debug, Error, PartialEq)]
pub enum FeatureError {
    #[error("no records to build a schema from")]
    EmptyInput,
    #[error("training set lacks a class: {positives} positive, {negatives} negative")]
    EmptyClass { positives: usize, negatives: usize },
    #[error("feature vector has {found} entries, schema expects {expected}")]
    DimensionMismatch { expected: usize, found: usize },
    #[error("non-finite value in row {row}, column {col}")]
    NonFinite { row: usize, col: usize },
    #[error("unsupported schema {format} v{version}")]
    UnsupportedSchema { format: String, version: u32 },
}

/// The predictors, in schema order.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Variable {
    Gender,
    Employment,
    CourseLevel,
    CommonItalianName,
    YearsEnrolled,
    EctsEarned,
}

impl Variable {
    pub const ALL: [Variable; 6] = [
        Variable::Gender,
        Variable::Employment,
        Variable::CourseLevel,
        Variable::CommonItalianName,
        Variable::YearsEnrolled,
        Variable::EctsEarned,
    ];

    pub fn as_str(self) -> &'static str {
        match self {
            Variable::Gender => "gender",
            Variable::Employment => "employment",
            Variable::CourseLevel => "course_level",
            Variable::CommonItalianName => "common_italian_name",
            Variable::YearsEnrolled => "years_enrolled",
            Variable::EctsEarned => "ects_earned",
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "encoding", rename_all = "snake_case")]
pub enum Encoding {
    /// 1 iff the variable takes `level`.
    Dummy { level: String },
    Binary,
    /// `(x - mean) / sd`, sample standard deviation.
    Standardized { mean: f64, sd: f64 },
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FeatureDescriptor {
    pub name: String,
    pub variable: Variable,
    #[serde(flatten)]
    pub encoding: Encoding,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DroppedFeature {
    pub variable: Variable,
    pub reason: String,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FeatureSchema {
    pub format: String,
    pub version: u32,
    pub features: Vec<FeatureDescriptor>,
    /// Reference level per retained categorical.
    pub references: BTreeMap<Variable, String>,
    pub dropped: Vec<DroppedFeature>,
    pub name_rule: CommonNameRule,
}

#[derive(Debug, Clone, Copy, Default, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct FeatureConfig {
    pub name_rule: CommonNameRule,
}

fn categorical_value(variable: Variable, rec: &AdminRecord) -> &'static str {
    match variable {
        Variable::Gender => rec.gender.as_str(),
        Variable::Employment => rec.employment.as_str(),
        Variable::CourseLevel => rec.course_level.as_str(),
        _ => unreachable!("not a categorical"),
    }
}

fn numeric_value(variable: Variable, rec: &AdminRecord) -> f64 {
    match variable {
        Variable::YearsEnrolled => f64::from(rec.years_enrolled),
        Variable::EctsEarned => f64::from(rec.ects_earned),
        _ => unreachable!("not numeric"),
    }
}

/// Declared levels, reference first.
fn declared_levels(variable: Variable) -> Vec<&'static str> {
    match variable {
        Variable::Gender => vec![Gender::F.as_str(), Gender::M.as_str()],
        Variable::Employment => vec![
            Employment::Student.as_str(),
            Employment::WorkerStudent.as_str(),
            Employment::StudentWorker.as_str(),
            Employment::NotAvailable.as_str(),
        ],
        Variable::CourseLevel => vec![
            CourseLevel::Bachelor.as_str(),
            CourseLevel::Master.as_str(),
            CourseLevel::BachelorAndMaster.as_str(),
        ],
        _ => unreachable!("not a categorical"),
    }
}

fn mean_sd(values: impl Iterator<Item = f64> + Clone) -> (f64, f64) {
    let n = values.clone().count() as f64;
    let mean = values.clone().sum::<f64>() / n;
    if n < 2.0 {
        return (mean, 0.0);
    }
    let ss: f64 = values.map(|v| (v - mean) * (v - mean)).sum();
    (mean, (ss / (n - 1.0)).sqrt())
}

/// Builds the schema from the rows the models will be trained on.
/// Degenerate predictors are dropped and listed in `dropped`.
pub fn build_schema(
    records: &[&AdminRecord],
    names: &NameFrequencyTable,
    config: &FeatureConfig,
) -> Result<FeatureSchema, FeatureError> {
    if records.is_empty() {
        return Err(FeatureError::EmptyInput);
    }
    let mut features = Vec::new();
    let mut references = BTreeMap::new();
    let mut dropped = Vec::new();
    let mut drop = |variable: Variable, reason: String| {
        warn!("dropping degenerate feature {}: {reason}", variable.as_str());
        dropped.push(DroppedFeature { variable, reason });
    };

    for variable in Variable::ALL {
        match variable {
            Variable::Gender | Variable::Employment | Variable::CourseLevel => {
                let levels = declared_levels(variable);
                let observed: std::collections::BTreeSet<&str> =
                    records.iter().map(|r| categorical_value(variable, r)).collect();
                if observed.len() < 2 {
                    drop(variable, format!("single observed level {:?}", observed));
                    continue;
                }
                references.insert(variable, levels[0].to_string());
                for level in &levels[1..] {
                    features.push(FeatureDescriptor {
                        name: format!("{}_{}", variable.as_str(), level),
                        variable,
                        encoding: Encoding::Dummy {
                            level: level.to_string(),
                        },
                    });
                }
            }
            Variable::CommonItalianName => {
                let common = records
                    .iter()
                    .filter(|r| is_common_name(&r.given_name, names, &config.name_rule))
                    .count();
                if common == 0 || common == records.len() {
                    drop(variable, format!("constant over {} rows", records.len()));
                    continue;
                }
                features.push(FeatureDescriptor {
                    name: variable.as_str().to_string(),
                    variable,
                    encoding: Encoding::Binary,
                });
            }
            Variable::YearsEnrolled | Variable::EctsEarned => {
                let (mean, sd) = mean_sd(records.iter().map(|r| numeric_value(variable, r)));
                if !(sd > 0.0) {
                    drop(variable, "zero standard deviation".to_string());
                    continue;
                }
                features.push(FeatureDescriptor {
                    name: variable.as_str().to_string(),
                    variable,
                    encoding: Encoding::Standardized { mean, sd },
                });
            }
        }
    }

    Ok(FeatureSchema {
        format: SCHEMA_FORMAT.to_string(),
        version: SCHEMA_VERSION,
        features,
        references,
        dropped,
        name_rule: config.name_rule,
    })
}

impl FeatureSchema {
    pub fn width(&self) -> usize {
        self.features.len()
    }

    pub fn names(&self) -> Vec<String> {
        self.features.iter().map(|f| f.name.clone()).collect()
    }

    /// Column indices per retained variable, in schema order. One-hot
    /// dummies of a categorical form one group.
    pub fn groups(&self) -> Vec<(Variable, Vec<usize>)> {
        let mut out: Vec<(Variable, Vec<usize>)> = Vec::new();
        for (i, f) in self.features.iter().enumerate() {
            match out.last_mut() {
                Some((v, cols)) if *v == f.variable => cols.push(i),
                _ => out.push((f.variable, vec![i])),
            }
        }
        out
    }

    pub fn check_supported(&self) -> Result<(), FeatureError> {
        if self.format != SCHEMA_FORMAT || self.version != SCHEMA_VERSION {
            return Err(FeatureError::UnsupportedSchema {
                format: self.format.clone(),
                version: self.version,
            });
        }
        Ok(())
    }

    pub fn to_json(&self) -> String {
        serde_json::to_string_pretty(self).expect("schema serializes")
    }

    pub fn from_json(text: &str) -> Result<Self, serde_json::Error> {
        serde_json::from_str(text)
    }

    /// Hex SHA-256 of the compact JSON form.
    pub fn digest(&self) -> String {
        let compact = serde_json::to_vec(self).expect("schema serializes");
        hex::encode(Sha256::digest(compact))
    }
}

/// Encoded predictors of one record.
#[derive(Debug, Clone, PartialEq)]
pub struct FeatureVector<T> {
    pub values: Vec<T>,
    /// Categoricals whose level was not in the schema and fell back to the
    /// reference level.
    pub unknown_levels: u32,
}

/// Pure and deterministic given the schema and name table.
pub fn encode<T: Scalar>(
    record: &AdminRecord,
    schema: &FeatureSchema,
    names: &NameFrequencyTable,
) -> FeatureVector<T> {
    let mut values = Vec::with_capacity(schema.width());
    for f in &schema.features {
        let v = match &f.encoding {
            Encoding::Dummy { level } => {
                if categorical_value(f.variable, record) == level.as_str() {
                    1.0
                } else {
                    0.0
                }
            }
            Encoding::Binary => {
                if is_common_name(&record.given_name, names, &schema.name_rule) {
                    1.0
                } else {
                    0.0
                }
            }
            Encoding::Standardized { mean, sd } => (numeric_value(f.variable, record) - mean) / sd,
        };
        values.push(T::lit(v));
    }
    let mut unknown_levels = 0;
    for (variable, reference) in &schema.references {
        let value = categorical_value(*variable, record);
        let known = value == reference
            || schema.features.iter().any(|f| {
                f.variable == *variable
                    && matches!(&f.encoding, Encoding::Dummy { level } if level == value)
            });
        if !known {
            unknown_levels += 1;
        }
    }
    FeatureVector {
        values,
        unknown_levels,
    }
}

/// Columns that are permuted together when measuring importance.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct ColumnGroup {
    pub name: String,
    pub columns: Vec<usize>,
}

/// Row-major design matrix with binary labels. `true` is the positive class,
/// at least one parent of foreign nationality at birth (PA = 0).
#[derive(Debug, Clone, PartialEq)]
pub struct LabeledDataset<T> {
    x: Vec<T>,
    labels: Vec<bool>,
    ids: Vec<String>,
    n_cols: usize,
    feature_names: Vec<String>,
    groups: Vec<ColumnGroup>,
}

impl<T: Scalar> LabeledDataset<T> {
    /// `groups` lists the columns that are permuted together for importance;
    /// an empty list means one group per column.
    pub fn new(
        x: Vec<T>,
        n_cols: usize,
        labels: Vec<bool>,
        ids: Vec<String>,
        feature_names: Vec<String>,
        groups: Vec<ColumnGroup>,
    ) -> Result<Self, FeatureError> {
        let n_rows = labels.len();
        if x.len() != n_rows * n_cols {
            return Err(FeatureError::DimensionMismatch {
                expected: n_rows * n_cols,
                found: x.len(),
            });
        }
        if ids.len() != n_rows {
            return Err(FeatureError::DimensionMismatch {
                expected: n_rows,
                found: ids.len(),
            });
        }
        if feature_names.len() != n_cols {
            return Err(FeatureError::DimensionMismatch {
                expected: n_cols,
                found: feature_names.len(),
            });
        }
        if let Some(pos) = x.iter().position(|v| !v.is_finite()) {
            return Err(FeatureError::NonFinite {
                row: pos / n_cols.max(1),
                col: pos % n_cols.max(1),
            });
        }
        let groups = if groups.is_empty() {
            feature_names
                .iter()
                .enumerate()
                .map(|(c, name)| ColumnGroup {
                    name: name.clone(),
                    columns: vec![c],
                })
                .collect()
        } else {
            groups
        };
        Ok(Self {
            x,
            labels,
            ids,
            n_cols,
            feature_names,
            groups,
        })
    }

    /// Unnamed dataset with one group per column; handy for fixtures.
    pub fn from_rows(rows: &[Vec<T>], labels: Vec<bool>) -> Result<Self, FeatureError> {
        let n_cols = rows.first().map_or(0, Vec::len);
        if let Some(bad) = rows.iter().find(|r| r.len() != n_cols) {
            return Err(FeatureError::DimensionMismatch {
                expected: n_cols,
                found: bad.len(),
            });
        }
        let x = rows.iter().flatten().copied().collect();
        let ids = (0..labels.len()).map(|i| format!("r{i}")).collect();
        let names = (0..n_cols).map(|c| format!("x{c}")).collect();
        Self::new(x, n_cols, labels, ids, names, Vec::new())
    }

    pub fn n_rows(&self) -> usize {
        self.labels.len()
    }

    pub fn n_cols(&self) -> usize {
        self.n_cols
    }

    pub fn row(&self, i: usize) -> &[T] {
        &self.x[i * self.n_cols..(i + 1) * self.n_cols]
    }

    pub fn get(&self, i: usize, j: usize) -> T {
        self.x[i * self.n_cols + j]
    }

    pub fn labels(&self) -> &[bool] {
        &self.labels
    }

    pub fn ids(&self) -> &[String] {
        &self.ids
    }

    pub fn feature_names(&self) -> &[String] {
        &self.feature_names
    }

    pub fn groups(&self) -> &[ColumnGroup] {
        &self.groups
    }

    pub fn n_positive(&self) -> usize {
        self.labels.iter().filter(|&&l| l).count()
    }

    pub fn has_both_classes(&self) -> bool {
        let p = self.n_positive();
        p > 0 && p < self.n_rows()
    }

    /// Rows at `indices`, in that order.
    pub fn subset(&self, indices: &[usize]) -> Self {
        let mut x = Vec::with_capacity(indices.len() * self.n_cols);
        for &i in indices {
            x.extend_from_slice(self.row(i));
        }
        Self {
            x,
            labels: indices.iter().map(|&i| self.labels[i]).collect(),
            ids: indices.iter().map(|&i| self.ids[i].clone()).collect(),
            n_cols: self.n_cols,
            feature_names: self.feature_names.clone(),
            groups: self.groups.clone(),
        }
    }

    /// Copy with the given row order applied to `cols` only.
    pub fn with_rows_permuted(&self, cols: &[usize], perm: &[usize]) -> Self {
        let mut out = self.clone();
        for (dst, &src) in perm.iter().enumerate() {
            for &c in cols {
                out.x[dst * self.n_cols + c] = self.x[src * self.n_cols + c];
            }
        }
        out
    }

    pub fn column(&self, j: usize) -> Vec<T> {
        (0..self.n_rows()).map(|i| self.get(i, j)).collect()
    }

    /// Applies `f` to every entry of column `j`.
    pub fn map_column(&self, j: usize, f: impl Fn(T) -> T) -> Self {
        let mut out = self.clone();
        for i in 0..self.n_rows() {
            out.x[i * self.n_cols + j] = f(self.x[i * self.n_cols + j]);
        }
        out
    }

    pub fn with_labels(&self, labels: Vec<bool>) -> Self {
        assert_eq!(labels.len(), self.n_rows());
        Self {
            labels,
            ..self.clone()
        }
    }
}

/// Encodes a batch of register rows into a design matrix.
pub fn encode_matrix<T: Scalar>(
    records: &[&AdminRecord],
    schema: &FeatureSchema,
    names: &NameFrequencyTable,
) -> Vec<T> {
    let mut x = Vec::with_capacity(records.len() * schema.width());
    let mut unknown = 0u64;
    for r in records {
        let fv = encode::<T>(r, schema, names);
        unknown += u64::from(fv.unknown_levels);
        x.extend(fv.values);
    }
    if unknown > 0 {
        warn!("{unknown} categorical values outside the schema mapped to reference levels");
    }
    x
}

/// Linked students with BP = CIT = 1, where PA decides membership; only
/// there is the survey answer informative.
pub fn training_records(linked: &LinkedDataset) -> Vec<(&AdminRecord, bool)> {
    let mut rows: Vec<(&AdminRecord, bool)> = linked
        .matched
        .iter()
        .filter(|(a, _)| a.needs_pa())
        .map(|(a, s)| (a, !s.pa_observed))
        .collect();
    rows.sort_by(|a, b| a.0.link_key.cmp(&b.0.link_key));
    rows
}

/// Rows sorted by `link_key`, so the result does not depend on input order.
pub fn assemble_training_set<T: Scalar>(
    linked: &LinkedDataset,
    schema: &FeatureSchema,
    names: &NameFrequencyTable,
) -> Result<LabeledDataset<T>, FeatureError> {
    let rows = training_records(linked);
    let positives = rows.iter().filter(|(_, l)| *l).count();
    let negatives = rows.len() - positives;
    if positives == 0 || negatives == 0 {
        return Err(FeatureError::EmptyClass {
            positives,
            negatives,
        });
    }
    info!(
        "training set: {} rows, {positives} with PA=0 ({:.2}% positive), {negatives} with PA=1",
        rows.len(),
        100.0 * positives as f64 / rows.len() as f64
    );
    let records: Vec<&AdminRecord> = rows.iter().map(|(a, _)| *a).collect();
    let x = encode_matrix(&records, schema, names);
    LabeledDataset::new(
        x,
        schema.width(),
        rows.iter().map(|(_, l)| *l).collect(),
        records.iter().map(|a| a.link_key.clone()).collect(),
        schema.names(),
        schema
            .groups()
            .into_iter()
            .map(|(v, columns)| ColumnGroup {
                name: v.as_str().to_string(),
                columns,
            })
            .collect(),
    )
}

/// Pearson correlations between columns. `None` where a column is constant.
pub fn correlation_matrix<T: Scalar>(data: &LabeledDataset<T>) -> Vec<Vec<Option<f64>>> {
    let p = data.n_cols();
    let cols: Vec<Vec<f64>> = (0..p)
        .map(|j| data.column(j).iter().map(|v| v.to_f64().unwrap_or(f64::NAN)).collect())
        .collect();
    let centered: Vec<(Vec<f64>, f64)> = cols
        .iter()
        .map(|c| {
            let m = c.iter().sum::<f64>() / c.len().max(1) as f64;
            let d: Vec<f64> = c.iter().map(|v| v - m).collect();
            let norm = d.iter().map(|v| v * v).sum::<f64>().sqrt();
            (d, norm)
        })
        .collect();
    (0..p)
        .map(|a| {
            (0..p)
                .map(|b| {
                    let (da, na) = &centered[a];
                    let (db, nb) = &centered[b];
                    if *na == 0.0 || *nb == 0.0 {
                        return None;
                    }
                    let dot: f64 = da.iter().zip(db).map(|(x, y)| x * y).sum();
                    Some((dot / (na * nb)).clamp(-1.0, 1.0))
                })
                .collect()
        })
        .collect()
}
