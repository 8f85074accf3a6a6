//! Register expansion: PA imputation for the hidden stratum, membership and
//! typology for every record, population tabulation and sample-vs-population
//! gaps.

use std::collections::{BTreeMap, HashMap};

use rayon::prelude::*;
use serde::{Deserialize, Serialize};
use thiserror::Error;

use mbid_core::domain::{compute_delta_type, BackgroundKind, DomainError, PopulationEstimate};
use mbid_features::{encode, FeatureSchema};
use mbid_ingest::{AdminRecord, LinkedDataset, NameFrequencyTable};
use mbid_models::{classify, ScoreModel};
use mbid_core::scalar::Scalar;

/// Default alert level for a sample-population gap, in percentage points.
pub const DEFAULT_ALERT_PP: f64 = 5.0;

#[derive(Debug, Error, PartialEq)]
pub enum ExpandError {
    #[error("model expects {model} features, schema has {schema}")]
    SchemaMismatch { model: usize, schema: usize },
    #[error("record `{0}` ended without a membership value")]
    CoverageGap(String),
    #[error("variable `{variable}`: sample level `{level}` does not occur in the population")]
    LevelMismatch { variable: String, level: String },
    #[error(transparent)]
    Domain(#[from] DomainError),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Provenance {
    /// Decided by birthplace and citizenship alone.
    Exact,
    /// PA from the linked survey row.
    Linked,
    /// PA imputed by the classifier.
    Predicted,
}

impl Provenance {
    pub fn as_str(self) -> &'static str {
        match self {
            Provenance::Exact => "exact",
            Provenance::Linked => "linked",
            Provenance::Predicted => "predicted",
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Imputation {
    pub pa_hat: bool,
    /// Estimated P(PA = 0).
    pub score: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ExpandedRecord {
    pub record: AdminRecord,
    pub delta: bool,
    pub kind: BackgroundKind,
    pub provenance: Provenance,
    /// Present iff `provenance` is `Predicted`.
    pub predicted_score: Option<f64>,
}

fn linked_pa(linked: &LinkedDataset) -> HashMap<&str, bool> {
    linked
        .matched
        .iter()
        .map(|(a, s)| (a.link_key.as_str(), s.pa_observed))
        .collect()
}

/// Scores every BP = CIT = 1 record without a linked survey answer.
/// `pa_hat` is 0 (a foreign-national parent) iff `score > threshold`.
pub fn impute_pa<T: Scalar, M: ScoreModel<T> + ?Sized>(
    model: &M,
    schema: &FeatureSchema,
    names: &NameFrequencyTable,
    admin: &[AdminRecord],
    linked: &LinkedDataset,
    threshold: T,
) -> Result<BTreeMap<String, Imputation>, ExpandError> {
    if model.n_features() != schema.width() {
        return Err(ExpandError::SchemaMismatch {
            model: model.n_features(),
            schema: schema.width(),
        });
    }
    let known = linked_pa(linked);
    Ok(admin
        .par_iter()
        .filter(|r| r.needs_pa() && !known.contains_key(r.link_key.as_str()))
        .map(|r| {
            let x = encode::<T>(r, schema, names).values;
            let score = model.score_row(&x);
            let imp = Imputation {
                pa_hat: !classify(score, threshold),
                score: score.to_f64().unwrap_or(f64::NAN),
            };
            (r.link_key.clone(), imp)
        })
        .collect())
}

/// One row per register record, sorted by `link_key`. A linked survey answer
/// wins over the register and over a prediction, unless it contradicts the
/// excluded combinations (CIT = 0 with PA = 1); then the register decides.
/// Unlinked records outside the BP = CIT = 1 stratum resolve with PA = 0.
pub fn expand_dataset(
    admin: &[AdminRecord],
    linked: &LinkedDataset,
    imputations: &BTreeMap<String, Imputation>,
) -> Result<Vec<ExpandedRecord>, ExpandError> {
    let known = linked_pa(linked);
    let mut out: Vec<ExpandedRecord> = admin
        .par_iter()
        .map(|r| {
            let (bp, cit) = (r.born_in_italy(), r.italian_citizen());
            let answer = known
                .get(r.link_key.as_str())
                .copied()
                .filter(|&pa| compute_delta_type(bp, cit, pa).is_ok());
            let (pa, provenance, predicted_score) = if let Some(pa) = answer {
                (pa, Provenance::Linked, None)
            } else if !(bp && cit) {
                (false, Provenance::Exact, None)
            } else if let Some(imp) = imputations.get(&r.link_key) {
                (imp.pa_hat, Provenance::Predicted, Some(imp.score))
            } else {
                return Err(ExpandError::CoverageGap(r.link_key.clone()));
            };
            let mb = compute_delta_type(bp, cit, pa)?;
            Ok(ExpandedRecord {
                record: r.clone(),
                delta: mb.delta(),
                kind: mb.kind(),
                provenance,
                predicted_score,
            })
        })
        .collect::<Result<_, _>>()?;
    out.sort_by(|a, b| a.record.link_key.cmp(&b.record.link_key));
    Ok(out)
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DistributionRow {
    pub delta: bool,
    pub kind: BackgroundKind,
    pub count: u64,
    pub pct_of_all: f64,
    /// `None` for the non-member row and when there are no members.
    pub pct_of_members: Option<f64>,
}

/// Counts by membership and typology over the whole register.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DistributionTable {
    pub n_total: u64,
    pub n_members: u64,
    pub rows: Vec<DistributionRow>,
}

impl DistributionTable {
    pub fn from_kind_counts(counts: [u64; 5]) -> Self {
        let est = PopulationEstimate::from_kind_counts(counts);
        let rows = BackgroundKind::ALL
            .iter()
            .map(|&kind| {
                let k = kind.code() as usize;
                DistributionRow {
                    delta: kind != BackgroundKind::NoBackground,
                    kind,
                    count: est.kind_counts[k],
                    pct_of_all: est.pct_of_all[k],
                    pct_of_members: est.pct_of_members[k],
                }
            })
            .collect();
        Self {
            n_total: est.n_total,
            n_members: est.n_members,
            rows,
        }
    }

    pub fn count(&self, kind: BackgroundKind) -> u64 {
        self.rows[kind.code() as usize].count
    }

    /// Member share of `kind` in percent.
    pub fn member_pct(&self, kind: BackgroundKind) -> Option<f64> {
        self.rows[kind.code() as usize].pct_of_members
    }

    pub fn to_markdown(&self) -> String {
        let mut s = String::from("| delta | type | count | % of students | % of members |\n|---|---|---:|---:|---:|\n");
        for r in &self.rows {
            let members = r.pct_of_members.map_or_else(|| "-".to_string(), |p| format!("{p:.2}"));
            s.push_str(&format!(
                "| {} | {} ({}) | {} | {:.2} | {} |\n",
                u8::from(r.delta),
                r.kind.code(),
                r.kind.label(),
                r.count,
                r.pct_of_all,
                members
            ));
        }
        s.push_str(&format!("| | total | {} | 100.00 | |\n", self.n_total));
        s.push_str(&format!("| 1 | members (N) | {} | | 100.00 |\n", self.n_members));
        s
    }
}

pub fn tabulate_population(expanded: &[ExpandedRecord]) -> DistributionTable {
    let counts = expanded
        .par_iter()
        .fold(
            || [0u64; 5],
            |mut acc, r| {
                acc[r.kind.code() as usize] += 1;
                acc
            },
        )
        .reduce(|| [0u64; 5], |a, b| std::array::from_fn(|i| a[i] + b[i]));
    DistributionTable::from_kind_counts(counts)
}

/// Register variables that can be compared between survey and population.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum BiasVariable {
    Gender,
    Department,
    BirthPlace,
    Citizenship,
    CourseLevel,
    Employment,
}

impl BiasVariable {
    /// The comparison set used by default.
    pub const DEFAULT: [BiasVariable; 4] = [
        BiasVariable::Department,
        BiasVariable::Gender,
        BiasVariable::BirthPlace,
        BiasVariable::Citizenship,
    ];

    pub fn as_str(self) -> &'static str {
        match self {
            BiasVariable::Gender => "gender",
            BiasVariable::Department => "department",
            BiasVariable::BirthPlace => "birth_place",
            BiasVariable::Citizenship => "citizenship",
            BiasVariable::CourseLevel => "course_level",
            BiasVariable::Employment => "employment",
        }
    }

    pub fn level(self, r: &AdminRecord) -> String {
        let italy = |b: bool| if b { "italy" } else { "foreign" }.to_string();
        match self {
            BiasVariable::Gender => r.gender.as_str().to_string(),
            BiasVariable::Department => r.department.clone(),
            BiasVariable::BirthPlace => italy(r.born_in_italy()),
            BiasVariable::Citizenship => italy(r.italian_citizen()),
            BiasVariable::CourseLevel => r.course_level.as_str().to_string(),
            BiasVariable::Employment => r.employment.as_str().to_string(),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct LevelGap {
    pub level: String,
    pub population_share: f64,
    pub sample_share: f64,
    /// `sample_share - population_share`, percentage points.
    pub gap_pp: f64,
    pub flagged: bool,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct VariableGap {
    pub variable: String,
    pub levels: Vec<LevelGap>,
}

impl VariableGap {
    pub fn max_abs_gap(&self) -> f64 {
        self.levels.iter().map(|l| l.gap_pp.abs()).fold(0.0, f64::max)
    }

    pub fn flagged(&self) -> bool {
        self.levels.iter().any(|l| l.flagged)
    }

    pub fn level(&self, level: &str) -> Option<&LevelGap> {
        self.levels.iter().find(|l| l.level == level)
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BiasReport {
    pub alert_pp: f64,
    pub n_population: usize,
    pub n_sample: usize,
    pub variables: Vec<VariableGap>,
}

impl BiasReport {
    pub fn variable(&self, name: &str) -> Option<&VariableGap> {
        self.variables.iter().find(|v| v.variable == name)
    }
}

fn shares<'a>(levels: impl Iterator<Item = &'a str>) -> (BTreeMap<&'a str, f64>, usize) {
    let mut counts: BTreeMap<&str, usize> = BTreeMap::new();
    let mut n = 0;
    for l in levels {
        *counts.entry(l).or_default() += 1;
        n += 1;
    }
    let pct = counts
        .into_iter()
        .map(|(k, c)| (k, if n > 0 { 100.0 * c as f64 / n as f64 } else { 0.0 }))
        .collect();
    (pct, n)
}

/// Per-level shares of one variable in two sources. Levels are those of the
/// population; a sample level outside them is a coding mismatch.
pub fn compare_levels(
    variable: &str,
    population: &[String],
    sample: &[String],
    alert_pp: f64,
) -> Result<VariableGap, ExpandError> {
    let (pop, _) = shares(population.iter().map(String::as_str));
    let (smp, _) = shares(sample.iter().map(String::as_str));
    if let Some(level) = smp.keys().find(|l| !pop.contains_key(*l)) {
        return Err(ExpandError::LevelMismatch {
            variable: variable.to_string(),
            level: level.to_string(),
        });
    }
    let levels = pop
        .iter()
        .map(|(level, &p)| {
            let s = smp.get(level).copied().unwrap_or(0.0);
            let gap = s - p;
            LevelGap {
                level: level.to_string(),
                population_share: p,
                sample_share: s,
                gap_pp: gap,
                flagged: gap.abs() > alert_pp,
            }
        })
        .collect();
    Ok(VariableGap {
        variable: variable.to_string(),
        levels,
    })
}

/// Descriptive comparison of survey members against register members.
pub fn bias_report(
    population: &[&AdminRecord],
    sample: &[&AdminRecord],
    variables: &[BiasVariable],
    alert_pp: f64,
) -> Result<BiasReport, ExpandError> {
    let variables = variables
        .iter()
        .map(|v| {
            let pop: Vec<String> = population.iter().map(|r| v.level(r)).collect();
            let smp: Vec<String> = sample.iter().map(|r| v.level(r)).collect();
            compare_levels(v.as_str(), &pop, &smp, alert_pp)
        })
        .collect::<Result<_, _>>()?;
    Ok(BiasReport {
        alert_pp,
        n_population: population.len(),
        n_sample: sample.len(),
        variables,
    })
}
