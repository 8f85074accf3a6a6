//! Register and survey ingestion, exact linkage and the given-name reference.

mod admin;
mod link;
mod names;
pub mod standardize;
mod survey;

use std::collections::BTreeMap;
use std::fmt;
use std::path::PathBuf;

use serde::{Deserialize, Serialize};
use thiserror::Error;

use mbid_core::domain::MembershipIndicators;

pub use admin::{parse_admin, parse_admin_reader, write_admin, write_rejects, AdminParse, ADMIN_FIELDS};
pub use link::{link, LinkedDataset};
pub use names::{
    build_name_table, is_common_name, normalize_name, parse_name_table, write_name_table,
    CommonNameRule, NameFrequencyTable,
};
pub use survey::{parse_survey, parse_survey_reader, write_survey};

/// Environment variable naming the default data directory.
pub const DATA_DIR_ENV: &str = "MBID_DATA_DIR";

#[derive(Debug, Error)]
pub enum IngestError {
    #[error("{path}: {source}")]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },
    #[error("csv error: {0}")]
    Csv(#[from] csv::Error),
    #[error("missing column `{column}` (expected header for field `{field}`)")]
    MissingColumn { field: String, column: String },
    #[error("duplicate link_key `{0}`")]
    DuplicateLinkKey(String),
    #[error("{rejected} of {total} rows rejected, above the allowed fraction {max_fraction}")]
    RejectThresholdExceeded {
        rejected: usize,
        total: usize,
        max_fraction: f64,
    },
    #[error("line {line}: {reason}")]
    Validation { line: u64, reason: String },
    #[error("name table line {line}: {reason}")]
    NameFileMalformed { line: u64, reason: String },
}

impl IngestError {
    pub(crate) fn io(path: impl Into<PathBuf>, source: std::io::Error) -> Self {
        IngestError::Io {
            path: path.into(),
            source,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Gender {
    F,
    M,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum CourseLevel {
    Bachelor,
    Master,
    BachelorAndMaster,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Employment {
    /// Works, studies less than half the time.
    WorkerStudent,
    /// Studies 50-75% of the time.
    StudentWorker,
    /// Studies more than 75% of the time.
    Student,
    NotAvailable,
}

macro_rules! categorical {
    ($ty:ty { $($variant:ident => $code:literal),+ $(,)? }) => {
        impl $ty {
            pub const ALL: &'static [$ty] = &[$(<$ty>::$variant),+];

            pub fn as_str(self) -> &'static str {
                match self {
                    $(<$ty>::$variant => $code),+
                }
            }

            pub fn from_code(code: &str) -> Option<Self> {
                match code {
                    $($code => Some(<$ty>::$variant),)+
                    _ => None,
                }
            }
        }

        impl fmt::Display for $ty {
            fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
                f.write_str(self.as_str())
            }
        }
    };
}

categorical!(Gender { F => "F", M => "M" });
categorical!(CourseLevel {
    Bachelor => "bachelor",
    Master => "master",
    BachelorAndMaster => "bachelor_and_master",
});
categorical!(Employment {
    WorkerStudent => "worker_student",
    StudentWorker => "student_worker",
    Student => "student",
    NotAvailable => "not_available",
});

/// ISO-style country code, upper case. `IT` is Italy.
#[derive(Debug, Clone, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub struct CountryCode(String);

impl CountryCode {
    pub const ITALY: &'static str = "IT";

    pub fn new(code: impl Into<String>) -> Self {
        CountryCode(code.into())
    }

    pub fn as_str(&self) -> &str {
        &self.0
    }

    pub fn is_italy(&self) -> bool {
        self.0 == Self::ITALY
    }
}

impl fmt::Display for CountryCode {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(&self.0)
    }
}

/// One standardized row of the administrative register.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct AdminRecord {
    pub link_key: String,
    pub given_name: String,
    pub gender: Gender,
    pub birth_country: CountryCode,
    pub citizenship_country: CountryCode,
    pub course_level: CourseLevel,
    pub department: String,
    pub enrollment_year: i32,
    pub years_enrolled: u32,
    pub ects_earned: u32,
    pub employment: Employment,
}

impl AdminRecord {
    pub fn born_in_italy(&self) -> bool {
        self.birth_country.is_italy()
    }

    pub fn italian_citizen(&self) -> bool {
        self.citizenship_country.is_italy()
    }

    pub fn indicators(&self) -> MembershipIndicators {
        MembershipIndicators::from_register(self.born_in_italy(), self.italian_citizen())
    }

    /// True for the stratum where PA decides membership.
    pub fn needs_pa(&self) -> bool {
        self.born_in_italy() && self.italian_citizen()
    }
}

/// One row of the survey extract: eligible respondents and screened-out
/// contacts share this shape.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct SurveyRecord {
    pub link_key: String,
    pub eligible: bool,
    /// PA as answered: `true` iff both parents had Italian nationality at birth.
    pub pa_observed: bool,
    /// Remaining survey columns, carried through untouched.
    pub extra: BTreeMap<String, String>,
}

/// A row set aside during parsing, with a machine-readable reason code.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Reject {
    pub line: u64,
    pub link_key: String,
    pub reason: String,
    pub detail: String,
}

/// Maps canonical field names to the header names used in a given export.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct CsvOptions {
    pub delimiter: char,
    /// Canonical field -> header override. Fields not listed use their
    /// canonical name.
    pub columns: BTreeMap<String, String>,
    /// Largest tolerated share of rejected rows.
    pub max_reject_fraction: f64,
}

impl Default for CsvOptions {
    fn default() -> Self {
        Self {
            delimiter: ',',
            columns: BTreeMap::new(),
            max_reject_fraction: 0.05,
        }
    }
}

impl CsvOptions {
    pub(crate) fn header_for<'a>(&'a self, field: &'a str) -> &'a str {
        self.columns.get(field).map(String::as_str).unwrap_or(field)
    }

    pub(crate) fn delimiter_byte(&self) -> u8 {
        let mut buf = [0u8; 4];
        self.delimiter.encode_utf8(&mut buf);
        buf[0]
    }
}

pub(crate) fn column_index(
    headers: &csv::StringRecord,
    opts: &CsvOptions,
    field: &str,
) -> Result<usize, IngestError> {
    let wanted = opts.header_for(field);
    headers
        .iter()
        .position(|h| h.trim().trim_start_matches('\u{feff}') == wanted)
        .ok_or_else(|| IngestError::MissingColumn {
            field: field.to_string(),
            column: wanted.to_string(),
        })
}
