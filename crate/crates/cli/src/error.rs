use std::fmt;

use mbid_eval::EvalError;
use mbid_expand::ExpandError;
use mbid_features::FeatureError;
use mbid_ingest::IngestError;
use mbid_models::ModelError;
use mbid_pipeline::PipelineError;
use mbid_synth::SynthError;
use serde::Serialize;

/// Failure class; decides the exit status.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum Class {
    Usage,
    Data,
    Internal,
}

impl Class {
    pub fn exit_code(self) -> i32 {
        match self {
            Class::Usage => 2,
            Class::Data => 3,
            Class::Internal => 4,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct CliError {
    pub class: Class,
    /// Stable machine-readable name, e.g. `SchemaMismatch`.
    pub kind: String,
    pub message: String,
}

impl CliError {
    pub fn new(class: Class, kind: &str, message: impl fmt::Display) -> Self {
        Self {
            class,
            kind: kind.to_string(),
            message: message.to_string(),
        }
    }

    pub fn usage(message: impl fmt::Display) -> Self {
        Self::new(Class::Usage, "Usage", message)
    }

    pub fn io(path: &std::path::Path, e: std::io::Error) -> Self {
        Self::new(Class::Data, "Io", format!("{}: {e}", path.display()))
    }

    /// One JSON object, written to stderr on failure.
    pub fn to_json(&self) -> String {
        serde_json::json!({
            "error": {
                "kind": self.kind,
                "class": self.class,
                "message": self.message,
                "exit_code": self.class.exit_code(),
            }
        })
        .to_string()
    }
}

impl fmt::Display for CliError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}: {}", self.kind, self.message)
    }
}

impl From<IngestError> for CliError {
    fn from(e: IngestError) -> Self {
        let kind = match &e {
            IngestError::Io { .. } => "Io",
            IngestError::Csv(_) => "Csv",
            IngestError::MissingColumn { .. } => "MissingColumn",
            IngestError::DuplicateLinkKey(_) => "DuplicateLinkKey",
            IngestError::RejectThresholdExceeded { .. } => "RejectThresholdExceeded",
            IngestError::Validation { .. } => "Validation",
            IngestError::NameFileMalformed { .. } => "NameFileMalformed",
        };
        Self::new(Class::Data, kind, e)
    }
}

impl From<FeatureError> for CliError {
    fn from(e: FeatureError) -> Self {
        let kind = match &e {
            FeatureError::EmptyInput => "EmptyInput",
            FeatureError::EmptyClass { .. } => "EmptyClass",
            FeatureError::DimensionMismatch { .. } => "DimensionMismatch",
            FeatureError::NonFinite { .. } => "NonFinite",
            FeatureError::UnsupportedSchema { .. } => "UnsupportedSchema",
        };
        Self::new(Class::Data, kind, e)
    }
}

impl From<ModelError> for CliError {
    fn from(e: ModelError) -> Self {
        let (class, kind) = match &e {
            ModelError::SchemaMismatch { .. } => (Class::Data, "SchemaMismatch"),
            ModelError::Format(_) => (Class::Data, "ModelFormat"),
            ModelError::InvalidConfig(_) => (Class::Usage, "InvalidConfig"),
            ModelError::DimensionMismatch { .. } => (Class::Data, "DimensionMismatch"),
            ModelError::SingleClass => (Class::Data, "SingleClass"),
            ModelError::Empty => (Class::Data, "EmptyInput"),
            ModelError::SingularSystem { .. } => (Class::Data, "SingularSystem"),
        };
        Self::new(class, kind, e)
    }
}

impl From<EvalError> for CliError {
    fn from(e: EvalError) -> Self {
        let e = match e {
            EvalError::Model(m) => return m.into(),
            other => other,
        };
        let (class, kind) = match &e {
            EvalError::Model(_) => unreachable!("handled above"),
            EvalError::InvalidRatio(_) => (Class::Usage, "InvalidRatio"),
            EvalError::LengthMismatch { .. } => (Class::Internal, "LengthMismatch"),
            EvalError::EmptyInput => (Class::Data, "EmptyInput"),
            EvalError::OneClassOnly => (Class::Data, "OneClassOnly"),
            EvalError::TooSmall { .. } => (Class::Data, "TooSmall"),
            EvalError::TooFewRows { .. } => (Class::Data, "TooFewRows"),
            EvalError::EmptyClassInFold { .. } => (Class::Data, "EmptyClassInFold"),
        };
        Self::new(class, kind, e)
    }
}

impl From<ExpandError> for CliError {
    fn from(e: ExpandError) -> Self {
        let (class, kind) = match &e {
            ExpandError::SchemaMismatch { .. } => (Class::Data, "SchemaMismatch"),
            ExpandError::LevelMismatch { .. } => (Class::Data, "LevelMismatch"),
            ExpandError::CoverageGap(_) => (Class::Internal, "CoverageGap"),
            ExpandError::Domain(_) => (Class::Internal, "Domain"),
        };
        Self::new(class, kind, e)
    }
}

impl From<SynthError> for CliError {
    fn from(e: SynthError) -> Self {
        match e {
            SynthError::InfeasibleConfig(_) => Self::new(Class::Usage, "InfeasibleConfig", e),
            SynthError::Parse(_) => Self::new(Class::Usage, "ConfigParse", e),
            SynthError::Ingest(i) => i.into(),
            SynthError::Io(_) => Self::new(Class::Data, "Io", e),
        }
    }
}

impl From<PipelineError> for CliError {
    fn from(e: PipelineError) -> Self {
        match e {
            PipelineError::Feature(e) => e.into(),
            PipelineError::Model(e) => e.into(),
            PipelineError::Eval(e) => e.into(),
            PipelineError::Expand(e) => e.into(),
            PipelineError::UnknownModel(_) => Self::new(Class::Usage, "UnknownModel", e),
        }
    }
}

impl From<csv::Error> for CliError {
    fn from(e: csv::Error) -> Self {
        Self::new(Class::Data, "Csv", e)
    }
}
