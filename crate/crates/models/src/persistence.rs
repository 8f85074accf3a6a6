//! Self-describing model files: JSON carrying the fitted parameters, the
//! feature schema they were fitted against, and that schema's digest.

use serde::{Deserialize, Serialize};

use super::{ForestModel, LogisticModel, ModelError, ScoreModel};
use mbid_features::FeatureSchema;
use mbid_core::scalar::Scalar;

pub const MODEL_FORMAT: &str = "mbid-model";
pub const MODEL_VERSION: u32 = 1;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(bound = "T: Scalar", tag = "type", rename_all = "snake_case")]
pub enum FittedModel<T> {
    Logistic(LogisticModel<T>),
    Forest(ForestModel<T>),
}

impl<T: Scalar> FittedModel<T> {
    pub fn kind(&self) -> &'static str {
        match self {
            FittedModel::Logistic(_) => "logistic",
            FittedModel::Forest(_) => "forest",
        }
    }
}

impl<T: Scalar> ScoreModel<T> for FittedModel<T> {
    fn n_features(&self) -> usize {
        match self {
            FittedModel::Logistic(m) => m.n_features(),
            FittedModel::Forest(m) => m.n_features(),
        }
    }

    fn score_row(&self, x: &[T]) -> T {
        match self {
            FittedModel::Logistic(m) => m.score_row(x),
            FittedModel::Forest(m) => m.score_row(x),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(bound = "T: Scalar")]
pub struct SavedModel<T> {
    pub format: String,
    pub version: u32,
    pub schema_digest: String,
    pub schema: FeatureSchema,
    pub model: FittedModel<T>,
}

impl<T: Scalar> SavedModel<T> {
    pub fn new(schema: FeatureSchema, model: FittedModel<T>) -> Result<Self, ModelError> {
        if model.n_features() != schema.width() {
            return Err(ModelError::DimensionMismatch {
                expected: schema.width(),
                found: model.n_features(),
            });
        }
        Ok(Self {
            format: MODEL_FORMAT.to_string(),
            version: MODEL_VERSION,
            schema_digest: schema.digest(),
            schema,
            model,
        })
    }

    pub fn to_json(&self) -> String {
        serde_json::to_string(self).expect("model serializes")
    }

    /// Parses and validates format, version and the embedded digest.
    pub fn from_json(text: &str) -> Result<Self, ModelError> {
        let saved: Self =
            serde_json::from_str(text).map_err(|e| ModelError::Format(e.to_string()))?;
        if saved.format != MODEL_FORMAT || saved.version != MODEL_VERSION {
            return Err(ModelError::Format(format!(
                "unsupported {} v{}",
                saved.format, saved.version
            )));
        }
        saved
            .schema
            .check_supported()
            .map_err(|e| ModelError::Format(e.to_string()))?;
        saved.verify_schema(&saved.schema.digest())?;
        if saved.model.n_features() != saved.schema.width() {
            return Err(ModelError::DimensionMismatch {
                expected: saved.schema.width(),
                found: saved.model.n_features(),
            });
        }
        Ok(saved)
    }

    /// Fails unless `digest` is the digest this model was fitted against.
    pub fn verify_schema(&self, digest: &str) -> Result<(), ModelError> {
        if digest != self.schema_digest {
            return Err(ModelError::SchemaMismatch {
                expected: self.schema_digest.clone(),
                found: digest.to_string(),
            });
        }
        Ok(())
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use mbid_features::{build_schema, FeatureConfig};
    use mbid_ingest::{AdminRecord, CountryCode, CourseLevel, Employment, Gender, NameFrequencyTable};

    fn schema() -> FeatureSchema {
        let recs: Vec<AdminRecord> = (0..12)
            .map(|i| AdminRecord {
                link_key: format!("k{i}"),
                given_name: if i % 2 == 0 { "anna".into() } else { "zhu".into() },
                gender: Gender::ALL[i % 2],
                birth_country: CountryCode::new("IT"),
                citizenship_country: CountryCode::new("IT"),
                course_level: CourseLevel::ALL[i % 3],
                department: "law".into(),
                enrollment_year: 2020,
                years_enrolled: 1 + i as u32,
                ects_earned: 3 * i as u32,
                employment: Employment::ALL[i % 4],
            })
            .collect();
        let refs: Vec<&AdminRecord> = recs.iter().collect();
        let names = NameFrequencyTable::from_counts([("anna", 10u64)]);
        build_schema(&refs, &names, &FeatureConfig::default()).unwrap()
    }

    #[test]
    fn round_trip() {
        let s = schema();
        let m = LogisticModel::from_coefficients(0.25, (0..s.width()).map(|j| j as f64 / 7.0).collect());
        let saved = SavedModel::new(s, FittedModel::Logistic(m)).unwrap();
        let back = SavedModel::<f64>::from_json(&saved.to_json()).unwrap();
        assert_eq!(back, saved);
    }

    #[test]
    fn tampered_schema_is_rejected() {
        let s = schema();
        let m = LogisticModel::from_coefficients(0.0, vec![0.0; s.width()]);
        let mut saved = SavedModel::new(s, FittedModel::Logistic(m)).unwrap();
        saved.schema.features[0].name = "renamed".into();
        assert!(matches!(
            SavedModel::<f64>::from_json(&saved.to_json()),
            Err(ModelError::SchemaMismatch { .. })
        ));
    }

    #[test]
    fn width_must_match() {
        let m = LogisticModel::from_coefficients(0.0, vec![0.0; 2]);
        assert!(SavedModel::new(schema(), FittedModel::Logistic(m)).is_err());
    }
}
