//! Binary classifiers for the PA indicator and their importance measures.
//!
//! Scores are estimates of P(PA = 0). Every classifier labels a row positive
//! iff its score is strictly above the threshold.

mod forest;
mod importance;
mod linalg;
mod logistic;
mod persistence;
mod tree;

use thiserror::Error;

use mbid_core::scalar::Scalar;

pub use forest::{fit_forest, predict_forest, ForestConfig, ForestModel};
pub use importance::{permutation_importance, ImportanceEntry, ImportanceReport};
pub use logistic::{
    fit_logistic, penalized_gradient, penalized_log_likelihood, predict_logistic, LogisticConfig,
    LogisticModel,
};
pub use persistence::{FittedModel, SavedModel, MODEL_FORMAT, MODEL_VERSION};
pub use tree::{DecisionTree, Node};

pub type LogisticModelF64 = LogisticModel<f64>;
pub type ForestModelF64 = ForestModel<f64>;
pub type FittedModelF64 = FittedModel<f64>;
pub type SavedModelF64 = SavedModel<f64>;

/// Default classification threshold on the score.
pub const DEFAULT_THRESHOLD: f64 = 0.5;

#[derive(Debug, Error, PartialEq)]
pub enum ModelError {
    #[error("feature vector has {found} entries, model expects {expected}")]
    DimensionMismatch { expected: usize, found: usize },
    #[error("training data must contain both classes")]
    SingleClass,
    #[error("training data is empty")]
    Empty,
    #[error("normal equations singular even at ridge {lambda}")]
    SingularSystem { lambda: f64 },
    #[error("invalid configuration: {0}")]
    InvalidConfig(String),
    #[error("model file: {0}")]
    Format(String),
    #[error("schema digest {found} does not match the model's {expected}")]
    SchemaMismatch { expected: String, found: String },
}

/// `score > threshold`; a score exactly at the threshold is negative.
#[inline]
pub fn classify<T: PartialOrd>(score: T, threshold: T) -> bool {
    score > threshold
}

/// A fitted binary scorer.
pub trait ScoreModel<T: Scalar>: Sync {
    fn n_features(&self) -> usize;

    /// Score of one row; `x.len()` must equal `n_features()`.
    fn score_row(&self, x: &[T]) -> T;

    fn score(&self, x: &[T]) -> Result<T, ModelError> {
        if x.len() != self.n_features() {
            return Err(ModelError::DimensionMismatch {
                expected: self.n_features(),
                found: x.len(),
            });
        }
        Ok(self.score_row(x))
    }
}

/// Scores for every row of a dataset.
pub fn score_dataset<T: Scalar, M: ScoreModel<T> + ?Sized>(
    model: &M,
    data: &mbid_features::LabeledDataset<T>,
) -> Result<Vec<T>, ModelError> {
    (0..data.n_rows()).map(|i| model.score(data.row(i))).collect()
}

pub(crate) fn check_training<T: Scalar>(
    data: &mbid_features::LabeledDataset<T>,
) -> Result<(), ModelError> {
    if data.n_rows() == 0 {
        return Err(ModelError::Empty);
    }
    if !data.has_both_classes() {
        return Err(ModelError::SingleClass);
    }
    Ok(())
}

/// Which classifier to fit, with its settings.
#[derive(Debug, Clone, Copy, PartialEq, serde::Serialize, serde::Deserialize)]
#[serde(tag = "type", rename_all = "snake_case")]
pub enum Trainer {
    Logistic(LogisticConfig),
    Forest(ForestConfig),
}

impl Trainer {
    pub fn name(&self) -> &'static str {
        match self {
            Trainer::Logistic(_) => "logistic",
            Trainer::Forest(_) => "forest",
        }
    }

    /// Same trainer with its random seed replaced; logistic fits ignore it.
    pub fn with_seed(self, seed: u64) -> Self {
        match self {
            Trainer::Forest(cfg) => Trainer::Forest(ForestConfig { seed, ..cfg }),
            other => other,
        }
    }

    pub fn fit<T: Scalar>(
        &self,
        data: &mbid_features::LabeledDataset<T>,
    ) -> Result<FittedModel<T>, ModelError> {
        Ok(match self {
            Trainer::Logistic(cfg) => FittedModel::Logistic(fit_logistic(data, cfg)?),
            Trainer::Forest(cfg) => FittedModel::Forest(fit_forest(data, cfg)?),
        })
    }
}
