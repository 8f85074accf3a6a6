//! Validation harness: confusion-matrix metrics, ROC, stratified splitting
//! and k-fold cross-validation.

mod cv;
mod metrics;
mod roc;
mod split;

use thiserror::Error;

use mbid_models::ModelError;

pub use cv::{kfold_cv, CvResult, FoldResult, MetricSummary};
pub use metrics::{confusion_at, evaluate, ConfusionMatrix, MetricsReport, METRIC_NAMES};
pub use roc::{mann_whitney_auc, roc, RocCurve, RocPoint};
pub use split::{
    round_half_away, split_train_validate, stratified_folds, stratified_split_indices,
    MIN_SPLIT_ROWS,
};

pub type MetricsReportF64 = MetricsReport<f64>;
/// Metrics in exact rational arithmetic.
pub type MetricsReportExact = MetricsReport<num_rational::Ratio<i64>>;

#[derive(Debug, Error, PartialEq)]
pub enum EvalError {
    #[error("{scores} scores but {labels} labels")]
    LengthMismatch { scores: usize, labels: usize },
    #[error("no rows to evaluate")]
    EmptyInput,
    #[error("both classes are required")]
    OneClassOnly,
    #[error("{n} rows is below the minimum of {min}")]
    TooSmall { n: usize, min: usize },
    #[error("{n} rows cannot be split into {k} folds")]
    TooFewRows { n: usize, k: usize },
    #[error("training part of fold {fold} lacks a class")]
    EmptyClassInFold { fold: usize },
    #[error("ratio {0} must lie strictly between 0 and 1")]
    InvalidRatio(f64),
    #[error(transparent)]
    Model(#[from] ModelError),
}
