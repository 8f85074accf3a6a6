use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use super::metrics::{evaluate, MetricsReport, METRIC_NAMES};
use super::split::stratified_folds;
use super::EvalError;
use mbid_features::LabeledDataset;
use mbid_models::{score_dataset, Trainer};
use mbid_core::scalar::Scalar;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FoldResult {
    pub fold: usize,
    pub n_train: usize,
    pub n_test: usize,
    /// Seed handed to the trainer for this fold.
    pub model_seed: u64,
    pub metrics: MetricsReport<f64>,
}

/// Mean and sample standard deviation over the folds where the metric is
/// defined.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MetricSummary {
    pub metric: String,
    pub mean: Option<f64>,
    pub sd: Option<f64>,
    pub n_defined: usize,
    pub n_undefined: usize,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CvResult {
    pub k: usize,
    pub seed: u64,
    pub folds: Vec<FoldResult>,
    pub summary: Vec<MetricSummary>,
}

impl CvResult {
    pub fn mean(&self, metric: &str) -> Option<f64> {
        self.summary.iter().find(|s| s.metric == metric).and_then(|s| s.mean)
    }
}

/// Seed for the model fitted in `fold`, derived from the run seed.
fn fold_seed(seed: u64, fold: usize) -> u64 {
    seed ^ 0x9E37_79B9_7F4A_7C15u64.wrapping_mul(fold as u64 + 1)
}

fn summarize(folds: &[FoldResult]) -> Vec<MetricSummary> {
    METRIC_NAMES
        .iter()
        .map(|&name| {
            let vals: Vec<f64> = folds.iter().filter_map(|f| f.metrics.get(name)).collect();
            let k = vals.len();
            let mean = (k > 0).then(|| vals.iter().sum::<f64>() / k as f64);
            let sd = mean.filter(|_| k > 1).map(|m| {
                (vals.iter().map(|v| (v - m).powi(2)).sum::<f64>() / (k - 1) as f64).sqrt()
            });
            MetricSummary {
                metric: name.to_string(),
                mean,
                sd,
                n_defined: k,
                n_undefined: folds.len() - k,
            }
        })
        .collect()
}

/// Stratified k-fold cross-validation. Folds are fitted in parallel; results
/// are collected in fold order and do not depend on scheduling.
pub fn kfold_cv<T: Scalar>(
    data: &LabeledDataset<T>,
    k: usize,
    seed: u64,
    trainer: &Trainer,
    threshold: T,
) -> Result<CvResult, EvalError> {
    let assignment = stratified_folds(data.labels(), k, seed)?;
    let folds: Vec<FoldResult> = (0..k)
        .into_par_iter()
        .map(|fold| {
            let train_idx: Vec<usize> = (0..data.n_rows()).filter(|&i| assignment[i] != fold).collect();
            let test_idx: Vec<usize> = (0..data.n_rows()).filter(|&i| assignment[i] == fold).collect();
            let train = data.subset(&train_idx);
            if !train.has_both_classes() {
                return Err(EvalError::EmptyClassInFold { fold });
            }
            let test = data.subset(&test_idx);
            let model_seed = fold_seed(seed, fold);
            let model = trainer.with_seed(model_seed).fit(&train)?;
            let scores = score_dataset(&model, &test)?;
            let metrics = evaluate(&scores, test.labels(), threshold)?;
            Ok(FoldResult {
                fold,
                n_train: train.n_rows(),
                n_test: test.n_rows(),
                model_seed,
                metrics,
            })
        })
        .collect::<Result<_, _>>()?;
    Ok(CvResult {
        k,
        seed,
        summary: summarize(&folds),
        folds,
    })
}
