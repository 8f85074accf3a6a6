use serde::{Deserialize, Serialize};

use super::EvalError;
use mbid_models::classify;
use mbid_core::scalar::Field;

#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct ConfusionMatrix {
    pub tp: u64,
    pub fp: u64,
    #[serde(rename = "fn")]
    pub fn_: u64,
    pub tn: u64,
}

impl ConfusionMatrix {
    pub fn total(&self) -> u64 {
        self.tp + self.fp + self.fn_ + self.tn
    }

    pub fn from_predictions(predicted: &[bool], labels: &[bool]) -> Self {
        let mut c = Self::default();
        for (&p, &y) in predicted.iter().zip(labels) {
            match (p, y) {
                (true, true) => c.tp += 1,
                (true, false) => c.fp += 1,
                (false, true) => c.fn_ += 1,
                (false, false) => c.tn += 1,
            }
        }
        c
    }
}

/// Metric names in report order.
pub const METRIC_NAMES: [&str; 5] = ["accuracy", "precision", "true_positive_rate", "f1", "kappa"];

/// Metrics derived from a confusion matrix. A metric whose denominator is
/// zero is `None`, never 0.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct MetricsReport<F> {
    pub accuracy: Option<F>,
    pub precision: Option<F>,
    pub true_positive_rate: Option<F>,
    pub f1: Option<F>,
    pub kappa: Option<F>,
    pub confusion: ConfusionMatrix,
}

fn ratio<F: Field>(num: F, den: F) -> Option<F> {
    (den != F::zero()).then(|| num / den)
}

impl<F: Field> MetricsReport<F> {
    /// Computes every metric from the counts alone, so a report is always
    /// exactly reproducible from its confusion matrix.
    pub fn from_confusion(c: ConfusionMatrix) -> Self {
        let f = |v: u64| F::from_u64(v).expect("count representable");
        let (tp, fp, fn_, tn) = (f(c.tp), f(c.fp), f(c.fn_), f(c.tn));
        let n = tp + fp + fn_ + tn;
        let accuracy = ratio(tp + tn, n);
        let precision = ratio(tp, tp + fp);
        let true_positive_rate = ratio(tp, tp + fn_);
        let f1 = match (precision, true_positive_rate) {
            (Some(p), Some(r)) => ratio(f(2) * p * r, p + r),
            _ => None,
        };
        let kappa = accuracy.and_then(|p_o| {
            let p_e = ((tp + fp) * (tp + fn_) + (fn_ + tn) * (fp + tn)) / (n * n);
            ratio(p_o - p_e, F::one() - p_e)
        });
        Self {
            accuracy,
            precision,
            true_positive_rate,
            f1,
            kappa,
            confusion: c,
        }
    }

    pub fn get(&self, name: &str) -> Option<F> {
        match name {
            "accuracy" => self.accuracy,
            "precision" => self.precision,
            "true_positive_rate" => self.true_positive_rate,
            "f1" => self.f1,
            "kappa" => self.kappa,
            _ => None,
        }
    }

    pub fn values(&self) -> [(&'static str, Option<F>); 5] {
        METRIC_NAMES.map(|n| (n, self.get(n)))
    }
}

/// Confusion matrix of `score > threshold` against the labels.
pub fn confusion_at<S: PartialOrd + Copy>(
    scores: &[S],
    labels: &[bool],
    threshold: S,
) -> Result<ConfusionMatrix, EvalError> {
    if scores.len() != labels.len() {
        return Err(EvalError::LengthMismatch {
            scores: scores.len(),
            labels: labels.len(),
        });
    }
    if scores.is_empty() {
        return Err(EvalError::EmptyInput);
    }
    let predicted: Vec<bool> = scores.iter().map(|&s| classify(s, threshold)).collect();
    Ok(ConfusionMatrix::from_predictions(&predicted, labels))
}

/// Metrics at `threshold` in the requested field, e.g. `f64` or an exact
/// rational type.
pub fn evaluate<S: PartialOrd + Copy, F: Field>(
    scores: &[S],
    labels: &[bool],
    threshold: S,
) -> Result<MetricsReport<F>, EvalError> {
    confusion_at(scores, labels, threshold).map(MetricsReport::from_confusion)
}
