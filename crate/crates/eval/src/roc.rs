use serde::{Deserialize, Serialize};

use super::EvalError;
use mbid_core::scalar::Scalar;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct RocPoint {
    pub fpr: f64,
    pub tpr: f64,
    /// Rows with `score >= cutoff` are called positive at this point. The
    /// first point uses `+inf`.
    pub cutoff: f64,
}

/// Empirical ROC staircase from (0,0) to (1,1), one vertex per distinct
/// score.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RocCurve {
    pub points: Vec<RocPoint>,
    /// Trapezoidal area under `points`.
    pub auc: f64,
}

pub fn roc<T: Scalar>(scores: &[T], labels: &[bool]) -> Result<RocCurve, EvalError> {
    if scores.len() != labels.len() {
        return Err(EvalError::LengthMismatch {
            scores: scores.len(),
            labels: labels.len(),
        });
    }
    let n_pos = labels.iter().filter(|&&l| l).count() as u64;
    let n_neg = labels.len() as u64 - n_pos;
    if n_pos == 0 || n_neg == 0 {
        return Err(EvalError::OneClassOnly);
    }
    let mut order: Vec<usize> = (0..scores.len()).collect();
    order.sort_by(|&a, &b| scores[b].partial_cmp(&scores[a]).expect("finite scores"));

    let (pos, neg) = (n_pos as f64, n_neg as f64);
    let mut points = vec![RocPoint {
        fpr: 0.0,
        tpr: 0.0,
        cutoff: f64::INFINITY,
    }];
    // Twice the area in units of one positive-negative pair.
    let mut area2: u64 = 0;
    let (mut tp, mut fp) = (0u64, 0u64);
    let mut k = 0;
    while k < order.len() {
        let s = scores[order[k]];
        let (tp0, fp0) = (tp, fp);
        while k < order.len() && scores[order[k]] == s {
            if labels[order[k]] {
                tp += 1;
            } else {
                fp += 1;
            }
            k += 1;
        }
        area2 += (fp - fp0) * (tp + tp0);
        points.push(RocPoint {
            fpr: fp as f64 / neg,
            tpr: tp as f64 / pos,
            cutoff: s.to_f64().unwrap_or(f64::NAN),
        });
    }
    Ok(RocCurve {
        points,
        auc: area2 as f64 / (2.0 * pos * neg),
    })
}

/// Share of positive-negative pairs ranked correctly, ties counted one half.
/// Quadratic; meant as a reference.
pub fn mann_whitney_auc<T: Scalar>(scores: &[T], labels: &[bool]) -> Option<f64> {
    let (mut wins2, mut pairs) = (0u64, 0u64);
    for (i, &li) in labels.iter().enumerate() {
        if !li {
            continue;
        }
        for (j, &lj) in labels.iter().enumerate() {
            if lj {
                continue;
            }
            pairs += 1;
            if scores[i] > scores[j] {
                wins2 += 2;
            } else if scores[i] == scores[j] {
                wins2 += 1;
            }
        }
    }
    (pairs > 0).then(|| wins2 as f64 / (2.0 * pairs as f64))
}
