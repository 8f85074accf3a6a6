//! Permutation importance as mean decrease in accuracy.

use rand::seq::SliceRandom;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use super::{classify, ScoreModel};
use mbid_features::LabeledDataset;
use mbid_core::scalar::Scalar;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ImportanceEntry {
    pub feature: String,
    pub columns: Vec<usize>,
    /// Baseline accuracy minus mean permuted accuracy; may be negative.
    pub mda: f64,
    /// Standard deviation of the decrease across repeats.
    pub sd: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ImportanceReport {
    pub baseline_accuracy: f64,
    pub n_repeats: usize,
    pub seed: u64,
    /// One entry per column group, in dataset order.
    pub entries: Vec<ImportanceEntry>,
    /// Entry indices by decreasing MDA; ties keep dataset order.
    pub ranking: Vec<usize>,
}

impl ImportanceReport {
    pub fn top(&self) -> Option<&ImportanceEntry> {
        self.ranking.first().map(|&i| &self.entries[i])
    }
}

fn accuracy<T: Scalar, M: ScoreModel<T> + ?Sized>(
    model: &M,
    data: &LabeledDataset<T>,
    threshold: T,
) -> f64 {
    let correct = (0..data.n_rows())
        .filter(|&i| classify(model.score_row(data.row(i)), threshold) == data.labels()[i])
        .count();
    correct as f64 / data.n_rows() as f64
}

/// Permutes each column group jointly (all dummies of a categorical move
/// together) and records the accuracy lost. The permutation for group `g`,
/// repeat `r` comes from its own RNG stream, so results do not depend on
/// scheduling.
pub fn permutation_importance<T: Scalar, M: ScoreModel<T> + ?Sized>(
    model: &M,
    data: &LabeledDataset<T>,
    threshold: T,
    seed: u64,
    n_repeats: usize,
) -> ImportanceReport {
    assert!(data.n_rows() > 0, "importance needs data");
    let baseline = accuracy(model, data, threshold);
    let n = data.n_rows();
    let entries: Vec<ImportanceEntry> = data
        .groups()
        .par_iter()
        .enumerate()
        .map(|(g, group)| {
            let drops: Vec<f64> = (0..n_repeats)
                .map(|r| {
                    let mut rng = ChaCha8Rng::seed_from_u64(seed);
                    rng.set_stream(((g as u64) << 32) | r as u64);
                    let mut perm: Vec<usize> = (0..n).collect();
                    perm.shuffle(&mut rng);
                    let permuted = data.with_rows_permuted(&group.columns, &perm);
                    baseline - accuracy(model, &permuted, threshold)
                })
                .collect();
            let k = drops.len().max(1) as f64;
            let mda = drops.iter().sum::<f64>() / k;
            let sd = if drops.len() > 1 {
                (drops.iter().map(|d| (d - mda).powi(2)).sum::<f64>() / (k - 1.0)).sqrt()
            } else {
                0.0
            };
            ImportanceEntry {
                feature: group.name.clone(),
                columns: group.columns.clone(),
                mda,
                sd,
            }
        })
        .collect();
    let mut ranking: Vec<usize> = (0..entries.len()).collect();
    ranking.sort_by(|&a, &b| entries[b].mda.total_cmp(&entries[a].mda).then(a.cmp(&b)));
    ImportanceReport {
        baseline_accuracy: baseline,
        n_repeats,
        seed,
        entries,
        ranking,
    }
}
