use rand::seq::SliceRandom;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

use super::EvalError;
use mbid_features::LabeledDataset;
use mbid_core::scalar::Scalar;

pub const MIN_SPLIT_ROWS: usize = 8;

/// Rounds to nearest, halves away from zero.
pub fn round_half_away(x: f64) -> usize {
    x.round() as usize
}

fn class_indices(labels: &[bool], rng: &mut ChaCha8Rng) -> (Vec<usize>, Vec<usize>) {
    let mut pos: Vec<usize> = (0..labels.len()).filter(|&i| labels[i]).collect();
    let mut neg: Vec<usize> = (0..labels.len()).filter(|&i| !labels[i]).collect();
    pos.shuffle(rng);
    neg.shuffle(rng);
    (pos, neg)
}

/// Stratified split. `|train| = round(ratio * n)`; the positive share of
/// train is `round(ratio * n_pos)`, negatives fill the rest. Both index
/// lists are ascending.
pub fn stratified_split_indices(
    labels: &[bool],
    ratio: f64,
    seed: u64,
) -> Result<(Vec<usize>, Vec<usize>), EvalError> {
    if !(ratio > 0.0 && ratio < 1.0) {
        return Err(EvalError::InvalidRatio(ratio));
    }
    let n = labels.len();
    if n < MIN_SPLIT_ROWS {
        return Err(EvalError::TooSmall {
            n,
            min: MIN_SPLIT_ROWS,
        });
    }
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let (pos, neg) = class_indices(labels, &mut rng);
    if pos.is_empty() || neg.is_empty() {
        return Err(EvalError::OneClassOnly);
    }
    let n_train = round_half_away(ratio * n as f64);
    let pos_train = round_half_away(ratio * pos.len() as f64)
        .min(n_train)
        .max(n_train.saturating_sub(neg.len()));
    let neg_train = n_train - pos_train;
    let mut train: Vec<usize> = pos[..pos_train].iter().chain(&neg[..neg_train]).copied().collect();
    let mut validate: Vec<usize> = pos[pos_train..].iter().chain(&neg[neg_train..]).copied().collect();
    train.sort_unstable();
    validate.sort_unstable();
    Ok((train, validate))
}

pub fn split_train_validate<T: Scalar>(
    data: &LabeledDataset<T>,
    ratio: f64,
    seed: u64,
) -> Result<(LabeledDataset<T>, LabeledDataset<T>), EvalError> {
    let (train, validate) = stratified_split_indices(data.labels(), ratio, seed)?;
    Ok((data.subset(&train), data.subset(&validate)))
}

/// Fold index per row. Each class is shuffled, the classes are concatenated
/// and position `i` goes to fold `i mod k`, so fold sizes differ by at most
/// one and each class is spread evenly.
pub fn stratified_folds(labels: &[bool], k: usize, seed: u64) -> Result<Vec<usize>, EvalError> {
    let n = labels.len();
    if k < 2 || n < k {
        return Err(EvalError::TooFewRows { n, k });
    }
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let (pos, neg) = class_indices(labels, &mut rng);
    let mut folds = vec![0; n];
    for (position, &row) in pos.iter().chain(&neg).enumerate() {
        folds[row] = position % k;
    }
    Ok(folds)
}
