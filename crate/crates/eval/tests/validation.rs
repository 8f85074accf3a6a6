use mbid_eval::{kfold_cv, roc, split_train_validate, stratified_folds, stratified_split_indices};
use mbid_features::LabeledDataset;
use mbid_models::{LogisticConfig, Trainer};
use proptest::prelude::*;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

/// 714 rows, 312 of them positive, one informative column.
fn training_shaped(seed: u64) -> LabeledDataset<f64> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let labels: Vec<bool> = (0..714).map(|i| i < 312).collect();
    let rows: Vec<Vec<f64>> = labels
        .iter()
        .map(|&l| vec![f64::from(u8::from(l)) + rng.random_range(-0.9..0.9), rng.random_range(-1.0..1.0)])
        .collect();
    LabeledDataset::from_rows(&rows, labels).unwrap()
}

#[test]
fn split_matches_the_training_set_arithmetic() {
    let data = training_shaped(1);
    let (train, validate) = split_train_validate(&data, 0.75, 7).unwrap();
    assert_eq!((train.n_rows(), validate.n_rows()), (536, 178));
    assert_eq!((train.n_positive(), validate.n_positive()), (234, 78));
}

#[test]
fn cross_validation_uses_every_row_once() {
    let data = training_shaped(2);
    let cv = kfold_cv(&data, 10, 11, &Trainer::Logistic(LogisticConfig::default()), 0.5).unwrap();
    let mut sizes: Vec<usize> = cv.folds.iter().map(|f| f.n_test).collect();
    sizes.sort_unstable();
    assert_eq!(sizes, [71, 71, 71, 71, 71, 71, 72, 72, 72, 72]);
    assert!(cv.folds.iter().all(|f| f.n_train + f.n_test == 714));
    let acc = cv.mean("accuracy").unwrap();
    // Supports overlap on [0.1, 0.9]; the best cut at 0.5 errs on 0.4/1.8 of each class.
    let bayes = 7.0 / 9.0;
    assert!((acc - bayes).abs() < 0.04, "accuracy {acc:.4} vs Bayes {bayes:.4}");
    let again = kfold_cv(&data, 10, 11, &Trainer::Logistic(LogisticConfig::default()), 0.5).unwrap();
    assert_eq!(again, cv);
}

proptest! {
    #[test]
    fn roc_is_a_monotone_staircase(
        labels in prop::collection::vec(any::<bool>(), 2..120),
        seed in any::<u64>(),
    ) {
        prop_assume!(labels.iter().any(|&l| l) && labels.iter().any(|&l| !l));
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let scores: Vec<f64> = labels.iter().map(|_| f64::from(rng.random_range(0u8..8)) / 7.0).collect();
        let curve = roc(&scores, &labels).unwrap();
        let first = curve.points.first().unwrap();
        let last = curve.points.last().unwrap();
        prop_assert_eq!((first.fpr, first.tpr), (0.0, 0.0));
        prop_assert_eq!((last.fpr, last.tpr), (1.0, 1.0));
        for w in curve.points.windows(2) {
            prop_assert!(w[0].fpr <= w[1].fpr && w[0].tpr <= w[1].tpr);
            prop_assert!(w[0].cutoff > w[1].cutoff);
        }
        prop_assert!((0.0..=1.0).contains(&curve.auc));
    }

    #[test]
    fn split_and_folds_are_stratified(
        n_pos in 4usize..200,
        n_neg in 4usize..200,
        k in 2usize..8,
        seed in any::<u64>(),
    ) {
        let labels: Vec<bool> = (0..n_pos + n_neg).map(|i| i < n_pos).collect();
        let (train, validate) = stratified_split_indices(&labels, 0.75, seed).unwrap();
        prop_assert_eq!(train.len() + validate.len(), labels.len());
        let pos_train = train.iter().filter(|&&i| labels[i]).count();
        prop_assert!((pos_train as f64 - 0.75 * n_pos as f64).abs() <= 1.0);

        prop_assume!(n_pos >= k && n_neg >= k);
        let folds = stratified_folds(&labels, k, seed).unwrap();
        for class in [true, false] {
            let mut counts = vec![0usize; k];
            for (i, &f) in folds.iter().enumerate() {
                if labels[i] == class {
                    counts[f] += 1;
                }
            }
            let (lo, hi) = (counts.iter().min().unwrap(), counts.iter().max().unwrap());
            prop_assert!(hi - lo <= 1);
        }
    }
}
