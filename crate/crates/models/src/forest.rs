use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use super::tree::{grow_tree, DecisionTree, TreeParams};
use super::{check_training, ModelError, ScoreModel};
use mbid_features::LabeledDataset;
use mbid_core::scalar::Scalar;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(default)]
pub struct ForestConfig {
    pub n_trees: usize,
    /// Features tried per node; `None` means `ceil(sqrt(p))`.
    pub mtry: Option<usize>,
    pub min_leaf: usize,
    pub max_depth: Option<usize>,
    pub seed: u64,
}

impl Default for ForestConfig {
    fn default() -> Self {
        Self {
            n_trees: 500,
            mtry: None,
            min_leaf: 1,
            max_depth: None,
            seed: 0,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(bound = "T: Scalar")]
pub struct ForestModel<T> {
    pub trees: Vec<DecisionTree<T>>,
    pub n_trees: usize,
    pub mtry: usize,
    pub min_leaf: usize,
    pub max_depth: Option<usize>,
    pub seed: u64,
    pub n_features: usize,
    /// Out-of-bag misclassification rate over rows left out by at least one
    /// tree; `None` if no row was ever out of bag.
    pub oob_error: Option<f64>,
}

/// RNG for tree `index`: one ChaCha stream per tree, so trees can be grown
/// in any order or in parallel.
pub(crate) fn tree_rng(seed: u64, index: u64) -> ChaCha8Rng {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    rng.set_stream(index);
    rng
}

pub fn default_mtry(p: usize) -> usize {
    ((p as f64).sqrt().ceil() as usize).clamp(1, p.max(1))
}

/// Bagged CART trees. Output is bit-identical for any rayon pool size.
pub fn fit_forest<T: Scalar>(
    data: &LabeledDataset<T>,
    config: &ForestConfig,
) -> Result<ForestModel<T>, ModelError> {
    check_training(data)?;
    if config.n_trees == 0 || config.min_leaf == 0 {
        return Err(ModelError::InvalidConfig(
            "n_trees and min_leaf must be positive".into(),
        ));
    }
    let n = data.n_rows();
    let p = data.n_cols();
    let mtry = config.mtry.unwrap_or_else(|| default_mtry(p)).clamp(1, p.max(1));
    let params = TreeParams {
        mtry,
        min_leaf: config.min_leaf,
        max_depth: config.max_depth,
    };

    let grown: Vec<(DecisionTree<T>, Vec<bool>)> = (0..config.n_trees)
        .into_par_iter()
        .map(|t| {
            let mut rng = tree_rng(config.seed, t as u64);
            let mut in_bag = vec![false; n];
            let rows: Vec<usize> = (0..n)
                .map(|_| {
                    let i = rng.random_range(0..n);
                    in_bag[i] = true;
                    i
                })
                .collect();
            (grow_tree(data, rows, params, &mut rng), in_bag)
        })
        .collect();

    let mut oob_votes = vec![[0u32; 2]; n];
    for (tree, in_bag) in &grown {
        for i in (0..n).filter(|&i| !in_bag[i]) {
            oob_votes[i][usize::from(tree.vote(data.row(i)))] += 1;
        }
    }
    let mut scored = 0usize;
    let mut wrong = 0usize;
    for (votes, &label) in oob_votes.iter().zip(data.labels()) {
        let total = votes[0] + votes[1];
        if total == 0 {
            continue;
        }
        scored += 1;
        let predicted = 2 * votes[1] > total;
        if predicted != label {
            wrong += 1;
        }
    }

    Ok(ForestModel {
        trees: grown.into_iter().map(|(t, _)| t).collect(),
        n_trees: config.n_trees,
        mtry,
        min_leaf: config.min_leaf,
        max_depth: config.max_depth,
        seed: config.seed,
        n_features: p,
        oob_error: (scored > 0).then(|| wrong as f64 / scored as f64),
    })
}

impl<T: Scalar> ForestModel<T> {
    pub fn positive_votes(&self, x: &[T]) -> usize {
        self.trees.iter().filter(|t| t.vote(x)).count()
    }
}

impl<T: Scalar> ScoreModel<T> for ForestModel<T> {
    fn n_features(&self) -> usize {
        self.n_features
    }

    /// Share of trees voting positive.
    fn score_row(&self, x: &[T]) -> T {
        T::from_count(self.positive_votes(x)) / T::from_count(self.trees.len())
    }
}

pub fn predict_forest<T: Scalar>(model: &ForestModel<T>, x: &[T]) -> Result<T, ModelError> {
    model.score(x)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::tree::Node;
    use crate::{classify, DEFAULT_THRESHOLD};
    use rand::seq::SliceRandom;

    fn noisy(n: usize, seed: u64) -> LabeledDataset<f64> {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let rows: Vec<Vec<f64>> = (0..n)
            .map(|_| (0..4).map(|_| rng.random_range(0.0..1.0)).collect())
            .collect();
        let labels = rows
            .iter()
            .map(|r| r[0] + 0.3 * rng.random_range(-1.0..1.0) > 0.5)
            .collect();
        LabeledDataset::from_rows(&rows, labels).unwrap()
    }

    #[test]
    fn separable_feature_low_oob() {
        let rows: Vec<Vec<f64>> = (0..200).map(|i| vec![i as f64, ((i * 31) % 17) as f64]).collect();
        let labels: Vec<bool> = (0..200).map(|i| i >= 90).collect();
        let data = LabeledDataset::from_rows(&rows, labels).unwrap();
        let cfg = ForestConfig {
            n_trees: 100,
            seed: 5,
            ..Default::default()
        };
        let f = fit_forest(&data, &cfg).unwrap();
        assert!(f.oob_error.unwrap() < 0.05, "{:?}", f.oob_error);
    }

    #[test]
    fn permuted_labels_oob_near_half() {
        let data = noisy(400, 2);
        let mut labels = data.labels().to_vec();
        labels.shuffle(&mut ChaCha8Rng::seed_from_u64(77));
        let labels: Vec<bool> = (0..400).map(|i| labels[i] ^ (i % 2 == 0)).collect();
        let shuffled = data.with_labels(labels);
        let cfg = ForestConfig {
            n_trees: 200,
            seed: 1,
            ..Default::default()
        };
        let oob = fit_forest(&shuffled, &cfg).unwrap().oob_error.unwrap();
        assert!((oob - 0.5).abs() <= 0.1, "{oob}");
    }

    #[test]
    fn single_tree_is_reproducible() {
        let data = noisy(150, 3);
        let cfg = ForestConfig {
            n_trees: 1,
            seed: 42,
            ..Default::default()
        };
        assert_eq!(fit_forest(&data, &cfg).unwrap(), fit_forest(&data, &cfg).unwrap());
    }

    #[test]
    fn thread_count_does_not_change_model() {
        let data = noisy(150, 8);
        let cfg = ForestConfig {
            n_trees: 40,
            seed: 9,
            ..Default::default()
        };
        let pool = |k| rayon::ThreadPoolBuilder::new().num_threads(k).build().unwrap();
        let a = pool(1).install(|| fit_forest(&data, &cfg).unwrap());
        let b = pool(4).install(|| fit_forest(&data, &cfg).unwrap());
        assert_eq!(a, b);
    }

    #[test]
    fn vote_fraction_and_tie_rule() {
        let leaf = |pos: bool| DecisionTree {
            nodes: vec![Node::Leaf {
                counts: if pos { [0, 3] } else { [3, 0] },
            }],
        };
        let mut f = ForestModel::<f64> {
            trees: vec![leaf(true), leaf(false)],
            n_trees: 2,
            mtry: 1,
            min_leaf: 1,
            max_depth: None,
            seed: 0,
            n_features: 1,
            oob_error: None,
        };
        let s = f.score_row(&[0.0]);
        assert_eq!(s, 0.5);
        assert!(!classify(s, DEFAULT_THRESHOLD));
        f.trees = vec![leaf(true), leaf(true)];
        assert_eq!(f.score_row(&[0.0]), 1.0);
    }

    #[test]
    fn vote_fraction_matches_manual_walk() {
        let data = noisy(120, 11);
        let cfg = ForestConfig {
            n_trees: 25,
            seed: 3,
            ..Default::default()
        };
        let f = fit_forest(&data, &cfg).unwrap();
        let mut rng = ChaCha8Rng::seed_from_u64(0);
        for _ in 0..20 {
            let x: Vec<f64> = (0..4).map(|_| rng.random_range(0.0..1.0)).collect();
            let mut pos = 0;
            for t in &f.trees {
                let mut i = 0;
                let counts = loop {
                    match &t.nodes[i] {
                        Node::Split { feature, threshold, left, right } => {
                            i = if x[*feature] <= *threshold { *left } else { *right }
                        }
                        Node::Leaf { counts } => break *counts,
                    }
                };
                if counts[1] > counts[0] {
                    pos += 1;
                }
            }
            assert_eq!(f.score_row(&x), pos as f64 / 25.0);
        }
    }

    #[test]
    fn monotone_transform_keeps_structure() {
        let data = noisy(200, 21);
        let cfg = ForestConfig {
            n_trees: 20,
            seed: 6,
            ..Default::default()
        };
        let a = fit_forest(&data, &cfg).unwrap();
        let transformed = data.map_column(1, |v| (3.0 * v).exp());
        let b = fit_forest(&transformed, &cfg).unwrap();
        for (ta, tb) in a.trees.iter().zip(&b.trees) {
            assert_eq!(ta.split_features(), tb.split_features());
            assert_eq!(ta.nodes.len(), tb.nodes.len());
            for (na, nb) in ta.nodes.iter().zip(&tb.nodes) {
                if let (
                    Node::Split { feature: 1, threshold: a, .. },
                    Node::Split { threshold: b, .. },
                ) = (na, nb)
                {
                    assert_eq!((3.0 * a).exp(), *b);
                }
            }
        }
        for i in 0..data.n_rows() {
            assert_eq!(a.score_row(data.row(i)), b.score_row(transformed.row(i)));
        }
    }
}
