//! CART classification trees with Gini impurity.

use rand::seq::index;
use rand::Rng;
use serde::{Deserialize, Serialize};

use mbid_features::LabeledDataset;
use mbid_core::scalar::Scalar;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(bound = "T: Scalar", rename_all = "snake_case")]
pub enum Node<T> {
    /// Rows with `x[feature] <= threshold` go to `left`. The threshold is the
    /// largest training value sent left, so a strictly increasing transform
    /// of a feature maps thresholds exactly and leaves every routing intact.
    Split {
        feature: usize,
        threshold: T,
        left: usize,
        right: usize,
    },
    /// Training rows reaching the leaf: `[negative, positive]`.
    Leaf { counts: [u32; 2] },
}

/// Nodes in preorder; the root is `nodes[0]`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(bound = "T: Scalar")]
pub struct DecisionTree<T> {
    pub nodes: Vec<Node<T>>,
}

impl<T: Scalar> DecisionTree<T> {
    pub fn leaf_counts(&self, x: &[T]) -> [u32; 2] {
        let mut i = 0;
        loop {
            match &self.nodes[i] {
                Node::Split {
                    feature,
                    threshold,
                    left,
                    right,
                } => i = if x[*feature] <= *threshold { *left } else { *right },
                Node::Leaf { counts } => return *counts,
            }
        }
    }

    /// Majority class of the leaf; a tied leaf votes negative.
    pub fn vote(&self, x: &[T]) -> bool {
        let [neg, pos] = self.leaf_counts(x);
        pos > neg
    }

    pub fn depth(&self) -> usize {
        fn walk<T>(nodes: &[Node<T>], i: usize) -> usize {
            match &nodes[i] {
                Node::Split { left, right, .. } => 1 + walk(nodes, *left).max(walk(nodes, *right)),
                Node::Leaf { .. } => 0,
            }
        }
        walk(&self.nodes, 0)
    }

    pub fn n_leaves(&self) -> usize {
        self.nodes.iter().filter(|n| matches!(n, Node::Leaf { .. })).count()
    }

    /// Split features in preorder.
    pub fn split_features(&self) -> Vec<usize> {
        self.nodes
            .iter()
            .filter_map(|n| match n {
                Node::Split { feature, .. } => Some(*feature),
                Node::Leaf { .. } => None,
            })
            .collect()
    }
}

#[derive(Debug, Clone, Copy)]
pub(crate) struct TreeParams {
    pub mtry: usize,
    pub min_leaf: usize,
    pub max_depth: Option<usize>,
}

struct Builder<'a, T, R> {
    data: &'a LabeledDataset<T>,
    params: TreeParams,
    rng: &'a mut R,
    nodes: Vec<Node<T>>,
    scratch: Vec<(T, bool)>,
}

fn counts_of<T: Scalar>(data: &LabeledDataset<T>, rows: &[usize]) -> [u32; 2] {
    let mut c = [0u32; 2];
    for &i in rows {
        c[usize::from(data.labels()[i])] += 1;
    }
    c
}

/// Sum over children of `(n0^2 + n1^2) / n`; larger means purer.
#[inline]
fn purity(c: [u32; 2]) -> f64 {
    let n = f64::from(c[0] + c[1]);
    (f64::from(c[0]).powi(2) + f64::from(c[1]).powi(2)) / n
}

impl<T: Scalar, R: Rng> Builder<'_, T, R> {
    fn grow(&mut self, rows: Vec<usize>, depth: usize) -> usize {
        let counts = counts_of(self.data, &rows);
        let id = self.nodes.len();
        self.nodes.push(Node::Leaf { counts });
        let pure = counts[0] == 0 || counts[1] == 0;
        let depth_capped = self.params.max_depth.is_some_and(|d| depth >= d);
        if pure || depth_capped || rows.len() < 2 * self.params.min_leaf {
            return id;
        }
        let Some((feature, threshold)) = self.best_split(&rows, counts) else {
            return id;
        };
        let (l, r): (Vec<usize>, Vec<usize>) = rows
            .into_iter()
            .partition(|&i| self.data.get(i, feature) <= threshold);
        let left = self.grow(l, depth + 1);
        let right = self.grow(r, depth + 1);
        self.nodes[id] = Node::Split {
            feature,
            threshold,
            left,
            right,
        };
        id
    }

    fn best_split(&mut self, rows: &[usize], counts: [u32; 2]) -> Option<(usize, T)> {
        let p = self.data.n_cols();
        let features = index::sample(self.rng, p, self.params.mtry.min(p));
        let parent = purity(counts);
        let min_leaf = self.params.min_leaf;
        let n = rows.len();
        let mut best: Option<(f64, usize, T)> = None;
        for f in features.iter() {
            self.scratch.clear();
            self.scratch
                .extend(rows.iter().map(|&i| (self.data.get(i, f), self.data.labels()[i])));
            self.scratch
                .sort_by(|a, b| a.0.partial_cmp(&b.0).expect("finite features"));
            let mut left = [0u32; 2];
            for k in 0..n - 1 {
                left[usize::from(self.scratch[k].1)] += 1;
                let (lo, hi) = (self.scratch[k].0, self.scratch[k + 1].0);
                if !(lo < hi) || k + 1 < min_leaf || n - k - 1 < min_leaf {
                    continue;
                }
                let right = [counts[0] - left[0], counts[1] - left[1]];
                let crit = purity(left) + purity(right);
                if crit <= parent * (1.0 + 1e-12) {
                    continue;
                }
                if best.as_ref().is_none_or(|(b, _, _)| crit > *b) {
                    best = Some((crit, f, lo));
                }
            }
        }
        best.map(|(_, f, t)| (f, t))
    }
}

/// Grows one unpruned tree on `rows` (duplicates allowed, as in a bootstrap
/// sample). Consumes randomness only for the per-node feature draws.
pub(crate) fn grow_tree<T: Scalar, R: Rng>(
    data: &LabeledDataset<T>,
    rows: Vec<usize>,
    params: TreeParams,
    rng: &mut R,
) -> DecisionTree<T> {
    let mut b = Builder {
        data,
        params,
        rng,
        nodes: Vec::new(),
        scratch: Vec::with_capacity(rows.len()),
    };
    b.grow(rows, 0);
    DecisionTree { nodes: b.nodes }
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;

    fn params(mtry: usize) -> TreeParams {
        TreeParams {
            mtry,
            min_leaf: 1,
            max_depth: None,
        }
    }

    #[test]
    fn separable_single_split() {
        let rows: Vec<Vec<f64>> = (0..10).map(|i| vec![i as f64]).collect();
        let labels: Vec<bool> = (0..10).map(|i| i >= 4).collect();
        let data = LabeledDataset::from_rows(&rows, labels).unwrap();
        let mut rng = ChaCha8Rng::seed_from_u64(0);
        let t = grow_tree(&data, (0..10).collect(), params(1), &mut rng);
        assert_eq!(t.nodes.len(), 3);
        match t.nodes[0] {
            Node::Split { feature, threshold, .. } => {
                assert_eq!(feature, 0);
                assert_eq!(threshold, 3.0);
            }
            _ => panic!("root should split"),
        }
        assert!(t.vote(&[3.0 + 1e-9]) && !t.vote(&[3.0]));
    }

    #[test]
    fn leaves_respect_min_leaf() {
        let rows: Vec<Vec<f64>> = (0..40).map(|i| vec![(i * 37 % 40) as f64, (i % 3) as f64]).collect();
        let labels: Vec<bool> = (0..40).map(|i| (i * 7) % 5 < 2).collect();
        let data = LabeledDataset::from_rows(&rows, labels).unwrap();
        let mut rng = ChaCha8Rng::seed_from_u64(4);
        let p = TreeParams {
            mtry: 2,
            min_leaf: 3,
            max_depth: None,
        };
        let t = grow_tree(&data, (0..40).collect(), p, &mut rng);
        for n in &t.nodes {
            if let Node::Leaf { counts } = n {
                assert!(counts[0] + counts[1] >= 3);
            }
        }
    }

    #[test]
    fn tied_leaf_votes_negative() {
        let t = DecisionTree::<f64> {
            nodes: vec![Node::Leaf { counts: [2, 2] }],
        };
        assert!(!t.vote(&[0.0]));
    }

    #[test]
    fn depth_cap() {
        let rows: Vec<Vec<f64>> = (0..16).map(|i| vec![i as f64]).collect();
        let labels: Vec<bool> = (0..16).map(|i| i % 2 == 0).collect();
        let data = LabeledDataset::from_rows(&rows, labels).unwrap();
        let mut rng = ChaCha8Rng::seed_from_u64(0);
        let p = TreeParams {
            mtry: 1,
            min_leaf: 1,
            max_depth: Some(2),
        };
        assert!(grow_tree(&data, (0..16).collect(), p, &mut rng).depth() <= 2);
    }
}
