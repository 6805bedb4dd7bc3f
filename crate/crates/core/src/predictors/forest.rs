use rand::seq::index::sample;
use rand::Rng as _;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use super::{two_class_labels, Classifier, GridScore, TrainingGrid};
use crate::data::{split_train_validation, LabeledDataset, Target};
use crate::error::Result;
use crate::seed;

/// Axis-aligned decision tree; `x[feature] <= threshold` goes left.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "node", rename_all = "snake_case")]
pub enum TreeNode {
    Leaf {
        label: i8,
    },
    Split {
        feature: usize,
        threshold: f64,
        left: Box<TreeNode>,
        right: Box<TreeNode>,
    },
}

impl TreeNode {
    pub fn decide(&self, x: &[f64]) -> i8 {
        let mut node = self;
        loop {
            match node {
                TreeNode::Leaf { label } => return *label,
                TreeNode::Split {
                    feature,
                    threshold,
                    left,
                    right,
                } => {
                    node = if x[*feature] <= *threshold {
                        left
                    } else {
                        right
                    }
                }
            }
        }
    }

    pub fn depth(&self) -> usize {
        match self {
            TreeNode::Leaf { .. } => 0,
            TreeNode::Split { left, right, .. } => 1 + left.depth().max(right.depth()),
        }
    }

    /// Visits every node, depth first.
    pub fn walk<'a>(&'a self, visit: &mut impl FnMut(&'a TreeNode)) {
        visit(self);
        if let TreeNode::Split { left, right, .. } = self {
            left.walk(visit);
            right.walk(visit);
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ForestModel {
    pub trees: Vec<TreeNode>,
    pub tree_count: usize,
    /// `None` is unlimited depth.
    pub max_depth: Option<usize>,
    pub dim: usize,
    pub seed: u64,
    #[serde(default)]
    pub validation: Vec<GridScore>,
}

impl ForestModel {
    /// `(votes for +1, votes for -1)`.
    pub fn votes(&self, x: &[f64]) -> (usize, usize) {
        self.trees.iter().fold((0, 0), |(p, n), t| {
            if t.decide(x) > 0 {
                (p + 1, n)
            } else {
                (p, n + 1)
            }
        })
    }
}

impl Classifier for ForestModel {
    fn dim(&self) -> usize {
        self.dim
    }

    /// Majority vote; ties go to +1.
    fn decide(&self, x: &[f64]) -> i8 {
        let (p, n) = self.votes(x);
        if p >= n {
            1
        } else {
            -1
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ForestParams {
    pub tree_count: usize,
    pub max_depth: Option<usize>,
    pub min_leaf: usize,
}

fn majority(labels: &[i8], idx: &[usize]) -> i8 {
    let pos = idx.iter().filter(|&&i| labels[i] > 0).count();
    if 2 * pos >= idx.len() {
        1
    } else {
        -1
    }
}

struct TreeBuilder<'a> {
    rows: &'a [&'a [f64]],
    labels: &'a [i8],
    params: ForestParams,
    features_per_split: usize,
}

impl TreeBuilder<'_> {
    fn build(&self, idx: &mut [usize], depth: usize, rng: &mut seed::Rng) -> TreeNode {
        let pos = idx.iter().filter(|&&i| self.labels[i] > 0).count();
        let pure = pos == 0 || pos == idx.len();
        let depth_done = self.params.max_depth.is_some_and(|m| depth >= m);
        if pure || depth_done || idx.len() < 2 * self.params.min_leaf {
            return TreeNode::Leaf {
                label: majority(self.labels, idx),
            };
        }
        let d = self.rows[0].len();
        let candidates = sample(rng, d, self.features_per_split.min(d));
        let mut best: Option<(f64, usize, f64)> = None;
        let mut column: Vec<(f64, i8)> = Vec::with_capacity(idx.len());
        for feature in candidates.iter() {
            column.clear();
            column.extend(idx.iter().map(|&i| (self.rows[i][feature], self.labels[i])));
            column.sort_by(|a, b| a.0.total_cmp(&b.0));
            if let Some((score, threshold)) = best_threshold(&column, pos, self.params.min_leaf) {
                if best.is_none_or(|(s, _, _)| score > s) {
                    best = Some((score, feature, threshold));
                }
            }
        }
        let Some((_, feature, threshold)) = best else {
            return TreeNode::Leaf {
                label: majority(self.labels, idx),
            };
        };
        let split = partition(idx, |i| self.rows[i][feature] <= threshold);
        let (left, right) = idx.split_at_mut(split);
        TreeNode::Split {
            feature,
            threshold,
            left: Box::new(self.build(left, depth + 1, rng)),
            right: Box::new(self.build(right, depth + 1, rng)),
        }
    }
}

/// Best Gini split of a sorted column as `(score, threshold)`, where a
/// larger score is a purer split (`sum over sides of (p^2 + q^2) / n`).
fn best_threshold(column: &[(f64, i8)], total_pos: usize, min_leaf: usize) -> Option<(f64, f64)> {
    let n = column.len();
    let total_pos = total_pos as f64;
    let total_neg = n as f64 - total_pos;
    let mut left_pos = 0.0;
    let mut best: Option<(f64, f64)> = None;
    for i in 0..n - 1 {
        if column[i].1 > 0 {
            left_pos += 1.0;
        }
        let n_left = i + 1;
        if n_left < min_leaf || n - n_left < min_leaf || column[i].0 == column[i + 1].0 {
            continue;
        }
        let nl = n_left as f64;
        let nr = (n - n_left) as f64;
        let left_neg = nl - left_pos;
        let right_pos = total_pos - left_pos;
        let right_neg = total_neg - left_neg;
        let score = (left_pos * left_pos + left_neg * left_neg) / nl
            + (right_pos * right_pos + right_neg * right_neg) / nr;
        if best.is_none_or(|(s, _)| score > s) {
            let mut threshold = 0.5 * (column[i].0 + column[i + 1].0);
            // midpoint can round up to the right value for adjacent floats
            if threshold >= column[i + 1].0 {
                threshold = column[i].0;
            }
            best = Some((score, threshold));
        }
    }
    best
}

/// In-place stable-enough partition; returns the count satisfying `pred`.
fn partition(idx: &mut [usize], pred: impl Fn(usize) -> bool) -> usize {
    let mut store = 0;
    for k in 0..idx.len() {
        if pred(idx[k]) {
            idx.swap(store, k);
            store += 1;
        }
    }
    store
}

/// Bagged trees with `floor(sqrt(d))` candidate features per split. Tree
/// `k` draws its bootstrap and feature subsets from stream `k` of `seed`.
pub fn fit_forest(rows: &[&[f64]], labels: &[i8], params: ForestParams, seed: u64) -> ForestModel {
    let d = rows.first().map_or(0, |r| r.len());
    let builder = TreeBuilder {
        rows,
        labels,
        params,
        features_per_split: ((d as f64).sqrt().floor() as usize).max(1),
    };
    let trees = (0..params.tree_count)
        .into_par_iter()
        .map(|k| {
            let mut rng = seed::stream(seed, k as u64);
            let n = rows.len();
            let mut idx: Vec<usize> = (0..n).map(|_| rng.random_range(0..n)).collect();
            builder.build(&mut idx, 0, &mut rng)
        })
        .collect();
    ForestModel {
        trees,
        tree_count: params.tree_count,
        max_depth: params.max_depth,
        dim: d,
        seed,
        validation: Vec::new(),
    }
}

const MIN_LEAF: usize = 2;

/// Grid search over tree counts and depths, then a refit on all of
/// `train`. Ties favor more trees, then shallower trees: equal validation
/// scores say nothing about variance, and a larger hard-vote ensemble has less.
pub fn train_random_forest(
    train: &LabeledDataset,
    target: Target,
    grid: &TrainingGrid,
) -> Result<ForestModel> {
    grid.validate()?;
    two_class_labels(train, target)?;
    let (fit_side, val_side) =
        split_train_validation(train, 1.0 - grid.validation_fraction, grid.seed)?;
    let fit_labels = two_class_labels(&fit_side, target)?;
    let fit_rows: Vec<&[f64]> = fit_side
        .records()
        .iter()
        .map(|r| r.features.as_slice())
        .collect();
    let base = seed::derive(grid.seed, seed::TAG_FOREST);

    let mut counts = grid.rf_tree_counts.clone();
    counts.sort_unstable_by(|a, b| b.cmp(a));
    counts.dedup();
    let mut depths = grid.rf_depths.clone();
    // shallow first, unlimited last
    depths.sort_by_key(|d| d.unwrap_or(usize::MAX));
    depths.dedup();

    let settings: Vec<ForestParams> = counts
        .iter()
        .flat_map(|&tree_count| {
            depths.iter().map(move |&max_depth| ForestParams {
                tree_count,
                max_depth,
                min_leaf: MIN_LEAF,
            })
        })
        .collect();

    let mut scores = Vec::with_capacity(settings.len());
    let mut best: Option<(ForestParams, f64)> = None;
    for (i, params) in settings.iter().enumerate() {
        let model = fit_forest(
            &fit_rows,
            &fit_labels,
            *params,
            seed::derive(base, i as u64),
        );
        let mut hits = 0usize;
        for r in val_side.records() {
            if model.decide(&r.features) == r.binary_label(target)? {
                hits += 1;
            }
        }
        let acc = hits as f64 / val_side.len() as f64;
        scores.push(GridScore {
            setting: format!(
                "trees={},depth={}",
                params.tree_count,
                params
                    .max_depth
                    .map_or("unlimited".to_string(), |d| d.to_string())
            ),
            validation_accuracy: acc,
        });
        if best.is_none_or(|(_, a)| acc > a) {
            best = Some((*params, acc));
        }
    }
    let (params, _) = best.expect("nonempty grid");
    let labels = two_class_labels(train, target)?;
    let rows: Vec<&[f64]> = train
        .records()
        .iter()
        .map(|r| r.features.as_slice())
        .collect();
    let mut model = fit_forest(&rows, &labels, params, seed::derive(base, u64::MAX));
    model.seed = grid.seed;
    model.validation = scores;
    Ok(model)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn leaf(label: i8) -> TreeNode {
        TreeNode::Leaf { label }
    }

    #[test]
    fn majority_vote_with_ties_to_positive() {
        let forest = |labels: &[i8]| ForestModel {
            trees: labels.iter().map(|&l| leaf(l)).collect(),
            tree_count: labels.len(),
            max_depth: None,
            dim: 1,
            seed: 0,
            validation: vec![],
        };
        assert_eq!(forest(&[1, 1, -1]).predict(&[0.0]).unwrap(), 1);
        assert_eq!(forest(&[-1, -1, 1]).predict(&[0.0]).unwrap(), -1);
        assert_eq!(forest(&[-1, 1]).predict(&[0.0]).unwrap(), 1);
    }

    #[test]
    fn tree_routes_on_threshold() {
        let t = TreeNode::Split {
            feature: 1,
            threshold: 0.5,
            left: Box::new(leaf(-1)),
            right: Box::new(leaf(1)),
        };
        assert_eq!(t.decide(&[9.0, 0.5]), -1);
        assert_eq!(t.decide(&[9.0, 0.6]), 1);
        assert_eq!(t.depth(), 1);
    }

    #[test]
    fn threshold_search_finds_clean_cut() {
        let col = [(0.0, -1), (1.0, -1), (2.0, 1), (3.0, 1)];
        let (score, thr) = best_threshold(&col, 2, 1).unwrap();
        assert_eq!(thr, 1.5);
        assert_eq!(score, 4.0);
        // min_leaf forbids the only pure cut of an unbalanced column
        let col = [(0.0, -1), (1.0, 1), (2.0, 1), (3.0, 1)];
        let (_, thr) = best_threshold(&col, 3, 2).unwrap();
        assert_eq!(thr, 1.5);
        assert!(best_threshold(&[(1.0, -1), (1.0, 1)], 1, 1).is_none());
    }

    #[test]
    fn depth_limit_and_leaf_labels_hold() {
        let rows_owned: Vec<Vec<f64>> = (0..64)
            .map(|i| vec![(i % 8) as f64, (i / 8) as f64, ((i * 7) % 5) as f64])
            .collect();
        let labels: Vec<i8> = (0..64)
            .map(|i| if (i * 13) % 3 == 0 { 1 } else { -1 })
            .collect();
        let rows: Vec<&[f64]> = rows_owned.iter().map(Vec::as_slice).collect();
        let params = ForestParams {
            tree_count: 5,
            max_depth: Some(3),
            min_leaf: 2,
        };
        let f = fit_forest(&rows, &labels, params, 4);
        for t in &f.trees {
            assert!(t.depth() <= 3);
            t.walk(&mut |n| match n {
                TreeNode::Leaf { label } => assert!(*label == 1 || *label == -1),
                TreeNode::Split { feature, .. } => assert!(*feature < 3),
            });
        }
        assert_eq!(f, fit_forest(&rows, &labels, params, 4));
    }
}
