//! CART regression trees and the two tree ensembles built on them.

use rand::seq::index::sample;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use super::Regressor;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "node", rename_all = "snake_case")]
pub enum TreeNode {
    Leaf {
        value: f64,
    },
    /// Rows with `x[feature] <= threshold` go left.
    Split {
        feature: usize,
        threshold: f64,
        left: usize,
        right: usize,
    },
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RegressionTree {
    /// Node 0 is the root.
    pub nodes: Vec<TreeNode>,
}

impl Regressor for RegressionTree {
    fn predict_row(&self, row: &[f64]) -> f64 {
        let mut idx = 0;
        loop {
            match &self.nodes[idx] {
                TreeNode::Leaf { value } => return *value,
                TreeNode::Split {
                    feature,
                    threshold,
                    left,
                    right,
                } => idx = if row[*feature] <= *threshold { *left } else { *right },
            }
        }
    }
}

#[derive(Debug, Clone, Copy)]
pub(crate) struct TreeParams {
    pub max_depth: usize,
    pub min_samples_leaf: usize,
    /// Features considered per split; `None` means all.
    pub max_features: Option<usize>,
}

struct Builder<'a> {
    x: &'a [Vec<f64>],
    y: &'a [f64],
    params: TreeParams,
    nodes: Vec<TreeNode>,
}

struct BestSplit {
    feature: usize,
    threshold: f64,
    score: f64,
}

impl RegressionTree {
    /// Grows a tree on the rows listed in `indices` (repeats allowed).
    pub(crate) fn fit(
        x: &[Vec<f64>],
        y: &[f64],
        indices: Vec<usize>,
        params: TreeParams,
        rng: Option<&mut ChaCha8Rng>,
    ) -> Self {
        let mut builder = Builder {
            x,
            y,
            params,
            nodes: Vec::new(),
        };
        let mut rng = rng;
        builder.grow(indices, 0, &mut rng);
        RegressionTree { nodes: builder.nodes }
    }

    pub fn depth(&self) -> usize {
        fn walk(nodes: &[TreeNode], i: usize) -> usize {
            match &nodes[i] {
                TreeNode::Leaf { .. } => 0,
                TreeNode::Split { left, right, .. } => 1 + walk(nodes, *left).max(walk(nodes, *right)),
            }
        }
        walk(&self.nodes, 0)
    }
}

impl Builder<'_> {
    fn grow(&mut self, indices: Vec<usize>, depth: usize, rng: &mut Option<&mut ChaCha8Rng>) -> usize {
        let id = self.nodes.len();
        let mean = indices.iter().map(|&i| self.y[i]).sum::<f64>() / indices.len() as f64;
        self.nodes.push(TreeNode::Leaf { value: mean });

        if depth >= self.params.max_depth || indices.len() < 2 * self.params.min_samples_leaf {
            return id;
        }
        let Some(best) = self.best_split(&indices, rng) else {
            return id;
        };
        let (left_idx, right_idx): (Vec<usize>, Vec<usize>) = indices
            .into_iter()
            .partition(|&i| self.x[i][best.feature] <= best.threshold);
        let left = self.grow(left_idx, depth + 1, rng);
        let right = self.grow(right_idx, depth + 1, rng);
        self.nodes[id] = TreeNode::Split {
            feature: best.feature,
            threshold: best.threshold,
            left,
            right,
        };
        id
    }

    fn best_split(&self, indices: &[usize], rng: &mut Option<&mut ChaCha8Rng>) -> Option<BestSplit> {
        let p = self.x[indices[0]].len();
        let features: Vec<usize> = match (self.params.max_features, rng.as_deref_mut()) {
            (Some(k), Some(r)) if k < p => {
                let mut f = sample(r, p, k.max(1)).into_vec();
                f.sort_unstable();
                f
            }
            _ => (0..p).collect(),
        };

        let m = indices.len();
        let total: f64 = indices.iter().map(|&i| self.y[i]).sum();
        // Maximizing sum_L²/n_L + sum_R²/n_R minimizes the children's SSE.
        let parent = total * total / m as f64;
        let min_leaf = self.params.min_samples_leaf.max(1);
        let mut best: Option<BestSplit> = None;
        let mut pairs: Vec<(f64, f64)> = Vec::with_capacity(m);

        for &feature in &features {
            pairs.clear();
            pairs.extend(indices.iter().map(|&i| (self.x[i][feature], self.y[i])));
            pairs.sort_by(|a, b| a.0.total_cmp(&b.0));

            let mut left_sum = 0.0;
            for s in 1..m {
                left_sum += pairs[s - 1].1;
                if s < min_leaf || m - s < min_leaf {
                    continue;
                }
                let (lo, hi) = (pairs[s - 1].0, pairs[s].0);
                if lo >= hi {
                    continue;
                }
                let right_sum = total - left_sum;
                let score =
                    left_sum * left_sum / s as f64 + right_sum * right_sum / (m - s) as f64;
                if best.as_ref().is_none_or(|b| score > b.score) {
                    let mid = lo + (hi - lo) / 2.0;
                    best = Some(BestSplit {
                        feature,
                        threshold: if mid < hi { mid } else { lo },
                        score,
                    });
                }
            }
        }
        best.filter(|b| b.score - parent > 1e-12 * parent.abs().max(1.0))
    }
}

pub(crate) fn fit_forest(
    x: &[Vec<f64>],
    y: &[f64],
    n_trees: usize,
    params: TreeParams,
    seed: u64,
) -> Vec<RegressionTree> {
    let n = y.len();
    (0..n_trees)
        .into_par_iter()
        .map(|t| {
            let mut rng = ChaCha8Rng::seed_from_u64(seed);
            rng.set_stream(t as u64);
            let rows: Vec<usize> = (0..n).map(|_| rng.random_range(0..n)).collect();
            RegressionTree::fit(x, y, rows, params, Some(&mut rng))
        })
        .collect()
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BoostedTrees {
    pub base: f64,
    pub learning_rate: f64,
    pub trees: Vec<RegressionTree>,
}

impl Regressor for BoostedTrees {
    fn predict_row(&self, row: &[f64]) -> f64 {
        self.base + self.learning_rate * self.trees.iter().map(|t| t.predict_row(row)).sum::<f64>()
    }
}

/// Squared-loss gradient boosting with optional row subsampling.
pub(crate) fn fit_boosting(
    x: &[Vec<f64>],
    y: &[f64],
    n_estimators: usize,
    learning_rate: f64,
    subsample: f64,
    params: TreeParams,
    seed: u64,
) -> BoostedTrees {
    let n = y.len();
    let base = y.iter().sum::<f64>() / n as f64;
    let mut fitted = vec![base; n];
    let mut residual = vec![0.0; n];
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let take = ((subsample * n as f64).ceil() as usize).clamp(1, n);
    let mut trees = Vec::with_capacity(n_estimators);

    for _ in 0..n_estimators {
        for i in 0..n {
            residual[i] = y[i] - fitted[i];
        }
        let rows = if take < n {
            let mut r = sample(&mut rng, n, take).into_vec();
            r.sort_unstable();
            r
        } else {
            (0..n).collect()
        };
        let tree = RegressionTree::fit(x, &residual, rows, params, None);
        for i in 0..n {
            fitted[i] += learning_rate * tree.predict_row(&x[i]);
        }
        trees.push(tree);
    }
    BoostedTrees {
        base,
        learning_rate,
        trees,
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn params(depth: usize) -> TreeParams {
        TreeParams {
            max_depth: depth,
            min_samples_leaf: 1,
            max_features: None,
        }
    }

    /// Exhaustive single-split search, written independently of the builder.
    fn oracle_stump(x: &[f64], y: &[f64]) -> (f64, f64) {
        let mut sorted: Vec<f64> = x.to_vec();
        sorted.sort_by(f64::total_cmp);
        sorted.dedup();
        let mut best = (f64::NAN, f64::INFINITY);
        for w in sorted.windows(2) {
            let t = (w[0] + w[1]) / 2.0;
            let sse = |side: &dyn Fn(f64) -> bool| {
                let ys: Vec<f64> = x.iter().zip(y).filter(|(xi, _)| side(**xi)).map(|(_, yi)| *yi).collect();
                let m = ys.iter().sum::<f64>() / ys.len() as f64;
                ys.iter().map(|v| (v - m).powi(2)).sum::<f64>()
            };
            let total = sse(&|v| v <= t) + sse(&|v| v > t);
            if total < best.1 {
                best = (t, total);
            }
        }
        best
    }

    #[test]
    fn stump_recovers_step_threshold() {
        let x: Vec<f64> = (0..40).map(|i| i as f64 * 0.5).collect();
        let y: Vec<f64> = x.iter().map(|&v| if v <= 12.25 { 3.0 } else { 10.0 } + (v * 7.0).sin() * 0.1).collect();
        let rows: Vec<Vec<f64>> = x.iter().map(|&v| vec![v]).collect();
        let tree = RegressionTree::fit(&rows, &y, (0..40).collect(), params(1), None);
        let (oracle_t, _) = oracle_stump(&x, &y);
        match &tree.nodes[0] {
            TreeNode::Split { feature, threshold, .. } => {
                assert_eq!(*feature, 0);
                assert!((threshold - oracle_t).abs() < 1e-12);
                assert!(*threshold > 12.0 && *threshold < 12.5);
            }
            leaf => panic!("expected a split, got {leaf:?}"),
        }
        assert_eq!(tree.depth(), 1);
    }

    #[test]
    fn constant_target_stays_a_leaf() {
        let rows: Vec<Vec<f64>> = (0..10).map(|i| vec![i as f64]).collect();
        let tree = RegressionTree::fit(&rows, &[2.0; 10], (0..10).collect(), params(4), None);
        assert_eq!(tree.nodes, vec![TreeNode::Leaf { value: 2.0 }]);
    }

    #[test]
    fn min_leaf_respected() {
        let rows: Vec<Vec<f64>> = (0..10).map(|i| vec![i as f64]).collect();
        let y: Vec<f64> = (0..10).map(|i| if i == 0 { 100.0 } else { 0.0 }).collect();
        let p = TreeParams { max_depth: 3, min_samples_leaf: 3, max_features: None };
        let tree = RegressionTree::fit(&rows, &y, (0..10).collect(), p, None);
        // A leaf of a single outlier is not allowed.
        for node in &tree.nodes {
            if let TreeNode::Split { threshold, .. } = node {
                assert!(*threshold > 2.0);
            }
        }
    }

    #[test]
    fn forest_is_seed_deterministic() {
        let rows: Vec<Vec<f64>> = (0..50).map(|i| vec![i as f64, (i % 5) as f64]).collect();
        let y: Vec<f64> = rows.iter().map(|r| r[0] * 2.0 + r[1]).collect();
        let p = TreeParams { max_depth: 4, min_samples_leaf: 1, max_features: Some(1) };
        let a = fit_forest(&rows, &y, 20, p, 7);
        let b = fit_forest(&rows, &y, 20, p, 7);
        let c = fit_forest(&rows, &y, 20, p, 8);
        assert_eq!(a, b);
        assert_ne!(a, c);
    }

    #[test]
    fn boosting_reduces_training_error() {
        let rows: Vec<Vec<f64>> = (0..60).map(|i| vec![i as f64 / 10.0]).collect();
        let y: Vec<f64> = rows.iter().map(|r| (r[0]).sin() * 10.0).collect();
        let short = fit_boosting(&rows, &y, 5, 0.1, 1.0, params(2), 1);
        let long = fit_boosting(&rows, &y, 200, 0.1, 1.0, params(2), 1);
        let sse = |m: &BoostedTrees| rows.iter().zip(&y).map(|(r, t)| (m.predict_row(r) - t).powi(2)).sum::<f64>();
        assert!(sse(&long) < 0.1 * sse(&short));
        assert_eq!(fit_boosting(&rows, &y, 30, 0.1, 0.7, params(2), 3), fit_boosting(&rows, &y, 30, 0.1, 0.7, params(2), 3));
    }
}
