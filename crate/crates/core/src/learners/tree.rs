//! Binary classification tree grown greedily on Gini impurity.
//!
//! Stands in for J48: no gain ratio and no pruning. A node is split whenever
//! it is impure and some threshold separates its samples, even when the best
//! split does not lower impurity (XOR needs a zero-gain first split).

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct TreeConfig {
    /// `None` grows until leaves are pure or unsplittable.
    pub max_depth: Option<usize>,
    pub min_leaf: usize,
}

impl Default for TreeConfig {
    fn default() -> Self {
        Self {
            max_depth: None,
            min_leaf: 1,
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub enum Node {
    Split {
        feature: usize,
        threshold: f64,
        left: usize,
        right: usize,
    },
    /// Class frequencies, normalized.
    Leaf { dist: Vec<f64> },
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct DecisionTree {
    pub n_classes: usize,
    pub n_features: usize,
    /// Node 0 is the root.
    pub nodes: Vec<Node>,
}

/// Impurity mass `n * gini = n - sum(c^2) / n`; summed over children it
/// ranks candidate splits the same way as weighted Gini.
pub(crate) fn gini_mass(counts: &[usize], n: usize) -> f64 {
    if n == 0 {
        return 0.0;
    }
    let sq: f64 = counts.iter().map(|&c| (c * c) as f64).sum();
    n as f64 - sq / n as f64
}

/// Candidate improvements smaller than this count as ties.
pub(crate) const TIE_EPS: f64 = 1e-12;

#[derive(Clone, Copy, Debug, PartialEq)]
pub(crate) struct SplitChoice {
    pub feature: usize,
    pub threshold: f64,
    pub impurity: f64,
}

/// Best split of `idx` over all features and midpoints between distinct
/// sorted values. Ties go to the lower feature, then the lower threshold.
fn best_split(x: &[Vec<f64>], y: &[usize], idx: &[usize], n_classes: usize, min_leaf: usize) -> Option<SplitChoice> {
    let n = idx.len();
    let mut total = vec![0usize; n_classes];
    for &i in idx {
        total[y[i]] += 1;
    }
    let mut best: Option<SplitChoice> = None;
    let mut sorted = idx.to_vec();
    let mut left = vec![0usize; n_classes];
    let mut right = vec![0usize; n_classes];
    for f in 0..x.first().map_or(0, Vec::len) {
        sorted.sort_by(|&a, &b| x[a][f].total_cmp(&x[b][f]).then(a.cmp(&b)));
        left.iter_mut().for_each(|c| *c = 0);
        right.copy_from_slice(&total);
        for pos in 1..n {
            let moved = sorted[pos - 1];
            left[y[moved]] += 1;
            right[y[moved]] -= 1;
            let (lo, hi) = (x[moved][f], x[sorted[pos]][f]);
            if lo == hi || pos < min_leaf || n - pos < min_leaf {
                continue;
            }
            let impurity = gini_mass(&left, pos) + gini_mass(&right, n - pos);
            if best.is_none_or(|b| impurity < b.impurity - TIE_EPS) {
                let mut threshold = lo + (hi - lo) / 2.0;
                // Adjacent floats can round the midpoint up to `hi`.
                if threshold >= hi {
                    threshold = lo;
                }
                best = Some(SplitChoice {
                    feature: f,
                    threshold,
                    impurity,
                });
            }
        }
    }
    best
}

impl DecisionTree {
    /// `y` holds class indices below `n_classes`.
    pub fn fit(x: &[Vec<f64>], y: &[usize], n_classes: usize, cfg: &TreeConfig) -> Result<Self> {
        if x.is_empty() {
            return Err(Error::InsufficientData("tree: empty training set".into()));
        }
        if x.len() != y.len() {
            return Err(Error::ShapeMismatch(format!("tree: {} rows, {} labels", x.len(), y.len())));
        }
        if let Some(&bad) = y.iter().find(|&&c| c >= n_classes) {
            return Err(Error::InvalidConfig(format!("tree: label {bad} >= {n_classes} classes")));
        }
        let d = x[0].len();
        if x.iter().any(|r| r.len() != d || r.iter().any(|v| !v.is_finite())) {
            return Err(Error::ShapeMismatch("tree: ragged or non-finite features".into()));
        }
        let mut tree = DecisionTree {
            n_classes,
            n_features: d,
            nodes: Vec::new(),
        };
        let idx: Vec<usize> = (0..x.len()).collect();
        tree.grow(x, y, idx, 0, cfg.max_depth, cfg.min_leaf.max(1));
        Ok(tree)
    }

    fn grow(&mut self, x: &[Vec<f64>], y: &[usize], idx: Vec<usize>, depth: usize, max_depth: Option<usize>, min_leaf: usize) -> usize {
        let id = self.nodes.len();
        let mut counts = vec![0usize; self.n_classes];
        for &i in &idx {
            counts[y[i]] += 1;
        }
        let pure = counts.iter().filter(|&&c| c > 0).count() <= 1;
        let depth_ok = max_depth.is_none_or(|m| depth < m);
        let split = if pure || !depth_ok {
            None
        } else {
            best_split(x, y, &idx, self.n_classes, min_leaf)
        };
        let Some(s) = split else {
            let n = idx.len() as f64;
            self.nodes.push(Node::Leaf {
                dist: counts.iter().map(|&c| c as f64 / n).collect(),
            });
            return id;
        };
        self.nodes.push(Node::Leaf { dist: Vec::new() });
        let (l, r): (Vec<usize>, Vec<usize>) = idx.into_iter().partition(|&i| x[i][s.feature] <= s.threshold);
        let left = self.grow(x, y, l, depth + 1, max_depth, min_leaf);
        let right = self.grow(x, y, r, depth + 1, max_depth, min_leaf);
        self.nodes[id] = Node::Split {
            feature: s.feature,
            threshold: s.threshold,
            left,
            right,
        };
        id
    }

    pub fn predict_proba(&self, row: &[f64]) -> &[f64] {
        let mut at = 0;
        loop {
            match &self.nodes[at] {
                Node::Leaf { dist } => return dist,
                Node::Split {
                    feature,
                    threshold,
                    left,
                    right,
                } => at = if row[*feature] <= *threshold { *left } else { *right },
            }
        }
    }

    pub fn depth(&self) -> usize {
        fn walk(t: &DecisionTree, at: usize) -> usize {
            match &t.nodes[at] {
                Node::Leaf { .. } => 0,
                Node::Split { left, right, .. } => 1 + walk(t, *left).max(walk(t, *right)),
            }
        }
        walk(self, 0)
    }

    pub fn n_leaves(&self) -> usize {
        self.nodes.iter().filter(|n| matches!(n, Node::Leaf { .. })).count()
    }
}
