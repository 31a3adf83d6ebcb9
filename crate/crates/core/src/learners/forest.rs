//! Random forest of unpruned entropy trees.

use rand::seq::index;
use rand::Rng;
use serde::{Deserialize, Serialize};

use super::{check_both_classes, LabelledRow, LearnerError};
use crate::corpus::{FeatureVector, FEATURE_COUNT};
use crate::seed;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct ForestConfig {
    pub n_trees: usize,
    /// Features drawn per tree; `None` means `floor(log2 14) = 3`.
    pub features_per_tree: Option<usize>,
    /// Feature indices included in every tree's subset.
    pub forced_features: Vec<usize>,
    /// Train each tree on a bootstrap sample (otherwise on all rows).
    pub bootstrap: bool,
}

impl Default for ForestConfig {
    fn default() -> Self {
        Self { n_trees: 100, features_per_tree: None, forced_features: Vec::new(), bootstrap: true }
    }
}

impl ForestConfig {
    pub fn subset_size(&self) -> usize {
        self.features_per_tree.unwrap_or((FEATURE_COUNT as f64).log2().floor() as usize)
    }

    fn validate(&self) -> Result<(), LearnerError> {
        let bad = |m: String| Err(LearnerError::InvalidConfig(m));
        let k = self.subset_size();
        if self.n_trees == 0 {
            return bad("n_trees must be >= 1".to_string());
        }
        if k == 0 || k > FEATURE_COUNT {
            return bad(format!("features_per_tree must be in 1..={FEATURE_COUNT}, got {k}"));
        }
        if self.forced_features.len() > k || self.forced_features.iter().any(|&f| f >= FEATURE_COUNT) {
            return bad("forced_features must be valid indices and fit in the subset".to_string());
        }
        Ok(())
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Node {
    Leaf { positive: bool },
    Split { feature: usize, threshold: f64, le: Box<Node>, gt: Box<Node> },
}

impl Node {
    fn predict(&self, x: &FeatureVector) -> bool {
        let mut node = self;
        loop {
            match node {
                Node::Leaf { positive } => return *positive,
                Node::Split { feature, threshold, le, gt } => {
                    node = if x[*feature] <= *threshold { le } else { gt };
                }
            }
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DecisionTree {
    pub features: Vec<usize>,
    pub root: Node,
}

impl DecisionTree {
    pub fn predict(&self, x: &FeatureVector) -> bool {
        self.root.predict(x)
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ForestModel {
    pub seed: u64,
    pub trees: Vec<DecisionTree>,
}

impl ForestModel {
    /// Majority vote; a tie is negative.
    pub fn predict(&self, x: &FeatureVector) -> bool {
        let yes = self.trees.iter().filter(|t| t.predict(x)).count();
        2 * yes > self.trees.len()
    }
}

fn entropy(pos: usize, n: usize) -> f64 {
    if n == 0 || pos == 0 || pos == n {
        return 0.0;
    }
    let p = pos as f64 / n as f64;
    -(p * p.log2() + (1.0 - p) * (1.0 - p).log2())
}

/// Majority class; a tie is negative.
fn majority(rows: &[&LabelledRow]) -> bool {
    2 * rows.iter().filter(|r| r.label).count() > rows.len()
}

/// Split minimizing weighted child entropy over midpoints between distinct
/// consecutive values. First best wins (subset order, then threshold).
fn best_split(rows: &[&LabelledRow], features: &[usize]) -> Option<(usize, f64)> {
    let n = rows.len();
    let total_pos = rows.iter().filter(|r| r.label).count();
    let parent = entropy(total_pos, n);
    let mut best: Option<(f64, usize, f64)> = None;
    let mut column: Vec<(f64, bool)> = Vec::with_capacity(n);
    for &f in features {
        column.clear();
        column.extend(rows.iter().map(|r| (r.features[f], r.label)));
        column.sort_by(|a, b| a.0.total_cmp(&b.0));
        let mut left_pos = 0;
        for i in 0..n - 1 {
            left_pos += usize::from(column[i].1);
            if column[i].0 == column[i + 1].0 {
                continue;
            }
            let left = i + 1;
            let right = n - left;
            let h = (left as f64 * entropy(left_pos, left) + right as f64 * entropy(total_pos - left_pos, right))
                / n as f64;
            if best.is_none_or(|(bh, _, _)| h < bh) {
                let mid = column[i].0 + (column[i + 1].0 - column[i].0) / 2.0;
                best = Some((h, f, mid));
            }
        }
    }
    best.filter(|(h, _, _)| *h < parent - 1e-12).map(|(_, f, t)| (f, t))
}

fn grow(rows: Vec<&LabelledRow>, features: &[usize]) -> Node {
    let pos = rows.iter().filter(|r| r.label).count();
    if pos == 0 || pos == rows.len() {
        return Node::Leaf { positive: pos > 0 };
    }
    match best_split(&rows, features) {
        None => Node::Leaf { positive: majority(&rows) },
        Some((feature, threshold)) => {
            let (le, gt): (Vec<&LabelledRow>, Vec<&LabelledRow>) =
                rows.into_iter().partition(|r| r.features[feature] <= threshold);
            Node::Split {
                feature,
                threshold,
                le: Box::new(grow(le, features)),
                gt: Box::new(grow(gt, features)),
            }
        }
    }
}

/// Single unpruned entropy tree over the given features.
pub fn train_tree(rows: &[LabelledRow], features: &[usize]) -> DecisionTree {
    DecisionTree { features: features.to_vec(), root: grow(rows.iter().collect(), features) }
}

pub fn train_random_forest(rows: &[LabelledRow], config: &ForestConfig, seed: u64) -> Result<ForestModel, LearnerError> {
    check_both_classes(rows)?;
    config.validate()?;
    let k = config.subset_size();
    let trees = (0..config.n_trees)
        .map(|t| {
            let mut rng = seed::rng_for(seed, &format!("forest/tree{t}"));
            let mut features = config.forced_features.clone();
            features.sort_unstable();
            features.dedup();
            let pool: Vec<usize> = (0..FEATURE_COUNT).filter(|f| !features.contains(f)).collect();
            let extra = k - features.len();
            features.extend(index::sample(&mut rng, pool.len(), extra).into_iter().map(|i| pool[i]));
            features.sort_unstable();
            let sample: Vec<LabelledRow> = if config.bootstrap {
                (0..rows.len()).map(|_| rows[rng.gen_range(0..rows.len())]).collect()
            } else {
                rows.to_vec()
            };
            train_tree(&sample, &features)
        })
        .collect();
    Ok(ForestModel { seed, trees })
}
