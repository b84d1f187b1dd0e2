//! Binary classification tree (CART, Gini impurity) estimating `P(bad | z)`.
//!
//! Every node with at least two samples and mixed labels is split at the
//! feature/threshold pair with the lowest weighted Gini impurity, thresholds
//! being midpoints between consecutive distinct values. Ties go to the lowest
//! feature index, then the lowest threshold. Samples with `x[f] <= t` go left.

use std::cmp::Ordering;

use serde::{Deserialize, Serialize};

use super::LatentError;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Label {
    Good,
    Bad,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct LabeledSample {
    pub values: Vec<f64>,
    pub label: Label,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "node", rename_all = "snake_case")]
pub enum TreeNode {
    Leaf { bad: usize, total: usize },
    Split { feature: usize, threshold: f64, left: Box<TreeNode>, right: Box<TreeNode> },
}

impl TreeNode {
    fn leaf_count(&self) -> usize {
        match self {
            TreeNode::Leaf { .. } => 1,
            TreeNode::Split { left, right, .. } => left.leaf_count() + right.leaf_count(),
        }
    }

    fn depth(&self) -> usize {
        match self {
            TreeNode::Leaf { .. } => 0,
            TreeNode::Split { left, right, .. } => 1 + left.depth().max(right.depth()),
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct SurrogateModel {
    pub dim: usize,
    pub root: TreeNode,
}

impl SurrogateModel {
    pub fn leaf_count(&self) -> usize {
        self.root.leaf_count()
    }

    pub fn depth(&self) -> usize {
        self.root.depth()
    }

    /// Feature and threshold of the root split, if any.
    pub fn root_split(&self) -> Option<(usize, f64)> {
        match &self.root {
            TreeNode::Split { feature, threshold, .. } => Some((*feature, *threshold)),
            TreeNode::Leaf { .. } => None,
        }
    }

    /// Fraction of `samples` whose thresholded prediction (`P(bad) > 0.5`)
    /// matches the label.
    pub fn accuracy(&self, samples: &[Vec<f64>], labels: &[Label]) -> Result<f64, LatentError> {
        let mut correct = 0;
        for (x, y) in samples.iter().zip(labels) {
            let predicted = if tree_predict_bad(self, x)? > 0.5 { Label::Bad } else { Label::Good };
            correct += usize::from(predicted == *y);
        }
        Ok(correct as f64 / samples.len().max(1) as f64)
    }
}

/// Weighted impurity numerator/denominator: `sum over children of 2 b g / n`,
/// kept as an exact fraction so that ties are detected exactly.
#[derive(Clone, Copy)]
struct Impurity {
    num: u128,
    den: u128,
}

impl Impurity {
    fn of(bl: usize, nl: usize, br: usize, nr: usize) -> Self {
        let (bl, nl, br, nr) = (bl as u128, nl as u128, br as u128, nr as u128);
        Self { num: bl * (nl - bl) * nr + br * (nr - br) * nl, den: nl * nr }
    }

    fn cmp(self, other: Self) -> Ordering {
        (self.num * other.den).cmp(&(other.num * self.den))
    }
}

struct Builder<'a> {
    x: &'a [Vec<f64>],
    bad: Vec<bool>,
    dim: usize,
}

impl Builder<'_> {
    fn best_split(&self, idx: &[usize]) -> Option<(usize, f64)> {
        let n = idx.len();
        let total_bad = idx.iter().filter(|&&i| self.bad[i]).count();
        let mut best: Option<(Impurity, usize, f64)> = None;
        let mut order = idx.to_vec();
        for f in 0..self.dim {
            order.sort_by(|&a, &b| self.x[a][f].total_cmp(&self.x[b][f]));
            let mut left_bad = 0;
            for k in 1..n {
                left_bad += usize::from(self.bad[order[k - 1]]);
                let (lo, hi) = (self.x[order[k - 1]][f], self.x[order[k]][f]);
                if lo == hi {
                    continue;
                }
                let imp = Impurity::of(left_bad, k, total_bad - left_bad, n - k);
                let mut threshold = lo + (hi - lo) / 2.0;
                if threshold >= hi {
                    threshold = lo;
                }
                let better = match &best {
                    None => true,
                    Some((b, bf, bt)) => match imp.cmp(*b) {
                        Ordering::Less => true,
                        Ordering::Equal => f == *bf && threshold < *bt,
                        Ordering::Greater => false,
                    },
                };
                if better {
                    best = Some((imp, f, threshold));
                }
            }
        }
        best.map(|(_, f, t)| (f, t))
    }

    fn grow(&self, idx: Vec<usize>) -> TreeNode {
        let bad = idx.iter().filter(|&&i| self.bad[i]).count();
        let leaf = TreeNode::Leaf { bad, total: idx.len() };
        if idx.len() < 2 || bad == 0 || bad == idx.len() {
            return leaf;
        }
        let Some((feature, threshold)) = self.best_split(&idx) else {
            return leaf;
        };
        let (left, right): (Vec<usize>, Vec<usize>) = idx.into_iter().partition(|&i| self.x[i][feature] <= threshold);
        TreeNode::Split { feature, threshold, left: Box::new(self.grow(left)), right: Box::new(self.grow(right)) }
    }
}

pub fn tree_fit(x: &[Vec<f64>], y: &[Label]) -> Result<SurrogateModel, LatentError> {
    if x.is_empty() {
        return Err(LatentError::EmptyInput);
    }
    if x.len() != y.len() {
        return Err(LatentError::LabelCount { samples: x.len(), labels: y.len() });
    }
    let dim = x[0].len();
    if let Some(row) = x.iter().find(|r| r.len() != dim) {
        return Err(LatentError::DimensionMismatch { expected: dim, got: row.len() });
    }
    if x.iter().flatten().any(|v| !v.is_finite()) {
        return Err(LatentError::NonFinite);
    }
    let builder = Builder { x, bad: y.iter().map(|l| *l == Label::Bad).collect(), dim };
    Ok(SurrogateModel { dim, root: builder.grow((0..x.len()).collect()) })
}

pub fn tree_predict_bad(model: &SurrogateModel, z: &[f64]) -> Result<f64, LatentError> {
    if z.len() != model.dim {
        return Err(LatentError::DimensionMismatch { expected: model.dim, got: z.len() });
    }
    let mut node = &model.root;
    loop {
        match node {
            TreeNode::Leaf { bad, total } => return Ok(*bad as f64 / *total as f64),
            TreeNode::Split { feature, threshold, left, right } => {
                node = if z[*feature] <= *threshold { left } else { right };
            }
        }
    }
}
