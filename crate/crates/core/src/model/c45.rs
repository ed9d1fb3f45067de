use serde::{Deserialize, Serialize};
use statrs::distribution::{ContinuousCDF, Normal};

use super::{entropy, require_two_classes, Model};
use crate::data::Dataset;
use crate::error::{Error, Result};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TreeParams {
    /// Minimum instances in at least two branches of a split.
    pub min_leaf: usize,
    pub pruning: bool,
    /// Confidence used by the pessimistic error estimate.
    pub confidence: f64,
}

impl Default for TreeParams {
    fn default() -> Self {
        TreeParams { min_leaf: 2, pruning: true, confidence: 0.25 }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
enum TreeNode {
    Leaf { dist: Vec<f64> },
    Nominal { attr: usize, dist: Vec<f64>, children: Vec<TreeNode> },
    Numeric { attr: usize, threshold: f64, dist: Vec<f64>, left: Box<TreeNode>, right: Box<TreeNode> },
}

impl TreeNode {
    fn dist(&self) -> &[f64] {
        match self {
            TreeNode::Leaf { dist } | TreeNode::Nominal { dist, .. } | TreeNode::Numeric { dist, .. } => dist,
        }
    }

    fn depth(&self) -> usize {
        match self {
            TreeNode::Leaf { .. } => 0,
            TreeNode::Nominal { children, .. } => 1 + children.iter().map(|c| c.depth()).max().unwrap_or(0),
            TreeNode::Numeric { left, right, .. } => 1 + left.depth().max(right.depth()),
        }
    }

    fn leaves(&self) -> usize {
        match self {
            TreeNode::Leaf { .. } => 1,
            TreeNode::Nominal { children, .. } => children.iter().map(|c| c.leaves()).sum(),
            TreeNode::Numeric { left, right, .. } => left.leaves() + right.leaves(),
        }
    }
}

/// Gain-ratio decision tree with multiway nominal splits, binary numeric
/// thresholds and pessimistic subtree-replacement pruning.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DecisionTree {
    root: TreeNode,
    n_classes: usize,
    n_attributes: usize,
    fingerprint: u64,
}

impl DecisionTree {
    pub fn depth(&self) -> usize {
        self.root.depth()
    }

    pub fn leaf_count(&self) -> usize {
        self.root.leaves()
    }
}

impl Model for DecisionTree {
    fn n_classes(&self) -> usize {
        self.n_classes
    }

    fn n_attributes(&self) -> usize {
        self.n_attributes
    }

    fn schema_fingerprint(&self) -> u64 {
        self.fingerprint
    }

    fn predict_into(&self, x: &[f64], out: &mut [f64]) {
        let mut node = &self.root;
        let mut dist = node.dist();
        loop {
            if node.dist().iter().sum::<f64>() > 0.0 {
                dist = node.dist();
            }
            node = match node {
                TreeNode::Leaf { .. } => break,
                TreeNode::Nominal { attr, children, .. } => match children.get(x[*attr] as usize) {
                    Some(c) => c,
                    None => break,
                },
                TreeNode::Numeric { attr, threshold, left, right, .. } => {
                    if x[*attr] <= *threshold {
                        left
                    } else {
                        right
                    }
                }
            };
        }
        let total: f64 = dist.iter().sum();
        for (o, d) in out.iter_mut().zip(dist) {
            *o = d / total;
        }
    }
}

pub fn train_decision_tree(ds: &Dataset, params: &TreeParams) -> Result<DecisionTree> {
    if !(params.confidence > 0.0 && params.confidence < 0.5) {
        return Err(Error::InvalidConfig(format!("confidence must be in (0, 0.5), got {}", params.confidence)));
    }
    require_two_classes(ds)?;
    let builder = Builder {
        ds,
        min_leaf: params.min_leaf.max(1),
        z: Normal::new(0.0, 1.0).unwrap().inverse_cdf(1.0 - params.confidence),
        confidence: params.confidence,
    };
    let rows: Vec<usize> = (0..ds.n_instances()).collect();
    let mut root = builder.build(&rows);
    if params.pruning {
        builder.prune(&mut root);
    }
    Ok(DecisionTree {
        root,
        n_classes: ds.n_classes(),
        n_attributes: ds.n_attributes(),
        fingerprint: ds.schema_fingerprint(),
    })
}

struct Builder<'a> {
    ds: &'a Dataset,
    min_leaf: usize,
    z: f64,
    confidence: f64,
}

struct Candidate {
    attr: usize,
    threshold: Option<f64>,
    gain: f64,
    ratio: f64,
}

fn split_info(sizes: &[f64]) -> f64 {
    entropy(sizes)
}

fn errors_of(dist: &[f64]) -> f64 {
    let total: f64 = dist.iter().sum();
    let max = dist.iter().cloned().fold(0.0, f64::max);
    total - max
}

impl<'a> Builder<'a> {
    fn dist(&self, rows: &[usize]) -> Vec<f64> {
        let mut d = vec![0.0; self.ds.n_classes()];
        for &i in rows {
            d[self.ds.labels()[i]] += 1.0;
        }
        d
    }

    fn build(&self, rows: &[usize]) -> TreeNode {
        let dist = self.dist(rows);
        let n = rows.len();
        if n < 2 * self.min_leaf || dist.iter().filter(|&&c| c > 0.0).count() <= 1 {
            return TreeNode::Leaf { dist };
        }
        let parent_entropy = entropy(&dist);
        let cands: Vec<Candidate> = (0..self.ds.n_attributes())
            .filter_map(|j| {
                if self.ds.attributes()[j].is_nominal() {
                    self.nominal_candidate(rows, j, parent_entropy)
                } else {
                    self.numeric_candidate(rows, j, parent_entropy)
                }
            })
            .collect();
        if cands.is_empty() {
            return TreeNode::Leaf { dist };
        }
        let average = cands.iter().map(|c| c.gain).sum::<f64>() / cands.len() as f64;
        let mut best: Option<&Candidate> = None;
        for c in &cands {
            if c.gain >= average - 1e-3 && best.is_none_or(|b| c.ratio > b.ratio + 1e-12) {
                best = Some(c);
            }
        }
        let best = match best {
            Some(b) if b.ratio > 0.0 => b,
            _ => return TreeNode::Leaf { dist },
        };
        let node = match best.threshold {
            None => {
                let arity = self.ds.attributes()[best.attr].arity().unwrap();
                let mut parts: Vec<Vec<usize>> = vec![Vec::new(); arity];
                for &i in rows {
                    parts[self.ds.value(i, best.attr) as usize].push(i);
                }
                let children = parts
                    .iter()
                    .map(|p| if p.is_empty() { TreeNode::Leaf { dist: vec![0.0; dist.len()] } } else { self.build(p) })
                    .collect();
                TreeNode::Nominal { attr: best.attr, dist: dist.clone(), children }
            }
            Some(t) => {
                let (l, r): (Vec<usize>, Vec<usize>) = rows.iter().partition(|&&i| self.ds.value(i, best.attr) <= t);
                TreeNode::Numeric {
                    attr: best.attr,
                    threshold: t,
                    dist: dist.clone(),
                    left: Box::new(self.build(&l)),
                    right: Box::new(self.build(&r)),
                }
            }
        };
        // Replace a subtree that makes no fewer training errors than a leaf.
        if self.training_errors(&node) >= errors_of(&dist) - 1e-3 {
            return TreeNode::Leaf { dist };
        }
        node
    }

    fn nominal_candidate(&self, rows: &[usize], j: usize, parent_entropy: f64) -> Option<Candidate> {
        let arity = self.ds.attributes()[j].arity().unwrap();
        let c = self.ds.n_classes();
        let mut bags = vec![0.0; arity * c];
        for &i in rows {
            bags[self.ds.value(i, j) as usize * c + self.ds.labels()[i]] += 1.0;
        }
        let sizes: Vec<f64> = bags.chunks(c).map(|b| b.iter().sum()).collect();
        if sizes.iter().filter(|&&s| s >= self.min_leaf as f64).count() < 2 {
            return None;
        }
        let n = rows.len() as f64;
        let post: f64 = bags.chunks(c).zip(&sizes).map(|(b, &s)| s / n * entropy(b)).sum();
        let gain = parent_entropy - post;
        if gain <= 1e-10 {
            return None;
        }
        let si = split_info(&sizes);
        Some(Candidate { attr: j, threshold: None, gain, ratio: if si > 1e-10 { gain / si } else { 0.0 } })
    }

    fn numeric_candidate(&self, rows: &[usize], j: usize, parent_entropy: f64) -> Option<Candidate> {
        let c = self.ds.n_classes();
        let n = rows.len();
        let mut pairs: Vec<(f64, usize)> = rows.iter().map(|&i| (self.ds.value(i, j), self.ds.labels()[i])).collect();
        pairs.sort_by(|a, b| a.0.total_cmp(&b.0).then(a.1.cmp(&b.1)));
        let min_split = (0.1 * n as f64 / c as f64).clamp(self.min_leaf as f64, 25.0);
        let mut left = vec![0.0; c];
        let mut right = vec![0.0; c];
        for p in &pairs {
            right[p.1] += 1.0;
        }
        let mut best: Option<(f64, usize)> = None;
        let mut positions = 0usize;
        for k in 0..n - 1 {
            left[pairs[k].1] += 1.0;
            right[pairs[k].1] -= 1.0;
            if pairs[k].0 == pairs[k + 1].0 {
                continue;
            }
            let nl = (k + 1) as f64;
            let nr = (n - k - 1) as f64;
            if nl < min_split || nr < min_split {
                continue;
            }
            positions += 1;
            let gain = parent_entropy - (nl * entropy(&left) + nr * entropy(&right)) / n as f64;
            if best.is_none_or(|b| gain > b.0 + 1e-12) {
                best = Some((gain, k));
            }
        }
        let (gain, k) = best?;
        let gain = gain - (positions as f64).log2() / n as f64;
        if gain <= 1e-10 {
            return None;
        }
        let lo = pairs[k].0;
        let hi = pairs[k + 1].0;
        let mid = lo + (hi - lo) / 2.0;
        let threshold = if mid < hi { mid } else { lo };
        let nl = (k + 1) as f64;
        let si = split_info(&[nl, n as f64 - nl]);
        Some(Candidate { attr: j, threshold: Some(threshold), gain, ratio: if si > 1e-10 { gain / si } else { 0.0 } })
    }

    fn training_errors(&self, node: &TreeNode) -> f64 {
        match node {
            TreeNode::Leaf { dist } => errors_of(dist),
            TreeNode::Nominal { children, .. } => children.iter().map(|c| self.training_errors(c)).sum(),
            TreeNode::Numeric { left, right, .. } => self.training_errors(left) + self.training_errors(right),
        }
    }

    /// Upper confidence bound on errors minus observed errors.
    fn add_errs(&self, n: f64, e: f64) -> f64 {
        if e < 1.0 {
            let base = n * (1.0 - self.confidence.powf(1.0 / n));
            if e == 0.0 {
                return base;
            }
            return base + e * (self.add_errs(n, 1.0) - base);
        }
        if e + 0.5 >= n {
            return (n - e).max(0.0);
        }
        let z = self.z;
        let f = (e + 0.5) / n;
        let r = (f + z * z / (2.0 * n) + z * (f / n - f * f / n + z * z / (4.0 * n * n)).sqrt()) / (1.0 + z * z / n);
        r * n - e
    }

    fn estimated_errors_leaf(&self, dist: &[f64]) -> f64 {
        let n: f64 = dist.iter().sum();
        if n <= 0.0 {
            return 0.0;
        }
        let e = errors_of(dist);
        e + self.add_errs(n, e)
    }

    fn estimated_errors(&self, node: &TreeNode) -> f64 {
        match node {
            TreeNode::Leaf { dist } => self.estimated_errors_leaf(dist),
            TreeNode::Nominal { children, .. } => children.iter().map(|c| self.estimated_errors(c)).sum(),
            TreeNode::Numeric { left, right, .. } => self.estimated_errors(left) + self.estimated_errors(right),
        }
    }

    fn prune(&self, node: &mut TreeNode) {
        match node {
            TreeNode::Leaf { .. } => return,
            TreeNode::Nominal { children, .. } => children.iter_mut().for_each(|c| self.prune(c)),
            TreeNode::Numeric { left, right, .. } => {
                self.prune(left);
                self.prune(right);
            }
        }
        let as_leaf = self.estimated_errors_leaf(node.dist());
        if as_leaf <= self.estimated_errors(node) + 0.1 {
            *node = TreeNode::Leaf { dist: node.dist().to_vec() };
        }
    }
}
