use rand::seq::SliceRandom;
use rand::Rng;
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use super::{argmax, require_two_classes, Model};
use crate::data::Dataset;
use crate::error::{Error, Result};
use crate::util::rng_for;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ForestParams {
    pub tree_count: usize,
    /// `None` grows trees until leaves are pure.
    pub max_depth: Option<usize>,
    /// Attributes tried per split; `None` means `ceil(sqrt(m))`.
    pub features_per_split: Option<usize>,
    pub min_leaf: usize,
    pub seed: u64,
}

impl Default for ForestParams {
    fn default() -> Self {
        ForestParams { tree_count: 100, max_depth: None, features_per_split: None, min_leaf: 1, seed: 0 }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
enum Node {
    /// Offset of the class distribution in `Tree::probs`.
    Leaf(u32),
    /// `x[attr] <= threshold` goes left.
    Numeric { attr: u32, threshold: f64, left: u32, right: u32 },
    /// `x[attr] == value` goes left.
    Equals { attr: u32, value: f64, left: u32, right: u32 },
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
struct Tree {
    nodes: Vec<Node>,
    probs: Vec<f64>,
}

impl Tree {
    #[inline]
    fn leaf(&self, x: &[f64]) -> usize {
        let mut k = 0usize;
        loop {
            match self.nodes[k] {
                Node::Leaf(off) => return off as usize,
                Node::Numeric { attr, threshold, left, right } => {
                    k = if x[attr as usize] <= threshold { left } else { right } as usize;
                }
                Node::Equals { attr, value, left, right } => {
                    k = if x[attr as usize] == value { left } else { right } as usize;
                }
            }
        }
    }
}

/// Bagged CART trees with Gini splits and per-split attribute sampling.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RandomForest {
    trees: Vec<Tree>,
    n_classes: usize,
    n_attributes: usize,
    fingerprint: u64,
    oob_accuracy: Option<f64>,
}

impl RandomForest {
    pub fn tree_count(&self) -> usize {
        self.trees.len()
    }

    /// Accuracy of out-of-bag votes; `None` if no instance was ever left out.
    pub fn oob_accuracy(&self) -> Option<f64> {
        self.oob_accuracy
    }
}

impl Model for RandomForest {
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
        out.iter_mut().for_each(|v| *v = 0.0);
        for t in &self.trees {
            let off = t.leaf(x);
            for (o, p) in out.iter_mut().zip(&t.probs[off..off + self.n_classes]) {
                *o += p;
            }
        }
        let k = self.trees.len() as f64;
        out.iter_mut().for_each(|v| *v /= k);
    }

    fn class_probability(&self, x: &[f64], class: usize) -> f64 {
        let s: f64 = self.trees.iter().map(|t| t.probs[t.leaf(x) + class]).sum();
        s / self.trees.len() as f64
    }
}

pub fn train_random_forest(ds: &Dataset, p: &ForestParams) -> Result<RandomForest> {
    if p.tree_count == 0 {
        return Err(Error::InvalidConfig("tree_count must be at least 1".into()));
    }
    if ds.n_instances() < 2 {
        return Err(Error::InvalidConfig("need at least two instances".into()));
    }
    require_two_classes(ds)?;
    let m = ds.n_attributes();
    let mtry = p.features_per_split.unwrap_or_else(|| (m as f64).sqrt().ceil() as usize).clamp(1, m);
    let grown: Vec<(Tree, Vec<bool>)> = (0..p.tree_count)
        .into_par_iter()
        .map(|t| {
            let mut rng = rng_for(p.seed, t as u64);
            let n = ds.n_instances();
            let mut in_bag = vec![false; n];
            let sample: Vec<usize> = (0..n)
                .map(|_| {
                    let i = rng.gen_range(0..n);
                    in_bag[i] = true;
                    i
                })
                .collect();
            let tree = Grower { ds, mtry, min_leaf: p.min_leaf.max(1), max_depth: p.max_depth }.grow(sample, &mut rng);
            (tree, in_bag)
        })
        .collect();

    let c = ds.n_classes();
    let mut votes = vec![0.0; ds.n_instances() * c];
    let mut seen = vec![false; ds.n_instances()];
    for (tree, in_bag) in &grown {
        for (i, row) in ds.rows().enumerate() {
            if !in_bag[i] {
                seen[i] = true;
                let off = tree.leaf(row);
                for k in 0..c {
                    votes[i * c + k] += tree.probs[off + k];
                }
            }
        }
    }
    let oob: Vec<usize> = (0..ds.n_instances()).filter(|&i| seen[i]).collect();
    let oob_accuracy = if oob.is_empty() {
        None
    } else {
        let hits = oob.iter().filter(|&&i| argmax(&votes[i * c..(i + 1) * c]) == ds.labels()[i]).count();
        Some(hits as f64 / oob.len() as f64)
    };

    Ok(RandomForest {
        trees: grown.into_iter().map(|(t, _)| t).collect(),
        n_classes: c,
        n_attributes: m,
        fingerprint: ds.schema_fingerprint(),
        oob_accuracy,
    })
}

struct Grower<'a> {
    ds: &'a Dataset,
    mtry: usize,
    min_leaf: usize,
    max_depth: Option<usize>,
}

struct Split {
    attr: usize,
    numeric: bool,
    value: f64,
    score: f64,
}

fn gini_sum(counts: &[f64], total: f64) -> f64 {
    // total * gini impurity
    if total <= 0.0 {
        return 0.0;
    }
    total - counts.iter().map(|c| c * c).sum::<f64>() / total
}

impl<'a> Grower<'a> {
    fn counts(&self, rows: &[usize]) -> Vec<f64> {
        let mut counts = vec![0.0; self.ds.n_classes()];
        for &i in rows {
            counts[self.ds.labels()[i]] += 1.0;
        }
        counts
    }

    fn grow(&self, sample: Vec<usize>, rng: &mut ChaCha8Rng) -> Tree {
        let mut tree = Tree { nodes: Vec::new(), probs: Vec::new() };
        tree.nodes.push(Node::Leaf(0));
        let mut stack = vec![(0usize, sample, 0usize)];
        let mut order: Vec<usize> = (0..self.ds.n_attributes()).collect();
        while let Some((slot, rows, depth)) = stack.pop() {
            let counts = self.counts(&rows);
            let total = rows.len() as f64;
            let pure = counts.iter().filter(|&&c| c > 0.0).count() <= 1;
            let split = if pure || rows.len() < 2 * self.min_leaf || self.max_depth.is_some_and(|d| depth >= d) {
                None
            } else {
                order.shuffle(rng);
                self.best_split(&rows, &counts, &order)
            };
            match split {
                None => {
                    let off = tree.probs.len() as u32;
                    tree.probs.extend(counts.iter().map(|c| c / total));
                    tree.nodes[slot] = Node::Leaf(off);
                }
                Some(s) => {
                    let (l, r): (Vec<usize>, Vec<usize>) = rows.iter().partition(|&&i| {
                        let v = self.ds.value(i, s.attr);
                        if s.numeric {
                            v <= s.value
                        } else {
                            v == s.value
                        }
                    });
                    let left = tree.nodes.len() as u32;
                    tree.nodes.push(Node::Leaf(0));
                    tree.nodes.push(Node::Leaf(0));
                    tree.nodes[slot] = if s.numeric {
                        Node::Numeric { attr: s.attr as u32, threshold: s.value, left, right: left + 1 }
                    } else {
                        Node::Equals { attr: s.attr as u32, value: s.value, left, right: left + 1 }
                    };
                    stack.push((left as usize + 1, r, depth + 1));
                    stack.push((left as usize, l, depth + 1));
                }
            }
        }
        tree
    }

    /// Examines attributes in `order` until `mtry` non-constant ones have
    /// been tried.
    fn best_split(&self, rows: &[usize], counts: &[f64], order: &[usize]) -> Option<Split> {
        let parent = gini_sum(counts, rows.len() as f64);
        let mut best: Option<Split> = None;
        let mut tried = 0;
        let mut pairs: Vec<(f64, usize)> = Vec::with_capacity(rows.len());
        for &j in order {
            if tried >= self.mtry {
                break;
            }
            pairs.clear();
            pairs.extend(rows.iter().map(|&i| (self.ds.value(i, j), self.ds.labels()[i])));
            pairs.sort_by(|a, b| a.0.total_cmp(&b.0));
            if pairs[0].0 == pairs[pairs.len() - 1].0 {
                continue;
            }
            tried += 1;
            let cand = if self.ds.attributes()[j].is_numeric() {
                self.numeric_split(&pairs, counts)
            } else {
                self.nominal_split(&pairs, counts)
            };
            if let Some((value, score)) = cand {
                if best.as_ref().is_none_or(|b| score < b.score) {
                    best = Some(Split { attr: j, numeric: self.ds.attributes()[j].is_numeric(), value, score });
                }
            }
        }
        best.filter(|b| b.score < parent - 1e-12)
    }

    fn numeric_split(&self, pairs: &[(f64, usize)], counts: &[f64]) -> Option<(f64, f64)> {
        let n = pairs.len();
        let mut left = vec![0.0; counts.len()];
        let mut right = counts.to_vec();
        let mut best: Option<(f64, f64)> = None;
        for k in 0..n - 1 {
            left[pairs[k].1] += 1.0;
            right[pairs[k].1] -= 1.0;
            if pairs[k].0 == pairs[k + 1].0 {
                continue;
            }
            let nl = k + 1;
            if nl < self.min_leaf || n - nl < self.min_leaf {
                continue;
            }
            let score = gini_sum(&left, nl as f64) + gini_sum(&right, (n - nl) as f64);
            if best.is_none_or(|b| score < b.1) {
                let mid = pairs[k].0 + (pairs[k + 1].0 - pairs[k].0) / 2.0;
                let thr = if mid < pairs[k + 1].0 { mid } else { pairs[k].0 };
                best = Some((thr, score));
            }
        }
        best
    }

    fn nominal_split(&self, pairs: &[(f64, usize)], counts: &[f64]) -> Option<(f64, f64)> {
        let n = pairs.len();
        let mut best: Option<(f64, f64)> = None;
        let mut k = 0;
        while k < n {
            let v = pairs[k].0;
            let mut inside = vec![0.0; counts.len()];
            let mut e = k;
            while e < n && pairs[e].0 == v {
                inside[pairs[e].1] += 1.0;
                e += 1;
            }
            let ni = e - k;
            if ni >= self.min_leaf && n - ni >= self.min_leaf {
                let outside: Vec<f64> = counts.iter().zip(&inside).map(|(a, b)| a - b).collect();
                let score = gini_sum(&inside, ni as f64) + gini_sum(&outside, (n - ni) as f64);
                if best.is_none_or(|b| score < b.1) {
                    best = Some((v, score));
                }
            }
            k = e;
        }
        best
    }
}
