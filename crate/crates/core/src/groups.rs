//! Candidate interaction groups mined from explanation matrices.
//!
//! Each explanation row is reduced to the smallest set of attributes that
//! carries a fraction `q` of its total absolute contribution; identical sets
//! are counted and frequent ones with at least two attributes are kept.

use std::collections::HashMap;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::explain::ExplanationMatrix;

/// Binary matrix of the attributes marked important in each explanation.
#[derive(Debug, Clone, PartialEq)]
pub struct WeightMatrix {
    pub threshold: f64,
    n_attributes: usize,
    marks: Vec<bool>,
}

impl WeightMatrix {
    pub fn n_rows(&self) -> usize {
        if self.n_attributes == 0 {
            0
        } else {
            self.marks.len() / self.n_attributes
        }
    }

    pub fn n_attributes(&self) -> usize {
        self.n_attributes
    }

    pub fn weight(&self, i: usize, j: usize) -> u8 {
        self.marks[i * self.n_attributes + j] as u8
    }

    /// Marked attributes of row `i`, ascending.
    pub fn marked(&self, i: usize) -> Vec<usize> {
        (0..self.n_attributes).filter(|&j| self.marks[i * self.n_attributes + j]).collect()
    }
}

/// Marking order of one row: attributes by decreasing `|e|`, ties by index.
pub fn importance_order(row: &[f64]) -> Vec<usize> {
    let mut order: Vec<usize> = (0..row.len()).collect();
    order.sort_by(|&a, &b| row[b].abs().total_cmp(&row[a].abs()).then(a.cmp(&b)));
    order
}

/// Number of leading attributes of `order` whose absolute contributions
/// first reach `q` of the row total. Zero for an all-zero row.
pub fn prefix_length(row: &[f64], order: &[usize], q: f64) -> usize {
    let total: f64 = order.iter().map(|&j| row[j].abs()).sum();
    if total <= 0.0 {
        return 0;
    }
    let goal = q * total;
    let mut running = 0.0;
    for (k, &j) in order.iter().enumerate() {
        running += row[j].abs();
        if running >= goal {
            return k + 1;
        }
    }
    order.len()
}

fn check_threshold(q: f64) -> Result<()> {
    if !(q > 0.0 && q <= 1.0) {
        return Err(Error::InvalidConfig(format!("threshold must be in (0, 1], got {}", q)));
    }
    Ok(())
}

/// Marks, per row, the shortest prefix of the importance order whose
/// normalised absolute contributions sum to at least `q`.
pub fn set_weights(e: &ExplanationMatrix, q: f64) -> Result<WeightMatrix> {
    check_threshold(q)?;
    let m = e.n_attributes();
    let mut marks = vec![false; e.n_rows() * m];
    for (i, row) in e.rows().enumerate().take(e.n_rows()) {
        if let Some(v) = row.iter().find(|v| !v.is_finite()) {
            return Err(Error::InvalidConfig(format!("non-finite explanation {} in row {}", v, i)));
        }
        let order = importance_order(row);
        let k = prefix_length(row, &order, q);
        for &j in &order[..k] {
            marks[i * m + j] = true;
        }
    }
    Ok(WeightMatrix { threshold: q, n_attributes: m, marks })
}

/// A set of attributes suspected to interact.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CandidateGroup {
    /// Sorted attribute indices, at least two.
    pub attrs: Vec<usize>,
    /// Number of explanations whose marked set equals `attrs`.
    pub support: usize,
    /// Position in the list the group was first reported in.
    pub first_seen_rank: usize,
    /// Threshold at which the group was first seen.
    pub threshold: f64,
}

/// Minimum support: `ceil(noise_thr * e)`, at least 1.
pub fn noise_floor(noise_thr: f64, rows: usize) -> usize {
    ((noise_thr * rows as f64) - 1e-9).ceil().max(1.0) as usize
}

/// Counts identical marked sets, drops singletons and sets below the noise
/// floor, and orders by decreasing support, ties by first appearance.
pub fn most_frequent_subsets(w: &WeightMatrix, noise_thr: f64) -> Result<Vec<CandidateGroup>> {
    if !(0.0..1.0).contains(&noise_thr) {
        return Err(Error::InvalidConfig(format!("noise threshold must be in [0, 1), got {}", noise_thr)));
    }
    let floor = noise_floor(noise_thr, w.n_rows());
    let mut counts: HashMap<Vec<usize>, (usize, usize)> = HashMap::new();
    for i in 0..w.n_rows() {
        let set = w.marked(i);
        if set.len() < 2 {
            continue;
        }
        counts.entry(set).or_insert((0, i)).0 += 1;
    }
    let mut kept: Vec<(Vec<usize>, usize, usize)> =
        counts.into_iter().filter(|(_, (c, _))| *c >= floor).map(|(s, (c, f))| (s, c, f)).collect();
    kept.sort_by(|a, b| b.1.cmp(&a.1).then(a.2.cmp(&b.2)));
    Ok(kept
        .into_iter()
        .enumerate()
        .map(|(rank, (attrs, support, _))| CandidateGroup {
            attrs,
            support,
            first_seen_rank: rank,
            threshold: w.threshold,
        })
        .collect())
}

/// Thresholds `thr_l, thr_l + step, ...` not exceeding `thr_u`.
pub fn thresholds(thr_l: f64, thr_u: f64, step: f64) -> Result<Vec<f64>> {
    if !(thr_l > 0.0 && thr_l <= thr_u && thr_u <= 1.0) {
        return Err(Error::InvalidConfig(format!("need 0 < thr_l <= thr_u <= 1, got {} and {}", thr_l, thr_u)));
    }
    if !(step > 0.0) {
        return Err(Error::InvalidConfig(format!("step must be positive, got {}", step)));
    }
    let count = ((thr_u - thr_l) / step + 1e-9).floor() as usize;
    Ok((0..=count).map(|k| ((thr_l + k as f64 * step) * 1e10).round() / 1e10).collect())
}

/// Runs the subset mining for every threshold and concatenates the results,
/// keeping the first occurrence of each group.
pub fn collect_groups(
    e: &ExplanationMatrix,
    thr_l: f64,
    thr_u: f64,
    step: f64,
    noise_thr: f64,
) -> Result<Vec<CandidateGroup>> {
    let qs = thresholds(thr_l, thr_u, step)?;
    let mut out: Vec<CandidateGroup> = Vec::new();
    if e.n_rows() == 0 {
        return Ok(out);
    }
    for q in qs {
        let w = set_weights(e, q)?;
        for g in most_frequent_subsets(&w, noise_thr)? {
            if !out.iter().any(|o| o.attrs == g.attrs) {
                let rank = out.len();
                out.push(CandidateGroup { first_seen_rank: rank, ..g });
            }
        }
    }
    Ok(out)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn matrix(rows: Vec<Vec<f64>>) -> ExplanationMatrix {
        let m = rows.first().map_or(0, |r| r.len());
        ExplanationMatrix::from_rows((1..=m).map(|k| format!("A{}", k)).collect(), rows).unwrap()
    }

    // normalised row of the worked example, in attribute order A1..A6
    fn worked_row() -> Vec<f64> {
        vec![0.229, 0.321, 0.325, 0.039, 0.081, 0.005]
    }

    #[test]
    fn worked_example_weights() {
        let e = matrix(vec![worked_row()]);
        assert_eq!(set_weights(&e, 0.6).unwrap().marked(0), vec![1, 2]);
        assert_eq!(set_weights(&e, 0.7).unwrap().marked(0), vec![0, 1, 2]);
    }

    #[test]
    fn ties_prefer_lower_index() {
        let e = matrix(vec![vec![0.5, 0.5, 0.0]]);
        assert_eq!(set_weights(&e, 0.4).unwrap().marked(0), vec![0]);
        let z = matrix(vec![vec![0.0, 0.0, 0.0]]);
        assert!(set_weights(&z, 0.5).unwrap().marked(0).is_empty());
        assert!(set_weights(&e, 0.0).is_err());
        assert!(set_weights(&e, 1.5).is_err());
    }

    #[test]
    fn exact_set_counts() {
        let rows: Vec<Vec<f64>> = [[1, 2], [1, 2], [2, 3], [4, 4]]
            .iter()
            .map(|p| {
                let mut r = vec![0.0; 5];
                r[p[0]] = 1.0;
                r[p[1]] = 1.0;
                r
            })
            .collect();
        let w = set_weights(&matrix(rows), 1.0).unwrap();
        let g = most_frequent_subsets(&w, 0.5).unwrap();
        assert_eq!(g.len(), 1);
        assert_eq!((g[0].attrs.clone(), g[0].support), (vec![1, 2], 2));
    }

    #[test]
    fn collection_keeps_first_occurrence() {
        let e = matrix(vec![worked_row(), worked_row(), vec![0.25, 0.0, 0.0, 0.4, 0.35, 0.0]]);
        let g = collect_groups(&e, 0.6, 0.8, 0.1, 0.0).unwrap();
        let sets: Vec<Vec<usize>> = g.iter().map(|g| g.attrs.clone()).collect();
        assert_eq!(sets, vec![vec![1, 2], vec![3, 4], vec![0, 1, 2], vec![0, 3, 4]]);
        assert_eq!(g.iter().map(|g| g.first_seen_rank).collect::<Vec<_>>(), vec![0, 1, 2, 3]);
        assert_eq!(g[2].threshold, 0.7);

        let single = collect_groups(&e, 0.6, 0.6, 0.1, 0.0).unwrap();
        let w = set_weights(&e, 0.6).unwrap();
        assert_eq!(single, most_frequent_subsets(&w, 0.0).unwrap());
    }

    #[test]
    fn threshold_grid() {
        assert_eq!(thresholds(0.1, 0.8, 0.1).unwrap().len(), 8);
        assert_eq!(thresholds(0.6, 0.8, 0.1).unwrap(), vec![0.6, 0.7, 0.8]);
        assert!(thresholds(0.5, 0.4, 0.1).is_err());
        assert!(thresholds(0.1, 0.4, 0.0).is_err());
    }

    #[test]
    fn empty_matrix() {
        let e = ExplanationMatrix::from_rows(vec!["A1".into(), "A2".into()], vec![]).unwrap();
        assert!(collect_groups(&e, 0.1, 0.8, 0.1, 0.01).unwrap().is_empty());
    }

    #[test]
    fn noise_floor_rounding() {
        assert_eq!(noise_floor(0.01, 489), 5);
        assert_eq!(noise_floor(0.01, 500), 5);
        assert_eq!(noise_floor(0.0, 500), 1);
        assert_eq!(noise_floor(0.01, 10), 1);
    }
}
