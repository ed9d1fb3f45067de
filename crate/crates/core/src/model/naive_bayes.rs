use serde::{Deserialize, Serialize};

use super::{ordered_sum, Model};
use crate::data::{AttributeKind, Dataset};
use crate::error::Result;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
enum Estimator {
    /// `log P(value | class)`, indexed `[class][value]`.
    Table(Vec<Vec<f64>>),
    Gaussian {
        mean: Vec<f64>,
        std: Vec<f64>,
    },
}

/// Naive Bayes with Laplace-smoothed tables for nominal attributes and
/// per-class Gaussians for numeric ones.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct NaiveBayes {
    log_prior: Vec<f64>,
    estimators: Vec<Estimator>,
    n_attributes: usize,
    fingerprint: u64,
}

impl NaiveBayes {
    /// `log P(x_j | class)` for one attribute.
    pub fn log_likelihood(&self, attr: usize, value: f64, class: usize) -> f64 {
        match &self.estimators[attr] {
            Estimator::Table(t) => t[class].get(value as usize).copied().unwrap_or(f64::NEG_INFINITY),
            Estimator::Gaussian { mean, std } => {
                let s = std[class];
                let d = (value - mean[class]) / s;
                -0.5 * d * d - s.ln() - 0.5 * (2.0 * std::f64::consts::PI).ln()
            }
        }
    }
}

impl Model for NaiveBayes {
    fn n_classes(&self) -> usize {
        self.log_prior.len()
    }

    fn n_attributes(&self) -> usize {
        self.n_attributes
    }

    fn schema_fingerprint(&self) -> u64 {
        self.fingerprint
    }

    fn predict_into(&self, x: &[f64], out: &mut [f64]) {
        for (c, o) in out.iter_mut().enumerate() {
            let mut s = self.log_prior[c];
            for (j, &v) in x.iter().enumerate() {
                s += self.log_likelihood(j, v, c);
            }
            *o = s;
        }
        let max = out.iter().cloned().fold(f64::NEG_INFINITY, f64::max);
        if !max.is_finite() {
            let k = out.len() as f64;
            out.iter_mut().for_each(|o| *o = 1.0 / k);
            return;
        }
        let mut total = 0.0;
        for o in out.iter_mut() {
            *o = (*o - max).exp();
            total += *o;
        }
        out.iter_mut().for_each(|o| *o /= total);
    }
}

pub fn train_naive_bayes(ds: &Dataset) -> Result<NaiveBayes> {
    let n = ds.n_instances() as f64;
    let c = ds.n_classes();
    let counts = ds.class_counts();
    let log_prior = counts.iter().map(|&k| ((k as f64 + 1.0) / (n + c as f64)).ln()).collect();
    let labels = ds.labels();
    let estimators = ds
        .attributes()
        .iter()
        .enumerate()
        .map(|(j, attr)| match &attr.kind {
            AttributeKind::Nominal { values } => {
                let k = values.len();
                let mut t = vec![vec![0usize; k]; c];
                for (row, &l) in ds.rows().zip(labels) {
                    t[l][row[j] as usize] += 1;
                }
                Estimator::Table(
                    t.iter()
                        .zip(&counts)
                        .map(|(cells, &nc)| {
                            cells.iter().map(|&x| ((x as f64 + 1.0) / (nc as f64 + k as f64)).ln()).collect()
                        })
                        .collect(),
                )
            }
            AttributeKind::Numeric { .. } => gaussian(ds, j),
        })
        .collect();
    Ok(NaiveBayes { log_prior, estimators, n_attributes: ds.n_attributes(), fingerprint: ds.schema_fingerprint() })
}

fn gaussian(ds: &Dataset, j: usize) -> Estimator {
    let column = ds.column(j);
    let mut sorted = column.clone();
    sorted.sort_by(|a, b| a.total_cmp(b));
    sorted.dedup();
    // Mean gap between distinct observed values; the smallest resolvable
    // difference, as in Weka's estimator precision.
    let precision =
        if sorted.len() > 1 { (sorted[sorted.len() - 1] - sorted[0]) / (sorted.len() - 1) as f64 } else { 0.01 };
    let floor = precision / 6.0;
    let c = ds.n_classes();
    let mut per_class: Vec<Vec<f64>> = vec![Vec::new(); c];
    for (&v, &l) in column.iter().zip(ds.labels()) {
        per_class[l].push(v);
    }
    let mut all = column;
    let overall = moments(&mut all);
    let mut mean = Vec::with_capacity(c);
    let mut std = Vec::with_capacity(c);
    for vals in per_class.iter_mut() {
        let (m, s) = if vals.is_empty() { overall } else { moments(vals) };
        mean.push(m);
        std.push(s.max(floor));
    }
    Estimator::Gaussian { mean, std }
}

/// Mean and population standard deviation, independent of input order.
fn moments(values: &mut [f64]) -> (f64, f64) {
    let n = values.len() as f64;
    let mean = ordered_sum(values) / n;
    let mut sq: Vec<f64> = values.iter().map(|v| (v - mean) * (v - mean)).collect();
    let var = ordered_sum(&mut sq) / n;
    (mean, var.sqrt())
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::data::Attribute;
    use crate::model::accuracy;
    use rand::{Rng, SeedableRng};

    fn binary(name: &str, j: usize) -> Attribute {
        Attribute::nominal(name, j, vec!["0".into(), "1".into()])
    }

    #[test]
    fn copy_of_class_is_perfect() {
        let labels: Vec<usize> = (0..60).map(|i| i % 2).collect();
        let values = labels.iter().map(|&l| l as f64).collect();
        let ds = Dataset::new("t", vec![binary("a", 0)], binary("c", 1), values, labels).unwrap();
        let nb = train_naive_bayes(&ds).unwrap();
        assert_eq!(accuracy(&nb, &ds).unwrap(), 1.0);
    }

    #[test]
    fn uniform_tables_give_uniform_output() {
        let values = vec![0.0, 1.0, 0.0, 1.0];
        let ds = Dataset::new("t", vec![binary("a", 0)], binary("c", 1), values, vec![0, 0, 1, 1]).unwrap();
        let nb = train_naive_bayes(&ds).unwrap();
        let p = nb.predict_proba(&[1.0]).unwrap();
        assert!((p[0] - 0.5).abs() < 1e-12 && (p[1] - 0.5).abs() < 1e-12);
    }

    #[test]
    fn independent_attribute_cancels_at_scale() {
        let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(3);
        let n = 100_000;
        let labels: Vec<usize> = (0..n).map(|_| rng.gen_bool(0.3) as usize).collect();
        let mut values = Vec::with_capacity(2 * n);
        for _ in 0..n {
            values.push(rng.gen_range(0..2) as f64);
            values.push(rng.gen::<f64>());
        }
        let ds = Dataset::new("t", vec![binary("a", 0), Attribute::numeric("x", 1)], binary("c", 2), values, labels)
            .unwrap();
        let nb = train_naive_bayes(&ds).unwrap();
        for v in [0.0, 1.0] {
            assert!((nb.log_likelihood(0, v, 0) - nb.log_likelihood(0, v, 1)).abs() < 0.02);
        }
        for v in [0.1, 0.5, 0.9] {
            assert!((nb.log_likelihood(1, v, 0) - nb.log_likelihood(1, v, 1)).abs() < 0.02);
        }
    }

    #[test]
    fn constant_numeric_column_is_finite() {
        let ds =
            Dataset::new("t", vec![Attribute::numeric("x", 0)], binary("c", 1), vec![1.0, 1.0, 1.0], vec![0, 1, 1])
                .unwrap();
        let nb = train_naive_bayes(&ds).unwrap();
        let p = nb.predict_proba(&[1.0]).unwrap();
        assert!(p.iter().all(|v| v.is_finite()));
    }
}
