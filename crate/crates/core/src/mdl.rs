//! MDL evaluation of discrete features: the bits per instance saved by
//! coding the class labels within the feature's partition instead of all
//! together.

use std::collections::BTreeMap;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};
use statrs::function::gamma::ln_gamma;

use crate::construct::{Feature, FeatureValue};
use crate::data::{cell_index, equal_width_cuts, Dataset};
use crate::error::{Error, Result};

/// log2 of n! / (k_1! ... k_C!).
fn log2_multinomial(counts: &[usize]) -> f64 {
    let n: usize = counts.iter().sum();
    let mut s = ln_gamma(n as f64 + 1.0);
    for &k in counts {
        s -= ln_gamma(k as f64 + 1.0);
    }
    s / std::f64::consts::LN_2
}

/// log2 of C(n + c - 1, c - 1).
fn log2_compositions(n: usize, c: usize) -> f64 {
    (ln_gamma((n + c) as f64) - ln_gamma(c as f64) - ln_gamma(n as f64 + 1.0)) / std::f64::consts::LN_2
}

fn description_length(counts: &[usize]) -> f64 {
    let n: usize = counts.iter().sum();
    log2_multinomial(counts) + log2_compositions(n, counts.len())
}

/// MDL score of a discrete feature column against class labels.
///
/// Column values must be non-negative integers; each distinct value is one
/// cell of the partition.
pub fn mdl_score(column: &[f64], labels: &[usize], n_classes: usize) -> Result<f64> {
    if column.len() != labels.len() {
        return Err(Error::LengthMismatch { left: column.len(), right: labels.len() });
    }
    if column.is_empty() {
        return Err(Error::EmptyFile);
    }
    let c = n_classes.max(labels.iter().max().map_or(0, |&l| l + 1));
    let mut cells: BTreeMap<u64, Vec<usize>> = BTreeMap::new();
    let mut prior = vec![0usize; c];
    for (&v, &l) in column.iter().zip(labels) {
        if !(v >= 0.0 && v.fract() == 0.0 && v.is_finite()) {
            return Err(Error::ContinuousColumn);
        }
        cells.entry(v as u64).or_insert_with(|| vec![0; c])[l] += 1;
        prior[l] += 1;
    }
    let post: f64 = cells.values().map(|k| description_length(k)).sum();
    Ok((description_length(&prior) - post) / column.len() as f64)
}

/// Discrete column of a feature: booleans as 0/1, counts and nominal values
/// as themselves, reals as equal-width cell indices.
pub fn discrete_column(ds: &Dataset, feature: &Feature, bins: usize) -> Result<Vec<f64>> {
    feature.validate(ds.attributes())?;
    let mut reals = Vec::new();
    let mut out = Vec::with_capacity(ds.n_instances());
    for row in ds.rows() {
        match feature.evaluate(row)? {
            FeatureValue::Bool(b) => out.push(b as u8 as f64),
            FeatureValue::Count(k) => out.push(k as f64),
            FeatureValue::Nominal(v) => out.push(v as f64),
            FeatureValue::Real(r) => reals.push(r),
        }
    }
    if !reals.is_empty() {
        let cuts = equal_width_cuts(&reals, bins);
        out = reals.iter().map(|&r| cell_index(&cuts, r) as f64).collect();
    }
    Ok(out)
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ScoredFeature {
    pub feature: Feature,
    pub score: f64,
}

/// Scores every feature on `ds`, drops those below `min_score` and orders
/// the rest by decreasing score, ties by canonical key.
pub fn score_and_filter(features: &[Feature], ds: &Dataset, min_score: f64, bins: usize) -> Result<Vec<ScoredFeature>> {
    let scored: Vec<ScoredFeature> = features
        .par_iter()
        .map(|f| {
            let col = discrete_column(ds, f, bins)?;
            let score = mdl_score(&col, ds.labels(), ds.n_classes())?;
            Ok(ScoredFeature { feature: f.clone(), score })
        })
        .collect::<Result<Vec<_>>>()?;
    let mut kept: Vec<ScoredFeature> = scored.into_iter().filter(|s| s.score >= min_score).collect();
    kept.sort_by(|a, b| b.score.total_cmp(&a.score).then_with(|| a.feature.key().cmp(b.feature.key())));
    Ok(kept)
}

/// Score of every original attribute, numeric ones discretised.
pub fn attribute_scores(ds: &Dataset, bins: usize) -> Result<Vec<f64>> {
    (0..ds.n_attributes())
        .map(|j| {
            let col = ds.column(j);
            let col = if ds.attributes()[j].is_numeric() {
                let cuts = equal_width_cuts(&col, bins);
                col.iter().map(|&v| cell_index(&cuts, v) as f64).collect()
            } else {
                col
            };
            mdl_score(&col, ds.labels(), ds.n_classes())
        })
        .collect()
}

#[cfg(test)]
mod tests {
    use super::*;

    fn log2_binomial(n: u64, k: u64) -> f64 {
        // product form, no gamma function
        (0..k).map(|i| ((n - i) as f64 / (i + 1) as f64).log2()).sum()
    }

    #[test]
    fn class_identical_balanced() {
        let labels: Vec<usize> = (0..100).map(|i| i % 2).collect();
        let col: Vec<f64> = labels.iter().map(|&l| l as f64).collect();
        let s = mdl_score(&col, &labels, 2).unwrap();
        let expected = (log2_binomial(100, 50) + 101f64.log2() - 2.0 * 51f64.log2()) / 100.0;
        assert!((s - expected).abs() < 1e-9, "{} vs {}", s, expected);
        assert!((s - 0.9166).abs() < 1e-3);
    }

    #[test]
    fn constant_scores_zero() {
        let labels: Vec<usize> = (0..37).map(|i| (i % 3 == 0) as usize).collect();
        let s = mdl_score(&vec![2.0; 37], &labels, 2).unwrap();
        assert!(s.abs() < 1e-12);
    }

    #[test]
    fn errors() {
        assert!(matches!(mdl_score(&[0.0, 1.0], &[0], 2), Err(Error::LengthMismatch { .. })));
        assert!(matches!(mdl_score(&[0.5, 1.0], &[0, 1], 2), Err(Error::ContinuousColumn)));
    }

    #[test]
    fn empty_feature_list() {
        let ds =
            crate::synth::generate(&crate::synth::SyntheticSpec::new(crate::synth::SynthName::Toy, 50, 1)).unwrap();
        assert!(score_and_filter(&[], &ds, 0.0, 4).unwrap().is_empty());
    }
}
