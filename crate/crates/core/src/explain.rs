//! Per-instance attribute contributions by permutation sampling of Shapley
//! values.

use std::io::{Read, Write};

use rand::seq::SliceRandom;
use rand::Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::data::Dataset;
use crate::error::{Error, Result};
use crate::model::Model;
use crate::util::rng_for;

/// Stream offset for instance subsampling, kept apart from per-row streams.
const SELECT_STREAM: u64 = 0xE5E1_EC70_0000_0000;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum ClassChoice {
    /// Smallest class that meets the support threshold.
    Minority,
    Index(usize),
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ExplainConfig {
    pub class: ClassChoice,
    pub max_to_explain: usize,
    /// Minimum class support as a fraction of all instances.
    pub inst_thr: f64,
    pub samples_per_attribute: usize,
    pub seed: u64,
}

impl Default for ExplainConfig {
    fn default() -> Self {
        ExplainConfig {
            class: ClassChoice::Minority,
            max_to_explain: 500,
            inst_thr: 0.1,
            samples_per_attribute: 100,
            seed: 0,
        }
    }
}

impl ExplainConfig {
    pub fn validate(&self) -> Result<()> {
        if self.max_to_explain == 0 {
            return Err(Error::InvalidConfig("max_to_explain must be at least 1".into()));
        }
        if !(self.inst_thr > 0.0 && self.inst_thr <= 1.0) {
            return Err(Error::InvalidConfig(format!("inst_thr must be in (0, 1], got {}", self.inst_thr)));
        }
        if self.samples_per_attribute == 0 {
            return Err(Error::InvalidConfig("samples_per_attribute must be at least 1".into()));
        }
        Ok(())
    }
}

/// Picks the class to explain and the instances of it to explain.
///
/// The requested class (or the minority class) is used if its support
/// reaches `inst_thr * n`; otherwise the smallest class that does. Classes
/// with more than `max_to_explain` instances are subsampled.
pub fn select_explanation_instances(ds: &Dataset, cfg: &ExplainConfig) -> Result<(usize, Vec<usize>)> {
    cfg.validate()?;
    let counts = ds.class_counts();
    let min_support = (cfg.inst_thr * ds.n_instances() as f64).ceil().max(1.0) as usize;
    let meets = |c: usize| counts[c] >= min_support;
    let mut by_support: Vec<usize> = (0..counts.len()).collect();
    by_support.sort_by_key(|&c| (counts[c], c));
    let class = match cfg.class {
        ClassChoice::Index(c) if c >= counts.len() => {
            return Err(Error::InvalidConfig(format!("class index {} out of range", c)));
        }
        ClassChoice::Index(c) if meets(c) => Some(c),
        _ => by_support.into_iter().find(|&c| meets(c)),
    }
    .ok_or(Error::NoClassMeetsThreshold { min_support })?;
    if let ClassChoice::Index(c) = cfg.class {
        if c != class {
            log::warn!("class {} is below the support threshold, explaining class {} instead", c, class);
        }
    }

    let mut members: Vec<usize> = (0..ds.n_instances()).filter(|&i| ds.labels()[i] == class).collect();
    if members.len() > cfg.max_to_explain {
        let mut rng = rng_for(cfg.seed, SELECT_STREAM);
        let (chosen, _) = members.partial_shuffle(&mut rng, cfg.max_to_explain);
        let mut chosen = chosen.to_vec();
        chosen.sort_unstable();
        members = chosen;
    }
    Ok((class, members))
}

/// Sampling estimate of the Shapley contribution of every attribute to
/// `f_class(x)`, with instances of `background` as reference points.
///
/// Each sample draws a permutation and a background instance `z`, then walks
/// from `z` to `x` one attribute at a time in permutation order; the change
/// in the class probability at each step is credited to the attribute that
/// changed. Background instances are visited in a shuffled cycle.
pub fn shapley_sample<R: Rng + ?Sized>(
    model: &dyn Model,
    background: &Dataset,
    x: &[f64],
    class: usize,
    samples: usize,
    rng: &mut R,
) -> Vec<f64> {
    let m = x.len();
    let mut phi = vec![0.0; m];
    let mut perm: Vec<usize> = (0..m).collect();
    let nb = background.n_instances();
    let mut order: Vec<usize> = (0..nb).collect();
    let mut y = vec![0.0; m];
    for s in 0..samples {
        if s % nb == 0 {
            order.shuffle(rng);
        }
        y.copy_from_slice(background.row(order[s % nb]));
        perm.shuffle(rng);
        let mut prev = model.class_probability(&y, class);
        for &j in &perm {
            if y[j] == x[j] {
                continue;
            }
            y[j] = x[j];
            let cur = model.class_probability(&y, class);
            phi[j] += cur - prev;
            prev = cur;
        }
    }
    let k = samples as f64;
    phi.iter_mut().for_each(|p| *p /= k);
    phi
}

/// Explanation of one dataset instance; see [`shapley_sample`].
pub fn ime_explain<R: Rng + ?Sized>(
    model: &dyn Model,
    ds: &Dataset,
    instance: usize,
    class: usize,
    samples: usize,
    rng: &mut R,
) -> Result<Vec<f64>> {
    model.check_schema(ds)?;
    if instance >= ds.n_instances() {
        return Err(Error::InvalidConfig(format!("instance {} out of range", instance)));
    }
    if class >= model.n_classes() {
        return Err(Error::InvalidConfig(format!("class index {} out of range", class)));
    }
    if samples == 0 {
        return Err(Error::InvalidConfig("samples must be at least 1".into()));
    }
    Ok(shapley_sample(model, ds, ds.row(instance), class, samples, rng))
}

/// Explains each listed instance. Rows are computed in parallel, each from
/// its own generator stream seeded by the instance index.
pub fn get_explanations(
    ds: &Dataset,
    model: &dyn Model,
    class: usize,
    instances: &[usize],
    cfg: &ExplainConfig,
) -> Result<ExplanationMatrix> {
    cfg.validate()?;
    model.check_schema(ds)?;
    if instances.is_empty() {
        return Err(Error::InvalidConfig("no instances to explain".into()));
    }
    if let Some(&bad) = instances.iter().find(|&&i| i >= ds.n_instances()) {
        return Err(Error::InvalidConfig(format!("instance {} out of range", bad)));
    }
    if class >= model.n_classes() {
        return Err(Error::InvalidConfig(format!("class index {} out of range", class)));
    }
    let rows: Vec<Vec<f64>> = instances
        .par_iter()
        .map(|&i| {
            let mut rng = rng_for(cfg.seed, i as u64);
            shapley_sample(model, ds, ds.row(i), class, cfg.samples_per_attribute, &mut rng)
        })
        .collect();
    let mut matrix = ExplanationMatrix::from_rows(ds.attributes().iter().map(|a| a.name.clone()).collect(), rows)?;
    matrix.instances = instances.to_vec();
    matrix.class_index = class;
    matrix.samples = cfg.samples_per_attribute;
    matrix.seed = cfg.seed;
    Ok(matrix)
}

/// `e x m` matrix of attribute contributions toward one class.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ExplanationMatrix {
    pub attribute_names: Vec<String>,
    /// Dataset row of each explanation, when known.
    pub instances: Vec<usize>,
    values: Vec<f64>,
    pub class_index: usize,
    pub samples: usize,
    pub seed: u64,
}

impl ExplanationMatrix {
    pub fn from_rows(attribute_names: Vec<String>, rows: Vec<Vec<f64>>) -> Result<Self> {
        let m = attribute_names.len();
        let mut values = Vec::with_capacity(rows.len() * m);
        for (i, r) in rows.iter().enumerate() {
            if r.len() != m {
                return Err(Error::RaggedRow { line: i + 1, expected: m, found: r.len() });
            }
            if let Some(v) = r.iter().find(|v| !v.is_finite()) {
                return Err(Error::UnparseableCell { line: i + 1, column: String::new(), value: v.to_string() });
            }
            values.extend_from_slice(r);
        }
        Ok(ExplanationMatrix {
            attribute_names,
            instances: (0..rows.len()).collect(),
            values,
            class_index: 0,
            samples: 0,
            seed: 0,
        })
    }

    pub fn n_rows(&self) -> usize {
        if self.attribute_names.is_empty() {
            0
        } else {
            self.values.len() / self.attribute_names.len()
        }
    }

    pub fn n_attributes(&self) -> usize {
        self.attribute_names.len()
    }

    pub fn row(&self, i: usize) -> &[f64] {
        let m = self.n_attributes();
        &self.values[i * m..(i + 1) * m]
    }

    pub fn rows(&self) -> impl Iterator<Item = &[f64]> + '_ {
        self.values.chunks_exact(self.n_attributes().max(1))
    }

    /// CSV with attribute names as the header, one explanation per line.
    pub fn write_csv<W: Write>(&self, writer: W) -> Result<()> {
        let mut w = ::csv::Writer::from_writer(writer);
        w.write_record(&self.attribute_names)?;
        for row in self.rows() {
            w.write_record(row.iter().map(|v| format!("{:?}", v)))?;
        }
        w.flush()?;
        Ok(())
    }

    /// Reads a matrix written by [`write_csv`](Self::write_csv) or by an
    /// external explainer using the same layout.
    pub fn read_csv<R: Read>(reader: R) -> Result<Self> {
        let mut rdr = ::csv::ReaderBuilder::new().has_headers(true).flexible(true).from_reader(reader);
        let names: Vec<String> = rdr.headers()?.iter().map(|s| s.trim().to_string()).collect();
        if names.is_empty() || (names.len() == 1 && names[0].is_empty()) {
            return Err(Error::EmptyFile);
        }
        let mut rows = Vec::new();
        for (k, rec) in rdr.records().enumerate() {
            let rec = rec?;
            if rec.len() != names.len() {
                return Err(Error::RaggedRow { line: k + 2, expected: names.len(), found: rec.len() });
            }
            let row =
                rec.iter()
                    .zip(&names)
                    .map(|(cell, name)| {
                        cell.trim().parse::<f64>().ok().filter(|v| v.is_finite()).ok_or_else(|| {
                            Error::UnparseableCell { line: k + 2, column: name.clone(), value: cell.to_string() }
                        })
                    })
                    .collect::<Result<Vec<f64>>>()?;
            rows.push(row);
        }
        ExplanationMatrix::from_rows(names, rows)
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::data::Attribute;
    use crate::synth::{generate, SynthName, SyntheticSpec};

    /// Reads only the listed attributes and returns their mean as P(class 1).
    struct MeanOf(Vec<usize>, usize, u64);

    impl Model for MeanOf {
        fn n_classes(&self) -> usize {
            2
        }
        fn n_attributes(&self) -> usize {
            self.1
        }
        fn schema_fingerprint(&self) -> u64 {
            self.2
        }
        fn predict_into(&self, x: &[f64], out: &mut [f64]) {
            let p = self.0.iter().map(|&j| x[j]).sum::<f64>() / self.0.len() as f64;
            out[0] = 1.0 - p;
            out[1] = p;
        }
    }

    fn toy() -> Dataset {
        generate(&SyntheticSpec::new(SynthName::Toy, 300, 2)).unwrap()
    }

    #[test]
    fn selection_uses_minority() {
        let ds = toy();
        let (c, idx) = select_explanation_instances(&ds, &ExplainConfig::default()).unwrap();
        assert_eq!(c, 1);
        assert_eq!(idx.len(), ds.class_counts()[1]);
        assert!(idx.iter().all(|&i| ds.labels()[i] == 1));
    }

    #[test]
    fn selection_caps_and_falls_back() {
        let ds = toy();
        let cfg = ExplainConfig { max_to_explain: 10, class: ClassChoice::Index(0), ..Default::default() };
        let (c, idx) = select_explanation_instances(&ds, &cfg).unwrap();
        assert_eq!((c, idx.len()), (0, 10));
        assert!(idx.windows(2).all(|w| w[0] < w[1]));

        let cfg = ExplainConfig { inst_thr: 0.9, ..Default::default() };
        assert!(matches!(select_explanation_instances(&ds, &cfg), Err(Error::NoClassMeetsThreshold { .. })));
    }

    #[test]
    fn unread_attribute_gets_exact_zero() {
        let ds = toy();
        let model = MeanOf(vec![1, 2], 6, ds.schema_fingerprint());
        let mut rng = rng_for(1, 1);
        for i in 0..20 {
            let phi = ime_explain(&model, &ds, i, 1, 50, &mut rng).unwrap();
            for j in [0, 3, 4, 5] {
                assert_eq!(phi[j], 0.0);
            }
        }
    }

    #[test]
    fn rows_do_not_depend_on_order() {
        let ds = toy();
        let model = MeanOf(vec![0, 1, 2], 6, ds.schema_fingerprint());
        let cfg = ExplainConfig { samples_per_attribute: 20, seed: 4, ..Default::default() };
        let a = get_explanations(&ds, &model, 1, &[3, 7, 11], &cfg).unwrap();
        let b = get_explanations(&ds, &model, 1, &[11, 3], &cfg).unwrap();
        assert_eq!(a.row(0), b.row(1));
        assert_eq!(a.row(2), b.row(0));
        assert_eq!(a.n_rows(), 3);
    }

    #[test]
    fn csv_round_trip_and_errors() {
        let m =
            ExplanationMatrix::from_rows(vec!["A1".into(), "A2".into()], vec![vec![0.1, -0.25], vec![1.0 / 3.0, 0.0]])
                .unwrap();
        let mut buf = Vec::new();
        m.write_csv(&mut buf).unwrap();
        let back = ExplanationMatrix::read_csv(buf.as_slice()).unwrap();
        assert_eq!(back.row(1), m.row(1));
        assert!(ExplanationMatrix::read_csv("A1,A2\n0.1,x\n".as_bytes()).is_err());
        assert!(ExplanationMatrix::read_csv("A1,A2\n0.1\n".as_bytes()).is_err());
    }

    #[test]
    fn schema_is_checked() {
        let ds = toy();
        let other = Dataset::new(
            "o",
            vec![Attribute::numeric("z", 0)],
            Attribute::nominal("C", 1, vec!["0".into(), "1".into()]),
            vec![0.0, 1.0],
            vec![0, 1],
        )
        .unwrap();
        let model = MeanOf(vec![0], 1, other.schema_fingerprint());
        assert!(matches!(ime_explain(&model, &ds, 0, 1, 10, &mut rng_for(0, 0)), Err(Error::SchemaMismatch { .. })));
    }
}
