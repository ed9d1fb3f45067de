//! Trainable class-probability models.
//!
//! The random forest backs explanation generation; the decision tree and
//! naive Bayes are the interpretable classifiers used for evaluation.

mod c45;
mod forest;
mod naive_bayes;

pub use self::c45::{train_decision_tree, DecisionTree, TreeParams};
pub use self::forest::{train_random_forest, ForestParams, RandomForest};
pub use self::naive_bayes::{train_naive_bayes, NaiveBayes};

use std::io::{Read, Write};
use std::str::FromStr;

use serde::{Deserialize, Serialize};

use crate::data::Dataset;
use crate::error::{Error, Result};

/// A trained predictor of class distributions.
pub trait Model: Send + Sync {
    fn n_classes(&self) -> usize;

    fn n_attributes(&self) -> usize;

    fn schema_fingerprint(&self) -> u64;

    /// Writes the class distribution of `x` into `out`. No schema check.
    fn predict_into(&self, x: &[f64], out: &mut [f64]);

    /// Probability of one class; the hot path of explanation sampling.
    fn class_probability(&self, x: &[f64], class: usize) -> f64 {
        let mut out = vec![0.0; self.n_classes()];
        self.predict_into(x, &mut out);
        out[class]
    }

    fn predict_proba(&self, x: &[f64]) -> Result<Vec<f64>> {
        if x.len() != self.n_attributes() {
            return Err(Error::SchemaMismatch { expected: self.n_attributes(), found: x.len() });
        }
        let mut out = vec![0.0; self.n_classes()];
        self.predict_into(x, &mut out);
        Ok(out)
    }

    /// Most probable class, lowest index on ties.
    fn predict(&self, x: &[f64]) -> Result<usize> {
        let p = self.predict_proba(x)?;
        Ok(argmax(&p))
    }

    fn check_schema(&self, ds: &Dataset) -> Result<()> {
        if ds.n_attributes() != self.n_attributes() || ds.schema_fingerprint() != self.schema_fingerprint() {
            return Err(Error::SchemaMismatch { expected: self.n_attributes(), found: ds.n_attributes() });
        }
        Ok(())
    }
}

pub(crate) fn argmax(p: &[f64]) -> usize {
    let mut best = 0;
    for (k, &v) in p.iter().enumerate() {
        if v > p[best] {
            best = k;
        }
    }
    best
}

/// Fraction of instances whose predicted class equals the label.
pub fn accuracy(model: &dyn Model, ds: &Dataset) -> Result<f64> {
    model.check_schema(ds)?;
    let mut p = vec![0.0; model.n_classes()];
    let mut correct = 0usize;
    for (row, &label) in ds.rows().zip(ds.labels()) {
        model.predict_into(row, &mut p);
        if argmax(&p) == label {
            correct += 1;
        }
    }
    Ok(correct as f64 / ds.n_instances() as f64)
}

fn require_two_classes(ds: &Dataset) -> Result<()> {
    if ds.class_counts().iter().filter(|&&c| c > 0).count() < 2 {
        return Err(Error::SingleClass);
    }
    Ok(())
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum ClassifierKind {
    DecisionTree,
    NaiveBayes,
    RandomForest,
}

impl ClassifierKind {
    pub fn as_str(&self) -> &'static str {
        match self {
            ClassifierKind::DecisionTree => "dt",
            ClassifierKind::NaiveBayes => "nb",
            ClassifierKind::RandomForest => "rf",
        }
    }

    /// Trains with default hyper-parameters.
    pub fn train(&self, ds: &Dataset, seed: u64) -> Result<TrainedModel> {
        Ok(match self {
            ClassifierKind::DecisionTree => {
                TrainedModel::DecisionTree(train_decision_tree(ds, &TreeParams::default())?)
            }
            ClassifierKind::NaiveBayes => TrainedModel::NaiveBayes(train_naive_bayes(ds)?),
            ClassifierKind::RandomForest => {
                TrainedModel::RandomForest(train_random_forest(ds, &ForestParams { seed, ..ForestParams::default() })?)
            }
        })
    }
}

impl FromStr for ClassifierKind {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s.to_ascii_lowercase().as_str() {
            "dt" | "tree" => Ok(ClassifierKind::DecisionTree),
            "nb" | "bayes" => Ok(ClassifierKind::NaiveBayes),
            "rf" | "forest" => Ok(ClassifierKind::RandomForest),
            other => Err(Error::InvalidConfig(format!("unknown classifier `{}`", other))),
        }
    }
}

/// Closed set of model types, used for serialization and dispatch.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub enum TrainedModel {
    RandomForest(RandomForest),
    DecisionTree(DecisionTree),
    NaiveBayes(NaiveBayes),
}

impl TrainedModel {
    fn inner(&self) -> &dyn Model {
        match self {
            TrainedModel::RandomForest(m) => m,
            TrainedModel::DecisionTree(m) => m,
            TrainedModel::NaiveBayes(m) => m,
        }
    }
}

impl Model for TrainedModel {
    fn n_classes(&self) -> usize {
        self.inner().n_classes()
    }

    fn n_attributes(&self) -> usize {
        self.inner().n_attributes()
    }

    fn schema_fingerprint(&self) -> u64 {
        self.inner().schema_fingerprint()
    }

    fn predict_into(&self, x: &[f64], out: &mut [f64]) {
        self.inner().predict_into(x, out)
    }

    fn class_probability(&self, x: &[f64], class: usize) -> f64 {
        self.inner().class_probability(x, class)
    }
}

pub const MODEL_FORMAT_VERSION: u32 = 1;

#[derive(Serialize, Deserialize)]
struct SavedModel {
    format_version: u32,
    model: TrainedModel,
}

/// Serializes a model as versioned JSON.
pub fn save_model<W: Write>(model: &TrainedModel, writer: W) -> Result<()> {
    let saved = SavedModel { format_version: MODEL_FORMAT_VERSION, model: model.clone() };
    serde_json::to_writer(writer, &saved)?;
    Ok(())
}

pub fn load_model<R: Read>(reader: R) -> Result<TrainedModel> {
    let saved: SavedModel = serde_json::from_reader(reader)?;
    if saved.format_version != MODEL_FORMAT_VERSION {
        return Err(Error::InvalidConfig(format!("unsupported model format version {}", saved.format_version)));
    }
    Ok(saved.model)
}

/// Sums that do not depend on the order of the input.
pub(crate) fn ordered_sum(values: &mut [f64]) -> f64 {
    values.sort_by(|a, b| a.total_cmp(b));
    values.iter().sum()
}

pub(crate) fn entropy(counts: &[f64]) -> f64 {
    let total: f64 = counts.iter().sum();
    if total <= 0.0 {
        return 0.0;
    }
    counts
        .iter()
        .filter(|&&c| c > 0.0)
        .map(|&c| {
            let p = c / total;
            -p * p.log2()
        })
        .sum()
}
