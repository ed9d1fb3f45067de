//! Seeded generators for the synthetic benchmark concepts.
//!
//! Every generator draws attributes i.i.d. uniformly over their domains
//! (binary `{0,1}`, ternary nominal `{0,1,2}`, numeric `U[0,1]`), labels
//! each instance with its concept and then flips an exact number of labels
//! when the dataset is noisy.

use std::fmt;
use std::str::FromStr;

use rand::seq::SliceRandom;
use rand::Rng;
use serde::{Deserialize, Serialize};

use crate::data::{Attribute, Dataset};
use crate::error::{Error, Result};
use crate::util::rng_for;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum SynthName {
    /// Six binary attributes, `A1` selects between `A2∧A3` and `A4∧A5`.
    Toy,
    LogicalConcB,
    LogicalConcBNoisy,
    BinClassDisAttr,
    BinClassNumBinAttr,
    BinClassNumDisAttr,
    DisjunctN,
    MultiVClassDisAttr,
    Concept,
    ModGroups,
    CondInd,
    /// Nine ternary board squares; positive when at least two squares of the
    /// main diagonal hold `x`.
    TicTacToeDiag,
}

impl SynthName {
    pub const ALL: [SynthName; 12] = [
        SynthName::Toy,
        SynthName::LogicalConcB,
        SynthName::LogicalConcBNoisy,
        SynthName::BinClassDisAttr,
        SynthName::BinClassNumBinAttr,
        SynthName::BinClassNumDisAttr,
        SynthName::DisjunctN,
        SynthName::MultiVClassDisAttr,
        SynthName::Concept,
        SynthName::ModGroups,
        SynthName::CondInd,
        SynthName::TicTacToeDiag,
    ];

    /// The ten benchmark concepts (without the toy and board datasets).
    pub const BENCHMARK: [SynthName; 10] = [
        SynthName::LogicalConcB,
        SynthName::LogicalConcBNoisy,
        SynthName::BinClassDisAttr,
        SynthName::BinClassNumBinAttr,
        SynthName::BinClassNumDisAttr,
        SynthName::DisjunctN,
        SynthName::MultiVClassDisAttr,
        SynthName::Concept,
        SynthName::ModGroups,
        SynthName::CondInd,
    ];

    pub fn as_str(&self) -> &'static str {
        match self {
            SynthName::Toy => "Toy",
            SynthName::LogicalConcB => "LogicalConcB",
            SynthName::LogicalConcBNoisy => "LogicalConcBNoisy",
            SynthName::BinClassDisAttr => "BinClassDisAttr",
            SynthName::BinClassNumBinAttr => "BinClassNumBinAttr",
            SynthName::BinClassNumDisAttr => "BinClassNumDisAttr",
            SynthName::DisjunctN => "DisjunctN",
            SynthName::MultiVClassDisAttr => "MultiVClassDisAttr",
            SynthName::Concept => "Concept",
            SynthName::ModGroups => "ModGroups",
            SynthName::CondInd => "CondInd",
            SynthName::TicTacToeDiag => "TicTacToeDiag",
        }
    }

    /// Class noise in percent.
    pub fn noise_percent(&self) -> f64 {
        match self {
            SynthName::LogicalConcBNoisy => 5.0,
            SynthName::ModGroups => 10.0,
            _ => 0.0,
        }
    }

    pub fn n_classes(&self) -> usize {
        match self {
            SynthName::MultiVClassDisAttr | SynthName::ModGroups => 3,
            _ => 2,
        }
    }

    fn schema(&self) -> Vec<Domain> {
        use Domain::*;
        match self {
            SynthName::Toy => vec![Binary; 6],
            SynthName::LogicalConcB | SynthName::LogicalConcBNoisy => vec![Binary; 7],
            SynthName::BinClassDisAttr | SynthName::MultiVClassDisAttr => vec![Ternary; 5],
            SynthName::BinClassNumBinAttr => vec![Binary, Binary, Real, Real, Real],
            SynthName::BinClassNumDisAttr => vec![Ternary, Ternary, Real, Real, Real],
            SynthName::DisjunctN => vec![Real; 5],
            SynthName::Concept => vec![Binary; 5],
            SynthName::ModGroups => vec![Real; 4],
            SynthName::CondInd => vec![Binary; 8],
            SynthName::TicTacToeDiag => vec![Board; 9],
        }
    }

    pub fn attribute_names(&self) -> Vec<String> {
        match self {
            SynthName::ModGroups => ["I1", "I2", "R1", "R2"].iter().map(|s| s.to_string()).collect(),
            SynthName::CondInd => {
                ["I90", "I80", "I70", "I60", "R1", "R2", "R3", "R4"].iter().map(|s| s.to_string()).collect()
            }
            _ => (1..=self.schema().len()).map(|k| format!("A{}", k)).collect(),
        }
    }

    /// Indices of attributes that play no part in the concept.
    pub fn unrelated_attributes(&self) -> Vec<usize> {
        match self {
            SynthName::Toy => vec![5],
            SynthName::LogicalConcB | SynthName::LogicalConcBNoisy => vec![6],
            SynthName::BinClassDisAttr
            | SynthName::BinClassNumBinAttr
            | SynthName::BinClassNumDisAttr
            | SynthName::MultiVClassDisAttr
            | SynthName::Concept => vec![4],
            SynthName::DisjunctN => vec![3, 4],
            SynthName::ModGroups => vec![2, 3],
            SynthName::CondInd => vec![4, 5, 6, 7],
            SynthName::TicTacToeDiag => vec![1, 2, 3, 5, 6, 7],
        }
    }
}

impl fmt::Display for SynthName {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

impl FromStr for SynthName {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        SynthName::ALL
            .iter()
            .copied()
            .find(|n| n.as_str().eq_ignore_ascii_case(s))
            .ok_or_else(|| Error::UnknownDataset(s.to_string()))
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
enum Domain {
    Binary,
    Ternary,
    Board,
    Real,
}

impl Domain {
    fn labels(&self) -> Option<Vec<String>> {
        let v: &[&str] = match self {
            Domain::Binary => &["0", "1"],
            Domain::Ternary => &["0", "1", "2"],
            Domain::Board => &["b", "x", "o"],
            Domain::Real => return None,
        };
        Some(v.iter().map(|s| s.to_string()).collect())
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SyntheticSpec {
    pub name: SynthName,
    pub n: usize,
    pub seed: u64,
}

impl SyntheticSpec {
    pub fn new(name: SynthName, n: usize, seed: u64) -> Self {
        SyntheticSpec { name, n, seed }
    }

    pub fn noise_percent(&self) -> f64 {
        self.name.noise_percent()
    }
}

/// Noise-free class of an attribute vector.
///
/// `CondInd` is generated class-first, so its "truth" is the Bayes-optimal
/// decision, which the generated labels only match most of the time.
pub fn concept_truth(name: SynthName, x: &[f64]) -> usize {
    let b = |k: usize| x[k] != 0.0;
    let v = |k: usize| x[k] as usize;
    let c = match name {
        SynthName::Toy => {
            if !b(0) {
                b(1) && b(2)
            } else {
                b(3) && b(4)
            }
        }
        SynthName::LogicalConcB | SynthName::LogicalConcBNoisy => {
            if !b(1) {
                b(0) && !b(2)
            } else {
                (b(3) && b(4)) || b(5)
            }
        }
        SynthName::BinClassDisAttr => {
            if v(0) == 2 {
                v(1) == 0 && v(2) == 1
            } else if v(0) == 1 {
                v(3) == 2 || v(2) == 2 || v(1) != v(0)
            } else {
                v(3) == 0
            }
        }
        SynthName::BinClassNumBinAttr => {
            if !b(0) {
                x[2] > 0.3 && x[3] < 0.1
            } else {
                !b(1) && x[2] > 0.7
            }
        }
        SynthName::BinClassNumDisAttr => {
            if v(1) == 0 {
                x[2] < 0.5 && v(0) == 0
            } else if v(1) == 1 {
                x[3] > 0.15 && v(0) == 2
            } else {
                x[2] > 0.5 && x[3] > 0.5 && v(0) == 1
            }
        }
        SynthName::DisjunctN => x[0] > 0.5 || x[1] > 0.7 || x[2] < 0.4,
        SynthName::MultiVClassDisAttr => {
            return if v(0) == 2 {
                if v(1) == 0 && v(2) == 1 {
                    1
                } else {
                    0
                }
            } else if v(0) == 1 {
                if v(3) == 2 || v(2) == 2 || v(1) != v(0) {
                    2
                } else {
                    1
                }
            } else if v(3) == 0 {
                2
            } else {
                0
            };
        }
        SynthName::Concept => {
            if !b(1) {
                // all-of-N(A1==1, A3==0, A3==A4)
                b(0) && !b(2) && v(2) == v(3)
            } else {
                // num-of-N(A3==1, A1==A4) > 0
                b(2) || v(0) == v(3)
            }
        }
        SynthName::ModGroups => return modgroups_class(x[0], x[1]),
        SynthName::CondInd => {
            // log-odds vote of the four informative attributes
            let score: f64 = [0.9f64, 0.8, 0.7, 0.6]
                .iter()
                .enumerate()
                .map(|(k, p)| {
                    let w = (p / (1.0 - p)).ln();
                    if b(k) {
                        w
                    } else {
                        -w
                    }
                })
                .sum();
            score > 0.0
        }
        SynthName::TicTacToeDiag => [0usize, 4, 8].iter().filter(|&&k| v(k) == 1).count() >= 2,
    };
    c as usize
}

/// Cell of a 3×3 grid over the unit square; the class cycles along the
/// diagonals, so each row and each column holds every class once.
fn modgroups_class(x: f64, y: f64) -> usize {
    let col = ((x * 3.0).floor() as usize).min(2);
    let row = ((y * 3.0).floor() as usize).min(2);
    (col + 3 - row) % 3
}

/// Generates a dataset; identical specs give identical datasets.
pub fn generate(spec: &SyntheticSpec) -> Result<Dataset> {
    if spec.n == 0 {
        return Err(Error::InvalidConfig("synthetic dataset needs n >= 1".into()));
    }
    let name = spec.name;
    let schema = name.schema();
    let m = schema.len();
    let mut rng = rng_for(spec.seed, 0x5EED_0000 + name as u64);
    let mut values = Vec::with_capacity(spec.n * m);
    let mut labels = Vec::with_capacity(spec.n);

    for _ in 0..spec.n {
        let start = values.len();
        if name == SynthName::CondInd {
            let class = rng.gen_range(0..2usize);
            for p in [0.9, 0.8, 0.7, 0.6] {
                let agrees = rng.gen_bool(p);
                values.push(if agrees { class as f64 } else { (1 - class) as f64 });
            }
            for _ in 4..m {
                values.push(rng.gen_range(0..2usize) as f64);
            }
            labels.push(class);
            continue;
        }
        for d in &schema {
            values.push(match d {
                Domain::Binary => rng.gen_range(0..2usize) as f64,
                Domain::Ternary | Domain::Board => rng.gen_range(0..3usize) as f64,
                Domain::Real => rng.gen::<f64>(),
            });
        }
        labels.push(concept_truth(name, &values[start..start + m]));
    }

    let flips = (name.noise_percent() / 100.0 * spec.n as f64).round() as usize;
    if flips > 0 {
        let mut order: Vec<usize> = (0..spec.n).collect();
        order.shuffle(&mut rng);
        let k = name.n_classes();
        for &i in &order[..flips] {
            let shift = if k == 2 { 1 } else { rng.gen_range(1..k) };
            labels[i] = (labels[i] + shift) % k;
        }
    }

    let attributes = name
        .attribute_names()
        .into_iter()
        .zip(&schema)
        .enumerate()
        .map(|(j, (attr_name, d))| match d.labels() {
            Some(labels) => Attribute::nominal(attr_name, j, labels),
            None => Attribute::numeric(attr_name, j),
        })
        .collect();
    let class_attr = Attribute::nominal("C", m, (0..name.n_classes()).map(|c| c.to_string()).collect());
    Dataset::new(name.as_str(), attributes, class_attr, values, labels)
}
