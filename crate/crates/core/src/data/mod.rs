//! Tabular data model: attribute descriptors, the dataset matrix, atomic
//! conditions, discretisation and augmentation with constructed features.

mod arff;
mod csv;

pub use self::arff::{load_arff, read_arff, write_arff};
pub use self::csv::{load_csv, read_csv, write_csv, ColumnKind};

use std::fmt;

use serde::{Deserialize, Serialize};

use crate::construct::{Feature, FeatureValue, OutputKind};
use crate::error::{Error, Result};

/// Default number of equal-width cells used to turn numeric attributes
/// into interval conditions.
pub const DEFAULT_BINS: usize = 4;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub enum AttributeKind {
    Nominal {
        values: Vec<String>,
    },
    /// Observed range of the column.
    Numeric {
        min: f64,
        max: f64,
    },
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Attribute {
    pub name: String,
    pub index: usize,
    pub kind: AttributeKind,
}

impl Attribute {
    pub fn nominal<S: Into<String>>(name: S, index: usize, values: Vec<String>) -> Self {
        Attribute { name: name.into(), index, kind: AttributeKind::Nominal { values } }
    }

    pub fn numeric<S: Into<String>>(name: S, index: usize) -> Self {
        Attribute { name: name.into(), index, kind: AttributeKind::Numeric { min: 0.0, max: 0.0 } }
    }

    pub fn is_nominal(&self) -> bool {
        matches!(self.kind, AttributeKind::Nominal { .. })
    }

    pub fn is_numeric(&self) -> bool {
        !self.is_nominal()
    }

    /// Number of nominal values, `None` for numeric attributes.
    pub fn arity(&self) -> Option<usize> {
        match &self.kind {
            AttributeKind::Nominal { values } => Some(values.len()),
            AttributeKind::Numeric { .. } => None,
        }
    }

    pub fn values(&self) -> &[String] {
        match &self.kind {
            AttributeKind::Nominal { values } => values,
            AttributeKind::Numeric { .. } => &[],
        }
    }

    pub fn value_index(&self, label: &str) -> Option<usize> {
        self.values().iter().position(|v| v == label)
    }

    /// Textual form of a stored cell value.
    pub fn format_value(&self, value: f64) -> String {
        match &self.kind {
            AttributeKind::Nominal { values } => values[value as usize].clone(),
            AttributeKind::Numeric { .. } => format!("{}", value),
        }
    }

    fn validate(&self) -> Result<()> {
        match &self.kind {
            AttributeKind::Nominal { values } => {
                if values.is_empty() {
                    return Err(Error::InvalidConfig(format!("nominal attribute `{}` has an empty domain", self.name)));
                }
                for (i, v) in values.iter().enumerate() {
                    if values[..i].contains(v) {
                        return Err(Error::InvalidConfig(format!(
                            "nominal attribute `{}` repeats value `{}`",
                            self.name, v
                        )));
                    }
                }
                Ok(())
            }
            AttributeKind::Numeric { min, max } => {
                if min > max {
                    return Err(Error::InvalidConfig(format!("numeric attribute `{}` has min > max", self.name)));
                }
                Ok(())
            }
        }
    }
}

/// Training data: `n` instances over `m` attributes plus a nominal class.
///
/// Cells are stored row-major as `f64`; nominal cells hold the value index.
/// A dataset is immutable once built.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Dataset {
    relation: String,
    attributes: Vec<Attribute>,
    class_attr: Attribute,
    values: Vec<f64>,
    labels: Vec<usize>,
}

impl Dataset {
    /// Builds a dataset, checking every cell against its descriptor.
    /// Numeric descriptors get their observed range recomputed.
    pub fn new(
        relation: impl Into<String>,
        mut attributes: Vec<Attribute>,
        class_attr: Attribute,
        values: Vec<f64>,
        labels: Vec<usize>,
    ) -> Result<Self> {
        let m = attributes.len();
        let n = labels.len();
        if n == 0 || m == 0 {
            return Err(Error::EmptyFile);
        }
        if values.len() != n * m {
            return Err(Error::LengthMismatch { left: values.len(), right: n * m });
        }
        let n_classes = class_attr.arity().ok_or_else(|| Error::NotNominal(class_attr.name.clone()))?;
        class_attr.validate()?;
        for (j, attr) in attributes.iter_mut().enumerate() {
            attr.index = j;
            match &mut attr.kind {
                AttributeKind::Nominal { values: domain } => {
                    let k = domain.len() as f64;
                    for i in 0..n {
                        let v = values[i * m + j];
                        if !(v >= 0.0 && v < k && v.fract() == 0.0) {
                            return Err(Error::DomainViolation {
                                line: i + 1,
                                attribute: attr.name.clone(),
                                value: format!("{}", v),
                            });
                        }
                    }
                }
                AttributeKind::Numeric { min, max } => {
                    let mut lo = f64::INFINITY;
                    let mut hi = f64::NEG_INFINITY;
                    for i in 0..n {
                        let v = values[i * m + j];
                        if !v.is_finite() {
                            return Err(Error::MissingValue { line: i + 1, column: attr.name.clone() });
                        }
                        lo = lo.min(v);
                        hi = hi.max(v);
                    }
                    *min = lo;
                    *max = hi;
                }
            }
            attr.validate()?;
        }
        if let Some((i, _)) = labels.iter().enumerate().find(|(_, &l)| l >= n_classes) {
            return Err(Error::DomainViolation {
                line: i + 1,
                attribute: class_attr.name.clone(),
                value: labels[i].to_string(),
            });
        }
        Ok(Dataset { relation: relation.into(), attributes, class_attr, values, labels })
    }

    pub fn relation(&self) -> &str {
        &self.relation
    }

    pub fn n_instances(&self) -> usize {
        self.labels.len()
    }

    pub fn n_attributes(&self) -> usize {
        self.attributes.len()
    }

    pub fn attributes(&self) -> &[Attribute] {
        &self.attributes
    }

    pub fn attribute(&self, j: usize) -> Result<&Attribute> {
        self.attributes.get(j).ok_or(Error::UnknownAttribute(j))
    }

    pub fn attribute_index(&self, name: &str) -> Option<usize> {
        self.attributes.iter().position(|a| a.name == name)
    }

    pub fn class_attribute(&self) -> &Attribute {
        &self.class_attr
    }

    pub fn n_classes(&self) -> usize {
        self.class_attr.arity().unwrap_or(0)
    }

    pub fn labels(&self) -> &[usize] {
        &self.labels
    }

    pub fn row(&self, i: usize) -> &[f64] {
        let m = self.attributes.len();
        &self.values[i * m..(i + 1) * m]
    }

    pub fn rows(&self) -> impl Iterator<Item = &[f64]> + '_ {
        self.values.chunks_exact(self.attributes.len())
    }

    pub fn value(&self, i: usize, j: usize) -> f64 {
        self.values[i * self.attributes.len() + j]
    }

    pub fn column(&self, j: usize) -> Vec<f64> {
        self.rows().map(|r| r[j]).collect()
    }

    pub fn class_counts(&self) -> Vec<usize> {
        let mut counts = vec![0; self.n_classes()];
        for &l in &self.labels {
            counts[l] += 1;
        }
        counts
    }

    /// Dataset restricted to the given rows (in the given order), same schema.
    pub fn subset(&self, rows: &[usize]) -> Dataset {
        let m = self.attributes.len();
        let mut values = Vec::with_capacity(rows.len() * m);
        let mut labels = Vec::with_capacity(rows.len());
        for &i in rows {
            values.extend_from_slice(self.row(i));
            labels.push(self.labels[i]);
        }
        let mut attributes = self.attributes.clone();
        for (j, attr) in attributes.iter_mut().enumerate() {
            if let AttributeKind::Numeric { min, max } = &mut attr.kind {
                let (lo, hi) = values
                    .chunks_exact(m)
                    .map(|r| r[j])
                    .fold((f64::INFINITY, f64::NEG_INFINITY), |(lo, hi), v| (lo.min(v), hi.max(v)));
                *min = lo;
                *max = hi;
            }
        }
        Dataset { relation: self.relation.clone(), attributes, class_attr: self.class_attr.clone(), values, labels }
    }

    /// Same instances with replaced labels.
    pub fn with_labels(&self, labels: Vec<usize>) -> Result<Dataset> {
        if labels.len() != self.labels.len() {
            return Err(Error::LengthMismatch { left: labels.len(), right: self.labels.len() });
        }
        Dataset::new(
            self.relation.clone(),
            self.attributes.clone(),
            self.class_attr.clone(),
            self.values.clone(),
            labels,
        )
    }

    /// Stable 64-bit hash of attribute names, kinds and nominal domains
    /// (numeric ranges excluded), used to match models to data.
    pub fn schema_fingerprint(&self) -> u64 {
        let mut h = Fnv64::default();
        for attr in self.attributes.iter().chain(std::iter::once(&self.class_attr)) {
            h.write(attr.name.as_bytes());
            match &attr.kind {
                AttributeKind::Nominal { values } => {
                    h.write(b"{");
                    for v in values {
                        h.write(v.as_bytes());
                        h.write(b",");
                    }
                }
                AttributeKind::Numeric { .. } => h.write(b"#"),
            }
        }
        h.0
    }

    /// Compares decoded cell values (nominal by label, numeric bitwise),
    /// names and kinds; nominal domain ordering is ignored.
    pub fn value_equal(&self, other: &Dataset) -> bool {
        if self.n_instances() != other.n_instances()
            || self.n_attributes() != other.n_attributes()
            || self.class_attr.name != other.class_attr.name
        {
            return false;
        }
        for (a, b) in self.attributes.iter().zip(&other.attributes) {
            if a.name != b.name || a.is_nominal() != b.is_nominal() {
                return false;
            }
        }
        for i in 0..self.n_instances() {
            if self.class_attr.values()[self.labels[i]] != other.class_attr.values()[other.labels[i]] {
                return false;
            }
            for (j, a) in self.attributes.iter().enumerate() {
                let b = &other.attributes[j];
                let (x, y) = (self.value(i, j), other.value(i, j));
                let same = match a.kind {
                    AttributeKind::Nominal { .. } => a.format_value(x) == b.format_value(y),
                    AttributeKind::Numeric { .. } => x.to_bits() == y.to_bits(),
                };
                if !same {
                    return false;
                }
            }
        }
        true
    }
}

#[derive(Debug, Clone, Copy)]
struct Fnv64(u64);

impl Default for Fnv64 {
    fn default() -> Self {
        Fnv64(0xcbf2_9ce4_8422_2325)
    }
}

impl Fnv64 {
    fn write(&mut self, bytes: &[u8]) {
        for &b in bytes {
            self.0 ^= b as u64;
            self.0 = self.0.wrapping_mul(0x0000_0100_0000_01b3);
        }
        self.0 ^= 0xff;
        self.0 = self.0.wrapping_mul(0x0000_0100_0000_01b3);
    }
}

/// Interval on the real line with configurable end closure.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Interval {
    pub lower: f64,
    pub upper: f64,
    pub lower_closed: bool,
    pub upper_closed: bool,
}

impl Interval {
    /// `(lower, upper]`, the cell shape produced by discretisation.
    pub fn left_open(lower: f64, upper: f64) -> Self {
        Interval { lower, upper, lower_closed: false, upper_closed: true }
    }

    pub fn contains(&self, v: f64) -> bool {
        let above = if self.lower_closed { v >= self.lower } else { v > self.lower };
        let below = if self.upper_closed { v <= self.upper } else { v < self.upper };
        above && below
    }

    /// Intersection of two intervals, `None` when empty.
    pub fn intersect(&self, other: &Interval) -> Option<Interval> {
        let (lower, lower_closed) = if self.lower > other.lower {
            (self.lower, self.lower_closed)
        } else if other.lower > self.lower {
            (other.lower, other.lower_closed)
        } else {
            (self.lower, self.lower_closed && other.lower_closed)
        };
        let (upper, upper_closed) = if self.upper < other.upper {
            (self.upper, self.upper_closed)
        } else if other.upper < self.upper {
            (other.upper, other.upper_closed)
        } else {
            (self.upper, self.upper_closed && other.upper_closed)
        };
        if lower < upper || (lower == upper && lower_closed && upper_closed) {
            Some(Interval { lower, upper, lower_closed, upper_closed })
        } else {
            None
        }
    }
}

impl fmt::Display for Interval {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(
            f,
            "{}{},{}{}",
            if self.lower_closed { '[' } else { '(' },
            short_number(self.lower),
            short_number(self.upper),
            if self.upper_closed { ']' } else { ')' }
        )
    }
}

pub(crate) fn short_number(v: f64) -> String {
    if v == f64::INFINITY {
        "inf".into()
    } else if v == f64::NEG_INFINITY {
        "-inf".into()
    } else {
        let s = format!("{:.4}", v);
        let s = s.trim_end_matches('0').trim_end_matches('.');
        if s == "-0" {
            "0".into()
        } else {
            s.into()
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub enum Test {
    /// Nominal attribute takes the value with this index.
    Equals(usize),
    /// Numeric attribute falls in the interval.
    InInterval(Interval),
}

/// Atomic predicate over one attribute.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Condition {
    pub attr: usize,
    pub test: Test,
}

impl Condition {
    pub fn equals(attr: usize, value: usize) -> Self {
        Condition { attr, test: Test::Equals(value) }
    }

    pub fn in_interval(attr: usize, interval: Interval) -> Self {
        Condition { attr, test: Test::InInterval(interval) }
    }

    #[inline]
    pub fn holds(&self, row: &[f64]) -> bool {
        let v = row[self.attr];
        match &self.test {
            Test::Equals(k) => v as usize == *k,
            Test::InInterval(iv) => iv.contains(v),
        }
    }

    /// Checks the condition against a schema.
    pub fn validate(&self, attributes: &[Attribute]) -> Result<()> {
        let attr = attributes.get(self.attr).ok_or(Error::UnknownAttribute(self.attr))?;
        match &self.test {
            Test::Equals(k) => match attr.arity() {
                Some(arity) if *k < arity => Ok(()),
                Some(_) => Err(Error::DomainViolation { line: 0, attribute: attr.name.clone(), value: k.to_string() }),
                None => Err(Error::NotNominal(attr.name.clone())),
            },
            Test::InInterval(iv) => {
                if attr.is_nominal() {
                    Err(Error::NotNumeric(attr.name.clone()))
                } else if !(iv.lower < iv.upper) {
                    Err(Error::InvalidConfig(format!("empty interval {} on `{}`", iv, attr.name)))
                } else {
                    Ok(())
                }
            }
        }
    }

    /// Index-based identity used in canonical keys.
    pub fn key(&self) -> String {
        match &self.test {
            Test::Equals(k) => format!("a{}={}", self.attr, k),
            Test::InInterval(iv) => format!(
                "a{}{}{:?},{:?}{}",
                self.attr,
                if iv.lower_closed { '[' } else { '(' },
                iv.lower,
                iv.upper,
                if iv.upper_closed { ']' } else { ')' }
            ),
        }
    }

    /// Human-readable form such as `(A2=1)` or `(A3 in (0.25,0.5])`.
    pub fn render(&self, attributes: &[Attribute]) -> String {
        let attr = &attributes[self.attr];
        match &self.test {
            Test::Equals(k) => format!("({}={})", attr.name, attr.values()[*k]),
            Test::InInterval(iv) => format!("({} in {})", attr.name, iv),
        }
    }
}

/// Equal-width cut points over the observed range of `values`.
///
/// Returns `bins - 1` strictly increasing cuts, or none for a constant
/// column.
pub fn equal_width_cuts(values: &[f64], bins: usize) -> Vec<f64> {
    let (lo, hi) = values.iter().fold((f64::INFINITY, f64::NEG_INFINITY), |(lo, hi), &v| (lo.min(v), hi.max(v)));
    if !(lo < hi) || bins < 2 {
        return Vec::new();
    }
    let width = (hi - lo) / bins as f64;
    let mut cuts: Vec<f64> = (1..bins).map(|k| lo + width * k as f64).collect();
    cuts.dedup();
    cuts.retain(|&c| c > lo && c < hi);
    cuts
}

/// Equal-width discretisation of a numeric attribute.
pub fn discretize(ds: &Dataset, attr: usize, bins: usize) -> Result<Vec<f64>> {
    let a = ds.attribute(attr)?;
    if a.is_nominal() {
        return Err(Error::NotNumeric(a.name.clone()));
    }
    if bins < 2 {
        return Err(Error::InvalidConfig(format!("bins must be at least 2, got {}", bins)));
    }
    Ok(equal_width_cuts(&ds.column(attr), bins))
}

/// Cells `(-inf,c1], (c1,c2], ..., (c_k,inf)` induced by sorted cut points.
pub fn cells_from_cuts(cuts: &[f64]) -> Vec<Interval> {
    let mut bounds = Vec::with_capacity(cuts.len() + 2);
    bounds.push(f64::NEG_INFINITY);
    bounds.extend_from_slice(cuts);
    bounds.push(f64::INFINITY);
    bounds
        .windows(2)
        .map(|w| Interval { lower: w[0], upper: w[1], lower_closed: false, upper_closed: w[1].is_finite() })
        .collect()
}

/// Index of the cell of `cuts` that `v` falls into.
pub fn cell_index(cuts: &[f64], v: f64) -> usize {
    cuts.partition_point(|&c| c < v)
}

/// Appends one column per feature. Original columns keep their position
/// and values.
pub fn augment(ds: &Dataset, features: &[Feature]) -> Result<Dataset> {
    let m = ds.n_attributes();
    let n = ds.n_instances();
    for f in features {
        f.validate(ds.attributes())?;
    }
    let mut attributes = ds.attributes.clone();
    let mut columns: Vec<Vec<f64>> = Vec::with_capacity(features.len());
    for (k, f) in features.iter().enumerate() {
        let name = f.render(ds.attributes());
        let attr = match f.output_kind(ds.attributes()) {
            OutputKind::Boolean => Attribute::nominal(name, m + k, vec!["false".into(), "true".into()]),
            OutputKind::Nominal(labels) => Attribute::nominal(name, m + k, labels),
            OutputKind::Count | OutputKind::Real => Attribute::numeric(name, m + k),
        };
        attributes.push(attr);
        let mut column = Vec::with_capacity(n);
        for row in ds.rows() {
            let v = match f.evaluate(row)? {
                FeatureValue::Bool(b) => b as u8 as f64,
                FeatureValue::Count(c) => c as f64,
                FeatureValue::Nominal(v) => v as f64,
                FeatureValue::Real(r) => r,
            };
            column.push(v);
        }
        columns.push(column);
    }
    let width = m + features.len();
    let mut values = Vec::with_capacity(n * width);
    for (i, row) in ds.rows().enumerate() {
        values.extend_from_slice(row);
        values.extend(columns.iter().map(|c| c[i]));
    }
    Dataset::new(ds.relation.clone(), attributes, ds.class_attr.clone(), values, ds.labels.clone())
}
