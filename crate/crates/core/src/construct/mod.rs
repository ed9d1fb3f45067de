//! Candidate features: operator-based, rule-based and threshold constructs
//! built inside candidate groups.

mod generate;
mod operators;

pub use self::generate::generate_features;
pub(crate) use self::generate::generate_features_until;
pub(crate) use self::operators::construct_operator_features_until;
pub use self::operators::{atomic_conditions, construct_operator_features};

use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Serialize};

use crate::data::{Attribute, Condition, Dataset, DEFAULT_BINS};
use crate::error::{Error, Result};
use crate::rules::{Rule, DEFAULT_RULE_BINS};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum LogicalOp {
    And,
    Or,
    Equiv,
    Xor,
    Implies,
}

impl LogicalOp {
    pub const ALL: [LogicalOp; 5] =
        [LogicalOp::And, LogicalOp::Or, LogicalOp::Equiv, LogicalOp::Xor, LogicalOp::Implies];

    fn name(&self) -> &'static str {
        match self {
            LogicalOp::And => "and",
            LogicalOp::Or => "or",
            LogicalOp::Equiv => "equiv",
            LogicalOp::Xor => "xor",
            LogicalOp::Implies => "implies",
        }
    }

    fn symbol(&self) -> &'static str {
        match self {
            LogicalOp::And => " & ",
            LogicalOp::Or => " | ",
            LogicalOp::Equiv => " == ",
            LogicalOp::Xor => " xor ",
            LogicalOp::Implies => " => ",
        }
    }

    pub fn is_ordered(&self) -> bool {
        matches!(self, LogicalOp::Implies)
    }

    /// Operand count: three for `and`/`or` (pairs are also built), two otherwise.
    pub fn depth(&self) -> usize {
        match self {
            LogicalOp::And | LogicalOp::Or => 3,
            _ => 2,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum RelationalOp {
    LessThan,
    NotEqual,
}

impl RelationalOp {
    pub const ALL: [RelationalOp; 2] = [RelationalOp::LessThan, RelationalOp::NotEqual];
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum NumericOp {
    Add,
    Subtract,
    Divide,
}

impl NumericOp {
    pub const ALL: [NumericOp; 3] = [NumericOp::Add, NumericOp::Subtract, NumericOp::Divide];
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum ThresholdVariant {
    /// Number of true conditions.
    NumOfN,
    /// True iff exactly `x` conditions hold.
    XOfN(usize),
    AllOfN,
    /// True iff at least `m` conditions hold.
    MOfN(usize),
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub enum FeatureKind {
    Logical {
        op: LogicalOp,
        operands: Vec<Condition>,
    },
    Relational {
        op: RelationalOp,
        left: usize,
        right: usize,
    },
    /// Value index is `left_value * right_arity + right_value`.
    Cartesian {
        left: usize,
        right: usize,
        right_arity: usize,
    },
    Numerical {
        op: NumericOp,
        left: usize,
        right: usize,
    },
    Rule(Rule),
    Threshold {
        variant: ThresholdVariant,
        conditions: Vec<Condition>,
    },
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub enum OutputKind {
    Boolean,
    Nominal(Vec<String>),
    Count,
    Real,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub enum FeatureValue {
    Bool(bool),
    Count(usize),
    Nominal(usize),
    Real(f64),
}

/// An evaluable construct over the original attributes.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Feature {
    pub kind: FeatureKind,
    key: String,
    /// Attributes of the candidate group the feature was built from.
    pub source_group: Vec<usize>,
}

fn sorted_keys(conds: &[Condition]) -> Vec<String> {
    let mut keys: Vec<String> = conds.iter().map(|c| c.key()).collect();
    keys.sort();
    keys
}

fn canonical_key(kind: &FeatureKind) -> String {
    match kind {
        FeatureKind::Logical { op, operands } => {
            let keys = if op.is_ordered() { operands.iter().map(|c| c.key()).collect() } else { sorted_keys(operands) };
            format!("{}({})", op.name(), keys.join(","))
        }
        FeatureKind::Relational { op, left, right } => match op {
            RelationalOp::LessThan => format!("lt(a{},a{})", left, right),
            RelationalOp::NotEqual => format!("ne(a{},a{})", left.min(right), left.max(right)),
        },
        FeatureKind::Cartesian { left, right, .. } => format!("cart(a{},a{})", left.min(right), left.max(right)),
        FeatureKind::Numerical { op, left, right } => match op {
            NumericOp::Add => format!("add(a{},a{})", left.min(right), left.max(right)),
            NumericOp::Subtract => format!("sub(a{},a{})", left, right),
            NumericOp::Divide => format!("div(a{},a{})", left, right),
        },
        FeatureKind::Rule(rule) => format!("rule({})", sorted_keys(&rule.conditions).join(",")),
        FeatureKind::Threshold { variant, conditions } => {
            let name = match variant {
                ThresholdVariant::NumOfN => "numofn".to_string(),
                ThresholdVariant::XOfN(x) => format!("xofn{}", x),
                ThresholdVariant::AllOfN => "allofn".to_string(),
                ThresholdVariant::MOfN(m) => format!("mofn{}", m),
            };
            format!("{}({})", name, sorted_keys(conditions).join(","))
        }
    }
}

impl Feature {
    pub fn new(kind: FeatureKind, mut source_group: Vec<usize>) -> Self {
        source_group.sort_unstable();
        source_group.dedup();
        let key = canonical_key(&kind);
        Feature { kind, key, source_group }
    }

    /// Identity used for deduplication: operator plus operand keys, sorted
    /// for commutative operators.
    pub fn key(&self) -> &str {
        &self.key
    }

    pub fn kind_name(&self) -> &'static str {
        match &self.kind {
            FeatureKind::Logical { .. } => "logical",
            FeatureKind::Relational { .. } => "relational",
            FeatureKind::Cartesian { .. } => "cartesian",
            FeatureKind::Numerical { .. } => "numerical",
            FeatureKind::Rule(_) => "rule",
            FeatureKind::Threshold { .. } => "threshold",
        }
    }

    /// Attributes read by the feature, sorted.
    pub fn operand_attributes(&self) -> Vec<usize> {
        let mut attrs: Vec<usize> = match &self.kind {
            FeatureKind::Logical { operands, .. } => operands.iter().map(|c| c.attr).collect(),
            FeatureKind::Relational { left, right, .. }
            | FeatureKind::Cartesian { left, right, .. }
            | FeatureKind::Numerical { left, right, .. } => vec![*left, *right],
            FeatureKind::Rule(r) => r.conditions.iter().map(|c| c.attr).collect(),
            FeatureKind::Threshold { conditions, .. } => conditions.iter().map(|c| c.attr).collect(),
        };
        attrs.sort_unstable();
        attrs.dedup();
        attrs
    }

    /// Checks operand indices and kinds against a schema.
    pub fn validate(&self, attributes: &[Attribute]) -> Result<()> {
        let get = |j: usize| attributes.get(j).ok_or(Error::UnknownAttribute(j));
        match &self.kind {
            FeatureKind::Logical { operands, .. } => operands.iter().try_for_each(|c| c.validate(attributes)),
            FeatureKind::Rule(r) => r.conditions.iter().try_for_each(|c| c.validate(attributes)),
            FeatureKind::Threshold { conditions, .. } => conditions.iter().try_for_each(|c| c.validate(attributes)),
            FeatureKind::Relational { left, right, .. } | FeatureKind::Numerical { left, right, .. } => {
                for &j in &[*left, *right] {
                    let a = get(j)?;
                    if !a.is_numeric() {
                        return Err(Error::NotNumeric(a.name.clone()));
                    }
                }
                Ok(())
            }
            FeatureKind::Cartesian { left, right, right_arity } => {
                let l = get(*left)?;
                let r = get(*right)?;
                if l.arity().is_none() {
                    return Err(Error::NotNominal(l.name.clone()));
                }
                match r.arity() {
                    Some(k) if k == *right_arity => Ok(()),
                    Some(_) => Err(Error::InvalidConfig(format!("arity of `{}` changed", r.name))),
                    None => Err(Error::NotNominal(r.name.clone())),
                }
            }
        }
    }

    /// Value of the feature on one instance.
    pub fn evaluate(&self, row: &[f64]) -> Result<FeatureValue> {
        Ok(match &self.kind {
            FeatureKind::Logical { op, operands } => {
                let t = |k: usize| operands[k].holds(row);
                FeatureValue::Bool(match op {
                    LogicalOp::And => operands.iter().all(|c| c.holds(row)),
                    LogicalOp::Or => operands.iter().any(|c| c.holds(row)),
                    LogicalOp::Equiv => t(0) == t(1),
                    LogicalOp::Xor => t(0) != t(1),
                    LogicalOp::Implies => !t(0) || t(1),
                })
            }
            FeatureKind::Relational { op, left, right } => FeatureValue::Bool(match op {
                RelationalOp::LessThan => row[*left] < row[*right],
                RelationalOp::NotEqual => row[*left] != row[*right],
            }),
            FeatureKind::Cartesian { left, right, right_arity } => {
                FeatureValue::Nominal(row[*left] as usize * right_arity + row[*right] as usize)
            }
            FeatureKind::Numerical { op, left, right } => {
                let (a, b) = (row[*left], row[*right]);
                FeatureValue::Real(match op {
                    NumericOp::Add => a + b,
                    NumericOp::Subtract => a - b,
                    NumericOp::Divide => {
                        if b == 0.0 {
                            return Err(Error::DivideByZero(self.key.clone()));
                        }
                        a / b
                    }
                })
            }
            FeatureKind::Rule(r) => FeatureValue::Bool(r.covers(row)),
            FeatureKind::Threshold { variant, conditions } => {
                let count = conditions.iter().filter(|c| c.holds(row)).count();
                match variant {
                    ThresholdVariant::NumOfN => FeatureValue::Count(count),
                    ThresholdVariant::XOfN(x) => FeatureValue::Bool(count == *x),
                    ThresholdVariant::AllOfN => FeatureValue::Bool(count == conditions.len()),
                    ThresholdVariant::MOfN(m) => FeatureValue::Bool(count >= *m),
                }
            }
        })
    }

    pub fn output_kind(&self, attributes: &[Attribute]) -> OutputKind {
        match &self.kind {
            FeatureKind::Cartesian { left, right, .. } => {
                let mut labels = Vec::new();
                for a in attributes[*left].values() {
                    for b in attributes[*right].values() {
                        labels.push(format!("{}_{}", a, b));
                    }
                }
                OutputKind::Nominal(labels)
            }
            FeatureKind::Numerical { .. } => OutputKind::Real,
            FeatureKind::Threshold { variant: ThresholdVariant::NumOfN, .. } => OutputKind::Count,
            _ => OutputKind::Boolean,
        }
    }

    /// Human-readable form, e.g. `num-of-N((A2=1), (A3=1), (A1=0))`.
    pub fn render(&self, attributes: &[Attribute]) -> String {
        let name = |j: usize| attributes[j].name.as_str();
        let conds = |cs: &[Condition], sep: &str| cs.iter().map(|c| c.render(attributes)).collect::<Vec<_>>().join(sep);
        match &self.kind {
            FeatureKind::Logical { op, operands } => conds(operands, op.symbol()),
            FeatureKind::Relational { op, left, right } => match op {
                RelationalOp::LessThan => format!("{} < {}", name(*left), name(*right)),
                RelationalOp::NotEqual => format!("{} != {}", name(*left), name(*right)),
            },
            FeatureKind::Cartesian { left, right, .. } => format!("{} x {}", name(*left), name(*right)),
            FeatureKind::Numerical { op, left, right } => {
                let sym = match op {
                    NumericOp::Add => "+",
                    NumericOp::Subtract => "-",
                    NumericOp::Divide => "/",
                };
                format!("{} {} {}", name(*left), sym, name(*right))
            }
            FeatureKind::Rule(r) => r.render(attributes),
            FeatureKind::Threshold { variant, conditions } => {
                let args = conds(conditions, ", ");
                match variant {
                    ThresholdVariant::NumOfN => format!("num-of-N({})", args),
                    ThresholdVariant::XOfN(x) => format!("{}-of-N({})", x, args),
                    ThresholdVariant::AllOfN => format!("all-of-N({})", args),
                    ThresholdVariant::MOfN(m) => format!("at-least-{}-of-N({})", m, args),
                }
            }
        }
    }
}

/// Which families of features to construct.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct FeatureKinds {
    pub logical: bool,
    pub relational: bool,
    pub cartesian: bool,
    pub numerical: bool,
    pub rule: bool,
    pub threshold: bool,
}

impl FeatureKinds {
    pub const NONE: FeatureKinds = FeatureKinds {
        logical: false,
        relational: false,
        cartesian: false,
        numerical: false,
        rule: false,
        threshold: false,
    };

    pub fn any(&self) -> bool {
        *self != FeatureKinds::NONE
    }
}

impl Default for FeatureKinds {
    fn default() -> Self {
        FeatureKinds { numerical: false, ..FeatureKinds::all() }
    }
}

impl FeatureKinds {
    pub fn all() -> Self {
        FeatureKinds { logical: true, relational: true, cartesian: true, numerical: true, rule: true, threshold: true }
    }
}

impl fmt::Display for FeatureKinds {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let mut parts = Vec::new();
        for (on, name) in [
            (self.logical, "log"),
            (self.relational, "rel"),
            (self.cartesian, "cart"),
            (self.numerical, "num"),
            (self.rule, "rule"),
            (self.threshold, "thr"),
        ] {
            if on {
                parts.push(name);
            }
        }
        write!(f, "{}", parts.join(","))
    }
}

impl FromStr for FeatureKinds {
    type Err = Error;

    /// Comma-separated list of `log`, `rel`, `cart`, `num`, `rule`, `thr`,
    /// or `all`.
    fn from_str(s: &str) -> Result<Self> {
        let mut k = FeatureKinds::NONE;
        for part in s.split(',').map(|p| p.trim().to_ascii_lowercase()).filter(|p| !p.is_empty()) {
            match part.as_str() {
                "log" | "logical" => k.logical = true,
                "rel" | "relational" => k.relational = true,
                "cart" | "cartesian" => k.cartesian = true,
                "num" | "numerical" => k.numerical = true,
                "rule" | "rules" => k.rule = true,
                "thr" | "threshold" => k.threshold = true,
                "all" => k = FeatureKinds::all(),
                other => return Err(Error::InvalidConfig(format!("unknown feature kind `{}`", other))),
            }
        }
        Ok(k)
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ConstructConfig {
    pub kinds: FeatureKinds,
    pub logical_ops: Vec<LogicalOp>,
    pub relational_ops: Vec<RelationalOp>,
    pub numeric_ops: Vec<NumericOp>,
    /// Equal-width cells per numeric attribute for logical operands.
    pub bins: usize,
    /// Cut grid for numeric rule conditions.
    pub rule_bins: usize,
    pub cf: f64,
    /// Stop learning rules once this fraction of the explained class is covered.
    pub pci: Option<f64>,
    pub max_rule_conditions: Option<usize>,
    /// Use only the `=1` literal of binary attributes as a logical operand.
    pub binary_literals: bool,
    /// Build `implies` in both directions; otherwise lower index first.
    pub implies_both_directions: bool,
    /// Threshold variants built from each rule besides num-of-N.
    pub extra_threshold_variants: Vec<ThresholdVariant>,
}

impl Default for ConstructConfig {
    fn default() -> Self {
        ConstructConfig {
            kinds: FeatureKinds::default(),
            logical_ops: LogicalOp::ALL.to_vec(),
            relational_ops: RelationalOp::ALL.to_vec(),
            numeric_ops: NumericOp::ALL.to_vec(),
            bins: DEFAULT_BINS,
            rule_bins: DEFAULT_RULE_BINS,
            cf: 0.6,
            pci: None,
            max_rule_conditions: None,
            binary_literals: false,
            implies_both_directions: true,
            extra_threshold_variants: Vec::new(),
        }
    }
}

impl ConstructConfig {
    pub fn validate(&self) -> Result<()> {
        if self.bins < 2 || self.rule_bins < 2 {
            return Err(Error::InvalidConfig("bins must be at least 2".into()));
        }
        if !(0.0..=1.0).contains(&self.cf) {
            return Err(Error::InvalidConfig(format!("cf must be in [0, 1], got {}", self.cf)));
        }
        if let Some(p) = self.pci {
            if !(p > 0.0 && p <= 1.0) {
                return Err(Error::InvalidConfig(format!("pci must be in (0, 1], got {}", p)));
            }
        }
        if self.max_rule_conditions == Some(0) {
            return Err(Error::InvalidConfig("max_rule_conditions must be at least 1".into()));
        }
        Ok(())
    }
}

/// Evaluates a feature on every row, checking the schema first.
pub fn feature_column(ds: &Dataset, f: &Feature) -> Result<Vec<FeatureValue>> {
    f.validate(ds.attributes())?;
    ds.rows().map(|r| f.evaluate(r)).collect()
}
