//! Sequential-covering rule induction restricted to a subset of attributes.
//!
//! Rules are grown greedily by FOIL gain and kept while their Laplace
//! certainty factor reaches a threshold.

use serde::{Deserialize, Serialize};

use crate::data::{equal_width_cuts, Attribute, Condition, Dataset, Interval, Test};
use crate::error::{Error, Result};

/// Cut grid for numeric rule conditions. Finer than the logical-operand
/// cells so that thresholds such as 0.7 or 0.4 are reachable.
pub const DEFAULT_RULE_BINS: usize = 20;

/// Conjunctive rule predicting `target_class`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Rule {
    /// In the order they were added.
    pub conditions: Vec<Condition>,
    pub target_class: usize,
    pub covered: usize,
    pub correct: usize,
    pub cf: f64,
}

impl Rule {
    pub fn certainty(correct: usize, covered: usize) -> f64 {
        (correct as f64 + 1.0) / (covered as f64 + 2.0)
    }

    #[inline]
    pub fn covers(&self, row: &[f64]) -> bool {
        self.conditions.iter().all(|c| c.holds(row))
    }

    /// `(A2=1) and (A3=1) and (A1=0)`.
    pub fn render(&self, attributes: &[Attribute]) -> String {
        self.conditions.iter().map(|c| c.render(attributes)).collect::<Vec<_>>().join(" and ")
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RuleParams {
    pub cf_threshold: f64,
    /// Distinct attributes per rule; `None` allows the whole subset.
    pub max_conditions: Option<usize>,
    pub bins: usize,
}

impl Default for RuleParams {
    fn default() -> Self {
        RuleParams { cf_threshold: 0.6, max_conditions: None, bins: DEFAULT_RULE_BINS }
    }
}

/// Learns rules for `target` over all instances of `ds`.
pub fn learn_rules(ds: &Dataset, attrs: &[usize], target: usize, params: &RuleParams) -> Result<Vec<Rule>> {
    let mut active: Vec<usize> = (0..ds.n_instances()).collect();
    learn_rules_on(ds, &mut active, attrs, target, params)
}

/// Sequential covering over the rows in `active`. Positives covered by an
/// accepted rule are removed from `active`, so successive calls continue
/// where the previous one stopped.
pub fn learn_rules_on(
    ds: &Dataset,
    active: &mut Vec<usize>,
    attrs: &[usize],
    target: usize,
    params: &RuleParams,
) -> Result<Vec<Rule>> {
    if attrs.is_empty() {
        return Err(Error::EmptyAttributeSubset);
    }
    for &a in attrs {
        ds.attribute(a)?;
    }
    if target >= ds.n_classes() {
        return Err(Error::InvalidConfig(format!("class index {} out of range", target)));
    }
    let learner = Learner::new(ds, active, attrs, target, params);
    let mut rules = Vec::new();
    loop {
        let positives = active.iter().filter(|&&i| ds.labels()[i] == target).count();
        if positives == 0 {
            break;
        }
        let conditions = match learner.grow(active) {
            Some(c) => c,
            None => break,
        };
        let covered: Vec<usize> =
            active.iter().copied().filter(|&i| conditions.iter().all(|c| c.holds(ds.row(i)))).collect();
        let correct = covered.iter().filter(|&&i| ds.labels()[i] == target).count();
        let cf = Rule::certainty(correct, covered.len());
        if correct == 0 || cf < params.cf_threshold {
            break;
        }
        active.retain(|&i| ds.labels()[i] != target || !conditions.iter().all(|c| c.holds(ds.row(i))));
        rules.push(Rule { conditions, target_class: target, covered: covered.len(), correct, cf });
    }
    Ok(rules)
}

struct Learner<'a> {
    ds: &'a Dataset,
    attrs: Vec<usize>,
    target: usize,
    max_conditions: usize,
    cuts: Vec<Vec<f64>>,
}

fn foil_gain(p: f64, n: f64, p0: f64, n0: f64) -> f64 {
    p * ((p / (p + n)).log2() - (p0 / (p0 + n0)).log2())
}

impl<'a> Learner<'a> {
    fn new(ds: &'a Dataset, active: &[usize], attrs: &[usize], target: usize, params: &RuleParams) -> Self {
        let mut attrs = attrs.to_vec();
        attrs.dedup();
        let cuts = attrs
            .iter()
            .map(|&a| {
                if ds.attributes()[a].is_numeric() {
                    let col: Vec<f64> = active.iter().map(|&i| ds.value(i, a)).collect();
                    equal_width_cuts(&col, params.bins.max(2))
                } else {
                    Vec::new()
                }
            })
            .collect();
        Learner { ds, max_conditions: params.max_conditions.unwrap_or(attrs.len()), attrs, target, cuts }
    }

    /// Candidate refinements of `conds` on attribute `attrs[k]`.
    fn candidates(&self, k: usize, conds: &[Condition]) -> Vec<Condition> {
        let a = self.attrs[k];
        let existing = conds.iter().find(|c| c.attr == a);
        match &self.ds.attributes()[a].arity() {
            Some(arity) => {
                if existing.is_some() {
                    Vec::new()
                } else {
                    (0..*arity).map(|v| Condition::equals(a, v)).collect()
                }
            }
            None => {
                let current = match existing.map(|c| c.test) {
                    Some(Test::InInterval(iv)) => iv,
                    _ => Interval {
                        lower: f64::NEG_INFINITY,
                        upper: f64::INFINITY,
                        lower_closed: false,
                        upper_closed: false,
                    },
                };
                let mut out = Vec::new();
                for &c in &self.cuts[k] {
                    let below =
                        Interval { lower: f64::NEG_INFINITY, upper: c, lower_closed: false, upper_closed: true };
                    let above = Interval { lower: c, upper: f64::INFINITY, lower_closed: false, upper_closed: false };
                    for half in [below, above] {
                        if let Some(iv) = current.intersect(&half) {
                            if iv != current {
                                out.push(Condition::in_interval(a, iv));
                            }
                        }
                    }
                }
                out
            }
        }
    }

    fn grow(&self, active: &[usize]) -> Option<Vec<Condition>> {
        let ds = self.ds;
        let mut conds: Vec<Condition> = Vec::new();
        let mut covered: Vec<usize> = active.to_vec();
        let count = |rows: &[usize]| {
            let p = rows.iter().filter(|&&i| ds.labels()[i] == self.target).count();
            (p as f64, (rows.len() - p) as f64)
        };
        let (mut p0, mut n0) = count(&covered);
        while n0 > 0.0 {
            let at_cap = conds.len() >= self.max_conditions;
            let mut best: Option<(f64, Condition)> = None;
            for k in 0..self.attrs.len() {
                if at_cap && !conds.iter().any(|c| c.attr == self.attrs[k]) {
                    continue;
                }
                for cand in self.candidates(k, &conds) {
                    let mut p = 0.0;
                    let mut n = 0.0;
                    for &i in &covered {
                        if cand.holds(ds.row(i)) {
                            if ds.labels()[i] == self.target {
                                p += 1.0;
                            } else {
                                n += 1.0;
                            }
                        }
                    }
                    if p == 0.0 {
                        continue;
                    }
                    let gain = foil_gain(p, n, p0, n0);
                    if best.as_ref().is_none_or(|(g, _)| gain > *g + 1e-9) {
                        best = Some((gain, cand));
                    }
                }
            }
            let cand = match best {
                Some((g, c)) if g > 1e-9 => c,
                _ => break,
            };
            match conds.iter_mut().find(|c| c.attr == cand.attr) {
                Some(slot) => *slot = cand,
                None => conds.push(cand),
            }
            covered.retain(|&i| cand.holds(ds.row(i)));
            let (p, n) = count(&covered);
            p0 = p;
            n0 = n;
        }
        if conds.is_empty() {
            None
        } else {
            Some(conds)
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::synth::{concept_truth, generate, SynthName, SyntheticSpec};

    fn toy() -> Dataset {
        generate(&SyntheticSpec::new(SynthName::Toy, 2000, 7)).unwrap()
    }

    #[test]
    fn worked_example_rule() {
        let ds = toy();
        let params = RuleParams { cf_threshold: 0.9, ..Default::default() };
        let rules = learn_rules(&ds, &[0, 1, 2], 1, &params).unwrap();
        assert_eq!(rules.len(), 1);
        let r = &rules[0];
        let mut keys: Vec<String> = r.conditions.iter().map(|c| c.render(ds.attributes())).collect();
        keys.sort();
        assert_eq!(keys, ["(A1=0)", "(A2=1)", "(A3=1)"]);
        assert_eq!(r.conditions[2], Condition::equals(0, 0));
        assert_eq!(r.correct, r.covered);
        let expected = ds.rows().filter(|x| x[0] == 0.0 && x[1] == 1.0 && x[2] == 1.0).count();
        assert_eq!(r.covered, expected);
    }

    #[test]
    fn pair_group_gives_no_confident_rule() {
        let ds = toy();
        let params = RuleParams { cf_threshold: 0.9, ..Default::default() };
        assert!(learn_rules(&ds, &[1, 2], 1, &params).unwrap().is_empty());
    }

    #[test]
    fn single_attribute_concept() {
        let ds = toy();
        let labels: Vec<usize> = ds.rows().map(|x| (x[3] == 1.0) as usize).collect();
        let ds = ds.with_labels(labels).unwrap();
        let rules = learn_rules(&ds, &[0, 3, 5], 1, &RuleParams::default()).unwrap();
        assert_eq!(rules.len(), 1);
        let npos = ds.class_counts()[1];
        assert_eq!(rules[0].conditions, vec![Condition::equals(3, 1)]);
        assert_eq!(rules[0].cf, (npos as f64 + 1.0) / (npos as f64 + 2.0));
    }

    #[test]
    fn stored_counts_replay() {
        let ds = generate(&SyntheticSpec::new(SynthName::BinClassNumDisAttr, 1000, 3)).unwrap();
        let rules = learn_rules(&ds, &[0, 1, 2, 3], 1, &RuleParams::default()).unwrap();
        assert!(!rules.is_empty());
        let mut active: Vec<usize> = (0..ds.n_instances()).collect();
        for r in &rules {
            let cov: Vec<usize> = active.iter().copied().filter(|&i| r.covers(ds.row(i))).collect();
            let ok = cov.iter().filter(|&&i| ds.labels()[i] == 1).count();
            assert_eq!((cov.len(), ok), (r.covered, r.correct));
            assert_eq!(r.cf, Rule::certainty(ok, cov.len()));
            active.retain(|&i| ds.labels()[i] != 1 || !r.covers(ds.row(i)));
        }
    }

    #[test]
    fn pure_rules_cover_conjunctive_concept() {
        let ds = toy();
        let rules =
            learn_rules(&ds, &[0, 1, 2, 3, 4, 5], 1, &RuleParams { cf_threshold: 0.95, ..Default::default() }).unwrap();
        for (i, row) in ds.rows().enumerate() {
            let hit = rules.iter().any(|r| r.covers(row));
            assert_eq!(hit, concept_truth(SynthName::Toy, row) == 1, "row {}", i);
        }
    }

    #[test]
    fn numeric_interval_rule() {
        let ds = generate(&SyntheticSpec::new(SynthName::DisjunctN, 2000, 5)).unwrap();
        let rules = learn_rules(&ds, &[0], 1, &RuleParams::default()).unwrap();
        let r = &rules[0];
        assert_eq!(r.conditions.len(), 1);
        match r.conditions[0].test {
            Test::InInterval(iv) => assert!((iv.lower - 0.5).abs() < 0.05 && iv.upper.is_infinite()),
            _ => panic!("expected an interval"),
        }
    }

    #[test]
    fn empty_subset() {
        assert!(matches!(learn_rules(&toy(), &[], 1, &RuleParams::default()), Err(Error::EmptyAttributeSubset)));
    }
}
