use std::collections::HashSet;
use std::time::Instant;

use super::{ConstructConfig, Feature, FeatureKind, LogicalOp, NumericOp, RelationalOp};
use crate::data::{cells_from_cuts, discretize, Condition, Dataset};
use crate::error::{Error, Result};

/// Operand conditions for a group: one equality per nominal value, one
/// interval per equal-width cell of a numeric attribute.
pub fn atomic_conditions(ds: &Dataset, group: &[usize], bins: usize) -> Result<Vec<Condition>> {
    operands(ds, group, bins, false)
}

fn is_binary(ds: &Dataset, a: usize) -> bool {
    let values = ds.attributes()[a].values();
    values.len() == 2 && values[0] == "0" && values[1] == "1"
}

fn operands(ds: &Dataset, group: &[usize], bins: usize, binary_literals: bool) -> Result<Vec<Condition>> {
    let mut out = Vec::new();
    for &a in group {
        let attr = ds.attribute(a)?;
        match attr.arity() {
            Some(_) if binary_literals && is_binary(ds, a) => out.push(Condition::equals(a, 1)),
            Some(k) => out.extend((0..k).map(|v| Condition::equals(a, v))),
            None => {
                let cuts = discretize(ds, a, bins)?;
                out.extend(cells_from_cuts(&cuts).into_iter().map(|iv| Condition::in_interval(a, iv)));
            }
        }
    }
    Ok(out)
}

/// Operator-based features for every group; duplicates across groups are
/// dropped by canonical key.
pub fn construct_operator_features(ds: &Dataset, groups: &[Vec<usize>], cfg: &ConstructConfig) -> Result<Vec<Feature>> {
    Ok(construct_operator_features_until(ds, groups, cfg, None)?.0)
}

struct Sink<'a> {
    seen: &'a mut HashSet<String>,
    out: &'a mut Vec<Feature>,
    group: &'a [usize],
    deadline: Option<Instant>,
    expired: bool,
}

impl Sink<'_> {
    fn push(&mut self, kind: FeatureKind) {
        let f = Feature::new(kind, self.group.to_vec());
        if self.seen.insert(f.key().to_string()) {
            self.out.push(f);
            if self.out.len().is_multiple_of(1024) {
                if let Some(d) = self.deadline {
                    self.expired = Instant::now() >= d;
                }
            }
        }
    }
}

/// As [`construct_operator_features`], stopping early once `deadline`
/// passes. The flag reports whether enumeration was cut short.
pub(crate) fn construct_operator_features_until(
    ds: &Dataset,
    groups: &[Vec<usize>],
    cfg: &ConstructConfig,
    deadline: Option<Instant>,
) -> Result<(Vec<Feature>, bool)> {
    cfg.validate()?;
    let mut seen = HashSet::new();
    let mut out = Vec::new();
    for group in groups {
        let mut group = group.clone();
        group.sort_unstable();
        group.dedup();
        if group.is_empty() {
            return Err(Error::EmptyAttributeSubset);
        }
        for &a in &group {
            ds.attribute(a)?;
        }
        let mut sink = Sink { seen: &mut seen, out: &mut out, group: &group, deadline, expired: false };
        if deadline.is_some_and(|d| Instant::now() >= d) {
            return Ok((out, true));
        }
        if cfg.kinds.logical {
            let conds = operands(ds, &group, cfg.bins, cfg.binary_literals)?;
            logical(&conds, cfg, &mut sink);
        }
        let numeric: Vec<usize> = group.iter().copied().filter(|&a| ds.attributes()[a].is_numeric()).collect();
        let nominal: Vec<usize> = group.iter().copied().filter(|&a| ds.attributes()[a].is_nominal()).collect();
        if cfg.kinds.relational && !sink.expired {
            for op in &cfg.relational_ops {
                for (i, &a) in numeric.iter().enumerate() {
                    for (k, &b) in numeric.iter().enumerate() {
                        let keep = match op {
                            RelationalOp::LessThan => i != k,
                            RelationalOp::NotEqual => i < k,
                        };
                        if keep {
                            sink.push(FeatureKind::Relational { op: *op, left: a, right: b });
                        }
                    }
                }
            }
        }
        if cfg.kinds.cartesian && !sink.expired {
            for (i, &a) in nominal.iter().enumerate() {
                for &b in &nominal[i + 1..] {
                    let right_arity = ds.attributes()[b].arity().unwrap_or(0);
                    sink.push(FeatureKind::Cartesian { left: a, right: b, right_arity });
                }
            }
        }
        if cfg.kinds.numerical && !sink.expired {
            for op in &cfg.numeric_ops {
                for (i, &a) in numeric.iter().enumerate() {
                    for (k, &b) in numeric.iter().enumerate() {
                        let keep = match op {
                            NumericOp::Add => i < k,
                            NumericOp::Subtract | NumericOp::Divide => i != k,
                        };
                        if !keep {
                            continue;
                        }
                        if *op == NumericOp::Divide && ds.rows().any(|r| r[b] == 0.0) {
                            log::debug!("dropping {} / {}: zero divisor in training data", a, b);
                            continue;
                        }
                        sink.push(FeatureKind::Numerical { op: *op, left: a, right: b });
                    }
                }
            }
        }
        if sink.expired {
            return Ok((out, true));
        }
    }
    Ok((out, false))
}

fn logical(conds: &[Condition], cfg: &ConstructConfig, sink: &mut Sink<'_>) {
    let n = conds.len();
    for op in &cfg.logical_ops {
        for i in 0..n {
            for j in i + 1..n {
                if sink.expired {
                    return;
                }
                let (a, b) = (conds[i], conds[j]);
                if a.attr == b.attr {
                    continue;
                }
                sink.push(FeatureKind::Logical { op: *op, operands: vec![a, b] });
                if *op == LogicalOp::Implies && cfg.implies_both_directions {
                    sink.push(FeatureKind::Logical { op: *op, operands: vec![b, a] });
                }
                if op.depth() == 3 {
                    for c in &conds[j + 1..] {
                        if c.attr != a.attr && c.attr != b.attr {
                            sink.push(FeatureKind::Logical { op: *op, operands: vec![a, b, *c] });
                        }
                    }
                }
            }
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::construct::FeatureKinds;
    use crate::data::Attribute;
    use crate::synth::{generate, SynthName, SyntheticSpec};

    fn logical_only(ops: Vec<LogicalOp>) -> ConstructConfig {
        ConstructConfig {
            kinds: FeatureKinds { logical: true, ..FeatureKinds::NONE },
            logical_ops: ops,
            ..Default::default()
        }
    }

    #[test]
    fn condition_counts() {
        let ds = generate(&SyntheticSpec::new(SynthName::BinClassNumDisAttr, 100, 1)).unwrap();
        assert_eq!(atomic_conditions(&ds, &[0], 4).unwrap().len(), 3);
        let cells = atomic_conditions(&ds, &[2], 4).unwrap();
        assert_eq!(cells.len(), 4);
        for row in ds.rows() {
            assert_eq!(cells.iter().filter(|c| c.holds(row)).count(), 1);
        }
        let toy = generate(&SyntheticSpec::new(SynthName::Toy, 100, 1)).unwrap();
        assert_eq!(atomic_conditions(&toy, &[0], 4).unwrap().len(), 2);
    }

    #[test]
    fn worked_example_count() {
        let ds = generate(&SyntheticSpec::new(SynthName::Toy, 200, 1)).unwrap();
        let groups: Vec<Vec<usize>> = vec![
            vec![1, 2],
            vec![3, 4],
            vec![0, 1, 2],
            vec![0, 3, 4],
            vec![2, 3, 4],
            vec![1, 2, 4],
            vec![1, 2, 3],
            vec![1, 3, 4],
        ];
        let cfg = ConstructConfig {
            binary_literals: true,
            implies_both_directions: false,
            ..logical_only(vec![LogicalOp::Equiv, LogicalOp::Xor, LogicalOp::Implies])
        };
        let f = construct_operator_features(&ds, &groups, &cfg).unwrap();
        assert_eq!(f.len(), 30);
        let names: Vec<String> = f.iter().map(|f| f.render(ds.attributes())).collect();
        assert!(names.contains(&"(A1=1) => (A5=1)".to_string()));
    }

    #[test]
    fn numeric_pair() {
        let ds = Dataset::new(
            "t",
            vec![Attribute::numeric("A", 0), Attribute::numeric("B", 1)],
            Attribute::nominal("c", 2, vec!["0".into(), "1".into()]),
            vec![0.0, 1.0, 2.0, 3.0],
            vec![0, 1],
        )
        .unwrap();
        let cfg = ConstructConfig {
            kinds: FeatureKinds { relational: true, numerical: true, ..FeatureKinds::NONE },
            ..Default::default()
        };
        let f = construct_operator_features(&ds, &[vec![0, 1]], &cfg).unwrap();
        let names: Vec<String> = f.iter().map(|f| f.render(ds.attributes())).collect();
        // A is zero in the first row, so B / A is dropped
        assert_eq!(names, ["A < B", "B < A", "A != B", "A + B", "A - B", "B - A", "A / B"]);
    }

    #[test]
    fn cartesian_pairs() {
        let ds = generate(&SyntheticSpec::new(SynthName::BinClassDisAttr, 50, 1)).unwrap();
        let cfg =
            ConstructConfig { kinds: FeatureKinds { cartesian: true, ..FeatureKinds::NONE }, ..Default::default() };
        let f = construct_operator_features(&ds, &[vec![0, 1, 2]], &cfg).unwrap();
        assert_eq!(f.len(), 3);
        let aug = crate::data::augment(&ds, &f[..1]).unwrap();
        assert_eq!(aug.attributes()[5].arity(), Some(9));
    }

    #[test]
    fn duplicates_across_groups_removed() {
        let ds = generate(&SyntheticSpec::new(SynthName::Toy, 100, 1)).unwrap();
        let cfg = logical_only(vec![LogicalOp::Xor]);
        let a = construct_operator_features(&ds, &[vec![0, 1]], &cfg).unwrap();
        let b = construct_operator_features(&ds, &[vec![0, 1], vec![1, 0], vec![0, 1]], &cfg).unwrap();
        assert_eq!(a, b);
        assert_eq!(a.len(), 4);
    }

    #[test]
    fn deadline_in_the_past() {
        let ds = generate(&SyntheticSpec::new(SynthName::Toy, 100, 1)).unwrap();
        let (f, cut) = construct_operator_features_until(
            &ds,
            &[vec![0, 1, 2, 3, 4, 5]],
            &ConstructConfig::default(),
            Some(Instant::now()),
        )
        .unwrap();
        assert!(cut && f.is_empty());
    }
}
