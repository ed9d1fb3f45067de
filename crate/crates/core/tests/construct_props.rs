use efc::construct::{
    construct_operator_features, ConstructConfig, Feature, FeatureKind, FeatureKinds, FeatureValue, LogicalOp,
    ThresholdVariant,
};
use efc::data::{augment, Condition};
use efc::synth::{generate, SynthName, SyntheticSpec};
use proptest::prelude::*;

fn conditions() -> impl Strategy<Value = Vec<Condition>> {
    prop::collection::btree_map(0usize..6, 0usize..2, 1..6)
        .prop_map(|m| m.into_iter().map(|(a, v)| Condition::equals(a, v)).collect())
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(200))]

    #[test]
    fn num_of_n_in_range(conds in conditions(), seed in 0u64..50) {
        let ds = generate(&SyntheticSpec::new(SynthName::Toy, 50, seed)).unwrap();
        let n = conds.len();
        let f = Feature::new(FeatureKind::Threshold { variant: ThresholdVariant::NumOfN, conditions: conds.clone() }, vec![]);
        for row in ds.rows() {
            match f.evaluate(row).unwrap() {
                FeatureValue::Count(k) => {
                    prop_assert!(k <= n);
                    prop_assert_eq!(k, conds.iter().filter(|c| c.holds(row)).count());
                }
                other => prop_assert!(false, "unexpected {:?}", other),
            }
        }
    }

    #[test]
    fn symmetric_operators_share_keys(a in 0usize..6, b in 0usize..6, va in 0usize..2, vb in 0usize..2) {
        prop_assume!(a != b);
        let (x, y) = (Condition::equals(a, va), Condition::equals(b, vb));
        for op in [LogicalOp::And, LogicalOp::Or, LogicalOp::Equiv, LogicalOp::Xor] {
            let f = Feature::new(FeatureKind::Logical { op, operands: vec![x, y] }, vec![]);
            let g = Feature::new(FeatureKind::Logical { op, operands: vec![y, x] }, vec![]);
            prop_assert_eq!(f.key(), g.key());
        }
        let f = Feature::new(FeatureKind::Logical { op: LogicalOp::Implies, operands: vec![x, y] }, vec![]);
        let g = Feature::new(FeatureKind::Logical { op: LogicalOp::Implies, operands: vec![y, x] }, vec![]);
        prop_assert_ne!(f.key(), g.key());
    }
}

#[test]
fn augmented_columns_follow_features() {
    let ds = generate(&SyntheticSpec::new(SynthName::BinClassNumDisAttr, 300, 2)).unwrap();
    let cfg = ConstructConfig { kinds: FeatureKinds::all(), ..Default::default() };
    let f = construct_operator_features(&ds, &[vec![0, 1, 2], vec![2, 3]], &cfg).unwrap();
    assert!(f.iter().any(|f| f.kind_name() == "cartesian"));
    assert!(f.iter().any(|f| f.kind_name() == "relational"));
    let aug = augment(&ds, &f).unwrap();
    assert_eq!(aug.n_attributes(), ds.n_attributes() + f.len());
    for (k, feat) in f.iter().enumerate() {
        assert_eq!(aug.attributes()[ds.n_attributes() + k].name, feat.render(ds.attributes()));
    }
    for i in 0..ds.n_instances() {
        assert_eq!(&aug.row(i)[..ds.n_attributes()], ds.row(i));
    }
}

#[test]
fn wider_groups_never_shrink_the_enumeration() {
    let ds = generate(&SyntheticSpec::new(SynthName::Toy, 100, 1)).unwrap();
    let cfg = ConstructConfig::default();
    let small = construct_operator_features(&ds, &[vec![1, 2]], &cfg).unwrap();
    let big = construct_operator_features(&ds, &[vec![0, 1, 2, 3, 4, 5]], &cfg).unwrap();
    assert!(small.iter().all(|f| big.iter().any(|g| g.key() == f.key())));
    assert!(big.len() > small.len());
}
