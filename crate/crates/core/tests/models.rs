use efc::model::{accuracy, load_model, save_model, ClassifierKind, Model};
use efc::synth::{concept_truth, generate, SynthName, SyntheticSpec};

#[test]
fn saved_models_predict_identically() {
    let ds = generate(&SyntheticSpec::new(SynthName::BinClassNumDisAttr, 600, 4)).unwrap();
    for kind in [ClassifierKind::DecisionTree, ClassifierKind::NaiveBayes, ClassifierKind::RandomForest] {
        let m = kind.train(&ds, 4).unwrap();
        let mut buf = Vec::new();
        save_model(&m, &mut buf).unwrap();
        let back = load_model(buf.as_slice()).unwrap();
        for x in ds.rows().take(100) {
            assert_eq!(m.predict_proba(x).unwrap(), back.predict_proba(x).unwrap());
        }
    }
}

#[test]
fn tree_and_forest_learn_noise_free_concepts() {
    for name in [SynthName::LogicalConcB, SynthName::BinClassDisAttr, SynthName::MultiVClassDisAttr] {
        let train = generate(&SyntheticSpec::new(name, 2000, 1)).unwrap();
        let test = generate(&SyntheticSpec::new(name, 500, 2)).unwrap();
        for kind in [ClassifierKind::DecisionTree, ClassifierKind::RandomForest] {
            let m = kind.train(&train, 1).unwrap();
            let acc = accuracy(&m, &test).unwrap();
            assert!(acc >= 0.98, "{} {} {}", name, kind.as_str(), acc);
        }
    }
}

#[test]
fn forest_agrees_with_truth_on_numeric_concept() {
    let train = generate(&SyntheticSpec::new(SynthName::DisjunctN, 2000, 1)).unwrap();
    let m = ClassifierKind::RandomForest.train(&train, 3).unwrap();
    let test = generate(&SyntheticSpec::new(SynthName::DisjunctN, 500, 9)).unwrap();
    let agree = test.rows().filter(|x| m.predict(x).unwrap() == concept_truth(SynthName::DisjunctN, x)).count();
    assert!(agree as f64 / 500.0 > 0.97);
}
