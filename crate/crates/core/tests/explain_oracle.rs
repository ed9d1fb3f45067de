use efc::data::{Attribute, Dataset};
use efc::explain::{
    get_explanations, select_explanation_instances, shapley_sample, ClassChoice, ExplainConfig, ExplanationMatrix,
};
use efc::model::{train_random_forest, ForestParams, Model};
use efc::synth::{generate, SynthName, SyntheticSpec};
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

/// Exact Shapley values by enumerating attribute subsets; absent attributes
/// are averaged over the background rows.
fn exact_shapley(model: &dyn Model, bg: &Dataset, x: &[f64], class: usize) -> Vec<f64> {
    let m = x.len();
    let mut v = vec![0.0; 1 << m];
    let mut y = vec![0.0; m];
    for (mask, val) in v.iter_mut().enumerate() {
        for z in bg.rows() {
            for j in 0..m {
                y[j] = if mask >> j & 1 == 1 { x[j] } else { z[j] };
            }
            *val += model.class_probability(&y, class);
        }
        *val /= bg.n_instances() as f64;
    }
    let fact = |k: usize| (1..=k).map(|i| i as f64).product::<f64>();
    (0..m)
        .map(|j| {
            (0..1usize << m)
                .filter(|s| s >> j & 1 == 0)
                .map(|s| {
                    let k = s.count_ones() as usize;
                    fact(k) * fact(m - k - 1) / fact(m) * (v[s | 1 << j] - v[s])
                })
                .sum()
        })
        .collect()
}

struct FirstAttribute(u64);

impl Model for FirstAttribute {
    fn n_classes(&self) -> usize {
        2
    }
    fn n_attributes(&self) -> usize {
        3
    }
    fn schema_fingerprint(&self) -> u64 {
        self.0
    }
    fn predict_into(&self, x: &[f64], out: &mut [f64]) {
        out[1] = x[0];
        out[0] = 1.0 - x[0];
    }
}

fn binary_dataset(n: usize) -> Dataset {
    let bin = |j| Attribute::nominal(format!("B{}", j), j, vec!["0".into(), "1".into()]);
    let values: Vec<f64> = (0..n).flat_map(|i| [(i % 2) as f64, (i / 2 % 2) as f64, (i / 4 % 2) as f64]).collect();
    let labels = (0..n).map(|i| i % 2).collect();
    Dataset::new("b", (0..3).map(bin).collect(), bin(3), values, labels).unwrap()
}

#[test]
fn additive_model_converges_to_centred_input() {
    let ds = binary_dataset(64);
    let model = FirstAttribute(ds.schema_fingerprint());
    let mut rng = ChaCha8Rng::seed_from_u64(3);
    for i in 0..4 {
        let x = ds.row(i);
        let phi = shapley_sample(&model, &ds, x, 1, 640, &mut rng);
        let exact = exact_shapley(&model, &ds, x, 1);
        assert!((exact[0] - (x[0] - 0.5)).abs() < 1e-12);
        assert!((phi[0] - exact[0]).abs() < 1e-12, "{:?}", phi);
        assert_eq!(&phi[1..], &[0.0, 0.0]);
    }
}

#[test]
fn forest_estimates_track_the_oracle() {
    let ds = generate(&SyntheticSpec::new(SynthName::Toy, 400, 6)).unwrap();
    let forest = train_random_forest(&ds, &ForestParams { tree_count: 25, seed: 1, ..Default::default() }).unwrap();
    let bg = ds.subset(&(0..100).collect::<Vec<_>>());
    let mut rng = ChaCha8Rng::seed_from_u64(9);
    for i in [1usize, 50, 99] {
        let exact = exact_shapley(&forest, &bg, ds.row(i), 1);
        let est = shapley_sample(&forest, &bg, ds.row(i), 1, 2000, &mut rng);
        let sum_gap = (exact.iter().sum::<f64>() - est.iter().sum::<f64>()).abs();
        assert!(sum_gap < 0.02, "efficiency gap {}", sum_gap);
        for (a, b) in exact.iter().zip(&est) {
            assert!((a - b).abs() < 0.05, "{:?} vs {:?}", exact, est);
        }
    }
}

#[test]
fn rows_do_not_depend_on_which_others_are_explained() {
    let ds = generate(&SyntheticSpec::new(SynthName::Toy, 300, 2)).unwrap();
    let forest = train_random_forest(&ds, &ForestParams { tree_count: 10, seed: 1, ..Default::default() }).unwrap();
    let cfg = ExplainConfig { samples_per_attribute: 20, seed: 5, ..Default::default() };
    let (class, idx) = select_explanation_instances(&ds, &cfg).unwrap();
    let all = get_explanations(&ds, &forest, class, &idx, &cfg).unwrap();
    let some = get_explanations(&ds, &forest, class, &idx[3..6], &cfg).unwrap();
    for k in 0..3 {
        assert_eq!(some.row(k), all.row(k + 3));
    }
}

#[test]
fn class_selection_falls_back_and_caps() {
    let ds = generate(&SyntheticSpec::new(SynthName::Toy, 2000, 2)).unwrap();
    let cfg = ExplainConfig { max_to_explain: 100, ..Default::default() };
    let (c, idx) = select_explanation_instances(&ds, &cfg).unwrap();
    assert_eq!((c, idx.len()), (1, 100));
    assert!(idx.windows(2).all(|w| w[0] < w[1]) && idx.iter().all(|&i| ds.labels()[i] == 1));

    let mut labels = vec![0; 200];
    labels[..5].iter_mut().for_each(|l| *l = 1);
    let skewed = ds.subset(&(0..200).collect::<Vec<_>>()).with_labels(labels).unwrap();
    let (c, idx) =
        select_explanation_instances(&skewed, &ExplainConfig { class: ClassChoice::Index(1), ..cfg }).unwrap();
    assert_eq!((c, idx.len()), (0, 100));
}

#[test]
fn matrix_csv_round_trip() {
    let m = ExplanationMatrix::from_rows(vec!["a".into(), "b".into()], vec![vec![0.25, -1.0 / 3.0], vec![0.0, 1e-17]])
        .unwrap();
    let mut buf = Vec::new();
    m.write_csv(&mut buf).unwrap();
    let back = ExplanationMatrix::read_csv(buf.as_slice()).unwrap();
    assert_eq!(back.row(0), m.row(0));
    assert_eq!(back.row(1), m.row(1));
}
