use efc::mdl::mdl_score;
use proptest::prelude::*;

fn column_and_labels() -> impl Strategy<Value = (Vec<f64>, Vec<usize>, usize)> {
    (2usize..5, 1usize..200).prop_flat_map(|(c, n)| {
        (prop::collection::vec((0u8..5).prop_map(f64::from), n), prop::collection::vec(0..c, n), Just(c))
    })
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(300))]

    #[test]
    fn invariant_under_row_permutation((col, labels, c) in column_and_labels(), seed in any::<u64>()) {
        let base = mdl_score(&col, &labels, c).unwrap();
        let n = col.len();
        let mut idx: Vec<usize> = (0..n).collect();
        // deterministic Fisher-Yates driven by the seed
        let mut s = seed | 1;
        for i in (1..n).rev() {
            s ^= s << 13;
            s ^= s >> 7;
            s ^= s << 17;
            idx.swap(i, (s % (i as u64 + 1)) as usize);
        }
        let pc: Vec<f64> = idx.iter().map(|&i| col[i]).collect();
        let pl: Vec<usize> = idx.iter().map(|&i| labels[i]).collect();
        prop_assert!((mdl_score(&pc, &pl, c).unwrap() - base).abs() < 1e-9);
    }

    #[test]
    fn invariant_under_relabelling((col, labels, c) in column_and_labels()) {
        let base = mdl_score(&col, &labels, c).unwrap();
        let swapped: Vec<usize> = labels.iter().map(|&l| c - 1 - l).collect();
        prop_assert!((mdl_score(&col, &swapped, c).unwrap() - base).abs() < 1e-9);
        let renamed: Vec<f64> = col.iter().map(|v| 4.0 - v).collect();
        prop_assert!((mdl_score(&renamed, &labels, c).unwrap() - base).abs() < 1e-9);
    }

    #[test]
    fn constant_never_positive((col, labels, c) in column_and_labels()) {
        prop_assert!(mdl_score(&vec![3.0; col.len()], &labels, c).unwrap() <= 1e-12);
    }
}
