use efc::explain::ExplanationMatrix;
use efc::groups::{collect_groups, importance_order, most_frequent_subsets, noise_floor, prefix_length, set_weights};
use proptest::prelude::*;

fn matrix_strategy() -> impl Strategy<Value = Vec<Vec<f64>>> {
    (2usize..8, 1usize..30).prop_flat_map(|(m, e)| {
        let cell = prop_oneof![Just(0.0), (0u8..4).prop_map(|k| k as f64 / 4.0), -1.0f64..1.0];
        prop::collection::vec(prop::collection::vec(cell, m), e)
    })
}

fn matrix(rows: &[Vec<f64>]) -> ExplanationMatrix {
    ExplanationMatrix::from_rows((0..rows[0].len()).map(|j| format!("A{}", j)).collect(), rows.to_vec()).unwrap()
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(1000))]

    #[test]
    fn marked_prefix_is_minimal(rows in matrix_strategy(), q in 0.01f64..=1.0) {
        let w = set_weights(&matrix(&rows), q).unwrap();
        for (i, row) in rows.iter().enumerate() {
            let total: f64 = row.iter().map(|v| v.abs()).sum();
            let marked = w.marked(i);
            if total == 0.0 {
                prop_assert!(marked.is_empty());
                continue;
            }
            let order = importance_order(row);
            let k = prefix_length(row, &order, q);
            let mut prefix = order[..k].to_vec();
            prefix.sort_unstable();
            prop_assert_eq!(&prefix, &marked);
            let sum: f64 = marked.iter().map(|&j| row[j].abs()).sum();
            prop_assert!(sum >= q * total);
            prop_assert!(sum - row[order[k - 1]].abs() < q * total);
        }
    }

    #[test]
    fn marks_grow_with_threshold(rows in matrix_strategy(), a in 0.01f64..=1.0, b in 0.01f64..=1.0) {
        let (lo, hi) = if a <= b { (a, b) } else { (b, a) };
        let e = matrix(&rows);
        let (wl, wh) = (set_weights(&e, lo).unwrap(), set_weights(&e, hi).unwrap());
        for i in 0..rows.len() {
            let upper = wh.marked(i);
            prop_assert!(wl.marked(i).iter().all(|j| upper.contains(j)));
        }
    }

    #[test]
    fn counts_are_exact_sets(rows in matrix_strategy(), q in 0.01f64..=1.0, noise in 0.0f64..0.5) {
        let w = set_weights(&matrix(&rows), q).unwrap();
        let groups = most_frequent_subsets(&w, noise).unwrap();
        let floor = noise_floor(noise, rows.len());
        for g in &groups {
            prop_assert!(g.attrs.len() >= 2);
            prop_assert!(g.support >= floor);
            let exact = (0..rows.len()).filter(|&i| w.marked(i) == g.attrs).count();
            prop_assert_eq!(g.support, exact);
        }
        for pair in groups.windows(2) {
            prop_assert!(pair[0].support >= pair[1].support);
        }
        let total: usize = groups.iter().map(|g| g.support).sum();
        prop_assert!(total <= rows.len());
    }

    #[test]
    fn collected_groups_are_unique(rows in matrix_strategy()) {
        let g = collect_groups(&matrix(&rows), 0.1, 0.8, 0.1, 0.0).unwrap();
        for (k, a) in g.iter().enumerate() {
            prop_assert_eq!(a.first_seen_rank, k);
            prop_assert!(g[k + 1..].iter().all(|b| b.attrs != a.attrs));
        }
    }
}
