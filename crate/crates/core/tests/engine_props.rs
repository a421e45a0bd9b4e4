mod common;

use std::collections::BTreeSet;

use proptest::prelude::*;
use spgemm_core::engine::{max_workers, HashAccumulator, DEFAULT_MULTIPLIER};
use spgemm_core::oracle::{compare, oracle_spgemm};
use spgemm_core::{spgemm, CsrMatrix, Engine, SpgemmConfig};

fn product(a: &CsrMatrix, b: &CsrMatrix, config: SpgemmConfig) -> CsrMatrix {
    spgemm(a, b, &config).unwrap().0
}

fn cfg(workers: usize) -> SpgemmConfig {
    SpgemmConfig::default().with_workers(workers)
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(1000))]

    #[test]
    fn engine_matches_oracle((a, b) in common::sparse_pair(256, 0.1)) {
        let c = product(&a, &b, cfg(2));
        prop_assert!(c.validate().is_empty());
        let expected = oracle_spgemm(&a, &b).unwrap();
        let cmp = compare(&c, &expected);
        prop_assert!(cmp.structure_equal);
        prop_assert!(cmp.passes(1e-12), "max rel error {}", cmp.max_rel_error);
    }
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(64))]

    #[test]
    fn phases_agree_on_row_sizes((a, b) in common::sparse_pair(64, 0.3)) {
        let engine = Engine::new(cfg(3)).unwrap();
        let plan = engine.plan(&a, &b).unwrap();
        let row_ptr = engine.allocation_phase(&a, &b, &plan).unwrap();
        let c = engine.accumulation_phase(&a, &b, &plan, &row_ptr).unwrap();
        prop_assert_eq!(c.row_ptr(), &row_ptr[..]);
    }

    #[test]
    fn structure_independent_of_workers_and_tables((a, b) in common::sparse_pair(96, 0.2)) {
        let reference = product(&a, &b, cfg(1));
        for workers in [1, 4, max_workers()] {
            for shared in [false, true] {
                let c = product(&a, &b, cfg(workers).with_shared_tables(shared));
                prop_assert_eq!(c.row_ptr(), reference.row_ptr());
                prop_assert_eq!(c.col_idx(), reference.col_idx());
                if shared {
                    prop_assert!(compare(&c, &reference).passes(1e-12));
                } else {
                    prop_assert_eq!(c.values(), reference.values());
                }
            }
        }
    }

    #[test]
    fn grouping_does_not_change_output((a, b) in common::sparse_pair(96, 0.2)) {
        let reference = product(&a, &b, cfg(2));
        let perturbed = SpgemmConfig { group_thresholds: [1, 2, 4], ..cfg(2) };
        let c = product(&a, &b, perturbed.clone());
        prop_assert_eq!(&c, &reference);
        let c = product(&a, &b, perturbed.with_shared_tables(true));
        prop_assert_eq!(c.col_idx(), reference.col_idx());
        prop_assert!(compare(&c, &reference).passes(1e-12));
    }

    #[test]
    fn engine_matches_dense_loop((a, b) in common::sparse_pair(40, 0.3)) {
        let c = product(&a, &b, cfg(2).with_shared_tables(true));
        common::assert_matches_dense(&c, &common::dense_product(&a, &b), 1e-12);
    }

    #[test]
    fn hash_insert_order_irrelevant(
        keys in proptest::collection::vec(0usize..5000, 0..200).prop_shuffle(),
        seed in any::<u64>(),
    ) {
        let mut shuffled = keys.clone();
        let n = shuffled.len();
        for i in (1..n).rev() {
            shuffled.swap(i, (seed as usize).wrapping_mul(i + 7) % (i + 1));
        }
        let set: BTreeSet<usize> = keys.iter().copied().collect();
        let size = (2 * set.len()).max(1).next_power_of_two();
        let mut tables = Vec::new();
        for order in [&keys, &shuffled] {
            let t = HashAccumulator::new(size, DEFAULT_MULTIPLIER).unwrap();
            for &k in order.iter() {
                t.insert(k).unwrap();
            }
            prop_assert_eq!(t.unique_count(), set.len());
            tables.push(t.keys().into_iter().collect::<BTreeSet<_>>());
        }
        prop_assert_eq!(&tables[0], &set);
        prop_assert_eq!(&tables[1], &set);
    }
}

#[test]
fn concurrent_inserts_count_union() {
    for seed in 0..100u64 {
        let workers = 8;
        let sets: Vec<Vec<usize>> = (0..workers)
            .map(|w| {
                (0..400)
                    .map(|i| ((i * 37 + w * 113) as u64 ^ seed) as usize % 900)
                    .collect()
            })
            .collect();
        let union: BTreeSet<usize> = sets.iter().flatten().copied().collect();
        let table = HashAccumulator::with_values(1024, DEFAULT_MULTIPLIER).unwrap();
        std::thread::scope(|s| {
            for keys in &sets {
                let table = &table;
                s.spawn(move || {
                    for &k in keys {
                        table.insert_accumulate(k, 1.0, 1.0).unwrap();
                    }
                });
            }
        });
        assert_eq!(table.unique_count(), union.len(), "seed {seed}");
        let total: f64 = union.iter().map(|&k| table.value_of(k).unwrap()).sum();
        assert_eq!(total, (workers * 400) as f64);
    }
}
