//! Property tests for the structural invariants: partition construction,
//! ordered-permutation sampling, permutation weights as a distribution,
//! utility invariances, and report round-trips.

use std::collections::HashMap;

use proptest::prelude::*;

use asymshap_core::oracle::exact_ads_icuws;
use asymshap_core::utility::Utility;
use asymshap_core::{
    centroid_utility, is_ordered_permutation, knn_ads, knn_score_single, make_rng,
    permutation_weight, sample_ordered_permutation, ClassRelation, Dataset, KnnConfig, KnnUtility,
    Method, Metric, OrderedPartition, Permutation, ReportMeta, TableUtility, ValueReport,
    WeightSystem,
};
use itertools::Itertools;
use rand::Rng;

fn arb_assignments(max_n: usize, max_rank: i64) -> impl Strategy<Value = Vec<i64>> {
    prop::collection::vec(-max_rank..=max_rank, 1..=max_n)
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(64))]

    #[test]
    fn assignments_always_build_a_valid_partition(ranks in arb_assignments(12, 5)) {
        let assignments: HashMap<usize, i64> =
            ranks.iter().copied().enumerate().collect();
        let p = OrderedPartition::from_assignments(&assignments).unwrap();

        // classes disjoint, non-empty, covering 0..n-1
        let mut seen = vec![false; ranks.len()];
        for class in p.classes() {
            prop_assert!(!class.is_empty());
            for &id in class {
                prop_assert!(!seen[id]);
                seen[id] = true;
            }
        }
        prop_assert!(seen.iter().all(|&s| s));

        // class order preserves the original rank order
        for (i, &ri) in ranks.iter().enumerate() {
            for (j, &rj) in ranks.iter().enumerate() {
                let rel = p.compare(i, j).unwrap();
                match ri.cmp(&rj) {
                    std::cmp::Ordering::Less => prop_assert_eq!(rel, ClassRelation::Less),
                    std::cmp::Ordering::Equal => prop_assert_eq!(rel, ClassRelation::EqualClass),
                    std::cmp::Ordering::Greater => prop_assert_eq!(rel, ClassRelation::Greater),
                }
            }
        }
    }

    #[test]
    fn sampled_permutations_are_ordered(ranks in arb_assignments(10, 3), seed in 0u64..1000) {
        let assignments: HashMap<usize, i64> =
            ranks.iter().copied().enumerate().collect();
        let p = OrderedPartition::from_assignments(&assignments).unwrap();
        let mut rng = make_rng(seed);
        for _ in 0..5 {
            let perm = sample_ordered_permutation(&p, &mut rng);
            prop_assert!(is_ordered_permutation(&p, &perm).unwrap());
            // a valid bijection: rebuilding it must succeed
            prop_assert!(Permutation::new(perm.order().to_vec()).is_ok());
        }
    }

    #[test]
    fn permutation_weights_form_a_distribution(
        ranks in arb_assignments(5, 2),
        lambda_seed in 0u64..500,
    ) {
        let n = ranks.len();
        let assignments: HashMap<usize, i64> =
            ranks.iter().copied().enumerate().collect();
        let p = OrderedPartition::from_assignments(&assignments).unwrap();
        let mut rng = make_rng(lambda_seed);
        let lambdas: Vec<f64> = (0..n).map(|_| rng.random_range(0.05..10.0)).collect();
        let ws = WeightSystem::new(lambdas, p).unwrap();
        let total: f64 = (0..n)
            .permutations(n)
            .map(|o| permutation_weight(&ws, &Permutation::new(o).unwrap()).unwrap())
            .sum();
        prop_assert!((total - 1.0).abs() < 1e-9, "total={}", total);
    }

    #[test]
    fn report_round_trip_is_identity(
        values in prop::collection::vec(-1e3f64..1e3, 1..12),
        seed in any::<u64>(),
        iterations in any::<u64>(),
        with_uncertainty in any::<bool>(),
    ) {
        let n = values.len();
        let partition = OrderedPartition::single_class(n);
        let uncertainty = with_uncertainty.then(|| values.iter().map(|v| v.abs()).collect());
        let report = ValueReport::new(
            Method::McAds,
            values,
            &partition,
            uncertainty,
            ReportMeta {
                seed,
                iterations,
                utility: "table(n=3)".into(),
                workers: Some(2),
                config_hash: Some("abc".into()),
                tool_version: None,
            },
        );
        let back = ValueReport::from_json(&report.to_json()).unwrap();
        prop_assert_eq!(back, report);
    }

    #[test]
    fn knn_score_ignores_subset_order(
        xs in prop::collection::vec(-5.0f64..5.0, 2..8),
        k in 1usize..5,
        probe in -5.0f64..5.0,
    ) {
        let labels: Vec<usize> = (0..xs.len()).map(|i| i % 2).collect();
        let train = Dataset::from_parts(
            xs.iter().map(|&x| vec![x]).collect(),
            labels,
        ).unwrap();
        let forward: Vec<usize> = (0..xs.len()).collect();
        let mut backward = forward.clone();
        backward.reverse();
        let a = knn_score_single(&train, &forward, &[probe], 0, k, Metric::Euclidean).unwrap();
        let b = knn_score_single(&train, &backward, &[probe], 0, k, Metric::Euclidean).unwrap();
        prop_assert_eq!(a, b);
    }

    #[test]
    fn centroid_duplication_invariance(
        xs in prop::collection::vec(-5.0f64..5.0, 2..8),
        mask in 1usize..200,
    ) {
        let n = xs.len();
        let labels: Vec<usize> = (0..n).map(|i| i % 2).collect();
        let train = Dataset::from_parts(
            xs.iter().map(|&x| vec![x]).collect(),
            labels.clone(),
        ).unwrap();
        let test = Dataset::from_parts(
            vec![vec![-1.0], vec![1.0]],
            vec![0, 1],
        ).unwrap();
        let subset: Vec<usize> = (0..n).filter(|i| mask >> (i % 8) & 1 == 1).collect();
        let doubled: Vec<usize> = subset.iter().chain(&subset).copied().collect();
        let once = centroid_utility(&train, &subset, &test, 0.5).unwrap();
        let twice = centroid_utility(&train, &doubled, &test, 0.5).unwrap();
        prop_assert_eq!(once, twice);
    }
}

proptest! {
    // each case runs a subset-enumeration oracle, so keep the count low
    #![proptest_config(ProptestConfig::with_cases(16))]

    #[test]
    fn knn_recursion_matches_oracle(
        instance_seed in 0u64..10_000,
        k in prop::sample::select(vec![1usize, 2, 3, 5]),
    ) {
        let mut rng = make_rng(instance_seed);
        let n = rng.random_range(4..=9);
        let split = rng.random_range(1..n);
        let feats: Vec<Vec<f64>> = (0..n)
            .map(|_| vec![rng.random_range(-2.0..2.0), rng.random_range(-2.0..2.0)])
            .collect();
        let labels: Vec<usize> = (0..n).map(|_| rng.random_range(0..2)).collect();
        let train = Dataset::from_parts(feats, labels).unwrap();
        let partition = OrderedPartition::new(vec![
            (0..split).collect(),
            (split..n).collect(),
        ]).unwrap();
        let test = Dataset::from_parts(
            (0..3).map(|_| vec![rng.random_range(-2.0..2.0), rng.random_range(-2.0..2.0)]).collect(),
            (0..3).map(|_| rng.random_range(0..2)).collect(),
        ).unwrap();

        let cfg = KnnConfig::new(k, Metric::Euclidean, 0.0).unwrap();
        let fast = knn_ads(&train, &partition, &test, &cfg).unwrap();
        let util = KnnUtility::new(train, test, k, Metric::Euclidean, 0.0).unwrap();
        let ws = WeightSystem::intra_class_uniform(partition);
        let oracle = exact_ads_icuws(&ws, &util).unwrap();
        for (a, b) in fast.values.iter().zip(&oracle.values) {
            prop_assert!((a - b).abs() <= 1e-9, "{} vs {}", a, b);
        }
    }

    #[test]
    fn icuws_oracle_matches_permutation_enumeration(
        instance_seed in 0u64..10_000,
    ) {
        let mut rng = make_rng(instance_seed);
        let n = rng.random_range(3..=6);
        let split = rng.random_range(1..n);
        let partition = OrderedPartition::new(vec![
            (0..split).collect(),
            (split..n).collect(),
        ]).unwrap();
        let v = TableUtility::random(n, &mut rng).unwrap();
        let ws = WeightSystem::intra_class_uniform(partition);
        let general = asymshap_core::oracle::exact_ads_general(&ws, &v).unwrap();
        let fast = exact_ads_icuws(&ws, &v).unwrap();
        for (a, b) in general.values.iter().zip(&fast.values) {
            prop_assert!((a - b).abs() <= 1e-12);
        }
        // efficiency of the full vector
        let all: Vec<usize> = (0..n).collect();
        let total: f64 = fast.values.iter().sum();
        prop_assert!((total - (v.eval(&all) - v.eval(&[]))).abs() < 1e-9);
    }
}
