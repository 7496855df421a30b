use std::collections::HashSet;

use erpm::combinatorics::{bell, bell_restricted, stirling2, stirling2_restricted};
use erpm::diagnostics::quantile_sorted;
use erpm::exact::{exact_distribution, kappa_recursive};
use erpm::partition::canonicalize;
use erpm::sampler::run_chain;
use erpm::statistics::{delta_evaluate, evaluate, DyadSimilarity, GroupForm};
use erpm::{
    ChainConfig, CovariateStore, ModelSpec, Partition, ProposalMixture, RelationKind, SizeBounds,
    StatisticSpec as S,
};
use num_bigint::BigUint;
use proptest::prelude::*;

fn partition(max_n: usize) -> impl Strategy<Value = Partition> {
    (1..=max_n)
        .prop_flat_map(|n| prop::collection::vec(0..n, n))
        .prop_map(|labels| canonicalize(&labels).unwrap())
}

fn bounds(n: usize) -> impl Strategy<Value = SizeBounds> {
    (1..=n, 0..=n).prop_map(move |(lo, extra)| SizeBounds::new(lo, Some((lo + extra).min(n))).unwrap())
}

fn covariates(n: usize, seed: u64) -> CovariateStore {
    let mut x = seed;
    let mut next = move || {
        x = x.wrapping_mul(6364136223846793005).wrapping_add(1442695040888963407);
        ((x >> 33) % 7) as f64
    };
    let age: Vec<Option<f64>> = (0..n).map(|i| if i % 5 == 4 { None } else { Some(next()) }).collect();
    let lang: Vec<f64> = (0..n).map(|_| next() % 3.0).collect();
    let mut dy = vec![vec![0.0; n]; n];
    for i in 0..n {
        for j in 0..i {
            let v = next() % 2.0;
            dy[i][j] = v;
            dy[j][i] = v;
        }
    }
    let mut cov = CovariateStore::new(n)
        .with_attribute("lang", &lang)
        .unwrap()
        .with_dyadic("acq", dy)
        .unwrap();
    cov.add_attribute("age", age).unwrap();
    cov
}

fn all_specs() -> Vec<S> {
    vec![
        S::num_groups(),
        S::num_groups_of_size(2),
        S::sum_log_factorial_sizes(),
        S::sum_squared_sizes(),
        S::dyadic_homophily("age", DyadSimilarity::NegAbsDiff),
        S::dyadic_homophily("lang", DyadSimilarity::Match).normalized(),
        S::group_homophily("age", GroupForm::Range),
        S::group_homophily("lang", GroupForm::DistinctCount),
        S::group_homophily("age", GroupForm::Variance).normalized(),
        S::group_homophily("lang", GroupForm::AllSame),
        S::dyadic_covariate("acq"),
        S::dyadic_sociability("age"),
        S::group_sociability("lang").normalized(),
    ]
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(128))]

    #[test]
    fn canonicalization_ignores_label_names(labels in prop::collection::vec(0usize..6, 1..12), shift in 1usize..50) {
        let p = canonicalize(&labels).unwrap();
        let renamed: Vec<String> = labels.iter().map(|l| format!("g{}", l * 7 + shift)).collect();
        prop_assert_eq!(&canonicalize(&renamed).unwrap(), &p);
        // restricted growth: each label is at most one more than every earlier label
        let mut max_seen = None::<usize>;
        for &g in p.membership() {
            prop_assert!(max_seen.map_or(g == 0, |m| g <= m + 1));
            max_seen = Some(max_seen.map_or(g, |m| m.max(g)));
        }
        prop_assert_eq!(Partition::from_membership(p.membership().to_vec()).unwrap(), p);
    }

    #[test]
    fn neighbor_counts_match_brute_force(p in partition(8)) {
        for r in RelationKind::ALL {
            let ns = p.neighbors(r);
            let distinct: HashSet<&Partition> = ns.iter().collect();
            prop_assert_eq!(distinct.len(), ns.len());
            prop_assert!(!distinct.contains(&p));
            prop_assert_eq!(p.neighbor_count(r), ns.len() as u128, "{:?}", r);
        }
    }

    #[test]
    fn stirling_rows_sum_to_bell(n in 0usize..30) {
        let total: BigUint = (0..=n).map(|m| stirling2(n, m)).sum();
        prop_assert_eq!(total, bell(n));
    }

    #[test]
    fn restricted_stirling_rows_sum_to_restricted_bell(n in 1usize..25, lo in 1usize..5, width in 0usize..5) {
        let b = SizeBounds::new(lo, Some(lo + width)).unwrap();
        let total: BigUint = (0..=n).map(|m| stirling2_restricted(n, m, &b)).sum();
        prop_assert_eq!(total, bell_restricted(n, &b));
        prop_assert!(bell_restricted(n, &b) <= bell(n));
    }

    #[test]
    fn delta_matches_full_evaluation(
        p in partition(10),
        seed in any::<u64>(),
        picks in prop::collection::vec(any::<prop::sample::Index>(), 3),
    ) {
        let n = p.n();
        let cov = covariates(n, seed);
        let specs = all_specs();
        let cached: Vec<f64> = evaluate(&p, &specs, &cov).unwrap();
        for r in RelationKind::ALL {
            let ns = p.neighbors(r);
            if ns.is_empty() {
                continue;
            }
            let q = &ns[picks[r.index()].index(ns.len())];
            let d: Vec<f64> = delta_evaluate(&p, q, &specs, &cov, &cached).unwrap();
            let full: Vec<f64> = evaluate(q, &specs, &cov).unwrap();
            for (a, b) in d.iter().zip(&full) {
                prop_assert!((a - b).abs() <= 1e-9 * (1.0 + b.abs()), "{:?}: {} vs {}", r, a, b);
            }
        }
    }

    #[test]
    fn enumeration_respects_bounds_and_sums_to_one(n in 1usize..8, b in (1usize..8).prop_flat_map(bounds), a in -2.0f64..2.0) {
        let m = ModelSpec::new(vec![S::num_groups()], vec![a], b).unwrap();
        match exact_distribution(&m, &CovariateStore::new(n)) {
            Ok(d) => {
                prop_assert!(d.partitions.iter().all(|p| p.respects_bounds(&b)));
                prop_assert!((d.probabilities.iter().sum::<f64>() - 1.0).abs() < 1e-12);
                let kappa: f64 = kappa_recursive(&m.statistics, &m.alpha, n, &b).unwrap();
                prop_assert!((d.log_kappa - kappa.ln()).abs() < 1e-10);
            }
            Err(_) => prop_assert_eq!(bell_restricted(n, &b), BigUint::from(0u8)),
        }
    }

    #[test]
    fn quantiles_are_monotone(mut xs in prop::collection::vec(-1e6f64..1e6, 1..60), q1 in 0.0f64..=1.0, q2 in 0.0f64..=1.0) {
        xs.sort_by(f64::total_cmp);
        let (lo, hi) = if q1 <= q2 { (q1, q2) } else { (q2, q1) };
        let a = quantile_sorted(&xs, lo);
        let b = quantile_sorted(&xs, hi);
        prop_assert!(a <= b);
        prop_assert!(xs[0] <= a && b <= xs[xs.len() - 1]);
    }
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(16))]

    #[test]
    fn identical_seeds_give_identical_traces(seed in any::<u64>(), n in 3usize..12, a in -1.0f64..1.0) {
        let cov = covariates(n, seed);
        let m = ModelSpec::new(
            vec![S::num_groups(), S::group_homophily("lang", GroupForm::AllSame)],
            vec![a, 0.5],
            SizeBounds::unbounded(),
        )
        .unwrap();
        let cfg = ChainConfig {
            seed,
            mixture: ProposalMixture::uniform(),
            burn_in: 50,
            thinning: 3,
            ..Default::default()
        };
        let x = run_chain(&m, &cov, &cfg, 40).unwrap();
        let y = run_chain(&m, &cov, &cfg, 40).unwrap();
        prop_assert_eq!(x, y);
    }
}
