use erpm::estimator::{estimate, EstimationConfig};
use erpm::exact::{exact_distribution, newton_mle_size_only, ModelSpec};
use erpm::linalg;
use erpm::sampler::{ChainConfig, ProposalMixture};
use erpm::statistics::{observed_statistics, DyadSimilarity, GroupForm};
use erpm::{CovariateStore, Partition, SizeBounds, StatisticSpec as S};

fn observed() -> Partition {
    Partition::from_membership(vec![0, 0, 0, 1, 1, 2, 2, 2, 2, 3]).unwrap()
}

fn compare(specs: Vec<S>, bounds: SizeBounds, seed: u64) {
    let p = observed();
    let cov = CovariateStore::new(10);
    let s_obs: Vec<f64> = observed_statistics(&p, &specs, &cov).unwrap();
    let mle = newton_mle_size_only(&specs, &s_obs, 10, &bounds).unwrap();
    let m = ModelSpec::zeros(specs, bounds);
    let chain = ChainConfig { seed, ..Default::default() };
    let r = estimate(&m, &p, &cov, &EstimationConfig::default(), &chain).unwrap();
    assert!(r.converged, "{:?}", r.convergence_ratios);
    for k in 0..mle.len() {
        let tol = f64::max(0.05, 2.0 * r.standard_errors[k]);
        assert!(
            (r.alpha_hat[k] - mle[k]).abs() < tol,
            "k={k}: estimate {} vs mle {} (tol {tol})",
            r.alpha_hat[k],
            mle[k]
        );
    }
}

#[test]
fn num_groups_matches_exact_mle() {
    compare(vec![S::num_groups()], SizeBounds::unbounded(), 11);
}

#[test]
fn two_size_statistics_match_exact_mle() {
    compare(vec![S::num_groups(), S::sum_squared_sizes()], SizeBounds::unbounded(), 12);
}

#[test]
fn bounded_support_matches_exact_mle() {
    compare(
        vec![S::num_groups(), S::sum_squared_sizes()],
        SizeBounds::new(1, Some(4)).unwrap(),
        13,
    );
}

#[test]
fn deterministic_given_seed() {
    let p = observed();
    let cov = CovariateStore::new(10);
    let m = ModelSpec::zeros(vec![S::num_groups()], SizeBounds::unbounded());
    let cfg = EstimationConfig {
        subphases: 2,
        phase3_samples: 200,
        ..Default::default()
    };
    let chain = ChainConfig { seed: 4, ..Default::default() };
    let a = estimate(&m, &p, &cov, &cfg, &chain).unwrap();
    let b = estimate(&m, &p, &cov, &cfg, &chain).unwrap();
    assert_eq!(a, b);
}

/// Newton-Raphson on the enumerated distribution, with exact standard errors.
fn enumerated_mle(m: &ModelSpec<f64>, cov: &CovariateStore, s_obs: &[f64]) -> (Vec<f64>, Vec<f64>) {
    let k = s_obs.len();
    let mut alpha = vec![0.0; k];
    for _ in 0..100 {
        let d = exact_distribution(&m.with_alpha(alpha.clone()), cov).unwrap();
        let mean = d.expected_statistics();
        let mut c = vec![vec![0.0; k]; k];
        for (s, pr) in d.statistics.iter().zip(&d.probabilities) {
            for a in 0..k {
                for b in 0..k {
                    c[a][b] += pr * (s[a] - mean[a]) * (s[b] - mean[b]);
                }
            }
        }
        let grad: Vec<f64> = s_obs.iter().zip(&mean).map(|(o, e)| o - e).collect();
        let step = linalg::solve(&c, &grad).unwrap();
        let ll = |a: &[f64]| {
            let d = exact_distribution(&m.with_alpha(a.to_vec()), cov).unwrap();
            a.iter().zip(s_obs).map(|(x, y)| x * y).sum::<f64>() - d.log_kappa
        };
        let base = ll(&alpha);
        let mut t = 1.0;
        let mut next: Vec<f64> = alpha.iter().zip(&step).map(|(a, d)| a + d).collect();
        while ll(&next) < base - 1e-12 {
            t /= 2.0;
            next = alpha.iter().zip(&step).map(|(a, d)| a + t * d).collect();
        }
        alpha = next;
        if step.iter().all(|d| d.abs() < 1e-10) {
            let inv = linalg::inverse(&c).unwrap();
            return (alpha, (0..k).map(|i| inv[i][i].sqrt()).collect());
        }
    }
    panic!("newton did not converge");
}

#[test]
fn covariate_model_matches_enumerated_mle() {
    let n = 9;
    let cov = CovariateStore::new(n)
        .with_attribute("x", &[1.0, 4.0, 2.0, 2.0, 5.0, 0.0, 3.0, 1.0, 4.0])
        .unwrap()
        .with_attribute("c", &[0.0, 1.0, 1.0, 0.0, 2.0, 1.0, 0.0, 2.0, 1.0])
        .unwrap()
        .with_dyadic("z", {
            let mut z = vec![vec![0.0; n]; n];
            for (i, j) in [(0, 1), (0, 3), (2, 3), (4, 8), (5, 6), (1, 7), (6, 7), (2, 5)] {
                z[i][j] = 1.0;
                z[j][i] = 1.0;
            }
            z
        })
        .unwrap();
    let specs = vec![
        S::num_groups(),
        S::group_homophily("x", GroupForm::Range),
        S::dyadic_homophily("c", DyadSimilarity::Match),
        S::dyadic_covariate("z"),
    ];
    let p = Partition::from_membership(vec![0, 1, 1, 0, 2, 1, 2, 0, 2]).unwrap();
    let m = ModelSpec::zeros(specs, SizeBounds::unbounded());
    let s_obs: Vec<f64> = observed_statistics(&p, &m.statistics, &cov).unwrap();
    let (mle, se) = enumerated_mle(&m, &cov, &s_obs);
    let chain = ChainConfig {
        seed: 21,
        mixture: ProposalMixture::uniform(),
        ..Default::default()
    };
    let r = estimate(&m, &p, &cov, &EstimationConfig::default(), &chain).unwrap();
    assert!(r.converged, "{:?}", r.convergence_ratios);
    for k in 0..mle.len() {
        let tol = f64::max(0.05, 0.2 * se[k]);
        assert!((r.alpha_hat[k] - mle[k]).abs() < tol, "k={k}: {} vs {} (tol {tol})", r.alpha_hat[k], mle[k]);
        let rel = (r.standard_errors[k] - se[k]).abs() / se[k];
        assert!(rel < 0.15, "k={k}: s.e. {} vs exact {}", r.standard_errors[k], se[k]);
    }
}
