//! Exact computations: support enumeration, exact probabilities, the
//! normalizing-constant recursion for size-based statistics, exact moments,
//! Newton-Raphson maximum likelihood, and the neutrality/consistency checks.

use std::collections::HashMap;

use num_bigint::BigUint;
use num_rational::Ratio;
use serde::{Deserialize, Serialize};

use crate::combinatorics::{ln_binomial_row, CountTable};
use crate::error::{Error, Result};
use crate::linalg::{self, Matrix};
use crate::partition::{Partition, SizeBounds};
use crate::scalar::{log_sum_exp, Real};
use crate::statistics::{CompiledStats, CovariateStore, StatVector, StatisticSpec};

/// Default upper limit on `n` for full enumeration (`B_12 ≈ 4.2 million`).
pub const DEFAULT_ENUMERATION_CAP: usize = 12;

/// Statistics, parameters and support of an exponential random partition model.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ModelSpec<T = f64> {
    pub statistics: Vec<StatisticSpec>,
    pub alpha: Vec<T>,
    #[serde(default)]
    pub bounds: SizeBounds,
}

impl<T: Real> ModelSpec<T> {
    pub fn new(statistics: Vec<StatisticSpec>, alpha: Vec<T>, bounds: SizeBounds) -> Result<Self> {
        let m = Self {
            statistics,
            alpha,
            bounds,
        };
        m.validate()?;
        Ok(m)
    }

    /// Model with every parameter set to zero (the uniform distribution on the support).
    pub fn zeros(statistics: Vec<StatisticSpec>, bounds: SizeBounds) -> Self {
        let alpha = vec![T::zero(); statistics.len()];
        Self {
            statistics,
            alpha,
            bounds,
        }
    }

    pub fn validate(&self) -> Result<()> {
        if self.alpha.len() != self.statistics.len() {
            return Err(Error::Dimension(format!(
                "{} parameters for {} statistics",
                self.alpha.len(),
                self.statistics.len()
            )));
        }
        if self.alpha.iter().any(|a| !a.is_finite()) {
            return Err(Error::Config("parameters must be finite".into()));
        }
        Ok(())
    }

    pub fn with_alpha(&self, alpha: Vec<T>) -> Self {
        Self {
            statistics: self.statistics.clone(),
            alpha,
            bounds: self.bounds,
        }
    }

    pub fn is_size_only(&self) -> bool {
        self.statistics.iter().all(StatisticSpec::is_size_based)
    }

    pub fn log_weight(&self, stats: &[T]) -> T {
        self.alpha.iter().zip(stats).map(|(&a, &s)| a * s).sum()
    }

    pub fn index_of(&self, spec: &StatisticSpec) -> Option<usize> {
        self.statistics.iter().position(|s| s == spec)
    }
}

/// Iterates over all set partitions of `n` actors as restricted-growth strings,
/// in lexicographic order, using constant extra memory per step.
pub struct PartitionIter {
    current: Vec<usize>,
    prefix_max: Vec<usize>,
    done: bool,
}

impl PartitionIter {
    pub fn new(n: usize) -> Self {
        Self {
            current: vec![0; n],
            prefix_max: vec![0; n],
            done: n == 0,
        }
    }
}

impl Iterator for PartitionIter {
    type Item = Partition;

    fn next(&mut self) -> Option<Partition> {
        if self.done {
            return None;
        }
        let out = Partition::from_canonical_unchecked(self.current.clone());
        let n = self.current.len();
        // prefix_max[i] = max(current[0..i]) for i >= 1
        let mut i = n;
        loop {
            if i <= 1 {
                self.done = true;
                break;
            }
            i -= 1;
            if self.current[i] <= self.prefix_max[i] {
                self.current[i] += 1;
                let m = self.prefix_max[i].max(self.current[i]);
                for j in (i + 1)..n {
                    self.current[j] = 0;
                    self.prefix_max[j] = m;
                }
                break;
            }
        }
        Some(out)
    }
}

/// All partitions of `n` actors whose block sizes respect `bounds`.
pub fn enumerate_partitions(n: usize, bounds: &SizeBounds) -> Result<Vec<Partition>> {
    enumerate_partitions_capped(n, bounds, DEFAULT_ENUMERATION_CAP)
}

pub fn enumerate_partitions_capped(
    n: usize,
    bounds: &SizeBounds,
    cap: usize,
) -> Result<Vec<Partition>> {
    if n > cap {
        return Err(Error::EnumerationCap { n, cap });
    }
    Ok(PartitionIter::new(n)
        .filter(|p| p.respects_bounds(bounds))
        .collect())
}

/// The full distribution over an enumerated support.
#[derive(Clone, Debug)]
pub struct ExactDistribution<T = f64> {
    pub partitions: Vec<Partition>,
    pub probabilities: Vec<T>,
    pub statistics: Vec<StatVector<T>>,
    pub log_kappa: T,
}

impl<T: Real> ExactDistribution<T> {
    pub fn probability_of(&self, p: &Partition) -> T {
        self.partitions
            .binary_search(p)
            .map_or(T::zero(), |i| self.probabilities[i])
    }

    pub fn index(&self) -> HashMap<&Partition, usize> {
        self.partitions.iter().enumerate().map(|(i, p)| (p, i)).collect()
    }

    pub fn expected_statistics(&self) -> StatVector<T> {
        let k = self.statistics.first().map_or(0, Vec::len);
        let mut e = vec![T::zero(); k];
        for (p, s) in self.probabilities.iter().zip(&self.statistics) {
            for (acc, &v) in e.iter_mut().zip(s) {
                *acc = *acc + *p * v;
            }
        }
        e
    }

    /// Log-likelihood of `p` (which must be in the support).
    pub fn log_likelihood(&self, p: &Partition) -> Option<T> {
        let i = self.partitions.binary_search(p).ok()?;
        Some(self.probabilities[i].ln())
    }
}

pub fn exact_distribution<T: Real>(
    m: &ModelSpec<T>,
    cov: &CovariateStore<T>,
) -> Result<ExactDistribution<T>> {
    exact_distribution_capped(m, cov, DEFAULT_ENUMERATION_CAP)
}

pub fn exact_distribution_capped<T: Real>(
    m: &ModelSpec<T>,
    cov: &CovariateStore<T>,
    cap: usize,
) -> Result<ExactDistribution<T>> {
    m.validate()?;
    let n = cov.n();
    let compiled = CompiledStats::new(&m.statistics, cov)?;
    let partitions = enumerate_partitions_capped(n, &m.bounds, cap)?;
    if partitions.is_empty() {
        return Err(Error::EmptySupport { n });
    }
    let statistics = partitions
        .iter()
        .map(|p| compiled.evaluate(p))
        .collect::<Result<Vec<_>>>()?;
    let logw: Vec<T> = statistics.iter().map(|s| m.log_weight(s)).collect();
    let log_kappa = log_sum_exp(&logw);
    let probabilities = logw.iter().map(|&l| (l - log_kappa).exp()).collect();
    Ok(ExactDistribution {
        partitions,
        probabilities,
        statistics,
        log_kappa,
    })
}

/// Normalizing constants and moments of a size-only model for `0..=n` actors.
#[derive(Clone, Debug)]
pub struct KappaSequence<T = f64> {
    /// `log κ'_i` (`-inf` when no admissible partition of `i` actors exists).
    pub log_kappa: Vec<T>,
    /// `E_i[s]` for each `i`.
    pub mean: Vec<StatVector<T>>,
    /// `Cov_i[s]` for each `i`.
    pub covariance: Vec<Matrix<T>>,
}

impl<T: Real> KappaSequence<T> {
    pub fn kappa(&self, n: usize) -> T {
        self.log_kappa[n].exp()
    }
}

fn size_tables<T: Real>(specs: &[StatisticSpec], n: usize) -> Result<Vec<Vec<T>>> {
    specs
        .iter()
        .map(|s| {
            if !s.is_size_based() {
                return Err(Error::NotSizeBased(s.to_string()));
            }
            Ok((0..=n)
                .map(|g| if g == 0 { T::zero() } else { s.size_function(g).unwrap() })
                .collect())
        })
        .collect()
}

/// Builds `κ'_0..κ'_n` through `κ'_{i+1} = Σ_s C(i, i+1-s) exp(Σ_k α_k f_k(s)) κ'_{i+1-s}`,
/// summing over admissible sizes `s`, in log space. Means and covariances
/// follow from differentiating the same recursion term by term: each term is a
/// mixture component in which the block holding the last actor has size `s`.
pub fn kappa_sequence<T: Real>(
    specs: &[StatisticSpec],
    alpha: &[T],
    n: usize,
    bounds: &SizeBounds,
) -> Result<KappaSequence<T>> {
    if alpha.len() != specs.len() {
        return Err(Error::Dimension(format!(
            "{} parameters for {} statistics",
            alpha.len(),
            specs.len()
        )));
    }
    let k = specs.len();
    let f = size_tables::<T>(specs, n)?;
    let block_logw: Vec<T> = (0..=n)
        .map(|s| (0..k).map(|j| alpha[j] * f[j][s]).sum())
        .collect();
    let mut log_kappa = vec![T::neg_infinity(); n + 1];
    let mut mean = vec![vec![T::zero(); k]; n + 1];
    let mut covariance = vec![vec![vec![T::zero(); k]; k]; n + 1];
    log_kappa[0] = T::zero();
    for n1 in 1..=n {
        let lnc = ln_binomial_row::<T>(n1 - 1);
        let mut sizes = Vec::new();
        let mut logc = Vec::new();
        for s in bounds.min..=bounds.max_for(n1) {
            let rest = n1 - s;
            if log_kappa[rest] == T::neg_infinity() {
                continue;
            }
            sizes.push(s);
            logc.push(lnc[rest] + block_logw[s] + log_kappa[rest]);
        }
        if sizes.is_empty() {
            continue;
        }
        let lk = log_sum_exp(&logc);
        log_kappa[n1] = lk;
        let weights: Vec<T> = logc.iter().map(|&l| (l - lk).exp()).collect();
        let comp_mean = |s: usize, j: usize| f[j][s] + mean[n1 - s][j];
        let mut mu = vec![T::zero(); k];
        for (&s, &w) in sizes.iter().zip(&weights) {
            for j in 0..k {
                mu[j] = mu[j] + w * comp_mean(s, j);
            }
        }
        let mut c = vec![vec![T::zero(); k]; k];
        for (&s, &w) in sizes.iter().zip(&weights) {
            let rest = n1 - s;
            for a in 0..k {
                let da = comp_mean(s, a) - mu[a];
                for b in 0..k {
                    let db = comp_mean(s, b) - mu[b];
                    c[a][b] = c[a][b] + w * (covariance[rest][a][b] + da * db);
                }
            }
        }
        mean[n1] = mu;
        covariance[n1] = c;
    }
    Ok(KappaSequence {
        log_kappa,
        mean,
        covariance,
    })
}

/// `log κ'_n` for a size-only model.
pub fn log_kappa_recursive<T: Real>(
    specs: &[StatisticSpec],
    alpha: &[T],
    n: usize,
    bounds: &SizeBounds,
) -> Result<T> {
    Ok(kappa_sequence(specs, alpha, n, bounds)?.log_kappa[n])
}

/// `κ'_n` for a size-only model; zero when the support is empty.
pub fn kappa_recursive<T: Real>(
    specs: &[StatisticSpec],
    alpha: &[T],
    n: usize,
    bounds: &SizeBounds,
) -> Result<T> {
    Ok(log_kappa_recursive(specs, alpha, n, bounds)?.exp())
}

/// `κ` for the number-of-groups model as `Σ_m ψ(n, m) exp(α m)`.
pub fn kappa_num_groups<T: Real>(alpha: T, n: usize, bounds: &SizeBounds) -> T {
    let table = CountTable::new(n, *bounds);
    let terms: Vec<T> = (1..=n)
        .filter_map(|m| {
            let c = table.stirling2(n, m);
            if c == BigUint::ZERO {
                return None;
            }
            let lc = num_traits::ToPrimitive::to_f64(&c).unwrap().ln();
            Some(T::of(lc) + alpha * T::of_usize(m))
        })
        .collect();
    log_sum_exp(&terms).exp()
}

/// `E_α[s]`, from the κ recursion for size-only models and by enumeration otherwise.
pub fn exact_expected_statistics<T: Real>(
    m: &ModelSpec<T>,
    cov: &CovariateStore<T>,
) -> Result<StatVector<T>> {
    m.validate()?;
    let n = cov.n();
    if m.is_size_only() {
        let seq = kappa_sequence(&m.statistics, &m.alpha, n, &m.bounds)?;
        if seq.log_kappa[n] == T::neg_infinity() {
            return Err(Error::EmptySupport { n });
        }
        return Ok(seq.mean[n].clone());
    }
    if n > DEFAULT_ENUMERATION_CAP {
        return Err(Error::EnumerationCap {
            n,
            cap: DEFAULT_ENUMERATION_CAP,
        });
    }
    Ok(exact_distribution(m, cov)?.expected_statistics())
}

/// Smallest and largest achievable value of a size-based statistic on the support.
pub fn size_stat_range(spec: &StatisticSpec, n: usize, bounds: &SizeBounds) -> Option<(f64, f64)> {
    // best[i] = (min, max) over multisets of admissible sizes summing to i
    let mut best: Vec<Option<(f64, f64)>> = vec![None; n + 1];
    best[0] = Some((0.0, 0.0));
    for i in 1..=n {
        let mut acc: Option<(f64, f64)> = None;
        for s in bounds.min..=bounds.max_for(i) {
            if let Some((lo, hi)) = best[i - s] {
                let v: f64 = spec.size_function(s)?;
                acc = Some(match acc {
                    None => (lo + v, hi + v),
                    Some((a, b)) => (a.min(lo + v), b.max(hi + v)),
                });
            }
        }
        best[i] = acc;
    }
    best[n]
}

#[derive(Clone, Debug)]
pub struct NewtonOptions<T = f64> {
    /// Starting point (zeros when `None`).
    pub start: Option<Vec<T>>,
    /// Components held at their starting value.
    pub fixed: Vec<bool>,
    pub tolerance: T,
    pub max_iterations: usize,
    pub divergence_bound: T,
}

impl<T: Real> Default for NewtonOptions<T> {
    fn default() -> Self {
        Self {
            start: None,
            fixed: Vec::new(),
            tolerance: T::of(1e-10),
            max_iterations: 200,
            divergence_bound: T::of(50.0),
        }
    }
}

/// Maximum likelihood for a size-only model by damped Newton-Raphson on
/// `ℓ(α) = αᵀs_obs - log κ(α)`: gradient `s_obs - E_α[s]`, Hessian `-Cov_α[s]`.
pub fn newton_mle_size_only<T: Real>(
    specs: &[StatisticSpec],
    s_obs: &[T],
    n: usize,
    bounds: &SizeBounds,
) -> Result<Vec<T>> {
    newton_mle_size_only_with(specs, s_obs, n, bounds, &NewtonOptions::default())
}

pub fn newton_mle_size_only_with<T: Real>(
    specs: &[StatisticSpec],
    s_obs: &[T],
    n: usize,
    bounds: &SizeBounds,
    opts: &NewtonOptions<T>,
) -> Result<Vec<T>> {
    let k = specs.len();
    if s_obs.len() != k {
        return Err(Error::Dimension(format!("{} observed values for {k} statistics", s_obs.len())));
    }
    let fixed: Vec<bool> = (0..k).map(|j| opts.fixed.get(j).copied().unwrap_or(false)).collect();
    let free: Vec<usize> = (0..k).filter(|&j| !fixed[j]).collect();
    for &j in &free {
        let (lo, hi) = size_stat_range(&specs[j], n, bounds).ok_or(Error::EmptySupport { n })?;
        let v = s_obs[j].to_f64_lossy();
        if hi - lo < 1e-12 {
            return Err(Error::DegenerateStatistic(format!(
                "{} is constant on the support",
                specs[j]
            )));
        }
        if v <= lo + 1e-12 || v >= hi - 1e-12 {
            return Err(Error::MleAtInfinity(format!(
                "observed {} = {v} lies on the boundary [{lo}, {hi}]",
                specs[j]
            )));
        }
    }
    let mut alpha = opts.start.clone().unwrap_or_else(|| vec![T::zero(); k]);
    let loglik = |a: &[T]| -> Result<(T, KappaSequence<T>)> {
        let seq = kappa_sequence(specs, a, n, bounds)?;
        let l = a.iter().zip(s_obs).map(|(&x, &s)| x * s).sum::<T>() - seq.log_kappa[n];
        Ok((l, seq))
    };
    let (mut ll, mut seq) = loglik(&alpha)?;
    if ll == T::neg_infinity() || seq.log_kappa[n] == T::neg_infinity() {
        return Err(Error::EmptySupport { n });
    }
    for _ in 0..opts.max_iterations {
        let grad: Vec<T> = free.iter().map(|&j| s_obs[j] - seq.mean[n][j]).collect();
        let gmax = grad.iter().fold(T::zero(), |a, g| a.max(g.abs()));
        if gmax < opts.tolerance {
            return Ok(alpha);
        }
        let hess: Matrix<T> = free
            .iter()
            .map(|&a| free.iter().map(|&b| seq.covariance[n][a][b]).collect())
            .collect();
        let step = linalg::solve(&hess, &grad).map_err(|_| {
            Error::DegenerateStatistic("statistic covariance is singular".into())
        })?;
        let mut t = T::one();
        let mut accepted = false;
        for _ in 0..60 {
            let mut cand = alpha.clone();
            for (x, &j) in free.iter().enumerate() {
                cand[j] = cand[j] + t * step[x];
            }
            let (cl, cseq) = loglik(&cand)?;
            if cl.is_finite() && cl >= ll - T::epsilon() * ll.abs().max(T::one()) {
                alpha = cand;
                ll = cl;
                seq = cseq;
                accepted = true;
                break;
            }
            t = t * T::of(0.5);
        }
        if !accepted {
            // no ascent possible at working precision; report where we are
            let gmax = free
                .iter()
                .fold(T::zero(), |a, &j| a.max((s_obs[j] - seq.mean[n][j]).abs()));
            if gmax < opts.tolerance.sqrt() {
                return Ok(alpha);
            }
            return Err(Error::NewtonNoConvergence(opts.max_iterations));
        }
        if alpha.iter().any(|a| a.abs() > opts.divergence_bound) {
            return Err(Error::MleAtInfinity(format!(
                "parameters exceeded {} in absolute value",
                opts.divergence_bound
            )));
        }
    }
    Err(Error::NewtonNoConvergence(opts.max_iterations))
}

#[derive(Clone, Debug, PartialEq)]
pub struct NeutralityReport<T = f64> {
    pub holds: bool,
    pub max_deviation: T,
    pub partitions_checked: usize,
}

/// Checks `Pr(P = p | P splits along A) = Pr_A(π(p)) · Pr_{A^c}(π^c(p))` for every
/// admissible `p` that splits along `subset`, where the right-hand factors are the
/// same model on the two sub-populations.
pub fn neutrality_check<T: Real>(
    m: &ModelSpec<T>,
    cov: &CovariateStore<T>,
    subset: &[usize],
) -> Result<NeutralityReport<T>> {
    let n = cov.n();
    let mut in_subset = vec![false; n];
    for &i in subset {
        if i >= n {
            return Err(Error::Dimension(format!("actor {i} outside 0..{n}")));
        }
        in_subset[i] = true;
    }
    let inside: Vec<usize> = (0..n).filter(|&i| in_subset[i]).collect();
    let outside: Vec<usize> = (0..n).filter(|&i| !in_subset[i]).collect();
    if inside.is_empty() || outside.is_empty() {
        return Err(Error::Config("neutrality split must be a nonempty proper subset".into()));
    }
    let full = exact_distribution(m, cov)?;
    let sub_in = exact_distribution(m, &cov.subset(&inside))?;
    let sub_out = exact_distribution(m, &cov.subset(&outside))?;

    let mut conditional = Vec::new();
    let mut total = T::zero();
    for (p, &pr) in full.partitions.iter().zip(&full.probabilities) {
        if p.splits_along(&in_subset) {
            conditional.push((p, pr));
            total = total + pr;
        }
    }
    let mut max_dev = T::zero();
    for (p, pr) in &conditional {
        let lhs = *pr / total;
        let rhs = sub_in.probability_of(&p.project(&inside)?) * sub_out.probability_of(&p.project(&outside)?);
        max_dev = max_dev.max((lhs - rhs).abs());
    }
    Ok(NeutralityReport {
        holds: max_dev < T::of(1e-10),
        max_deviation: max_dev,
        partitions_checked: conditional.len(),
    })
}

/// Marginal probability that the projection onto `subset` equals `target`,
/// together with the probability of `target` under the same model on `subset`.
/// The two agree for every target only when the model is consistent.
pub fn consistency_gap<T: Real>(
    m: &ModelSpec<T>,
    cov: &CovariateStore<T>,
    subset: &[usize],
    target: &Partition,
) -> Result<(T, T)> {
    let full = exact_distribution(m, cov)?;
    let mut marginal = T::zero();
    for (p, &pr) in full.partitions.iter().zip(&full.probabilities) {
        if &p.project(subset)? == target {
            marginal = marginal + pr;
        }
    }
    let sub = exact_distribution(m, &cov.subset(subset))?;
    Ok((marginal, sub.probability_of(target)))
}

/// The uniform-model consistency comparison in exact rational arithmetic.
pub fn uniform_consistency_gap(
    n: usize,
    subset: &[usize],
    target: &Partition,
) -> Result<(Ratio<BigUint>, Ratio<BigUint>)> {
    let all = enumerate_partitions(n, &SizeBounds::unbounded())?;
    let mut hits = 0usize;
    for p in &all {
        if &p.project(subset)? == target {
            hits += 1;
        }
    }
    let sub_count = enumerate_partitions(subset.len(), &SizeBounds::unbounded())?.len();
    Ok((
        Ratio::new(BigUint::from(hits), BigUint::from(all.len())),
        Ratio::new(BigUint::from(1u32), BigUint::from(sub_count)),
    ))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::combinatorics::bell_restricted;
    use crate::statistics::StatisticSpec as S;

    fn b(lo: usize, hi: usize) -> SizeBounds {
        SizeBounds::new(lo, Some(hi)).unwrap()
    }

    #[test]
    fn iterator_counts_bell_numbers() {
        let counts: Vec<usize> = (1..=8).map(|n| PartitionIter::new(n).count()).collect();
        assert_eq!(counts, vec![1, 2, 5, 15, 52, 203, 877, 4140]);
        assert_eq!(PartitionIter::new(0).count(), 0);
    }

    #[test]
    fn enumeration_examples() {
        assert_eq!(enumerate_partitions(3, &b(1, 3)).unwrap().len(), 5);
        assert_eq!(enumerate_partitions(4, &b(2, 4)).unwrap().len(), 4);
        assert_eq!(enumerate_partitions(1, &SizeBounds::unbounded()).unwrap().len(), 1);
        assert_eq!(
            enumerate_partitions(13, &SizeBounds::unbounded()),
            Err(Error::EnumerationCap { n: 13, cap: 12 })
        );
        let all = enumerate_partitions(6, &SizeBounds::unbounded()).unwrap();
        let mut sorted = all.clone();
        sorted.sort();
        sorted.dedup();
        assert_eq!(sorted, all);
    }

    #[test]
    fn distribution_examples() {
        let cov = CovariateStore::<f64>::new(4);
        let m = ModelSpec::zeros(vec![S::num_groups()], b(2, 4));
        let d = exact_distribution(&m, &cov).unwrap();
        assert!(d.probabilities.iter().all(|&p| (p - 0.25).abs() < 1e-15));

        let a1 = 0.8f64;
        let cov3 = CovariateStore::<f64>::new(3);
        let m = ModelSpec::new(vec![S::num_groups()], vec![a1], SizeBounds::unbounded()).unwrap();
        let d = exact_distribution(&m, &cov3).unwrap();
        let denom = a1.exp() + 3.0 * (2.0 * a1).exp() + (3.0 * a1).exp();
        let p1 = d.probability_of(&Partition::single_block(3));
        assert!((p1 - a1.exp() / denom).abs() < 1e-15);

        let ewens = ModelSpec::new(
            vec![S::num_groups(), S::sum_log_factorial_sizes()],
            vec![0.0, 1.0],
            SizeBounds::unbounded(),
        )
        .unwrap();
        let d = exact_distribution(&ewens, &cov3).unwrap();
        assert!((d.probability_of(&Partition::single_block(3)) - 2.0 / 6.0).abs() < 1e-15);
        assert!((d.probability_of(&Partition::singletons(3)) - 1.0 / 6.0).abs() < 1e-15);
        let two = Partition::from_membership(vec![0, 0, 1]).unwrap();
        assert!((d.probability_of(&two) - 1.0 / 6.0).abs() < 1e-15);

        let m = ModelSpec::zeros(vec![S::num_groups()], b(3, 5));
        assert_eq!(
            exact_distribution(&m, &CovariateStore::<f64>::new(2)).unwrap_err(),
            Error::EmptySupport { n: 2 }
        );
    }

    #[test]
    fn kappa_examples() {
        let a1 = -0.3f64;
        let k = kappa_recursive(&[S::num_groups()], &[a1], 9, &SizeBounds::unbounded()).unwrap();
        let direct = kappa_num_groups(a1, 9, &SizeBounds::unbounded());
        assert!((k - direct).abs() / direct < 1e-12);

        let ewens = [S::num_groups(), S::sum_log_factorial_sizes()];
        let seq = kappa_sequence(&ewens, &[0.0f64, 1.0], 10, &SizeBounds::unbounded()).unwrap();
        let mut fact = 1.0;
        for n in 1..=10 {
            fact *= n as f64;
            assert!((seq.kappa(n) - fact).abs() / fact < 1e-12, "n={n}");
        }
        assert_eq!(kappa_recursive(&ewens, &[0.0f64, 1.0], 2, &b(3, 5)).unwrap(), 0.0);
        assert_eq!(
            kappa_recursive(&[S::dyadic_covariate("z")], &[1.0f64], 3, &SizeBounds::unbounded()),
            Err(Error::NotSizeBased("dyadic_covariate(z)".into()))
        );
    }

    #[test]
    fn kappa_in_single_precision() {
        let k32 = kappa_recursive(&[S::num_groups()], &[0.5f32], 8, &b(1, 4)).unwrap();
        let k64 = kappa_recursive(&[S::num_groups()], &[0.5f64], 8, &b(1, 4)).unwrap();
        assert!(((k32 as f64) - k64).abs() / k64 < 1e-5);
    }

    #[test]
    fn uniform_count_matches_restricted_bell() {
        for bounds in [b(2, 5), b(1, 3), b(2, 2)] {
            let k = kappa_recursive(&[S::num_groups()], &[0.0f64], 10, &bounds).unwrap();
            let count = num_traits::ToPrimitive::to_f64(&bell_restricted(10, &bounds)).unwrap();
            assert!((k - count).abs() / count < 1e-12, "{k} {count} {bounds}");
        }
    }

    #[test]
    fn expectation_examples() {
        let cov = CovariateStore::<f64>::new(3);
        let m = ModelSpec::zeros(vec![S::num_groups()], SizeBounds::unbounded());
        let e = exact_expected_statistics(&m, &cov).unwrap();
        assert!((e[0] - 2.0).abs() < 1e-14);
        let m = m.with_alpha(vec![-30.0]);
        let e = exact_expected_statistics(&m, &CovariateStore::new(10)).unwrap();
        assert!((e[0] - 1.0).abs() < 1e-6);
    }

    #[test]
    fn newton_recovers_known_parameter() {
        let specs = [S::num_groups()];
        let target = exact_expected_statistics(
            &ModelSpec::new(specs.to_vec(), vec![0.7f64], SizeBounds::unbounded()).unwrap(),
            &CovariateStore::new(10),
        )
        .unwrap();
        let a = newton_mle_size_only(&specs, &target, 10, &SizeBounds::unbounded()).unwrap();
        assert!((a[0] - 0.7).abs() < 1e-6);
    }

    #[test]
    fn newton_boundary_is_infinite() {
        let r = newton_mle_size_only(&[S::num_groups()], &[10.0f64], 10, &SizeBounds::unbounded());
        assert!(matches!(r, Err(Error::MleAtInfinity(_))));
        let r = newton_mle_size_only(&[S::num_groups_of_size(7)], &[0.0f64], 10, &b(2, 5));
        assert!(matches!(r, Err(Error::DegenerateStatistic(_))));
    }

    #[test]
    fn fixed_mean_construction() {
        // for a given alpha2, find alpha1 such that E[#P] = 4 on ten actors
        let specs = [S::num_groups(), S::sum_log_factorial_sizes()];
        for a2 in [-1.0f64, 0.0, 1.0] {
            let opts = NewtonOptions {
                start: Some(vec![0.0, a2]),
                fixed: vec![false, true],
                ..Default::default()
            };
            let a = newton_mle_size_only_with(&specs, &[4.0, 0.0], 10, &SizeBounds::unbounded(), &opts)
                .unwrap();
            assert_eq!(a[1], a2);
            let e = kappa_sequence(&specs, &a, 10, &SizeBounds::unbounded()).unwrap();
            assert!((e.mean[10][0] - 4.0).abs() < 1e-9);
        }
    }

    #[test]
    fn stat_ranges() {
        assert_eq!(size_stat_range(&S::num_groups(), 10, &b(2, 5)), Some((2.0, 5.0)));
        assert_eq!(
            size_stat_range(&S::sum_squared_sizes(), 4, &SizeBounds::unbounded()),
            Some((4.0, 16.0))
        );
        assert_eq!(size_stat_range(&S::num_groups(), 2, &b(3, 5)), None);
    }

    #[test]
    fn uniform_model_is_not_consistent() {
        let target = Partition::single_block(2);
        let (marginal, direct) = uniform_consistency_gap(3, &[0, 1], &target).unwrap();
        assert_eq!(marginal, Ratio::new(BigUint::from(2u32), BigUint::from(5u32)));
        assert_eq!(direct, Ratio::new(BigUint::from(1u32), BigUint::from(2u32)));
    }
}
