//! Method-of-moments estimation by three-phase Robbins-Monro stochastic approximation.
//!
//! Phase 1 estimates the sensitivity matrix `D0` from draws at the starting
//! parameter and takes one scaled step. Phase 2 runs `R` subphases of the
//! update `α ← α - a_r D0⁻¹ (s(p) - s_obs)` with a halving gain, each subphase
//! starting from the average of the previous one. Phase 3 simulates at the
//! final value to assess convergence and compute standard errors.

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::exact::{newton_mle_size_only, size_stat_range, ModelSpec};
use crate::linalg::{self, Matrix};
use crate::partition::{Partition, SizeBounds};
use crate::sampler::{autocorrelation, Chain, ChainConfig, InitialState};
use crate::statistics::{observed_statistics, CovariateStore, StatVector, StatisticKind, StatisticSpec};

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct EstimationConfig {
    /// Phase-1 sample size.
    pub phase1_samples: usize,
    /// Number of phase-2 subphases.
    pub subphases: usize,
    /// Initial gain `a`; subphase `r` uses `a / 2^(r-1)`.
    pub gain: f64,
    /// Minimum subphase length is `ceil(base · 2^(4r/3))`.
    pub subphase_base: f64,
    /// Maximum subphase length as a multiple of the minimum.
    pub subphase_max_factor: f64,
    /// Phase-3 sample size.
    pub phase3_samples: usize,
    /// Multiplier applied to the off-diagonal entries of `D0`.
    pub offdiag_damping: f64,
    pub divergence_bound: f64,
    pub convergence_threshold: f64,
    /// Largest tolerated lag-1 autocorrelation of the sampled statistics.
    pub autocorrelation_target: f64,
    pub max_thinning: u64,
    /// Parallel chains in phases 1 and 3.
    pub chains: usize,
    /// Reruns from the last estimate when phase 3 reports non-convergence.
    pub max_restarts: usize,
}

impl Default for EstimationConfig {
    fn default() -> Self {
        Self {
            phase1_samples: 400,
            subphases: 4,
            gain: 0.1,
            subphase_base: 100.0,
            subphase_max_factor: 20.0,
            phase3_samples: 1000,
            offdiag_damping: 0.2,
            divergence_bound: 50.0,
            convergence_threshold: 0.1,
            autocorrelation_target: 0.4,
            max_thinning: 1 << 16,
            chains: 4,
            max_restarts: 2,
        }
    }
}

impl EstimationConfig {
    pub fn validate(&self) -> Result<()> {
        let bad = |m: &str| Err(Error::Config(m.to_string()));
        if self.phase1_samples < 2 || self.phase3_samples < 2 {
            return bad("phase sample sizes must be at least 2");
        }
        if self.subphases < 1 {
            return bad("at least one subphase is required");
        }
        if !(self.gain >= 0.0 && self.gain.is_finite()) {
            return bad("gain must be finite and nonnegative");
        }
        if !(0.0..=1.0).contains(&self.offdiag_damping) {
            return bad("offdiag_damping must lie in [0, 1]");
        }
        if !(self.subphase_base > 0.0) || !(self.subphase_max_factor >= 1.0) {
            return bad("subphase lengths must be positive");
        }
        if self.chains == 0 {
            return bad("at least one chain is required");
        }
        if !(self.divergence_bound > 0.0) || !(self.convergence_threshold > 0.0) {
            return bad("thresholds must be positive");
        }
        Ok(())
    }

    /// `a_r = a / 2^(r-1)` for `r = 1..=R`.
    pub fn gain_schedule(&self) -> Vec<f64> {
        (0..self.subphases).map(|r| self.gain / f64::powi(2.0, r as i32)).collect()
    }

    /// `(min, max)` length of subphase `r` (1-based).
    pub fn subphase_length(&self, r: usize) -> (usize, usize) {
        let min = (self.subphase_base * f64::powf(2.0, 4.0 * r as f64 / 3.0)).ceil() as usize;
        let max = (min as f64 * self.subphase_max_factor).ceil() as usize;
        (min, max)
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Phase1Result {
    pub d0: Matrix<f64>,
    pub alpha1: Vec<f64>,
    pub mean: Vec<f64>,
    pub thinning: u64,
    pub lag1_autocorrelation: Vec<f64>,
    pub draws: Vec<StatVector>,
    #[serde(skip)]
    pub last_partition: Option<Partition>,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Phase2Result {
    /// Average parameter of each subphase; the last is the final estimate.
    pub subphase_averages: Vec<Vec<f64>>,
    pub subphase_lengths: Vec<usize>,
    /// Parameter value after every update.
    pub alpha_trace: Vec<Vec<f64>>,
    #[serde(skip)]
    pub last_partition: Option<Partition>,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct EstimationResult {
    pub statistics: Vec<StatisticSpec>,
    pub bounds: SizeBounds,
    pub observed: Vec<f64>,
    pub alpha0: Vec<f64>,
    pub alpha_hat: Vec<f64>,
    pub standard_errors: Vec<f64>,
    pub wald_ratios: Vec<f64>,
    pub convergence_ratios: Vec<f64>,
    pub converged: bool,
    pub restarts: usize,
    pub thinning: u64,
    pub phase3_mean: Vec<f64>,
    pub phase3_sd: Vec<f64>,
    pub phase3_covariance: Matrix<f64>,
    pub phase1: Phase1Result,
    pub phase2: Phase2Result,
    pub phase3_draws: Vec<StatVector>,
}

impl EstimationResult {
    pub fn model(&self) -> ModelSpec<f64> {
        ModelSpec {
            statistics: self.statistics.clone(),
            alpha: self.alpha_hat.clone(),
            bounds: self.bounds,
        }
    }

    pub fn max_abs_convergence_ratio(&self) -> f64 {
        self.convergence_ratios.iter().fold(0.0, |a, c| a.max(c.abs()))
    }
}

/// `***`, `**`, `*` for |Wald| above 3.29, 2.58 and 2; empty otherwise.
pub fn significance_stars(wald: f64) -> &'static str {
    let w = wald.abs();
    if w > 3.29 {
        "***"
    } else if w > 2.58 {
        "**"
    } else if w > 2.0 {
        "*"
    } else {
        ""
    }
}

/// Multiplicative change in probability when the statistic grows by `delta` at parameter `alpha`.
pub fn probability_ratio(alpha: f64, delta: f64) -> f64 {
    (alpha * delta).exp()
}

/// Mixes a seed and a stream label into an independent 64-bit seed.
pub fn derive_seed(seed: u64, stream: u64) -> u64 {
    let mut z = seed ^ stream.wrapping_mul(0x9E37_79B9_7F4A_7C15);
    z = (z ^ (z >> 30)).wrapping_mul(0xBF58_476D_1CE4_E5B9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94D0_49BB_1331_11EB);
    z ^ (z >> 31)
}

/// Zeros except the number-of-groups parameter, fitted exactly on the
/// number-of-groups-only model. Falls back to zero when that fit is at infinity.
pub fn initial_alpha(specs: &[StatisticSpec], s_obs: &[f64], n: usize, bounds: &SizeBounds) -> Vec<f64> {
    let mut alpha = vec![0.0; specs.len()];
    let idx = specs
        .iter()
        .position(|s| s.kind == StatisticKind::NumGroups && !s.normalized);
    if let Some(i) = idx {
        if let Ok(a) = newton_mle_size_only(&[specs[i].clone()], &[s_obs[i]], n, bounds) {
            alpha[i] = a[0];
        }
    }
    alpha
}

fn covariance_checked(specs: &[StatisticSpec], draws: &[StatVector]) -> Result<(Vec<f64>, Matrix<f64>)> {
    let (mean, cov) = linalg::mean_and_covariance(draws, 1);
    for (k, spec) in specs.iter().enumerate() {
        let scale = mean[k].abs().max(1.0);
        if !(cov[k][k] > 1e-12 * scale * scale) {
            return Err(Error::DegenerateStatistic(format!(
                "`{spec}` is constant across simulated partitions"
            )));
        }
    }
    Ok((mean, cov))
}

fn damp(cov: &Matrix<f64>, factor: f64) -> Matrix<f64> {
    cov.iter()
        .enumerate()
        .map(|(i, row)| {
            row.iter()
                .enumerate()
                .map(|(j, &v)| if i == j { v } else { v * factor })
                .collect()
        })
        .collect()
}

fn check_divergence(alpha: &[f64], specs: &[StatisticSpec], bound: f64) -> Result<()> {
    if let Some((k, a)) = alpha
        .iter()
        .enumerate()
        .find(|(_, a)| !a.is_finite() || a.abs() > bound)
    {
        return Err(Error::Divergence {
            bound,
            detail: format!("parameter for `{}` reached {a:.3}", specs[k]),
        });
    }
    Ok(())
}

/// Size statistics observed at an extreme of their range have their MLE at infinity.
fn check_boundary(model: &ModelSpec<f64>, s_obs: &[f64], n: usize, bound: f64) -> Result<()> {
    for (spec, &v) in model.statistics.iter().zip(s_obs) {
        if !spec.is_size_based() {
            continue;
        }
        match size_stat_range(spec, n, &model.bounds) {
            None => return Err(Error::EmptySupport { n }),
            Some((lo, hi)) if hi - lo < 1e-12 => {
                return Err(Error::DegenerateStatistic(format!("`{spec}` is constant on the support")))
            }
            Some((lo, hi)) if v <= lo + 1e-9 || v >= hi - 1e-9 => {
                return Err(Error::Divergence {
                    bound,
                    detail: format!("observed `{spec}` = {v} is at the edge of its range [{lo}, {hi}]"),
                })
            }
            _ => {}
        }
    }
    Ok(())
}

/// Draws `total` statistic vectors from parallel chains, doubling the thinning
/// until the mean lag-1 autocorrelation is below the target.
fn sample_with_mixing(
    model: &ModelSpec<f64>,
    cov: &CovariateStore<f64>,
    chain_cfg: &ChainConfig,
    cfg: &EstimationConfig,
    total: usize,
) -> Result<(Vec<StatVector>, u64, Vec<f64>, Partition)> {
    let mut chain_cfg = chain_cfg.clone();
    let c = cfg.chains.min(total / 2).max(1);
    let per: Vec<usize> = (0..c).map(|i| total / c + usize::from(i < total % c)).collect();
    loop {
        let runs: Vec<(Vec<StatVector>, Partition)> = (0..c)
            .into_par_iter()
            .map(|i| {
                let mut chain = Chain::new(model, cov, &chain_cfg, i as u64)?;
                chain.burn_in()?;
                let draws = chain.sample_stats(per[i])?;
                Ok((draws, chain.current().clone()))
            })
            .collect::<Result<_>>()?;
        let k = model.statistics.len();
        let mut rho = vec![0.0; k];
        for (draws, _) in &runs {
            if draws.len() > 2 {
                let a = autocorrelation(draws, 1)?;
                for j in 0..k {
                    rho[j] += a.values[j] / c as f64;
                }
            }
        }
        let worst = rho.iter().fold(0.0f64, |a, r| a.max(*r));
        if worst < cfg.autocorrelation_target || chain_cfg.thinning * 2 > cfg.max_thinning {
            let last = runs.last().unwrap().1.clone();
            let draws = runs.into_iter().flat_map(|r| r.0).collect();
            return Ok((draws, chain_cfg.thinning, rho, last));
        }
        chain_cfg.thinning *= 2;
    }
}

/// Estimates `D0` at `alpha0` and takes one step towards the observed statistics.
pub fn phase1_scaling(
    model: &ModelSpec<f64>,
    s_obs: &[f64],
    cov: &CovariateStore<f64>,
    cfg: &EstimationConfig,
    chain_cfg: &ChainConfig,
) -> Result<Phase1Result> {
    let (draws, thinning, rho, last) = sample_with_mixing(model, cov, chain_cfg, cfg, cfg.phase1_samples)?;
    let (mean, c) = covariance_checked(&model.statistics, &draws)?;
    let d0 = damp(&c, cfg.offdiag_damping);
    let diff: Vec<f64> = mean.iter().zip(s_obs).map(|(m, s)| m - s).collect();
    let step = linalg::solve(&d0, &diff)
        .map_err(|_| Error::DegenerateStatistic("statistics are collinear on the simulated partitions".into()))?;
    let alpha1: Vec<f64> = model.alpha.iter().zip(&step).map(|(a, d)| a - cfg.gain * d).collect();
    check_divergence(&alpha1, &model.statistics, cfg.divergence_bound)?;
    Ok(Phase1Result {
        d0,
        alpha1,
        mean,
        thinning,
        lag1_autocorrelation: rho,
        draws,
        last_partition: Some(last),
    })
}

/// Robbins-Monro subphases from `alpha_start`, one thinned draw per update.
#[allow(clippy::too_many_arguments)]
pub fn phase2_iterate(
    model: &ModelSpec<f64>,
    alpha_start: &[f64],
    d0: &Matrix<f64>,
    s_obs: &[f64],
    cov: &CovariateStore<f64>,
    cfg: &EstimationConfig,
    chain_cfg: &ChainConfig,
    start: Option<Partition>,
) -> Result<Phase2Result> {
    let k = alpha_start.len();
    let d0_inv = linalg::inverse(d0)?;
    let mut chain_cfg = chain_cfg.clone();
    if let Some(p) = start {
        chain_cfg.initial = InitialState::Given(p);
    }
    let mut chain = Chain::new(&model.with_alpha(alpha_start.to_vec()), cov, &chain_cfg, 0)?;
    let mut alpha = alpha_start.to_vec();
    let mut averages = Vec::new();
    let mut lengths = Vec::new();
    let mut trace = Vec::new();
    for (r, a_r) in cfg.gain_schedule().into_iter().enumerate() {
        let (min_len, max_len) = cfg.subphase_length(r + 1);
        let mut sum = vec![0.0; k];
        let mut lo = vec![f64::INFINITY; k];
        let mut hi = vec![f64::NEG_INFINITY; k];
        let mut len = 0usize;
        while len < max_len {
            chain.set_alpha(&alpha);
            let s = chain.next_draw()?.stats;
            let diff: Vec<f64> = s.iter().zip(s_obs).map(|(x, o)| x - o).collect();
            for j in 0..k {
                lo[j] = lo[j].min(diff[j]);
                hi[j] = hi[j].max(diff[j]);
            }
            let step = linalg::mat_vec(&d0_inv, &diff);
            for j in 0..k {
                alpha[j] -= a_r * step[j];
            }
            check_divergence(&alpha, &model.statistics, cfg.divergence_bound)?;
            for j in 0..k {
                sum[j] += alpha[j];
            }
            trace.push(alpha.clone());
            len += 1;
            let crossed = (0..k).all(|j| lo[j] <= 0.0 && hi[j] >= 0.0);
            if len >= min_len && crossed {
                break;
            }
        }
        alpha = sum.iter().map(|v| v / len as f64).collect();
        averages.push(alpha.clone());
        lengths.push(len);
    }
    Ok(Phase2Result {
        subphase_averages: averages,
        subphase_lengths: lengths,
        alpha_trace: trace,
        last_partition: Some(chain.current().clone()),
    })
}

pub struct Phase3Result {
    pub mean: Vec<f64>,
    pub sd: Vec<f64>,
    pub covariance: Matrix<f64>,
    pub convergence_ratios: Vec<f64>,
    pub standard_errors: Vec<f64>,
    pub converged: bool,
    pub thinning: u64,
    pub draws: Vec<StatVector>,
}

/// Simulates at `alpha_f` and derives convergence ratios and standard errors.
pub fn phase3_assess(
    model: &ModelSpec<f64>,
    alpha_f: &[f64],
    s_obs: &[f64],
    cov: &CovariateStore<f64>,
    cfg: &EstimationConfig,
    chain_cfg: &ChainConfig,
) -> Result<Phase3Result> {
    let m = model.with_alpha(alpha_f.to_vec());
    let (draws, thinning, _, _) = sample_with_mixing(&m, cov, chain_cfg, cfg, cfg.phase3_samples)?;
    let (mean, covariance) = covariance_checked(&model.statistics, &draws)?;
    let sd: Vec<f64> = (0..mean.len()).map(|j| covariance[j][j].sqrt()).collect();
    let convergence_ratios: Vec<f64> = (0..mean.len()).map(|j| (mean[j] - s_obs[j]) / sd[j]).collect();
    let inv = linalg::inverse(&covariance)
        .map_err(|_| Error::DegenerateStatistic("phase-3 statistic covariance is singular".into()))?;
    let standard_errors: Vec<f64> = (0..mean.len()).map(|j| inv[j][j].max(0.0).sqrt()).collect();
    let converged = convergence_ratios
        .iter()
        .all(|c| c.abs() <= cfg.convergence_threshold);
    Ok(Phase3Result {
        mean,
        sd,
        covariance,
        convergence_ratios,
        standard_errors,
        converged,
        thinning,
        draws,
    })
}

/// Solves `E_α[s] = s_obs` for the statistics of `model` (its `alpha` is ignored).
pub fn estimate(
    model: &ModelSpec<f64>,
    observed: &Partition,
    cov: &CovariateStore<f64>,
    cfg: &EstimationConfig,
    chain_cfg: &ChainConfig,
) -> Result<EstimationResult> {
    let s_obs = observed_statistics(observed, &model.statistics, cov)?;
    let mut chain_cfg = chain_cfg.clone();
    if matches!(chain_cfg.initial, InitialState::RandomValid) && observed.respects_bounds(&model.bounds) {
        chain_cfg.initial = InitialState::Given(observed.clone());
    }
    estimate_from_stats(model, &s_obs, cov, cfg, &chain_cfg)
}

pub fn estimate_from_stats(
    model: &ModelSpec<f64>,
    s_obs: &[f64],
    cov: &CovariateStore<f64>,
    cfg: &EstimationConfig,
    chain_cfg: &ChainConfig,
) -> Result<EstimationResult> {
    cfg.validate()?;
    chain_cfg.validate()?;
    let k = model.statistics.len();
    if s_obs.len() != k {
        return Err(Error::Dimension(format!("{} observed values for {k} statistics", s_obs.len())));
    }
    cov.validate(&model.statistics)?;
    check_boundary(model, s_obs, cov.n(), cfg.divergence_bound)?;
    let alpha0 = initial_alpha(&model.statistics, s_obs, cov.n(), &model.bounds);
    let mut alpha = alpha0.clone();
    let mut restarts = 0;
    let mut chain_cfg = chain_cfg.clone();
    loop {
        let stream = |tag: u64| ChainConfig {
            seed: derive_seed(chain_cfg.seed, 16 * restarts as u64 + tag),
            ..chain_cfg.clone()
        };
        let p1 = phase1_scaling(&model.with_alpha(alpha.clone()), s_obs, cov, cfg, &stream(1))?;
        let mut cfg2 = stream(2);
        cfg2.thinning = p1.thinning;
        let p2 = phase2_iterate(
            model,
            &p1.alpha1,
            &p1.d0,
            s_obs,
            cov,
            cfg,
            &cfg2,
            p1.last_partition.clone(),
        )?;
        let alpha_f = p2.subphase_averages.last().unwrap().clone();
        let mut cfg3 = stream(3);
        cfg3.thinning = p1.thinning;
        if let Some(p) = &p2.last_partition {
            cfg3.initial = InitialState::Given(p.clone());
        }
        let p3 = phase3_assess(model, &alpha_f, s_obs, cov, cfg, &cfg3)?;
        if p3.converged || restarts >= cfg.max_restarts {
            let wald_ratios = alpha_f
                .iter()
                .zip(&p3.standard_errors)
                .map(|(a, s)| a / s)
                .collect();
            return Ok(EstimationResult {
                statistics: model.statistics.clone(),
                bounds: model.bounds,
                observed: s_obs.to_vec(),
                alpha0,
                alpha_hat: alpha_f,
                standard_errors: p3.standard_errors,
                wald_ratios,
                convergence_ratios: p3.convergence_ratios,
                converged: p3.converged,
                restarts,
                thinning: p3.thinning,
                phase3_mean: p3.mean,
                phase3_sd: p3.sd,
                phase3_covariance: p3.covariance,
                phase1: p1,
                phase2: p2,
                phase3_draws: p3.draws,
            });
        }
        restarts += 1;
        alpha = alpha_f;
        if let Some(p) = p2.last_partition {
            chain_cfg.initial = InitialState::Given(p);
        }
    }
}
