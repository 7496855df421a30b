//! Log-likelihood by path sampling from an exactly solvable reference model.
//!
//! The reference keeps only the number-of-groups parameter (fitted exactly);
//! `log κ(α) - log κ(α0)` is the integral of `(α - α0)ᵀ E_{α_t}[s]` along the
//! straight line `α_t = t α + (1 - t) α0`, estimated from simulated bridges.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::estimator::derive_seed;
use crate::exact::{exact_expected_statistics, kappa_sequence, newton_mle_size_only, ModelSpec};
use crate::partition::{Partition, SizeBounds};
use crate::sampler::{autocorrelation, Chain, ChainConfig, InitialState};
use crate::statistics::{observed_statistics, CovariateStore, StatisticKind, StatisticSpec};

#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Quadrature {
    /// `(1/M) Σ_{m=1..M} f(m/M)`.
    RightRiemann,
    /// `(1/M) [f(0)/2 + Σ_{m=1..M-1} f(m/M) + f(1)/2]`.
    #[default]
    Trapezoid,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct PathConfig {
    /// Number of bridges `M`.
    pub bridges: usize,
    pub draws_per_bridge: usize,
    pub quadrature: Quadrature,
    /// Smallest tolerated importance-sampling ESS between adjacent bridges, as a fraction of the draws.
    pub min_ess_fraction: f64,
}

impl Default for PathConfig {
    fn default() -> Self {
        Self {
            bridges: 50,
            draws_per_bridge: 200,
            quadrature: Quadrature::default(),
            min_ess_fraction: 0.05,
        }
    }
}

impl PathConfig {
    pub fn validate(&self) -> Result<()> {
        if self.bridges < 2 {
            return Err(Error::Config("at least two bridges are required".into()));
        }
        if self.draws_per_bridge < 2 {
            return Err(Error::Config("at least two draws per bridge are required".into()));
        }
        Ok(())
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct PathResult {
    pub loglik: f64,
    pub std_error: f64,
    pub alpha0: Vec<f64>,
    pub loglik0: f64,
    /// Estimate of `log κ(α) - log κ(α0)`.
    pub lambda: f64,
    /// `(α - α0)ᵀ s̄` at each bridge `m = 0..=M` (entry 0 only filled for the trapezoid rule).
    pub bridge_values: Vec<f64>,
    pub min_ess_fraction: f64,
}

fn num_groups_index(specs: &[StatisticSpec]) -> Result<usize> {
    specs
        .iter()
        .position(|s| s.kind == StatisticKind::NumGroups && !s.normalized)
        .ok_or_else(|| Error::Config("the reference model needs a num_groups statistic".into()))
}

/// Reference parameter (number of groups only, fitted exactly) and its exact log-likelihood.
pub fn reference_loglik(
    specs: &[StatisticSpec],
    s_obs: &[f64],
    n: usize,
    bounds: &SizeBounds,
) -> Result<(Vec<f64>, f64)> {
    let i = num_groups_index(specs)?;
    let ng = [specs[i].clone()];
    let a = newton_mle_size_only(&ng, &[s_obs[i]], n, bounds)?[0];
    let seq = kappa_sequence(&ng, &[a], n, bounds)?;
    if seq.log_kappa[n] == f64::NEG_INFINITY {
        return Err(Error::EmptySupport { n });
    }
    let mut alpha0 = vec![0.0; specs.len()];
    alpha0[i] = a;
    Ok((alpha0, a * s_obs[i] - seq.log_kappa[n]))
}

/// `α_m = (m/M) α + (1 - m/M) α0`.
pub fn bridge_alpha(alpha: &[f64], alpha0: &[f64], m: usize, bridges: usize) -> Vec<f64> {
    let t = m as f64 / bridges as f64;
    alpha.iter().zip(alpha0).map(|(a, b)| t * a + (1.0 - t) * b).collect()
}

fn quadrature_sum(values: &[f64], rule: Quadrature) -> f64 {
    let m = values.len() - 1;
    match rule {
        Quadrature::RightRiemann => values[1..].iter().sum::<f64>() / m as f64,
        Quadrature::Trapezoid => {
            (0.5 * values[0] + values[1..m].iter().sum::<f64>() + 0.5 * values[m]) / m as f64
        }
    }
}

/// Path estimate of `log κ(α) - log κ(α0)` with exact bridge means (enumerable models only).
pub fn exact_path_lambda(
    model: &ModelSpec<f64>,
    alpha0: &[f64],
    cov: &CovariateStore<f64>,
    bridges: usize,
    rule: Quadrature,
) -> Result<f64> {
    let delta: Vec<f64> = model.alpha.iter().zip(alpha0).map(|(a, b)| a - b).collect();
    let values = (0..=bridges)
        .map(|m| {
            if m == 0 && rule == Quadrature::RightRiemann {
                return Ok(0.0);
            }
            let mm = model.with_alpha(bridge_alpha(&model.alpha, alpha0, m, bridges));
            let e = exact_expected_statistics(&mm, cov)?;
            Ok(delta.iter().zip(&e).map(|(d, x)| d * x).sum())
        })
        .collect::<Result<Vec<f64>>>()?;
    Ok(quadrature_sum(&values, rule))
}

/// `ℓ̂(α) = ℓ(α0) + (α - α0)ᵀ s_obs - λ̂`, with `λ̂` from simulated bridges.
pub fn path_sampling_loglik(
    model: &ModelSpec<f64>,
    observed: &Partition,
    cov: &CovariateStore<f64>,
    pc: &PathConfig,
    chain_cfg: &ChainConfig,
) -> Result<PathResult> {
    pc.validate()?;
    model.validate()?;
    let n = cov.n();
    let s_obs = observed_statistics(observed, &model.statistics, cov)?;
    let (alpha0, loglik0) = reference_loglik(&model.statistics, &s_obs, n, &model.bounds)?;
    let delta: Vec<f64> = model.alpha.iter().zip(&alpha0).map(|(a, b)| a - b).collect();
    let linear: f64 = delta.iter().zip(&s_obs).map(|(d, s)| d * s).sum();
    if delta.iter().all(|&d| d == 0.0) {
        return Ok(PathResult {
            loglik: loglik0,
            std_error: 0.0,
            alpha0,
            loglik0,
            lambda: 0.0,
            bridge_values: vec![0.0; pc.bridges + 1],
            min_ess_fraction: 1.0,
        });
    }

    let mut cfg = chain_cfg.clone();
    if matches!(cfg.initial, InitialState::RandomValid) && observed.respects_bounds(&model.bounds) {
        cfg.initial = InitialState::Given(observed.clone());
    }
    cfg.seed = derive_seed(chain_cfg.seed, 0x7061_7468);
    let first = match pc.quadrature {
        Quadrature::RightRiemann => 1,
        Quadrature::Trapezoid => 0,
    };
    let mut chain = Chain::new(&model.with_alpha(bridge_alpha(&model.alpha, &alpha0, first, pc.bridges)), cov, &cfg, 0)?;
    let mut values = vec![0.0; pc.bridges + 1];
    let mut variance = 0.0;
    let mut min_ess = 1.0f64;
    for m in first..=pc.bridges {
        let am = bridge_alpha(&model.alpha, &alpha0, m, pc.bridges);
        chain.set_alpha(&am);
        chain.burn_in()?;
        let draws = chain.sample_stats(pc.draws_per_bridge)?;
        let u: Vec<f64> = draws
            .iter()
            .map(|s| delta.iter().zip(s).map(|(d, x)| d * x).sum())
            .collect();
        let k = u.len() as f64;
        let mean = u.iter().sum::<f64>() / k;
        let var = u.iter().map(|x| (x - mean).powi(2)).sum::<f64>() / (k - 1.0);
        let rho = autocorrelation(&u.iter().map(|&x| vec![x]).collect::<Vec<_>>(), 1)?.values[0].clamp(0.0, 0.99);
        let weight = if pc.quadrature == Quadrature::Trapezoid && (m == 0 || m == pc.bridges) {
            0.5
        } else {
            1.0
        };
        variance += weight * weight * var * (1.0 + rho) / (1.0 - rho) / k;
        values[m] = mean;

        if m < pc.bridges {
            // importance weights of these draws for the next bridge
            let step: Vec<f64> = delta.iter().map(|d| d / pc.bridges as f64).collect();
            let logw: Vec<f64> = draws
                .iter()
                .map(|s| step.iter().zip(s).map(|(d, x)| d * x).sum())
                .collect();
            let mx = logw.iter().cloned().fold(f64::NEG_INFINITY, f64::max);
            let w: Vec<f64> = logw.iter().map(|l| (l - mx).exp()).collect();
            let ess = w.iter().sum::<f64>().powi(2) / w.iter().map(|x| x * x).sum::<f64>();
            let frac = ess / k;
            min_ess = min_ess.min(frac);
            if frac < pc.min_ess_fraction {
                return Err(Error::BridgeOverlap { bridge: m, ess });
            }
        }
    }
    let lambda = quadrature_sum(&values, pc.quadrature);
    let std_error = variance.sqrt() / pc.bridges as f64;
    Ok(PathResult {
        loglik: loglik0 + linear - lambda,
        std_error,
        alpha0,
        loglik0,
        lambda,
        bridge_values: values,
        min_ess_fraction: min_ess,
    })
}

/// Path estimates from `replications` independent seeds, run in parallel.
pub fn replicated_path_loglik(
    model: &ModelSpec<f64>,
    observed: &Partition,
    cov: &CovariateStore<f64>,
    pc: &PathConfig,
    chain_cfg: &ChainConfig,
    replications: usize,
) -> Result<Vec<PathResult>> {
    use rayon::prelude::*;
    let mut seeder = ChaCha8Rng::seed_from_u64(chain_cfg.seed);
    let seeds: Vec<u64> = (0..replications).map(|_| seeder.gen()).collect();
    seeds
        .into_par_iter()
        .map(|s| {
            let cfg = ChainConfig { seed: s, ..chain_cfg.clone() };
            path_sampling_loglik(model, observed, cov, pc, &cfg)
        })
        .collect()
}
