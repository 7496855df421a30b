//! Goodness of fit through auxiliary statistics of simulated partitions.

use std::collections::BTreeMap;
use std::fmt;
use std::str::FromStr;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::exact::ModelSpec;
use crate::partition::Partition;
use crate::sampler::{Chain, ChainConfig, InitialState};
use crate::statistics::CovariateStore;

/// An auxiliary statistic; some expand to several named values.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum AuxSpec {
    /// Number of blocks of each size `1..=max_size` (`n` when unset).
    SizeHistogram { max_size: Option<usize> },
    /// Within-block dyads per bucket `[w·b, w·(b+1))` of absolute attribute difference.
    DiffTies { attribute: String, width: f64 },
    /// One-way intraclass correlation of the attribute across blocks.
    Icc { attribute: String },
    /// Pearson correlation between an actor's attribute and the size of its block.
    AttrSizeCorrelation { attribute: String },
    /// Proportion of within-block dyads whose attribute values are equal.
    SameCategory { attribute: String },
    /// Mean size of the block an actor belongs to, per attribute value.
    MeanSizeByCategory { attribute: String },
}

impl FromStr for AuxSpec {
    type Err = Error;

    /// Parses `size_hist[:max]`, `diff_ties:attr[:width]`, `icc:attr`,
    /// `attr_size_corr:attr`, `same_category:attr` and `mean_size_by_category:attr`.
    fn from_str(s: &str) -> Result<Self> {
        let parts: Vec<&str> = s.trim().split(':').collect();
        let bad = || Error::Config(format!("cannot parse auxiliary statistic `{s}`"));
        let attr = |i: usize| parts.get(i).filter(|a| !a.is_empty()).map(|a| a.to_string()).ok_or_else(bad);
        match parts[0] {
            "size_hist" => Ok(AuxSpec::SizeHistogram {
                max_size: match parts.get(1) {
                    Some(m) => Some(m.parse().map_err(|_| bad())?),
                    None => None,
                },
            }),
            "diff_ties" => Ok(AuxSpec::DiffTies {
                attribute: attr(1)?,
                width: match parts.get(2) {
                    Some(w) => w.parse().ok().filter(|w: &f64| *w > 0.0).ok_or_else(bad)?,
                    None => 1.0,
                },
            }),
            "icc" => Ok(AuxSpec::Icc { attribute: attr(1)? }),
            "attr_size_corr" => Ok(AuxSpec::AttrSizeCorrelation { attribute: attr(1)? }),
            "same_category" => Ok(AuxSpec::SameCategory { attribute: attr(1)? }),
            "mean_size_by_category" => Ok(AuxSpec::MeanSizeByCategory { attribute: attr(1)? }),
            _ => Err(bad()),
        }
    }
}

impl fmt::Display for AuxSpec {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            AuxSpec::SizeHistogram { max_size: None } => write!(f, "size_hist"),
            AuxSpec::SizeHistogram { max_size: Some(m) } => write!(f, "size_hist:{m}"),
            AuxSpec::DiffTies { attribute, width } => write!(f, "diff_ties:{attribute}:{width}"),
            AuxSpec::Icc { attribute } => write!(f, "icc:{attribute}"),
            AuxSpec::AttrSizeCorrelation { attribute } => write!(f, "attr_size_corr:{attribute}"),
            AuxSpec::SameCategory { attribute } => write!(f, "same_category:{attribute}"),
            AuxSpec::MeanSizeByCategory { attribute } => write!(f, "mean_size_by_category:{attribute}"),
        }
    }
}

pub fn parse_aux_list(list: &str) -> Result<Vec<AuxSpec>> {
    list.split(',').filter(|s| !s.trim().is_empty()).map(str::parse).collect()
}

/// A named auxiliary value; `None` when undefined for this partition.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct AuxValue {
    pub name: String,
    pub value: Option<f64>,
}

fn present(values: &[Option<f64>]) -> impl Iterator<Item = (usize, f64)> + '_ {
    values.iter().enumerate().filter_map(|(i, v)| v.map(|x| (i, x)))
}

/// One-way ANOVA intraclass correlation `(MSB - MSW) / (MSB + (k̄ - 1) MSW)`,
/// `k̄` being the mean size of blocks with at least two observed members.
pub fn intraclass_correlation(p: &Partition, values: &[Option<f64>]) -> Option<f64> {
    let mut groups: BTreeMap<usize, Vec<f64>> = BTreeMap::new();
    for (i, x) in present(values) {
        groups.entry(p.group_of(i)).or_default().push(x);
    }
    let g = groups.len();
    let total: usize = groups.values().map(Vec::len).sum();
    if g < 2 || total <= g {
        return None;
    }
    let grand = groups.values().flatten().sum::<f64>() / total as f64;
    let mut ssb = 0.0;
    let mut ssw = 0.0;
    for xs in groups.values() {
        let m = xs.iter().sum::<f64>() / xs.len() as f64;
        ssb += xs.len() as f64 * (m - grand).powi(2);
        ssw += xs.iter().map(|x| (x - m).powi(2)).sum::<f64>();
    }
    let msb = ssb / (g - 1) as f64;
    let msw = ssw / (total - g) as f64;
    let big: Vec<usize> = groups.values().map(Vec::len).filter(|&s| s >= 2).collect();
    let kbar = big.iter().sum::<usize>() as f64 / big.len() as f64;
    let denom = msb + (kbar - 1.0) * msw;
    if denom <= 0.0 {
        return None;
    }
    Some((msb - msw) / denom)
}

fn pearson(xs: &[f64], ys: &[f64]) -> Option<f64> {
    let n = xs.len() as f64;
    if xs.len() < 2 {
        return None;
    }
    let mx = xs.iter().sum::<f64>() / n;
    let my = ys.iter().sum::<f64>() / n;
    let sxy: f64 = xs.iter().zip(ys).map(|(x, y)| (x - mx) * (y - my)).sum();
    let sxx: f64 = xs.iter().map(|x| (x - mx).powi(2)).sum();
    let syy: f64 = ys.iter().map(|y| (y - my).powi(2)).sum();
    if sxx <= 0.0 || syy <= 0.0 {
        return None;
    }
    Some(sxy / (sxx * syy).sqrt())
}

fn category_label(x: f64, cats: Option<&[String]>) -> String {
    match cats {
        Some(c) if x >= 0.0 && (x as usize) < c.len() && x.fract() == 0.0 => c[x as usize].clone(),
        _ => format!("{x}"),
    }
}

/// Named values of one auxiliary statistic on `p`. Bucket and category layouts
/// depend only on the covariates, so values line up across partitions.
fn aux_values(spec: &AuxSpec, p: &Partition, cov: &CovariateStore<f64>) -> Result<Vec<AuxValue>> {
    let n = p.n();
    let named = |name: String, value: Option<f64>| AuxValue { name, value };
    match spec {
        AuxSpec::SizeHistogram { max_size } => {
            let max = max_size.unwrap_or(n);
            let mut counts = vec![0usize; max + 1];
            for &s in p.block_sizes() {
                if s <= max {
                    counts[s] += 1;
                }
            }
            Ok((1..=max)
                .map(|s| named(format!("size_hist[{s}]"), Some(counts[s] as f64)))
                .collect())
        }
        AuxSpec::DiffTies { attribute, width } => {
            let x = cov.attribute(attribute)?;
            let vals: Vec<f64> = x.iter().flatten().copied().collect();
            let lo = vals.iter().cloned().fold(f64::INFINITY, f64::min);
            let hi = vals.iter().cloned().fold(f64::NEG_INFINITY, f64::max);
            let buckets = if vals.is_empty() { 1 } else { ((hi - lo) / width).floor() as usize + 1 };
            let mut counts = vec![0usize; buckets];
            for block in p.blocks() {
                for (a, &i) in block.iter().enumerate() {
                    for &j in &block[a + 1..] {
                        if let (Some(xi), Some(xj)) = (x[i], x[j]) {
                            let b = (((xi - xj).abs() / width).floor() as usize).min(buckets - 1);
                            counts[b] += 1;
                        }
                    }
                }
            }
            Ok(counts
                .iter()
                .enumerate()
                .map(|(b, &c)| {
                    let lo = b as f64 * width;
                    named(format!("diff_ties:{attribute}[{lo},{})", lo + width), Some(c as f64))
                })
                .collect())
        }
        AuxSpec::Icc { attribute } => {
            let x = cov.attribute(attribute)?;
            Ok(vec![named(format!("icc:{attribute}"), intraclass_correlation(p, x))])
        }
        AuxSpec::AttrSizeCorrelation { attribute } => {
            let x = cov.attribute(attribute)?;
            let (xs, ys): (Vec<f64>, Vec<f64>) = present(x)
                .map(|(i, v)| (v, p.block_sizes()[p.group_of(i)] as f64))
                .unzip();
            Ok(vec![named(format!("attr_size_corr:{attribute}"), pearson(&xs, &ys))])
        }
        AuxSpec::SameCategory { attribute } => {
            let x = cov.attribute(attribute)?;
            let mut same = 0usize;
            let mut total = 0usize;
            for block in p.blocks() {
                for (a, &i) in block.iter().enumerate() {
                    for &j in &block[a + 1..] {
                        if let (Some(xi), Some(xj)) = (x[i], x[j]) {
                            total += 1;
                            same += usize::from(xi == xj);
                        }
                    }
                }
            }
            let v = (total > 0).then(|| same as f64 / total as f64);
            Ok(vec![named(format!("same_category:{attribute}"), v)])
        }
        AuxSpec::MeanSizeByCategory { attribute } => {
            let x = cov.attribute(attribute)?;
            let cats = cov.categories(attribute);
            let mut levels: Vec<f64> = x.iter().flatten().copied().collect();
            levels.sort_by(|a, b| a.partial_cmp(b).unwrap());
            levels.dedup();
            Ok(levels
                .iter()
                .map(|&level| {
                    let sizes: Vec<f64> = present(x)
                        .filter(|&(_, v)| v == level)
                        .map(|(i, _)| p.block_sizes()[p.group_of(i)] as f64)
                        .collect();
                    let mean = sizes.iter().sum::<f64>() / sizes.len() as f64;
                    named(
                        format!("mean_size:{attribute}={}", category_label(level, cats)),
                        Some(mean),
                    )
                })
                .collect())
        }
    }
}

/// Evaluates every auxiliary statistic on `p`.
pub fn auxiliary_statistics(p: &Partition, cov: &CovariateStore<f64>, specs: &[AuxSpec]) -> Result<Vec<AuxValue>> {
    if p.n() != cov.n() {
        return Err(Error::Dimension(format!(
            "partition has {} actors, covariates describe {}",
            p.n(),
            cov.n()
        )));
    }
    let mut out = Vec::new();
    for s in specs {
        out.extend(aux_values(s, p, cov)?);
    }
    Ok(out)
}

/// Type-7 (linear interpolation) sample quantile of sorted data.
pub fn quantile_sorted(sorted: &[f64], q: f64) -> f64 {
    let n = sorted.len();
    if n == 1 {
        return sorted[0];
    }
    let h = (n - 1) as f64 * q;
    let lo = h.floor() as usize;
    let hi = (lo + 1).min(n - 1);
    sorted[lo] + (h - lo as f64) * (sorted[hi] - sorted[lo])
}

pub const GOF_QUANTILES: [f64; 5] = [0.025, 0.25, 0.5, 0.75, 0.975];

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct AuxSummary {
    pub name: String,
    pub observed: Option<f64>,
    pub mean: Option<f64>,
    pub sd: Option<f64>,
    /// Quantiles at [`GOF_QUANTILES`].
    pub quantiles: Option<[f64; 5]>,
    /// Simulations where the statistic was defined.
    pub defined: usize,
    /// Observed value outside the central 95% simulated interval.
    pub flagged: bool,
    /// Standardized gap `(mean - observed) / sd`.
    pub standardized: Option<f64>,
    pub simulated: Vec<Option<f64>>,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct GofReport {
    pub num_sims: usize,
    pub auxiliaries: Vec<AuxSpec>,
    pub summaries: Vec<AuxSummary>,
}

impl GofReport {
    pub fn flagged(&self) -> impl Iterator<Item = &AuxSummary> {
        self.summaries.iter().filter(|s| s.flagged)
    }

    pub fn get(&self, name: &str) -> Option<&AuxSummary> {
        self.summaries.iter().find(|s| s.name == name)
    }
}

/// Summarizes simulated auxiliary values against the observed ones.
pub fn summarize(observed: &[AuxValue], simulated: &[Vec<AuxValue>]) -> Vec<AuxSummary> {
    observed
        .iter()
        .map(|obs| {
            let column: Vec<Option<f64>> = simulated
                .iter()
                .map(|row| row.iter().find(|v| v.name == obs.name).and_then(|v| v.value))
                .collect();
            let mut vals: Vec<f64> = column.iter().flatten().copied().collect();
            vals.sort_by(|a, b| a.partial_cmp(b).unwrap());
            let defined = vals.len();
            let (mean, sd, quantiles) = if defined == 0 {
                (None, None, None)
            } else {
                let m = vals.iter().sum::<f64>() / defined as f64;
                let sd = if defined > 1 {
                    (vals.iter().map(|v| (v - m).powi(2)).sum::<f64>() / (defined - 1) as f64).sqrt()
                } else {
                    0.0
                };
                let q = GOF_QUANTILES.map(|q| quantile_sorted(&vals, q));
                (Some(m), Some(sd), Some(q))
            };
            let flagged = match (obs.value, quantiles) {
                (Some(o), Some(q)) => o < q[0] || o > q[4],
                _ => false,
            };
            let standardized = match (obs.value, mean, sd) {
                (Some(o), Some(m), Some(s)) if s > 0.0 => Some((m - o) / s),
                _ => None,
            };
            AuxSummary {
                name: obs.name.clone(),
                observed: obs.value,
                mean,
                sd,
                quantiles,
                defined,
                flagged,
                standardized,
                simulated: column,
            }
        })
        .collect()
}

/// Simulates `num_sims` partitions from the fitted model and compares auxiliary statistics.
pub fn gof(
    model: &ModelSpec<f64>,
    cov: &CovariateStore<f64>,
    observed: &Partition,
    aux: &[AuxSpec],
    num_sims: usize,
    chain_cfg: &ChainConfig,
    chains: usize,
) -> Result<GofReport> {
    if num_sims == 0 {
        return Err(Error::Config("at least one simulation is required".into()));
    }
    // pin histogram widths to the observed population so rows align
    let aux: Vec<AuxSpec> = aux
        .iter()
        .map(|a| match a {
            AuxSpec::SizeHistogram { max_size: None } => AuxSpec::SizeHistogram {
                max_size: Some(model.bounds.max_for(observed.n())),
            },
            other => other.clone(),
        })
        .collect();
    let obs = auxiliary_statistics(observed, cov, &aux)?;
    let mut cfg = chain_cfg.clone();
    if matches!(cfg.initial, InitialState::RandomValid) && observed.respects_bounds(&model.bounds) {
        cfg.initial = InitialState::Given(observed.clone());
    }
    let c = chains.clamp(1, num_sims);
    let per: Vec<usize> = (0..c).map(|i| num_sims / c + usize::from(i < num_sims % c)).collect();
    let sims: Vec<Vec<AuxValue>> = (0..c)
        .into_par_iter()
        .map(|i| {
            let mut chain = Chain::new(model, cov, &cfg, i as u64)?;
            chain.burn_in()?;
            (0..per[i])
                .map(|_| auxiliary_statistics(&chain.next_draw()?.partition, cov, &aux))
                .collect::<Result<Vec<_>>>()
        })
        .collect::<Result<Vec<_>>>()?
        .into_iter()
        .flatten()
        .collect();
    Ok(GofReport {
        num_sims,
        summaries: summarize(&obs, &sims),
        auxiliaries: aux,
    })
}
