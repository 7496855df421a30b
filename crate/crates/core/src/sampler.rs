//! Metropolis-Hastings sampling over set partitions.
//!
//! Each step picks a relation by its mixture weight, proposes a partition
//! uniformly among that relation's distinct neighbours, and accepts with the
//! Hastings ratio built from the statistic change and the neighbour counts.
//! When the chosen relation has no neighbours the relation is redrawn among
//! those that do; the renormalizing constant of that redraw then enters the
//! Hastings ratio so that detailed balance still holds exactly.

use std::collections::{HashSet, VecDeque};

use rand::seq::SliceRandom;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::combinatorics::bell_restricted;
use crate::error::{Error, Result};
use crate::exact::ModelSpec;
use crate::partition::{Partition, RelationKind, SizeBounds};
use crate::statistics::{CompiledStats, CovariateStore, StatVector, StatisticSpec};

/// Largest population for which reachability of the restricted support is checked.
pub const CONNECTIVITY_CHECK_MAX_N: usize = 8;

/// Steps between full re-evaluations of the cached statistics.
pub const DEFAULT_REFRESH_INTERVAL: u64 = 10_000;

/// Relation weights, in the order merge/split, permute, transfer.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct ProposalMixture {
    pub merge_split: f64,
    pub permute: f64,
    pub transfer: f64,
}

impl ProposalMixture {
    /// Normalizes the weights; permute alone is rejected since it preserves block sizes.
    pub fn new(merge_split: f64, permute: f64, transfer: f64) -> Result<Self> {
        let w = [merge_split, permute, transfer];
        if w.iter().any(|x| !x.is_finite() || *x < 0.0) {
            return Err(Error::Config("mixture weights must be finite and nonnegative".into()));
        }
        if merge_split + transfer <= 0.0 {
            return Err(Error::Config(
                "at least one of merge_split and transfer needs positive weight".into(),
            ));
        }
        let total: f64 = w.iter().sum();
        Ok(Self {
            merge_split: merge_split / total,
            permute: permute / total,
            transfer: transfer / total,
        })
    }

    pub fn merge_split_only() -> Self {
        Self::new(1.0, 0.0, 0.0).unwrap()
    }

    pub fn uniform() -> Self {
        Self::new(1.0, 1.0, 1.0).unwrap()
    }

    /// Merge/split only for size-only models, equal weights otherwise.
    pub fn default_for(specs: &[StatisticSpec]) -> Self {
        if specs.iter().all(StatisticSpec::is_size_based) {
            Self::merge_split_only()
        } else {
            Self::uniform()
        }
    }

    pub fn weight(&self, r: RelationKind) -> f64 {
        match r {
            RelationKind::MergeSplit => self.merge_split,
            RelationKind::Permute => self.permute,
            RelationKind::Transfer => self.transfer,
        }
    }
}

impl Default for ProposalMixture {
    fn default() -> Self {
        Self::merge_split_only()
    }
}

#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum BoundsMode {
    /// Proposals outside the bounds are always rejected.
    #[default]
    RejectInvalid,
    /// The chain runs on the unrestricted space and only in-bounds states are emitted.
    FullSpaceRetain,
}

#[derive(Clone, Debug, Default, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum InitialState {
    Given(Partition),
    #[default]
    RandomValid,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ChainConfig {
    pub mixture: ProposalMixture,
    pub burn_in: u64,
    pub thinning: u64,
    pub seed: u64,
    pub bounds_mode: BoundsMode,
    pub initial: InitialState,
    pub refresh_interval: u64,
}

impl Default for ChainConfig {
    fn default() -> Self {
        Self {
            mixture: ProposalMixture::default(),
            burn_in: 1000,
            thinning: 10,
            seed: 0,
            bounds_mode: BoundsMode::default(),
            initial: InitialState::default(),
            refresh_interval: DEFAULT_REFRESH_INTERVAL,
        }
    }
}

impl ChainConfig {
    pub fn validate(&self) -> Result<()> {
        if self.thinning == 0 {
            return Err(Error::Config("thinning must be at least 1".into()));
        }
        if self.refresh_interval == 0 {
            return Err(Error::Config("refresh interval must be at least 1".into()));
        }
        ProposalMixture::new(self.mixture.merge_split, self.mixture.permute, self.mixture.transfer)?;
        Ok(())
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct Draw {
    pub partition: Partition,
    pub stats: StatVector,
}

/// `min(1, exp(αᵀ(s' - s)) · forward / backward)`.
pub fn accept_probability(
    alpha: &[f64],
    current_stats: &[f64],
    candidate_stats: &[f64],
    forward_count: f64,
    backward_count: f64,
) -> f64 {
    let delta: f64 = alpha
        .iter()
        .zip(candidate_stats.iter().zip(current_stats))
        .map(|(a, (c, s))| a * (c - s))
        .sum();
    let log_ratio = delta + forward_count.ln() - backward_count.ln();
    if log_ratio >= 0.0 {
        1.0
    } else {
        log_ratio.exp()
    }
}

fn active_weight(p: &Partition, mixture: &ProposalMixture) -> f64 {
    RelationKind::ALL
        .iter()
        .filter(|&&r| p.neighbor_count(r) > 0)
        .map(|&r| mixture.weight(r))
        .sum()
}

/// One Metropolis-Hastings chain.
pub struct Chain<'a> {
    compiled: CompiledStats<'a, f64>,
    alpha: Vec<f64>,
    bounds: SizeBounds,
    cfg: ChainConfig,
    current: Partition,
    stats: StatVector,
    rng: ChaCha8Rng,
    proposals: [u64; 3],
    accepts: [u64; 3],
    since_refresh: u64,
}

struct Proposal {
    candidate: Partition,
    removed: Vec<Vec<usize>>,
    added: Vec<Vec<usize>>,
}

impl<'a> Chain<'a> {
    /// Builds the chain for `model`; the RNG stream is `seed + chain_index`.
    pub fn new(
        model: &ModelSpec<f64>,
        cov: &'a CovariateStore<f64>,
        cfg: &ChainConfig,
        chain_index: u64,
    ) -> Result<Self> {
        model.validate()?;
        cfg.validate()?;
        let n = cov.n();
        if n == 0 {
            return Err(Error::EmptyPartition);
        }
        let compiled = CompiledStats::new(&model.statistics, cov)?;
        let mut rng = ChaCha8Rng::seed_from_u64(cfg.seed.wrapping_add(chain_index));
        let current = match &cfg.initial {
            InitialState::Given(p) => {
                if p.n() != n {
                    return Err(Error::Dimension(format!(
                        "initial partition has {} actors, covariates describe {n}",
                        p.n()
                    )));
                }
                p.clone()
            }
            InitialState::RandomValid => random_valid_partition(n, &model.bounds, &mut rng)?,
        };
        let in_bounds = current.respects_bounds(&model.bounds);
        if cfg.bounds_mode == BoundsMode::RejectInvalid {
            if !in_bounds {
                return Err(Error::Config(format!(
                    "initial partition {current} violates bounds {}",
                    model.bounds
                )));
            }
            if n <= CONNECTIVITY_CHECK_MAX_N && !model.bounds.is_trivial_for(n) {
                check_reachable(&current, &model.bounds, &cfg.mixture)?;
            }
        }
        let stats = compiled.evaluate(&current)?;
        Ok(Self {
            compiled,
            alpha: model.alpha.clone(),
            bounds: model.bounds,
            cfg: cfg.clone(),
            current,
            stats,
            rng,
            proposals: [0; 3],
            accepts: [0; 3],
            since_refresh: 0,
        })
    }

    pub fn current(&self) -> &Partition {
        &self.current
    }

    pub fn stats(&self) -> &[f64] {
        &self.stats
    }

    pub fn alpha(&self) -> &[f64] {
        &self.alpha
    }

    pub fn set_alpha(&mut self, alpha: &[f64]) {
        self.alpha.clear();
        self.alpha.extend_from_slice(alpha);
    }

    pub fn config(&self) -> &ChainConfig {
        &self.cfg
    }

    pub fn set_thinning(&mut self, thinning: u64) {
        self.cfg.thinning = thinning.max(1);
    }

    pub fn proposal_counts(&self) -> [u64; 3] {
        self.proposals
    }

    pub fn accept_counts(&self) -> [u64; 3] {
        self.accepts
    }

    pub fn acceptance_rate(&self) -> f64 {
        let p: u64 = self.proposals.iter().sum();
        if p == 0 {
            0.0
        } else {
            self.accepts.iter().sum::<u64>() as f64 / p as f64
        }
    }

    fn choose_relation(&mut self) -> Result<RelationKind> {
        let mix = self.cfg.mixture;
        let active: Vec<(RelationKind, f64)> = RelationKind::ALL
            .iter()
            .map(|&r| (r, mix.weight(r)))
            .filter(|&(r, w)| w > 0.0 && self.current.neighbor_count(r) > 0)
            .collect();
        let total: f64 = active.iter().map(|x| x.1).sum();
        if active.is_empty() || total <= 0.0 {
            return Err(Error::Config(format!(
                "no relation in the mixture has a neighbour of {}",
                self.current
            )));
        }
        let mut u = self.rng.gen::<f64>() * total;
        for &(r, w) in &active {
            if u < w {
                return Ok(r);
            }
            u -= w;
        }
        Ok(active.last().unwrap().0)
    }

    fn propose(&mut self, relation: RelationKind) -> Proposal {
        let p = &self.current;
        let n = p.n();
        let k = p.num_groups();
        let sizes = p.block_sizes();
        let rng = &mut self.rng;
        match relation {
            RelationKind::MergeSplit => {
                let merges = (k * k.saturating_sub(1) / 2) as f64;
                let split_w: Vec<f64> = sizes.iter().map(|&g| 2f64.powi(g as i32 - 1) - 1.0).collect();
                let total = merges + split_w.iter().sum::<f64>();
                let mut u = rng.gen::<f64>() * total;
                if u < merges {
                    let g1 = rng.gen_range(0..k);
                    let mut g2 = rng.gen_range(0..k - 1);
                    if g2 >= g1 {
                        g2 += 1;
                    }
                    let (b1, b2) = (p.block(g1), p.block(g2));
                    let mut merged = [b1.clone(), b2.clone()].concat();
                    merged.sort_unstable();
                    return Proposal {
                        candidate: p.merge(g1.min(g2), g1.max(g2)),
                        removed: vec![b1, b2],
                        added: vec![merged],
                    };
                }
                u -= merges;
                let mut g = split_w.len() - 1;
                for (i, &w) in split_w.iter().enumerate() {
                    if u < w {
                        g = i;
                        break;
                    }
                    u -= w;
                }
                while split_w[g] <= 0.0 {
                    g -= 1;
                }
                let block = p.block(g);
                // the first member stays; any nonempty subset of the others moves
                let moved: Vec<usize> = loop {
                    let m: Vec<usize> = block[1..].iter().copied().filter(|_| rng.gen::<bool>()).collect();
                    if !m.is_empty() {
                        break m;
                    }
                };
                let stay: Vec<usize> = block.iter().copied().filter(|i| !moved.contains(i)).collect();
                Proposal {
                    candidate: p.split(g, &moved),
                    removed: vec![block],
                    added: vec![stay, moved],
                }
            }
            RelationKind::Transfer => loop {
                let i = rng.gen_range(0..n);
                let d = rng.gen_range(0..k);
                let gi = p.group_of(i);
                let own = sizes[gi];
                if d == gi {
                    // move to a new singleton
                    if own == 1 {
                        continue;
                    }
                    let block = p.block(gi);
                    if own == 2 && block[0] != i {
                        continue;
                    }
                    let rest: Vec<usize> = block.iter().copied().filter(|&x| x != i).collect();
                    return Proposal {
                        candidate: p.transfer(i, None),
                        removed: vec![block],
                        added: vec![rest, vec![i]],
                    };
                }
                if own == 1 && sizes[d] == 1 {
                    let j = p.block(d)[0];
                    if i > j {
                        continue;
                    }
                }
                let src = p.block(gi);
                let dst = p.block(d);
                let rest: Vec<usize> = src.iter().copied().filter(|&x| x != i).collect();
                let mut grown = dst.clone();
                grown.push(i);
                grown.sort_unstable();
                let mut added = vec![grown];
                if !rest.is_empty() {
                    added.push(rest);
                }
                return Proposal {
                    candidate: p.transfer(i, Some(d)),
                    removed: vec![src, dst],
                    added,
                };
            },
            RelationKind::Permute => loop {
                let a = rng.gen_range(0..n);
                let b = rng.gen_range(0..n);
                let (ga, gb) = (p.group_of(a), p.group_of(b));
                if ga == gb {
                    continue;
                }
                let (sa, sb) = (sizes[ga], sizes[gb]);
                if sa == 1 && sb == 1 {
                    continue;
                }
                let ba = p.block(ga);
                let bb = p.block(gb);
                if sa == 2 && sb == 2 {
                    let lowest = ba[0].min(bb[0]);
                    if a != lowest && b != lowest {
                        continue;
                    }
                }
                let mut na: Vec<usize> = ba.iter().map(|&x| if x == a { b } else { x }).collect();
                let mut nb: Vec<usize> = bb.iter().map(|&x| if x == b { a } else { x }).collect();
                na.sort_unstable();
                nb.sort_unstable();
                return Proposal {
                    candidate: p.swap(a, b),
                    removed: vec![ba, bb],
                    added: vec![na, nb],
                };
            },
        }
    }

    /// One Metropolis-Hastings step; returns whether the proposal was accepted.
    pub fn step(&mut self) -> Result<bool> {
        let relation = self.choose_relation()?;
        let prop = self.propose(relation);
        let r = relation.index();
        self.proposals[r] += 1;
        let accepted = if self.cfg.bounds_mode == BoundsMode::RejectInvalid
            && !prop.candidate.respects_bounds(&self.bounds)
        {
            false
        } else {
            let cand_stats = self.compiled.apply_delta(&self.stats, &prop.removed, &prop.added);
            let mix = &self.cfg.mixture;
            let forward = self.current.neighbor_count(relation) as f64 * active_weight(&self.current, mix);
            let backward = prop.candidate.neighbor_count(relation) as f64 * active_weight(&prop.candidate, mix);
            let a = accept_probability(&self.alpha, &self.stats, &cand_stats, forward, backward);
            if a >= 1.0 || self.rng.gen::<f64>() < a {
                self.current = prop.candidate;
                self.stats = cand_stats;
                true
            } else {
                false
            }
        };
        if accepted {
            self.accepts[r] += 1;
        }
        self.since_refresh += 1;
        if self.since_refresh >= self.cfg.refresh_interval {
            self.stats = self.compiled.evaluate(&self.current)?;
            self.since_refresh = 0;
        }
        Ok(accepted)
    }

    pub fn advance(&mut self, steps: u64) -> Result<()> {
        for _ in 0..steps {
            self.step()?;
        }
        Ok(())
    }

    /// Advances one thinning interval, continuing in full-space mode until the state is in bounds.
    pub fn next_draw(&mut self) -> Result<Draw> {
        let limit = 10_000u64.max(self.cfg.thinning.saturating_mul(1000));
        let mut waited = 0u64;
        loop {
            self.advance(self.cfg.thinning)?;
            if self.cfg.bounds_mode == BoundsMode::RejectInvalid || self.current.respects_bounds(&self.bounds) {
                return Ok(Draw {
                    partition: self.current.clone(),
                    stats: self.stats.clone(),
                });
            }
            waited += 1;
            if waited > limit {
                return Err(Error::Unreachable);
            }
        }
    }

    pub fn burn_in(&mut self) -> Result<()> {
        self.advance(self.cfg.burn_in)
    }

    pub fn sample(&mut self, num_samples: usize) -> Result<Vec<Draw>> {
        (0..num_samples).map(|_| self.next_draw()).collect()
    }

    pub fn sample_stats(&mut self, num_samples: usize) -> Result<Vec<StatVector>> {
        let mut out = Vec::with_capacity(num_samples);
        for _ in 0..num_samples {
            out.push(self.next_draw()?.stats);
        }
        Ok(out)
    }
}

/// Burn-in followed by `num_samples` draws spaced `thinning` steps apart.
pub fn run_chain(
    model: &ModelSpec<f64>,
    cov: &CovariateStore<f64>,
    cfg: &ChainConfig,
    num_samples: usize,
) -> Result<Vec<Draw>> {
    let mut chain = Chain::new(model, cov, cfg, 0)?;
    chain.burn_in()?;
    chain.sample(num_samples)
}

/// Independent chains run in parallel, chain `c` seeded with `seed + c`.
pub fn run_chains(
    model: &ModelSpec<f64>,
    cov: &CovariateStore<f64>,
    cfg: &ChainConfig,
    num_chains: usize,
    samples_per_chain: usize,
) -> Result<Vec<Vec<Draw>>> {
    (0..num_chains as u64)
        .into_par_iter()
        .map(|c| {
            let mut chain = Chain::new(model, cov, cfg, c)?;
            chain.burn_in()?;
            chain.sample(samples_per_chain)
        })
        .collect()
}

/// Splits `total` draws over parallel chains and pools them in chain order.
pub fn pooled_stats(
    model: &ModelSpec<f64>,
    cov: &CovariateStore<f64>,
    cfg: &ChainConfig,
    num_chains: usize,
    total: usize,
) -> Result<Vec<StatVector>> {
    let c = num_chains.clamp(1, total.max(1));
    let per: Vec<usize> = (0..c).map(|i| total / c + usize::from(i < total % c)).collect();
    let runs: Vec<Vec<StatVector>> = (0..c)
        .into_par_iter()
        .map(|i| {
            let mut chain = Chain::new(model, cov, cfg, i as u64)?;
            chain.burn_in()?;
            chain.sample_stats(per[i])
        })
        .collect::<Result<_>>()?;
    Ok(runs.into_iter().flatten().collect())
}

/// Transition probabilities out of `p` for the chain targeting `model`,
/// built from the exact neighbour sets. The self-loop mass is included.
pub fn transition_row(
    model: &ModelSpec<f64>,
    cov: &CovariateStore<f64>,
    mixture: &ProposalMixture,
    mode: BoundsMode,
    p: &Partition,
) -> Result<Vec<(Partition, f64)>> {
    let compiled = CompiledStats::new(&model.statistics, cov)?;
    let s = compiled.evaluate(p)?;
    let zp = active_weight(p, mixture);
    let mut out: Vec<(Partition, f64)> = Vec::new();
    let mut leave = 0.0;
    for r in RelationKind::ALL {
        let w = mixture.weight(r);
        let np = p.neighbor_count(r);
        if w <= 0.0 || np == 0 {
            continue;
        }
        let pick = w / zp / np as f64;
        for q in p.neighbors(r) {
            if mode == BoundsMode::RejectInvalid && !q.respects_bounds(&model.bounds) {
                continue;
            }
            let sq = compiled.evaluate(&q)?;
            let forward = np as f64 * zp;
            let backward = q.neighbor_count(r) as f64 * active_weight(&q, mixture);
            let prob = pick * accept_probability(&model.alpha, &s, &sq, forward, backward);
            leave += prob;
            match out.iter_mut().find(|(x, _)| *x == q) {
                Some(entry) => entry.1 += prob,
                None => out.push((q, prob)),
            }
        }
    }
    out.push((p.clone(), 1.0 - leave));
    Ok(out)
}

/// Uniformly shuffled actors cut into blocks whose sizes are drawn to respect `bounds`.
pub fn random_valid_partition<R: Rng + ?Sized>(
    n: usize,
    bounds: &SizeBounds,
    rng: &mut R,
) -> Result<Partition> {
    let mut feasible = vec![false; n + 1];
    feasible[0] = true;
    for r in 1..=n {
        feasible[r] = (bounds.min..=bounds.max_for(r)).any(|s| feasible[r - s]);
    }
    if !feasible[n] {
        return Err(Error::EmptySupport { n });
    }
    let mut actors: Vec<usize> = (0..n).collect();
    actors.shuffle(rng);
    let mut labels = vec![0usize; n];
    let mut remaining = n;
    let mut pos = 0;
    let mut g = 0;
    while remaining > 0 {
        let options: Vec<usize> = (bounds.min..=bounds.max_for(remaining))
            .filter(|&s| feasible[remaining - s])
            .collect();
        let s = *options.choose(rng).unwrap();
        for &a in &actors[pos..pos + s] {
            labels[a] = g;
        }
        pos += s;
        remaining -= s;
        g += 1;
    }
    Ok(Partition::relabel(&labels))
}

/// Breadth-first search over in-bounds partitions using the relations with positive weight.
pub fn check_reachable(start: &Partition, bounds: &SizeBounds, mixture: &ProposalMixture) -> Result<()> {
    let n = start.n();
    let target = bell_restricted(n, bounds);
    let mut seen: HashSet<Partition> = HashSet::new();
    let mut queue = VecDeque::new();
    seen.insert(start.clone());
    queue.push_back(start.clone());
    while let Some(p) = queue.pop_front() {
        for r in RelationKind::ALL {
            if mixture.weight(r) <= 0.0 {
                continue;
            }
            for q in p.neighbors(r) {
                if q.respects_bounds(bounds) && !seen.contains(&q) {
                    seen.insert(q.clone());
                    queue.push_back(q);
                }
            }
        }
    }
    if num_bigint::BigUint::from(seen.len()) == target {
        Ok(())
    } else {
        Err(Error::Unreachable)
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct Autocorrelation {
    pub values: Vec<f64>,
    /// Statistics whose trace is constant; their value is reported as 0.
    pub constant: Vec<bool>,
}

impl Autocorrelation {
    pub fn max_abs(&self) -> f64 {
        self.values.iter().fold(0.0, |a, v| a.max(v.abs()))
    }
}

/// Lag-`lag` sample autocorrelation of each statistic.
pub fn autocorrelation(trace: &[StatVector], lag: usize) -> Result<Autocorrelation> {
    if trace.len() <= lag {
        return Err(Error::Config(format!(
            "trace of length {} is too short for lag {lag}",
            trace.len()
        )));
    }
    let k = trace[0].len();
    let m = trace.len() as f64;
    let mut values = vec![0.0; k];
    let mut constant = vec![false; k];
    for j in 0..k {
        let mean = trace.iter().map(|s| s[j]).sum::<f64>() / m;
        let var: f64 = trace.iter().map(|s| (s[j] - mean).powi(2)).sum();
        if trace.iter().all(|s| s[j] == trace[0][j]) || var == 0.0 {
            constant[j] = true;
            continue;
        }
        let cov: f64 = (lag..trace.len())
            .map(|t| (trace[t][j] - mean) * (trace[t - lag][j] - mean))
            .sum();
        values[j] = cov / var;
    }
    Ok(Autocorrelation { values, constant })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::statistics::StatisticSpec as S;

    fn model(alpha: f64, bounds: SizeBounds) -> ModelSpec<f64> {
        ModelSpec::new(vec![S::num_groups()], vec![alpha], bounds).unwrap()
    }

    #[test]
    fn mixture_validation() {
        assert!(ProposalMixture::new(0.0, 1.0, 0.0).is_err());
        assert!(ProposalMixture::new(-1.0, 1.0, 1.0).is_err());
        let m = ProposalMixture::new(2.0, 1.0, 1.0).unwrap();
        assert_eq!(m.merge_split, 0.5);
        assert_eq!(ProposalMixture::default_for(&[S::num_groups()]), ProposalMixture::merge_split_only());
        assert_eq!(
            ProposalMixture::default_for(&[S::dyadic_covariate("z")]),
            ProposalMixture::uniform()
        );
    }

    #[test]
    fn acceptance_examples() {
        assert_eq!(accept_probability(&[1.0], &[2.0], &[2.0], 3.0, 3.0), 1.0);
        assert!((accept_probability(&[0.0], &[1.0], &[2.0], 3.0, 6.0) - 0.5).abs() < 1e-15);
        // n = 3, split of the single block with alpha = 1: min(1, e * 3 / N(p'))
        let p = Partition::single_block(3);
        let q = p.split(0, &[2]);
        let nq = q.neighbor_count(RelationKind::MergeSplit) as f64;
        let a = accept_probability(&[1.0], &[1.0], &[2.0], 3.0, nq);
        assert_eq!(a, (1f64.exp() * 3.0 / nq).min(1.0));
    }

    #[test]
    fn merge_proposals_uniform_from_singletons() {
        let cov = CovariateStore::new(3);
        let cfg = ChainConfig {
            initial: InitialState::Given(Partition::singletons(3)),
            ..Default::default()
        };
        let mut chain = Chain::new(&model(0.0, SizeBounds::unbounded()), &cov, &cfg, 0).unwrap();
        let mut counts = std::collections::HashMap::new();
        for _ in 0..30_000 {
            let prop = chain.propose(RelationKind::MergeSplit);
            *counts.entry(prop.candidate).or_insert(0usize) += 1;
        }
        assert_eq!(counts.len(), 3);
        for &c in counts.values() {
            assert!((c as f64 / 30_000.0 - 1.0 / 3.0).abs() < 0.02);
        }
    }

    #[test]
    fn proposals_match_neighbor_sets() {
        let cov = CovariateStore::new(6);
        let starts = [
            vec![0, 0, 1, 1, 2, 3],
            vec![0, 1, 2, 3, 4, 5],
            vec![0, 0, 0, 0, 0, 0],
            vec![0, 1, 1, 0, 2, 2],
        ];
        for m in starts {
            let p = Partition::from_membership(m).unwrap();
            let cfg = ChainConfig {
                initial: InitialState::Given(p.clone()),
                ..Default::default()
            };
            let mut chain = Chain::new(&model(0.0, SizeBounds::unbounded()), &cov, &cfg, 1).unwrap();
            let compiled = CompiledStats::new(&[S::num_groups(), S::sum_squared_sizes()], &cov).unwrap();
            let base = compiled.evaluate(&p).unwrap();
            for r in RelationKind::ALL {
                let nb: HashSet<Partition> = p.neighbors(r).into_iter().collect();
                if nb.is_empty() {
                    continue;
                }
                let mut seen = std::collections::HashMap::new();
                let draws = 400 * nb.len();
                for _ in 0..draws {
                    let prop = chain.propose(r);
                    assert!(nb.contains(&prop.candidate), "{r:?} from {p}");
                    let d = compiled.apply_delta(&base, &prop.removed, &prop.added);
                    assert_eq!(d, compiled.evaluate(&prop.candidate).unwrap());
                    *seen.entry(prop.candidate).or_insert(0usize) += 1;
                }
                assert_eq!(seen.len(), nb.len(), "{r:?} from {p}");
                let expect = draws as f64 / nb.len() as f64;
                for &c in seen.values() {
                    assert!((c as f64 - expect).abs() < 5.0 * expect.sqrt(), "{r:?} from {p}");
                }
            }
        }
    }

    #[test]
    fn permute_resampled_from_single_block() {
        let cov = CovariateStore::new(4);
        let cfg = ChainConfig {
            mixture: ProposalMixture::new(0.0, 1.0, 1.0).unwrap(),
            initial: InitialState::Given(Partition::single_block(4)),
            ..Default::default()
        };
        let mut chain = Chain::new(&model(0.0, SizeBounds::unbounded()), &cov, &cfg, 0).unwrap();
        for _ in 0..50 {
            assert_eq!(chain.choose_relation().unwrap(), RelationKind::Transfer);
        }
    }

    #[test]
    fn reproducible_and_in_bounds() {
        let cov = CovariateStore::new(9);
        let b = SizeBounds::new(2, Some(4)).unwrap();
        let cfg = ChainConfig {
            mixture: ProposalMixture::uniform(),
            seed: 17,
            ..Default::default()
        };
        let m = model(0.3, b);
        let a = run_chain(&m, &cov, &cfg, 300).unwrap();
        let c = run_chain(&m, &cov, &cfg, 300).unwrap();
        assert_eq!(a, c);
        assert!(a.iter().all(|d| d.partition.respects_bounds(&b)));
        let retain = ChainConfig {
            bounds_mode: BoundsMode::FullSpaceRetain,
            ..cfg
        };
        let d = run_chain(&m, &cov, &retain, 300).unwrap();
        assert!(d.iter().all(|d| d.partition.respects_bounds(&b)));
    }

    #[test]
    fn unreachable_support_detected() {
        // sizes exactly 2 cannot be connected by transfers alone
        let b = SizeBounds::new(2, Some(2)).unwrap();
        let p = Partition::from_membership(vec![0, 0, 1, 1]).unwrap();
        let mix = ProposalMixture::new(0.0, 0.0, 1.0).unwrap();
        assert_eq!(check_reachable(&p, &b, &mix), Err(Error::Unreachable));
        assert_eq!(check_reachable(&p, &b, &ProposalMixture::merge_split_only()), Err(Error::Unreachable));
        assert!(check_reachable(&p, &b, &ProposalMixture::new(1.0, 1.0, 0.0).unwrap()).is_ok());
    }

    #[test]
    fn random_valid_respects_bounds() {
        let mut rng = ChaCha8Rng::seed_from_u64(3);
        let b = SizeBounds::new(3, Some(5)).unwrap();
        for n in [3, 7, 11, 30] {
            let p = random_valid_partition(n, &b, &mut rng).unwrap();
            assert!(p.respects_bounds(&b));
        }
        assert_eq!(random_valid_partition(2, &b, &mut rng), Err(Error::EmptySupport { n: 2 }));
    }

    #[test]
    fn autocorrelation_cases() {
        let constant = vec![vec![1.0]; 50];
        let a = autocorrelation(&constant, 1).unwrap();
        assert_eq!(a.values, vec![0.0]);
        assert!(a.constant[0]);
        let mut rng = ChaCha8Rng::seed_from_u64(9);
        let iid: Vec<Vec<f64>> = (0..10_000).map(|_| vec![rng.gen::<f64>()]).collect();
        assert!(autocorrelation(&iid, 1).unwrap().values[0].abs() < 0.05);
        assert!(autocorrelation(&iid[..1], 1).is_err());
    }

    #[test]
    fn permute_preserves_size_profile() {
        let cov = CovariateStore::new(7);
        let p = Partition::from_membership(vec![0, 0, 0, 1, 1, 2, 3]).unwrap();
        let cfg = ChainConfig {
            mixture: ProposalMixture {
                merge_split: 0.0,
                permute: 1.0,
                transfer: 0.0,
            },
            initial: InitialState::Given(p.clone()),
            burn_in: 0,
            thinning: 1,
            ..Default::default()
        };
        // bypass mixture validation: permute-only is refused by the constructor
        assert!(Chain::new(&model(0.0, SizeBounds::unbounded()), &cov, &cfg, 0).is_err());
        let mut cfg = cfg;
        cfg.mixture = ProposalMixture::uniform();
        let mut chain = Chain::new(&model(0.0, SizeBounds::unbounded()), &cov, &cfg, 0).unwrap();
        for _ in 0..500 {
            let before = chain.current().size_profile();
            let prop = chain.propose(RelationKind::Permute);
            assert_eq!(prop.candidate.size_profile(), before);
            chain.step().unwrap();
        }
    }
}
