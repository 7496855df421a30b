//! Sufficient statistics of a partition and the covariates they read.
//!
//! Every statistic is a sum over blocks of a per-block value, which is what
//! makes incremental evaluation under a proposal move exact: only the blocks
//! that differ between the two partitions need to be re-summed.

use std::collections::{BTreeMap, HashSet};
use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::partition::Partition;
use crate::scalar::{ln_factorial_minus_one, Real};

/// Dyadic similarity index for homophily statistics.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum DyadSimilarity {
    /// 1 when both actors carry the same value.
    Match,
    /// `|a_i - a_j|`: a positive parameter signals heterophily.
    AbsDiff,
    /// `-|a_i - a_j|`: a positive parameter signals homophily.
    NegAbsDiff,
}

/// Block-level similarity index for group homophily.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum GroupForm {
    AllSame,
    Range,
    DistinctCount,
    Variance,
}

#[derive(Clone, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum StatisticKind {
    NumGroups,
    NumGroupsOfSize { size: usize },
    SumLogFactorialSizes,
    SumSquaredSizes,
    DyadicHomophily { attribute: String, similarity: DyadSimilarity },
    GroupHomophily { attribute: String, form: GroupForm },
    DyadicCovariate { covariate: String },
    DyadicSociability { attribute: String },
    GroupSociability { attribute: String },
}

/// One sufficient statistic; `normalized` divides each block's dyadic value by
/// its number of unordered dyads and each group-level value by the block size.
#[derive(Clone, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct StatisticSpec {
    #[serde(flatten)]
    pub kind: StatisticKind,
    #[serde(default)]
    pub normalized: bool,
}

pub type StatVector<T = f64> = Vec<T>;

impl From<StatisticKind> for StatisticSpec {
    fn from(kind: StatisticKind) -> Self {
        Self {
            kind,
            normalized: false,
        }
    }
}

impl StatisticSpec {
    pub fn num_groups() -> Self {
        StatisticKind::NumGroups.into()
    }

    pub fn num_groups_of_size(size: usize) -> Self {
        StatisticKind::NumGroupsOfSize { size }.into()
    }

    pub fn sum_log_factorial_sizes() -> Self {
        StatisticKind::SumLogFactorialSizes.into()
    }

    pub fn sum_squared_sizes() -> Self {
        StatisticKind::SumSquaredSizes.into()
    }

    pub fn dyadic_homophily(attribute: &str, similarity: DyadSimilarity) -> Self {
        StatisticKind::DyadicHomophily {
            attribute: attribute.into(),
            similarity,
        }
        .into()
    }

    pub fn group_homophily(attribute: &str, form: GroupForm) -> Self {
        StatisticKind::GroupHomophily {
            attribute: attribute.into(),
            form,
        }
        .into()
    }

    pub fn dyadic_covariate(covariate: &str) -> Self {
        StatisticKind::DyadicCovariate {
            covariate: covariate.into(),
        }
        .into()
    }

    pub fn dyadic_sociability(attribute: &str) -> Self {
        StatisticKind::DyadicSociability {
            attribute: attribute.into(),
        }
        .into()
    }

    pub fn group_sociability(attribute: &str) -> Self {
        StatisticKind::GroupSociability {
            attribute: attribute.into(),
        }
        .into()
    }

    pub fn normalized(mut self) -> Self {
        self.normalized = true;
        self
    }

    /// Per-block value `f(#G)` when the statistic depends on block sizes only.
    pub fn size_function<T: Real>(&self, size: usize) -> Option<T> {
        match &self.kind {
            StatisticKind::NumGroups => Some(T::one()),
            StatisticKind::NumGroupsOfSize { size: k } => {
                Some(if size == *k { T::one() } else { T::zero() })
            }
            StatisticKind::SumLogFactorialSizes => Some(ln_factorial_minus_one(size)),
            StatisticKind::SumSquaredSizes => Some(T::of_usize(size * size)),
            _ => None,
        }
    }

    pub fn is_size_based(&self) -> bool {
        self.size_function::<f64>(1).is_some()
    }

    pub fn attribute(&self) -> Option<&str> {
        match &self.kind {
            StatisticKind::DyadicHomophily { attribute, .. }
            | StatisticKind::GroupHomophily { attribute, .. }
            | StatisticKind::DyadicSociability { attribute }
            | StatisticKind::GroupSociability { attribute } => Some(attribute),
            _ => None,
        }
    }

    pub fn covariate(&self) -> Option<&str> {
        match &self.kind {
            StatisticKind::DyadicCovariate { covariate } => Some(covariate),
            _ => None,
        }
    }
}

impl fmt::Display for StatisticSpec {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match &self.kind {
            StatisticKind::NumGroups => write!(f, "num_groups")?,
            StatisticKind::NumGroupsOfSize { size } => write!(f, "num_groups_of_size({size})")?,
            StatisticKind::SumLogFactorialSizes => write!(f, "sum_log_factorial_sizes")?,
            StatisticKind::SumSquaredSizes => write!(f, "sum_squared_sizes")?,
            StatisticKind::DyadicHomophily {
                attribute,
                similarity,
            } => write!(f, "dyadic_homophily({attribute},{similarity:?})")?,
            StatisticKind::GroupHomophily { attribute, form } => {
                write!(f, "group_homophily({attribute},{form:?})")?
            }
            StatisticKind::DyadicCovariate { covariate } => {
                write!(f, "dyadic_covariate({covariate})")?
            }
            StatisticKind::DyadicSociability { attribute } => {
                write!(f, "dyadic_sociability({attribute})")?
            }
            StatisticKind::GroupSociability { attribute } => {
                write!(f, "group_sociability({attribute})")?
            }
        }
        if self.normalized {
            write!(f, "[normalized]")?;
        }
        Ok(())
    }
}

fn squash(s: &str) -> String {
    s.chars()
        .filter(|c| *c != '_' && *c != '-')
        .flat_map(char::to_lowercase)
        .collect()
}

impl FromStr for DyadSimilarity {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match squash(s.trim()).as_str() {
            "match" => Ok(Self::Match),
            "absdiff" => Ok(Self::AbsDiff),
            "negabsdiff" => Ok(Self::NegAbsDiff),
            _ => Err(Error::Config(format!("unknown dyadic similarity `{s}`"))),
        }
    }
}

impl FromStr for GroupForm {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match squash(s.trim()).as_str() {
            "allsame" => Ok(Self::AllSame),
            "range" => Ok(Self::Range),
            "distinctcount" => Ok(Self::DistinctCount),
            "variance" => Ok(Self::Variance),
            _ => Err(Error::Config(format!("unknown group form `{s}`"))),
        }
    }
}

/// Parses the `Display` form, e.g. `group_homophily(age, range)` or
/// `dyadic_covariate(acquaintance)[normalized]`. Option names are
/// case- and underscore-insensitive.
impl FromStr for StatisticSpec {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        let bad = || Error::Config(format!("cannot parse statistic `{s}`"));
        let mut text = s.trim();
        let mut normalized = false;
        if let Some(rest) = text.strip_suffix("[normalized]") {
            text = rest.trim_end();
            normalized = true;
        }
        let (name, args) = match text.find('(') {
            Some(open) => {
                let inner = text[open + 1..].strip_suffix(')').ok_or_else(bad)?;
                let args: Vec<&str> = inner.split(',').map(str::trim).collect();
                (text[..open].trim(), args)
            }
            None => (text, Vec::new()),
        };
        let one = |args: &[&str]| match args {
            [a] if !a.is_empty() => Ok(a.to_string()),
            _ => Err(bad()),
        };
        let kind = match (squash(name).as_str(), args.as_slice()) {
            ("numgroups", []) => StatisticKind::NumGroups,
            ("numgroupsofsize", [k]) => StatisticKind::NumGroupsOfSize {
                size: k.parse().map_err(|_| bad())?,
            },
            ("sumlogfactorialsizes", []) => StatisticKind::SumLogFactorialSizes,
            ("sumsquaredsizes", []) => StatisticKind::SumSquaredSizes,
            ("dyadichomophily", [a, sim]) => StatisticKind::DyadicHomophily {
                attribute: a.to_string(),
                similarity: sim.parse()?,
            },
            ("grouphomophily", [a, form]) => StatisticKind::GroupHomophily {
                attribute: a.to_string(),
                form: form.parse()?,
            },
            ("dyadiccovariate", a) => StatisticKind::DyadicCovariate { covariate: one(a)? },
            ("dyadicsociability", a) => StatisticKind::DyadicSociability { attribute: one(a)? },
            ("groupsociability", a) => StatisticKind::GroupSociability { attribute: one(a)? },
            _ => return Err(Error::Config(format!("unknown statistic `{s}`"))),
        };
        Ok(Self { kind, normalized })
    }
}

/// Actor attributes (possibly missing) and symmetric dyadic covariate matrices.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct CovariateStore<T = f64> {
    n: usize,
    attributes: BTreeMap<String, Vec<Option<T>>>,
    /// Category labels for attributes loaded from text, indexed by code.
    categories: BTreeMap<String, Vec<String>>,
    /// Row-major `n × n` matrices.
    dyadic: BTreeMap<String, Vec<T>>,
}

impl<T: Real> CovariateStore<T> {
    pub fn new(n: usize) -> Self {
        Self {
            n,
            attributes: BTreeMap::new(),
            categories: BTreeMap::new(),
            dyadic: BTreeMap::new(),
        }
    }

    pub fn n(&self) -> usize {
        self.n
    }

    pub fn add_attribute(&mut self, name: &str, values: Vec<Option<T>>) -> Result<()> {
        if values.len() != self.n {
            return Err(Error::Dimension(format!(
                "attribute `{name}` has {} values for {} actors",
                values.len(),
                self.n
            )));
        }
        self.attributes.insert(name.to_string(), values);
        Ok(())
    }

    pub fn with_attribute(mut self, name: &str, values: &[T]) -> Result<Self> {
        self.add_attribute(name, values.iter().map(|&v| Some(v)).collect())?;
        Ok(self)
    }

    pub fn add_categorical(&mut self, name: &str, labels: &[Option<String>]) -> Result<()> {
        let mut codes: Vec<String> = Vec::new();
        let values = labels
            .iter()
            .map(|l| {
                l.as_ref().map(|l| {
                    let code = codes.iter().position(|c| c == l).unwrap_or_else(|| {
                        codes.push(l.clone());
                        codes.len() - 1
                    });
                    T::of_usize(code)
                })
            })
            .collect();
        self.add_attribute(name, values)?;
        self.categories.insert(name.to_string(), codes);
        Ok(())
    }

    /// Adds a dyadic covariate; the matrix must be symmetric and its diagonal is ignored.
    pub fn add_dyadic(&mut self, name: &str, matrix: Vec<Vec<T>>) -> Result<()> {
        if matrix.len() != self.n || matrix.iter().any(|r| r.len() != self.n) {
            return Err(Error::Dimension(format!(
                "dyadic covariate `{name}` is not {0}x{0}",
                self.n
            )));
        }
        let mut flat = vec![T::zero(); self.n * self.n];
        for i in 0..self.n {
            for j in 0..self.n {
                if matrix[i][j] != matrix[j][i] {
                    return Err(Error::Dimension(format!(
                        "dyadic covariate `{name}` is not symmetric at ({i}, {j})"
                    )));
                }
                if i != j {
                    flat[i * self.n + j] = matrix[i][j];
                }
            }
        }
        self.dyadic.insert(name.to_string(), flat);
        Ok(())
    }

    pub fn with_dyadic(mut self, name: &str, matrix: Vec<Vec<T>>) -> Result<Self> {
        self.add_dyadic(name, matrix)?;
        Ok(self)
    }

    pub fn attribute(&self, name: &str) -> Result<&[Option<T>]> {
        self.attributes
            .get(name)
            .map(Vec::as_slice)
            .ok_or_else(|| Error::UnknownAttribute(name.into()))
    }

    pub fn attribute_names(&self) -> impl Iterator<Item = &str> {
        self.attributes.keys().map(String::as_str)
    }

    pub fn categories(&self, name: &str) -> Option<&[String]> {
        self.categories.get(name).map(Vec::as_slice)
    }

    pub fn dyadic(&self, name: &str) -> Result<&[T]> {
        self.dyadic
            .get(name)
            .map(Vec::as_slice)
            .ok_or_else(|| Error::UnknownCovariate(name.into()))
    }

    pub fn dyadic_names(&self) -> impl Iterator<Item = &str> {
        self.dyadic.keys().map(String::as_str)
    }

    /// Restriction to `actors`, renumbered by position.
    pub fn subset(&self, actors: &[usize]) -> Self {
        let m = actors.len();
        let attributes = self
            .attributes
            .iter()
            .map(|(k, v)| (k.clone(), actors.iter().map(|&i| v[i]).collect()))
            .collect();
        let dyadic = self
            .dyadic
            .iter()
            .map(|(k, v)| {
                let mut out = vec![T::zero(); m * m];
                for (a, &i) in actors.iter().enumerate() {
                    for (b, &j) in actors.iter().enumerate() {
                        out[a * m + b] = v[i * self.n + j];
                    }
                }
                (k.clone(), out)
            })
            .collect();
        Self {
            n: m,
            attributes,
            categories: self.categories.clone(),
            dyadic,
        }
    }

    /// Checks that every statistic refers to loaded covariates.
    pub fn validate(&self, specs: &[StatisticSpec]) -> Result<()> {
        for s in specs {
            if let Some(a) = s.attribute() {
                self.attribute(a)?;
            }
            if let Some(c) = s.covariate() {
                self.dyadic(c)?;
            }
            if let StatisticKind::NumGroupsOfSize { size: 0 } = s.kind {
                return Err(Error::Config("num_groups_of_size needs size >= 1".into()));
            }
        }
        Ok(())
    }
}

enum Term<'a, T> {
    Size(Vec<T>),
    DyadHomophily(&'a [Option<T>], DyadSimilarity),
    GroupHomophily(&'a [Option<T>], GroupForm),
    DyadCovariate(&'a [T]),
    DyadSociability(&'a [Option<T>]),
    GroupSociability(&'a [Option<T>]),
}

/// Statistics resolved against a covariate store, ready for repeated evaluation.
pub struct CompiledStats<'a, T: Real = f64> {
    n: usize,
    terms: Vec<(Term<'a, T>, bool)>,
}

impl<'a, T: Real> CompiledStats<'a, T> {
    pub fn new(specs: &[StatisticSpec], cov: &'a CovariateStore<T>) -> Result<Self> {
        cov.validate(specs)?;
        let n = cov.n();
        let terms = specs
            .iter()
            .map(|s| {
                let term = match &s.kind {
                    StatisticKind::DyadicHomophily {
                        attribute,
                        similarity,
                    } => Term::DyadHomophily(cov.attribute(attribute)?, *similarity),
                    StatisticKind::GroupHomophily { attribute, form } => {
                        Term::GroupHomophily(cov.attribute(attribute)?, *form)
                    }
                    StatisticKind::DyadicCovariate { covariate } => {
                        Term::DyadCovariate(cov.dyadic(covariate)?)
                    }
                    StatisticKind::DyadicSociability { attribute } => {
                        Term::DyadSociability(cov.attribute(attribute)?)
                    }
                    StatisticKind::GroupSociability { attribute } => {
                        Term::GroupSociability(cov.attribute(attribute)?)
                    }
                    _ => Term::Size(
                        (0..=n)
                            .map(|g| {
                                if g == 0 {
                                    T::zero()
                                } else {
                                    s.size_function(g).unwrap()
                                }
                            })
                            .collect(),
                    ),
                };
                Ok((term, s.normalized))
            })
            .collect::<Result<Vec<_>>>()?;
        Ok(Self { n, terms })
    }

    pub fn len(&self) -> usize {
        self.terms.len()
    }

    pub fn is_empty(&self) -> bool {
        self.terms.is_empty()
    }

    pub fn evaluate(&self, p: &Partition) -> Result<StatVector<T>> {
        if p.n() != self.n {
            return Err(Error::Dimension(format!(
                "partition has {} actors, covariates describe {}",
                p.n(),
                self.n
            )));
        }
        let mut out = vec![T::zero(); self.terms.len()];
        for block in p.blocks() {
            self.accumulate(&block, T::one(), &mut out);
        }
        Ok(out)
    }

    /// Adds `sign * value(block)` for every statistic into `out`.
    pub fn accumulate(&self, block: &[usize], sign: T, out: &mut [T]) {
        for (k, (term, normalized)) in self.terms.iter().enumerate() {
            out[k] = out[k] + sign * self.block_value(term, *normalized, block);
        }
    }

    /// `cached + Σ value(added) - Σ value(removed)`.
    pub fn apply_delta(
        &self,
        cached: &[T],
        removed: &[Vec<usize>],
        added: &[Vec<usize>],
    ) -> StatVector<T> {
        let mut delta = vec![T::zero(); cached.len()];
        for b in added {
            self.accumulate(b, T::one(), &mut delta);
        }
        for b in removed {
            self.accumulate(b, -T::one(), &mut delta);
        }
        cached.iter().zip(delta).map(|(&c, d)| c + d).collect()
    }

    fn block_value(&self, term: &Term<'a, T>, normalized: bool, block: &[usize]) -> T {
        let g = block.len();
        let dyads = T::of_usize(g * g.saturating_sub(1) / 2);
        let dyad_norm = |v: T| {
            if !normalized {
                v
            } else if g < 2 {
                T::zero()
            } else {
                v / dyads
            }
        };
        let group_norm = |v: T| if normalized { v / T::of_usize(g) } else { v };
        match term {
            Term::Size(table) => table[g],
            Term::DyadHomophily(attr, sim) => {
                let mut acc = T::zero();
                for (x, &i) in block.iter().enumerate() {
                    let Some(ai) = attr[i] else { continue };
                    for &j in &block[x + 1..] {
                        let Some(aj) = attr[j] else { continue };
                        acc = acc
                            + match sim {
                                DyadSimilarity::Match => {
                                    if ai == aj {
                                        T::one()
                                    } else {
                                        T::zero()
                                    }
                                }
                                DyadSimilarity::AbsDiff => (ai - aj).abs(),
                                DyadSimilarity::NegAbsDiff => -(ai - aj).abs(),
                            };
                    }
                }
                dyad_norm(acc)
            }
            Term::DyadCovariate(z) => {
                let mut acc = T::zero();
                for (x, &i) in block.iter().enumerate() {
                    for &j in &block[x + 1..] {
                        acc = acc + z[i * self.n + j];
                    }
                }
                dyad_norm(acc)
            }
            Term::DyadSociability(attr) => {
                let w = T::of_usize(g - 1);
                let s: T = block.iter().filter_map(|&i| attr[i]).map(|a| w * a).sum();
                dyad_norm(s)
            }
            Term::GroupHomophily(attr, form) => group_norm(group_similarity(attr, *form, block)),
            Term::GroupSociability(attr) => {
                let present: Vec<T> = block.iter().filter_map(|&i| attr[i]).collect();
                let v = if present.is_empty() {
                    T::zero()
                } else {
                    let mean = present.iter().copied().sum::<T>() / T::of_usize(present.len());
                    T::of_usize(g) * mean
                };
                group_norm(v)
            }
        }
    }
}

fn group_similarity<T: Real>(attr: &[Option<T>], form: GroupForm, block: &[usize]) -> T {
    match form {
        GroupForm::AllSame => {
            let first = attr[block[0]];
            if block.iter().all(|&i| attr[i] == first) {
                T::one()
            } else {
                T::zero()
            }
        }
        GroupForm::DistinctCount => {
            let mut vals: Vec<Option<T>> = block.iter().map(|&i| attr[i]).collect();
            vals.sort_by(|a, b| a.partial_cmp(b).unwrap_or(std::cmp::Ordering::Equal));
            vals.dedup();
            T::of_usize(vals.len())
        }
        GroupForm::Range => {
            let mut it = block.iter().filter_map(|&i| attr[i]);
            match it.next() {
                None => T::zero(),
                Some(first) => {
                    let (lo, hi) = it.fold((first, first), |(lo, hi), v| (lo.min(v), hi.max(v)));
                    hi - lo
                }
            }
        }
        GroupForm::Variance => {
            let present: Vec<T> = block.iter().filter_map(|&i| attr[i]).collect();
            if present.len() < 2 {
                return T::zero();
            }
            let m = T::of_usize(present.len());
            let mean = present.iter().copied().sum::<T>() / m;
            present.iter().map(|&v| (v - mean) * (v - mean)).sum::<T>() / m
        }
    }
}

/// Statistic vector `s(p)` for `specs`.
pub fn evaluate<T: Real>(
    p: &Partition,
    specs: &[StatisticSpec],
    cov: &CovariateStore<T>,
) -> Result<StatVector<T>> {
    CompiledStats::new(specs, cov)?.evaluate(p)
}

/// Observed statistic vector used as the target of the moment equation.
pub fn observed_statistics<T: Real>(
    p_obs: &Partition,
    specs: &[StatisticSpec],
    cov: &CovariateStore<T>,
) -> Result<StatVector<T>> {
    evaluate(p_obs, specs, cov)
}

/// Blocks of `p` absent from `q` and blocks of `q` absent from `p`.
pub fn block_diff(p: &Partition, q: &Partition) -> (Vec<Vec<usize>>, Vec<Vec<usize>>) {
    let bp = p.blocks();
    let bq = q.blocks();
    let sp: HashSet<&Vec<usize>> = bp.iter().collect();
    let sq: HashSet<&Vec<usize>> = bq.iter().collect();
    let removed = bp.iter().filter(|b| !sq.contains(b)).cloned().collect();
    let added = bq.iter().filter(|b| !sp.contains(b)).cloned().collect();
    (removed, added)
}

/// `s(p_new)` from `cached = s(p)`, re-summing only the blocks that changed.
pub fn delta_evaluate<T: Real>(
    p: &Partition,
    p_new: &Partition,
    specs: &[StatisticSpec],
    cov: &CovariateStore<T>,
    cached: &[T],
) -> Result<StatVector<T>> {
    let compiled = CompiledStats::new(specs, cov)?;
    let (removed, added) = block_diff(p, p_new);
    Ok(compiled.apply_delta(cached, &removed, &added))
}

#[cfg(test)]
mod tests {
    #[test]
    fn statistic_strings_round_trip() {
        let specs = [
            StatisticSpec::num_groups(),
            StatisticSpec::num_groups_of_size(3),
            StatisticSpec::sum_log_factorial_sizes(),
            StatisticSpec::sum_squared_sizes().normalized(),
            StatisticSpec::dyadic_homophily("age", DyadSimilarity::NegAbsDiff),
            StatisticSpec::group_homophily("language", GroupForm::DistinctCount),
            StatisticSpec::dyadic_covariate("acquaintance"),
            StatisticSpec::dyadic_sociability("x"),
            StatisticSpec::group_sociability("x").normalized(),
        ];
        for s in specs {
            assert_eq!(s.to_string().parse::<StatisticSpec>().unwrap(), s);
        }
        assert_eq!(
            "group_homophily(major, distinctCount)".parse::<StatisticSpec>().unwrap(),
            StatisticSpec::group_homophily("major", GroupForm::DistinctCount)
        );
        assert!("num_cliques".parse::<StatisticSpec>().is_err());
        assert!("group_homophily(age)".parse::<StatisticSpec>().is_err());
    }

    use super::*;
    use crate::partition::canonicalize;

    fn fig3() -> (Partition, CovariateStore<f64>) {
        // {1,2,5},{3,4},{6},{7,8,9,10}; squares at actors 1, 7 and 8
        let p = canonicalize(&[0, 0, 1, 1, 0, 2, 3, 3, 3, 3]).unwrap();
        let square = [1.0, 0.0, 0.0, 0.0, 0.0, 0.0, 1.0, 1.0, 0.0, 0.0];
        let cov = CovariateStore::new(10).with_attribute("square", &square).unwrap();
        (p, cov)
    }

    #[test]
    fn structural_examples() {
        let (p, cov) = fig3();
        let s = evaluate(
            &p,
            &[StatisticSpec::num_groups(), StatisticSpec::sum_squared_sizes()],
            &cov,
        )
        .unwrap();
        assert_eq!(s, vec![4.0, 30.0]);
        let l = evaluate(&p, &[StatisticSpec::sum_log_factorial_sizes()], &cov).unwrap();
        assert!((l[0] - (2f64.ln() + 6f64.ln())).abs() < 1e-12);
        assert!((l[0] - 2.4849).abs() < 1e-4);
    }

    #[test]
    fn covariate_examples() {
        let (p, cov) = fig3();
        let s = evaluate(
            &p,
            &[
                StatisticSpec::dyadic_homophily("square", DyadSimilarity::Match),
                StatisticSpec::dyadic_sociability("square"),
            ],
            &cov,
        )
        .unwrap();
        assert_eq!(s, vec![4.0, 8.0]);
    }

    #[test]
    fn group_forms() {
        let p = canonicalize(&[0, 0, 0, 1, 1]).unwrap();
        let cov = CovariateStore::new(5)
            .with_attribute("x", &[1.0, 3.0, 3.0, 5.0, 5.0])
            .unwrap();
        let specs = [
            StatisticSpec::group_homophily("x", GroupForm::AllSame),
            StatisticSpec::group_homophily("x", GroupForm::Range),
            StatisticSpec::group_homophily("x", GroupForm::DistinctCount),
            StatisticSpec::group_homophily("x", GroupForm::Variance),
            StatisticSpec::group_sociability("x"),
            StatisticSpec::dyadic_homophily("x", DyadSimilarity::AbsDiff),
            StatisticSpec::dyadic_homophily("x", DyadSimilarity::NegAbsDiff),
        ];
        let s: Vec<f64> = evaluate(&p, &specs, &cov).unwrap();
        assert_eq!(s[0], 1.0);
        assert_eq!(s[1], 2.0);
        assert_eq!(s[2], 3.0);
        assert!((s[3] - 8.0 / 9.0).abs() < 1e-12);
        assert!((s[4] - 17.0).abs() < 1e-12);
        assert_eq!(s[5], 4.0);
        assert_eq!(s[6], -4.0);
    }

    #[test]
    fn normalized_variants() {
        let p = canonicalize(&[0, 0, 0, 1]).unwrap();
        let cov = CovariateStore::new(4)
            .with_attribute("x", &[1.0, 1.0, 2.0, 7.0])
            .unwrap();
        let s: Vec<f64> = evaluate(
            &p,
            &[
                StatisticSpec::dyadic_homophily("x", DyadSimilarity::Match).normalized(),
                StatisticSpec::group_homophily("x", GroupForm::DistinctCount).normalized(),
            ],
            &cov,
        )
        .unwrap();
        assert!((s[0] - 1.0 / 3.0).abs() < 1e-12);
        assert!((s[1] - (2.0 / 3.0 + 1.0)).abs() < 1e-12);
    }

    #[test]
    fn missing_values() {
        let p = canonicalize(&[0, 0, 0]).unwrap();
        let mut cov = CovariateStore::<f64>::new(3);
        cov.add_attribute("lang", vec![Some(1.0), None, None]).unwrap();
        let s = evaluate(
            &p,
            &[
                StatisticSpec::group_homophily("lang", GroupForm::DistinctCount),
                StatisticSpec::dyadic_homophily("lang", DyadSimilarity::Match),
                StatisticSpec::group_homophily("lang", GroupForm::Range),
            ],
            &cov,
        )
        .unwrap();
        assert_eq!(s, vec![2.0, 0.0, 0.0]);
    }

    #[test]
    fn errors() {
        let p = Partition::singletons(3);
        let cov = CovariateStore::<f64>::new(3);
        assert_eq!(
            evaluate(&p, &[StatisticSpec::group_sociability("age")], &cov),
            Err(Error::UnknownAttribute("age".into()))
        );
        assert_eq!(
            evaluate(&p, &[StatisticSpec::dyadic_covariate("friends")], &cov),
            Err(Error::UnknownCovariate("friends".into()))
        );
        let mut cov = CovariateStore::<f64>::new(3);
        assert!(cov.add_attribute("a", vec![Some(1.0)]).is_err());
        assert!(cov
            .add_dyadic("z", vec![vec![0.0, 1.0, 0.0], vec![0.0; 3], vec![0.0; 3]])
            .is_err());
    }

    #[test]
    fn observed_hackathon_statistics() {
        // sizes 2, 3, 5 x 4, 7 x 5
        let mut labels = vec![0, 0, 1, 1, 1];
        for g in 0..5 {
            labels.extend([2 + g; 4]);
        }
        for g in 0..7 {
            labels.extend([7 + g; 5]);
        }
        let p = canonicalize(&labels).unwrap();
        assert_eq!(p.n(), 60);
        let cov = CovariateStore::<f64>::new(60);
        let s = observed_statistics(
            &p,
            &[StatisticSpec::num_groups(), StatisticSpec::sum_squared_sizes()],
            &cov,
        )
        .unwrap();
        assert_eq!(s, vec![14.0, 268.0]);

        let mut labels = vec![0, 0, 0];
        for g in 0..9 {
            labels.extend([1 + g; 4]);
        }
        for g in 0..3 {
            labels.extend([10 + g; 5]);
        }
        let p = canonicalize(&labels).unwrap();
        assert_eq!(p.n(), 54);
        let s: Vec<f64> = observed_statistics(&p, &[StatisticSpec::num_groups_of_size(4)], &CovariateStore::new(54))
            .unwrap();
        assert_eq!(s, vec![9.0]);
    }

    #[test]
    fn transfer_delta_on_squared_sizes() {
        // moving actor 0 from a block of 3 to a block of 2: +2*2 - 2*3 + 2
        let p = canonicalize(&[0, 0, 0, 1, 1]).unwrap();
        let q = p.transfer(0, Some(1));
        let cov = CovariateStore::<f64>::new(5);
        let specs = [StatisticSpec::sum_squared_sizes(), StatisticSpec::num_groups()];
        let cached = evaluate(&p, &specs, &cov).unwrap();
        let d = delta_evaluate(&p, &q, &specs, &cov, &cached).unwrap();
        assert_eq!(d[0], cached[0] + 4.0 - 6.0 + 2.0);
        assert_eq!(d, evaluate(&q, &specs, &cov).unwrap());
        let merged = Partition::singletons(5).merge(0, 1);
        let c = evaluate(&Partition::singletons(5), &specs, &cov).unwrap();
        let d = delta_evaluate(&Partition::singletons(5), &merged, &specs, &cov, &c).unwrap();
        assert_eq!(d[1], c[1] - 1.0);
    }
}
