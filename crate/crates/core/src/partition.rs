//! Canonical set partitions and the merge/split, permute and transfer relations.

use std::collections::{BTreeSet, HashMap};
use std::fmt;
use std::hash::Hash;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// A set partition of `n` actors stored as a restricted-growth string.
///
/// `membership[i]` is the group of actor `i`; groups are numbered by first
/// occurrence, so two descriptions of the same set partition always have the
/// same encoding and partition equality is plain vector equality.
#[derive(Clone, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(try_from = "Vec<usize>", into = "Vec<usize>")]
pub struct Partition {
    membership: Vec<usize>,
    sizes: Vec<usize>,
}

/// Inclusive bounds on block sizes; `max = None` means unbounded.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct SizeBounds {
    pub min: usize,
    pub max: Option<usize>,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum RelationKind {
    MergeSplit,
    Permute,
    Transfer,
}

impl RelationKind {
    pub const ALL: [RelationKind; 3] = [
        RelationKind::MergeSplit,
        RelationKind::Permute,
        RelationKind::Transfer,
    ];

    pub fn index(self) -> usize {
        match self {
            RelationKind::MergeSplit => 0,
            RelationKind::Permute => 1,
            RelationKind::Transfer => 2,
        }
    }
}

impl SizeBounds {
    pub fn new(min: usize, max: Option<usize>) -> Result<Self> {
        if min == 0 {
            return Err(Error::InvalidBounds {
                min,
                max: max.unwrap_or(usize::MAX),
            });
        }
        if let Some(max) = max {
            if max < min {
                return Err(Error::InvalidBounds { min, max });
            }
        }
        Ok(Self { min, max })
    }

    pub fn unbounded() -> Self {
        Self { min: 1, max: None }
    }

    pub fn contains(&self, size: usize) -> bool {
        size >= self.min && self.max.is_none_or(|m| size <= m)
    }

    /// Largest admissible block size for `n` actors.
    pub fn max_for(&self, n: usize) -> usize {
        self.max.map_or(n, |m| m.min(n))
    }

    /// True when every partition of `n` actors is admissible.
    pub fn is_trivial_for(&self, n: usize) -> bool {
        self.min <= 1 && self.max_for(n) >= n
    }
}

impl Default for SizeBounds {
    fn default() -> Self {
        Self::unbounded()
    }
}

impl fmt::Display for SizeBounds {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self.max {
            Some(m) => write!(f, "[{}, {}]", self.min, m),
            None => write!(f, "[{}, inf)", self.min),
        }
    }
}

/// Relabels arbitrary group labels into first-occurrence order.
pub fn canonicalize<L: Eq + Hash + Clone>(labels: &[L]) -> Result<Partition> {
    if labels.is_empty() {
        return Err(Error::EmptyPartition);
    }
    let mut map: HashMap<L, usize> = HashMap::with_capacity(labels.len());
    let mut membership = Vec::with_capacity(labels.len());
    for label in labels {
        let next = map.len();
        let g = *map.entry(label.clone()).or_insert(next);
        membership.push(g);
    }
    Ok(Partition::from_canonical_unchecked(membership))
}

impl Partition {
    /// Builds from a membership vector that must already be a restricted-growth string.
    pub fn from_membership(membership: Vec<usize>) -> Result<Self> {
        if membership.is_empty() {
            return Err(Error::EmptyPartition);
        }
        let mut next = 0usize;
        for (i, &g) in membership.iter().enumerate() {
            if g > next {
                return Err(Error::InvalidMembership(format!(
                    "label {g} at position {i} is not in first-occurrence order"
                )));
            }
            if g == next {
                next += 1;
            }
        }
        Ok(Self::from_canonical_unchecked(membership))
    }

    pub fn from_labels<L: Eq + Hash + Clone>(labels: &[L]) -> Result<Self> {
        canonicalize(labels)
    }

    /// Canonicalizes a vector of small integer labels without hashing.
    pub(crate) fn relabel(raw: &[usize]) -> Self {
        let bound = raw.iter().copied().max().unwrap_or(0) + 1;
        let mut map = vec![usize::MAX; bound];
        let mut next = 0;
        let membership = raw
            .iter()
            .map(|&g| {
                if map[g] == usize::MAX {
                    map[g] = next;
                    next += 1;
                }
                map[g]
            })
            .collect();
        Self::from_canonical_unchecked(membership)
    }

    pub(crate) fn from_canonical_unchecked(membership: Vec<usize>) -> Self {
        let k = membership.iter().copied().max().map_or(0, |m| m + 1);
        let mut sizes = vec![0; k];
        for &g in &membership {
            sizes[g] += 1;
        }
        Self { membership, sizes }
    }

    pub fn singletons(n: usize) -> Self {
        Self::from_canonical_unchecked((0..n).collect())
    }

    pub fn single_block(n: usize) -> Self {
        Self::from_canonical_unchecked(vec![0; n])
    }

    pub fn n(&self) -> usize {
        self.membership.len()
    }

    pub fn num_groups(&self) -> usize {
        self.sizes.len()
    }

    pub fn membership(&self) -> &[usize] {
        &self.membership
    }

    pub fn group_of(&self, actor: usize) -> usize {
        self.membership[actor]
    }

    /// Block sizes indexed by group label.
    pub fn block_sizes(&self) -> &[usize] {
        &self.sizes
    }

    /// Block sizes in non-increasing order (the size profile).
    pub fn size_profile(&self) -> Vec<usize> {
        let mut s = self.sizes.clone();
        s.sort_unstable_by(|a, b| b.cmp(a));
        s
    }

    /// Members of each block, in group-label order; members ascend within a block.
    pub fn blocks(&self) -> Vec<Vec<usize>> {
        let mut blocks: Vec<Vec<usize>> = self.sizes.iter().map(|&s| Vec::with_capacity(s)).collect();
        for (i, &g) in self.membership.iter().enumerate() {
            blocks[g].push(i);
        }
        blocks
    }

    pub fn block(&self, group: usize) -> Vec<usize> {
        self.membership
            .iter()
            .enumerate()
            .filter(|(_, &g)| g == group)
            .map(|(i, _)| i)
            .collect()
    }

    pub fn respects_bounds(&self, bounds: &SizeBounds) -> bool {
        self.sizes.iter().all(|&s| bounds.contains(s))
    }

    /// Binary co-membership matrix: entry `(i, j)` is 1 iff `i` and `j` share a block.
    pub fn comembership_matrix(&self) -> Vec<Vec<u8>> {
        let n = self.n();
        (0..n)
            .map(|i| {
                (0..n)
                    .map(|j| u8::from(self.membership[i] == self.membership[j]))
                    .collect()
            })
            .collect()
    }

    /// Projection onto `subset` (actors renumbered by their position in `subset`).
    pub fn project(&self, subset: &[usize]) -> Result<Partition> {
        let labels: Vec<usize> = subset.iter().map(|&i| self.membership[i]).collect();
        canonicalize(&labels)
    }

    /// True when no block contains actors from both `subset` and its complement.
    pub fn splits_along(&self, in_subset: &[bool]) -> bool {
        let mut side = vec![None; self.num_groups()];
        for (i, &g) in self.membership.iter().enumerate() {
            match side[g] {
                None => side[g] = Some(in_subset[i]),
                Some(s) if s != in_subset[i] => return false,
                _ => {}
            }
        }
        true
    }

    pub fn merge(&self, g1: usize, g2: usize) -> Partition {
        debug_assert_ne!(g1, g2);
        let raw: Vec<usize> = self
            .membership
            .iter()
            .map(|&g| if g == g2 { g1 } else { g })
            .collect();
        Partition::relabel(&raw)
    }

    /// Moves the listed actors of `group` into a new block.
    pub fn split(&self, group: usize, moved: &[usize]) -> Partition {
        let fresh = self.num_groups();
        let mut raw = self.membership.clone();
        for &i in moved {
            debug_assert_eq!(raw[i], group);
            raw[i] = fresh;
        }
        Partition::relabel(&raw)
    }

    /// Moves `actor` to `dest` (an existing group) or to a new singleton when `None`.
    pub fn transfer(&self, actor: usize, dest: Option<usize>) -> Partition {
        let mut raw = self.membership.clone();
        raw[actor] = dest.unwrap_or(self.num_groups());
        Partition::relabel(&raw)
    }

    pub fn swap(&self, a: usize, b: usize) -> Partition {
        let mut raw = self.membership.clone();
        raw.swap(a, b);
        Partition::relabel(&raw)
    }

    /// All distinct partitions related to `self` by `relation`, excluding `self`.
    ///
    /// Built by applying every elementary move and deduplicating, so it serves
    /// as the reference for [`Partition::neighbor_count`].
    pub fn neighbors(&self, relation: RelationKind) -> Vec<Partition> {
        let mut out = BTreeSet::new();
        let k = self.num_groups();
        let n = self.n();
        match relation {
            RelationKind::MergeSplit => {
                for a in 0..k {
                    for b in (a + 1)..k {
                        out.insert(self.merge(a, b));
                    }
                }
                for (g, block) in self.blocks().into_iter().enumerate() {
                    let s = block.len();
                    if s < 2 {
                        continue;
                    }
                    for mask in 1u64..(1u64 << s) - 1 {
                        let moved: Vec<usize> = (0..s)
                            .filter(|b| mask & (1 << b) != 0)
                            .map(|b| block[b])
                            .collect();
                        out.insert(self.split(g, &moved));
                    }
                }
            }
            RelationKind::Permute => {
                for a in 0..n {
                    for b in (a + 1)..n {
                        if self.membership[a] != self.membership[b] {
                            out.insert(self.swap(a, b));
                        }
                    }
                }
            }
            RelationKind::Transfer => {
                for i in 0..n {
                    for dest in 0..k {
                        out.insert(self.transfer(i, Some(dest)));
                    }
                    out.insert(self.transfer(i, None));
                }
            }
        }
        out.remove(self);
        out.into_iter().collect()
    }

    /// Number of distinct neighbours under `relation`, by closed form.
    ///
    /// * merge/split: `C(k,2) + Σ_G (2^{#G-1} - 1)`
    /// * transfer: `Σ_i [(k-1) + 1{#g(i) ≥ 2}] - #{blocks of size 2} - C(#singletons, 2)`
    /// * permute: `(n² - Σ #G²)/2 - C(#singletons, 2) - 2·C(#blocks of size 2, 2)`
    ///
    /// Arithmetic saturates at `u128::MAX`, reachable only for blocks above 128 actors.
    pub fn neighbor_count(&self, relation: RelationKind) -> u128 {
        let k = self.num_groups() as u128;
        let n = self.n() as u128;
        let singles = self.sizes.iter().filter(|&&s| s == 1).count() as u128;
        let pairs = self.sizes.iter().filter(|&&s| s == 2).count() as u128;
        let choose2 = |x: u128| x * x.saturating_sub(1) / 2;
        match relation {
            RelationKind::MergeSplit => self.sizes.iter().fold(choose2(k), |acc, &s| {
                let splits = 1u128
                    .checked_shl((s - 1) as u32)
                    .map_or(u128::MAX, |v| v - 1);
                acc.saturating_add(splits)
            }),
            RelationKind::Transfer => {
                let nonsingle_members = n - singles;
                n * (k - 1) + nonsingle_members - pairs - choose2(singles)
            }
            RelationKind::Permute => {
                let sq: u128 = self.sizes.iter().map(|&s| (s as u128) * (s as u128)).sum();
                (n * n - sq) / 2 - choose2(singles) - 2 * choose2(pairs)
            }
        }
    }
}

impl fmt::Debug for Partition {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "Partition{:?}", self.membership)
    }
}

impl fmt::Display for Partition {
    /// Block notation with 1-based actors, e.g. `{1,2},{3}`.
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let blocks = self.blocks();
        for (b, block) in blocks.iter().enumerate() {
            if b > 0 {
                write!(f, ",")?;
            }
            write!(f, "{{")?;
            for (j, a) in block.iter().enumerate() {
                if j > 0 {
                    write!(f, ",")?;
                }
                write!(f, "{}", a + 1)?;
            }
            write!(f, "}}")?;
        }
        Ok(())
    }
}

impl TryFrom<Vec<usize>> for Partition {
    type Error = Error;

    fn try_from(v: Vec<usize>) -> Result<Self> {
        Partition::from_membership(v)
    }
}

impl From<Partition> for Vec<usize> {
    fn from(p: Partition) -> Self {
        p.membership
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn p(v: &[usize]) -> Partition {
        Partition::from_membership(v.to_vec()).unwrap()
    }

    #[test]
    fn canonicalize_examples() {
        assert_eq!(canonicalize(&[7, 7, 3, 3]).unwrap().membership(), &[0, 0, 1, 1]);
        assert_eq!(canonicalize(&[0, 1, 0]).unwrap().membership(), &[0, 1, 0]);
        assert_eq!(
            canonicalize(&[2, 1, 2, 1, 2, 0, 3, 3, 3, 3]).unwrap().membership(),
            &[0, 1, 0, 1, 0, 2, 3, 3, 3, 3]
        );
        assert_eq!(canonicalize::<u8>(&[]), Err(Error::EmptyPartition));
        assert_eq!(
            canonicalize(&["teamA", "teamB", "teamA"]).unwrap().membership(),
            &[0, 1, 0]
        );
    }

    #[test]
    fn rejects_non_canonical_membership() {
        assert!(Partition::from_membership(vec![1, 0]).is_err());
        assert!(Partition::from_membership(vec![0, 2, 1]).is_err());
        assert!(Partition::from_membership(vec![]).is_err());
    }

    #[test]
    fn comembership() {
        assert_eq!(p(&[0, 0]).comembership_matrix(), vec![vec![1, 1], vec![1, 1]]);
        assert_eq!(p(&[0, 1]).comembership_matrix(), vec![vec![1, 0], vec![0, 1]]);
        let fig = p(&[0, 0, 1, 1, 0, 2, 3, 3, 3, 3]);
        let sum: u32 = fig
            .comembership_matrix()
            .iter()
            .flatten()
            .map(|&x| x as u32)
            .sum();
        assert_eq!(sum, 30);
    }

    #[test]
    fn block_sizes_examples() {
        let mut s = p(&[0, 1, 0, 1, 0, 2, 3, 3, 3, 3]).block_sizes().to_vec();
        s.sort();
        assert_eq!(s, vec![1, 2, 3, 4]);
        assert_eq!(p(&[0, 0, 0]).block_sizes(), &[3]);
        assert_eq!(p(&[0, 1, 2]).block_sizes(), &[1, 1, 1]);
    }

    #[test]
    fn neighbor_examples() {
        assert_eq!(p(&[0, 1, 2]).neighbors(RelationKind::MergeSplit).len(), 3);
        assert_eq!(p(&[0, 0, 1]).neighbors(RelationKind::Transfer).len(), 4);
        assert!(p(&[0, 0, 0]).neighbors(RelationKind::Permute).is_empty());
        assert_eq!(p(&[0, 0, 0]).neighbor_count(RelationKind::MergeSplit), 3);
        assert_eq!(p(&[0, 0, 1]).neighbor_count(RelationKind::Transfer), 4);
        assert_eq!(p(&[0, 0, 1, 1]).neighbor_count(RelationKind::Permute), 2);
        // two singletons merged by a transfer is one partition reached by two moves
        assert_eq!(p(&[0, 1, 2]).neighbor_count(RelationKind::Transfer), 3);
        // swapping two singletons leaves the partition unchanged
        assert_eq!(p(&[0, 1, 2]).neighbor_count(RelationKind::Permute), 0);
    }

    #[test]
    fn bounds() {
        let b = SizeBounds::new(2, Some(5)).unwrap();
        let q = canonicalize(&[0, 0, 1, 1, 1, 2, 2, 2, 2, 3, 3, 3, 3, 3]).unwrap();
        assert!(q.respects_bounds(&b));
        assert!(!p(&[0, 1, 1, 1, 1]).respects_bounds(&b));
        assert!(p(&[0, 1, 1, 1, 1]).respects_bounds(&SizeBounds::unbounded()));
        assert!(SizeBounds::new(5, Some(2)).is_err());
        assert!(SizeBounds::new(0, None).is_err());
    }

    #[test]
    fn projection_and_split_detection() {
        let q = p(&[0, 0, 1, 1, 2]);
        assert!(q.splits_along(&[true, true, false, false, true]));
        assert!(!q.splits_along(&[true, false, false, false, true]));
        assert_eq!(q.project(&[2, 3, 4]).unwrap().membership(), &[0, 0, 1]);
    }

    #[test]
    fn display_and_serde_shape() {
        assert_eq!(p(&[0, 0, 1]).to_string(), "{1,2},{3}");
        let v: Vec<usize> = p(&[0, 1, 0]).into();
        assert_eq!(v, vec![0, 1, 0]);
    }
}
