//! Exact partition counts: Bell and Stirling numbers and their size-restricted extensions.
//!
//! Every count is an arbitrary-precision integer. The restricted recursions
//! classify partitions of `n + 1` actors by the size `s` of the block holding
//! the last actor: there are `C(n, n+1-s)` ways to pick its companions and the
//! remaining `n + 1 - s` actors are partitioned recursively.

use num_bigint::BigUint;
use num_traits::{One, ToPrimitive, Zero};

use crate::partition::SizeBounds;
use crate::scalar::Real;

/// Memoized count tables for one bounds configuration, covering `0..=n_max` actors.
#[derive(Clone, Debug)]
pub struct CountTable {
    bounds: SizeBounds,
    binom: Vec<Vec<BigUint>>,
    bell: Vec<BigUint>,
    // psi[n][m]
    psi: Vec<Vec<BigUint>>,
}

impl CountTable {
    pub fn new(n_max: usize, bounds: SizeBounds) -> Self {
        let binom = pascal(n_max);
        let mut bell = vec![BigUint::zero(); n_max + 1];
        bell[0] = BigUint::one();
        let mut psi = vec![vec![BigUint::zero(); n_max + 1]; n_max + 1];
        psi[0][0] = BigUint::one();
        for n1 in 1..=n_max {
            let n = n1 - 1;
            let hi = bounds.max_for(n1);
            let mut total = BigUint::zero();
            for s in bounds.min..=hi {
                let rest = n1 - s;
                total += &binom[n][rest] * &bell[rest];
            }
            bell[n1] = total;
            for m1 in 1..=n1 {
                let mut acc = BigUint::zero();
                for s in bounds.min..=hi {
                    let rest = n1 - s;
                    let prev = &psi[rest][m1 - 1];
                    if !prev.is_zero() {
                        acc += &binom[n][rest] * prev;
                    }
                }
                psi[n1][m1] = acc;
            }
        }
        Self {
            bounds,
            binom,
            bell,
            psi,
        }
    }

    pub fn bounds(&self) -> SizeBounds {
        self.bounds
    }

    pub fn n_max(&self) -> usize {
        self.bell.len() - 1
    }

    /// Number of admissible partitions of `n` actors.
    pub fn bell(&self, n: usize) -> &BigUint {
        &self.bell[n]
    }

    /// Number of admissible partitions of `n` actors into exactly `m` blocks.
    pub fn stirling2(&self, n: usize, m: usize) -> BigUint {
        if m > n {
            return BigUint::zero();
        }
        self.psi[n][m].clone()
    }

    pub fn binomial(&self, n: usize, k: usize) -> &BigUint {
        &self.binom[n][k]
    }
}

fn pascal(n_max: usize) -> Vec<Vec<BigUint>> {
    let mut rows: Vec<Vec<BigUint>> = Vec::with_capacity(n_max + 1);
    for n in 0..=n_max {
        let mut row = vec![BigUint::one(); n + 1];
        for k in 1..n {
            row[k] = &rows[n - 1][k - 1] + &rows[n - 1][k];
        }
        rows.push(row);
    }
    rows
}

pub fn binomial(n: usize, k: usize) -> BigUint {
    if k > n {
        return BigUint::zero();
    }
    let k = k.min(n - k);
    let mut acc = BigUint::one();
    for i in 0..k {
        acc *= n - i;
        acc /= i + 1;
    }
    acc
}

pub fn factorial(n: usize) -> BigUint {
    (1..=n).fold(BigUint::one(), |acc, k| acc * k)
}

/// Bell number `B_n` via `B_{n+1} = Σ_i C(n,i) B_i`.
pub fn bell(n: usize) -> BigUint {
    CountTable::new(n, SizeBounds::unbounded()).bell(n).clone()
}

pub fn bell_restricted(n: usize, bounds: &SizeBounds) -> BigUint {
    CountTable::new(n, *bounds).bell(n).clone()
}

/// Stirling number of the second kind `{n brace m}`.
pub fn stirling2(n: usize, m: usize) -> BigUint {
    CountTable::new(n, SizeBounds::unbounded()).stirling2(n, m)
}

/// Partitions of `n` actors into `m` blocks with every size inside `bounds`.
pub fn stirling2_restricted(n: usize, m: usize, bounds: &SizeBounds) -> BigUint {
    CountTable::new(n, *bounds).stirling2(n, m)
}

/// `ln C(n, i)` for `i = 0..=n`, from exact integer binomials.
pub fn ln_binomial_row<T: Real>(n: usize) -> Vec<T> {
    (0..=n)
        .map(|i| T::of(binomial(n, i).to_f64().unwrap_or(f64::INFINITY).ln()))
        .collect()
}
