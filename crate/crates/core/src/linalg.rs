//! Small dense linear algebra for the handful-of-statistics matrices used here.

use crate::error::{Error, Result};
use crate::scalar::Real;

pub type Matrix<T> = Vec<Vec<T>>;

/// Solves `a x = b` by Gaussian elimination with partial pivoting.
pub fn solve<T: Real>(a: &Matrix<T>, b: &[T]) -> Result<Vec<T>> {
    let n = b.len();
    let mut m: Vec<Vec<T>> = a
        .iter()
        .zip(b)
        .map(|(row, &bi)| {
            let mut r = row.clone();
            r.push(bi);
            r
        })
        .collect();
    let scale = a
        .iter()
        .flatten()
        .fold(T::zero(), |acc, v| acc.max(v.abs()));
    let tiny = scale * T::epsilon() * T::of_usize(n.max(1)) * T::of(16.0);
    for col in 0..n {
        let pivot = (col..n)
            .max_by(|&i, &j| m[i][col].abs().partial_cmp(&m[j][col].abs()).unwrap())
            .unwrap();
        if !(m[pivot][col].abs() > tiny) {
            return Err(Error::Singular);
        }
        m.swap(col, pivot);
        for row in (col + 1)..n {
            let f = m[row][col] / m[col][col];
            if f != T::zero() {
                for k in col..=n {
                    let v = m[col][k];
                    m[row][k] = m[row][k] - f * v;
                }
            }
        }
    }
    let mut x = vec![T::zero(); n];
    for row in (0..n).rev() {
        let mut acc = m[row][n];
        for k in (row + 1)..n {
            acc = acc - m[row][k] * x[k];
        }
        x[row] = acc / m[row][row];
    }
    Ok(x)
}

pub fn inverse<T: Real>(a: &Matrix<T>) -> Result<Matrix<T>> {
    let n = a.len();
    let mut cols = Vec::with_capacity(n);
    for j in 0..n {
        let mut e = vec![T::zero(); n];
        e[j] = T::one();
        cols.push(solve(a, &e)?);
    }
    Ok((0..n).map(|i| (0..n).map(|j| cols[j][i]).collect()).collect())
}

/// True when the symmetric matrix admits a Cholesky factorization.
pub fn is_positive_definite<T: Real>(a: &Matrix<T>) -> bool {
    let n = a.len();
    let mut l = vec![vec![T::zero(); n]; n];
    for i in 0..n {
        for j in 0..=i {
            let mut s = a[i][j];
            for k in 0..j {
                s = s - l[i][k] * l[j][k];
            }
            if i == j {
                if !(s > T::zero()) {
                    return false;
                }
                l[i][i] = s.sqrt();
            } else {
                l[i][j] = s / l[j][j];
            }
        }
    }
    true
}

pub fn mat_vec<T: Real>(a: &Matrix<T>, x: &[T]) -> Vec<T> {
    a.iter()
        .map(|row| row.iter().zip(x).map(|(&r, &v)| r * v).sum())
        .collect()
}

/// Sample mean and covariance of the rows of `draws`, dividing by `len - ddof`.
pub fn mean_and_covariance(draws: &[Vec<f64>], ddof: usize) -> (Vec<f64>, Matrix<f64>) {
    let m = draws.len();
    let k = draws.first().map_or(0, Vec::len);
    let mut mean = vec![0.0; k];
    for d in draws {
        for (a, &v) in mean.iter_mut().zip(d) {
            *a += v;
        }
    }
    for a in &mut mean {
        *a /= m as f64;
    }
    let mut cov = vec![vec![0.0; k]; k];
    for d in draws {
        for i in 0..k {
            let di = d[i] - mean[i];
            for j in 0..k {
                cov[i][j] += di * (d[j] - mean[j]);
            }
        }
    }
    let denom = (m.saturating_sub(ddof)).max(1) as f64;
    for row in &mut cov {
        for v in row {
            *v /= denom;
        }
    }
    (mean, cov)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn solves_and_inverts() {
        let a = vec![vec![4.0f64, 1.0], vec![1.0, 3.0]];
        let x = solve(&a, &[1.0, 2.0]).unwrap();
        assert!((x[0] - 1.0 / 11.0).abs() < 1e-14);
        assert!((x[1] - 7.0 / 11.0).abs() < 1e-14);
        let inv = inverse(&a).unwrap();
        let id = mat_vec(&a, &[inv[0][0], inv[1][0]]);
        assert!((id[0] - 1.0).abs() < 1e-14 && id[1].abs() < 1e-14);
        assert!(is_positive_definite(&a));
        assert!(!is_positive_definite(&vec![vec![1.0, 2.0], vec![2.0, 1.0]]));
    }

    #[test]
    fn singular_detected() {
        let a = vec![vec![1.0f32, 2.0], vec![2.0, 4.0]];
        assert_eq!(solve(&a, &[1.0, 1.0]), Err(Error::Singular));
    }

    #[test]
    fn covariance() {
        let d = vec![vec![1.0, 2.0], vec![3.0, 6.0]];
        let (m, c) = mean_and_covariance(&d, 0);
        assert_eq!(m, vec![2.0, 4.0]);
        assert_eq!(c, vec![vec![1.0, 2.0], vec![2.0, 4.0]]);
    }
}
