//! Small dense matrix helpers, generic over the scalar [`Field`].
//!
//! Matrices here are tiny (n+1 at most), so everything is plain
//! `Vec<Vec<F>>` with Gauss-Jordan elimination; no external linear algebra
//! dependency is warranted at this size.

use crate::error::EvalError;
use crate::scalar::Field;

pub type Matrix<F> = Vec<Vec<F>>;

pub fn identity<F: Field>(n: usize) -> Matrix<F> {
    (0..n)
        .map(|i| {
            (0..n)
                .map(|j| if i == j { F::one() } else { F::zero() })
                .collect()
        })
        .collect()
}

pub fn zeros<F: Field>(rows: usize, cols: usize) -> Matrix<F> {
    vec![vec![F::zero(); cols]; rows]
}

pub fn mat_mul<F: Field>(a: &Matrix<F>, b: &Matrix<F>) -> Matrix<F> {
    let rows = a.len();
    let inner = b.len();
    let cols = b[0].len();
    (0..rows)
        .map(|i| {
            (0..cols)
                .map(|j| {
                    let mut acc = F::zero();
                    for k in 0..inner {
                        acc = acc.add(&a[i][k].mul(&b[k][j]));
                    }
                    acc
                })
                .collect()
        })
        .collect()
}

pub fn mat_vec<F: Field>(a: &Matrix<F>, v: &[F]) -> Vec<F> {
    a.iter()
        .map(|row| {
            let mut acc = F::zero();
            for (x, y) in row.iter().zip(v) {
                acc = acc.add(&x.mul(y));
            }
            acc
        })
        .collect()
}

pub fn vec_mat<F: Field>(v: &[F], a: &Matrix<F>) -> Vec<F> {
    let cols = a[0].len();
    (0..cols)
        .map(|j| {
            let mut acc = F::zero();
            for (i, x) in v.iter().enumerate() {
                acc = acc.add(&x.mul(&a[i][j]));
            }
            acc
        })
        .collect()
}

/// Inverse by Gauss-Jordan elimination with partial pivoting (by float
/// magnitude; any nonzero pivot is fine in exact mode).
pub fn mat_inverse<F: Field>(a: &Matrix<F>) -> Result<Matrix<F>, EvalError> {
    let n = a.len();
    let mut m = a.to_vec();
    let mut inv = identity::<F>(n);
    for col in 0..n {
        let pivot = (col..n)
            .filter(|&r| !m[r][col].is_zero())
            .max_by(|&r, &s| {
                m[r][col]
                    .to_f64()
                    .abs()
                    .partial_cmp(&m[s][col].to_f64().abs())
                    .unwrap_or(std::cmp::Ordering::Equal)
            })
            .ok_or(EvalError::SingularMatrix)?;
        m.swap(col, pivot);
        inv.swap(col, pivot);
        let p = m[col][col].clone();
        for j in 0..n {
            m[col][j] = m[col][j].div(&p)?;
            inv[col][j] = inv[col][j].div(&p)?;
        }
        for r in 0..n {
            if r == col || m[r][col].is_zero() {
                continue;
            }
            let factor = m[r][col].clone();
            for j in 0..n {
                m[r][j] = m[r][j].sub(&factor.mul(&m[col][j]));
                inv[r][j] = inv[r][j].sub(&factor.mul(&inv[col][j]));
            }
        }
    }
    Ok(inv)
}

pub fn trace<F: Field>(a: &Matrix<F>) -> F {
    let mut acc = F::zero();
    for (i, row) in a.iter().enumerate() {
        acc = acc.add(&row[i]);
    }
    acc
}
