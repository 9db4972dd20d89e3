//! Tiny fixed-size linear algebra: 2×2 matrices and a 3×3 solver.

use serde::{Deserialize, Serialize};

use crate::{Error, Real, Result};

/// Row-major 2×2 matrix.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Mat2<T> {
    pub m: [[T; 2]; 2],
}

impl<T: Real> Mat2<T> {
    pub fn new(a11: T, a12: T, a21: T, a22: T) -> Self {
        Self {
            m: [[a11, a12], [a21, a22]],
        }
    }

    pub fn identity() -> Self {
        Self::diagonal(T::one(), T::one())
    }

    pub fn diagonal(a: T, b: T) -> Self {
        Self::new(a, T::zero(), T::zero(), b)
    }

    pub fn scale(&self, k: T) -> Self {
        let [[a, b], [c, d]] = self.m;
        Self::new(k * a, k * b, k * c, k * d)
    }

    pub fn det(&self) -> T {
        let [[a, b], [c, d]] = self.m;
        a * d - b * c
    }

    /// Generic adjugate inverse.
    pub fn inverse(&self) -> Result<Self> {
        let det = self.det();
        if det == T::zero() || !det.is_finite() {
            return Err(Error::SingularMatrix(det.to_f64_lossy()));
        }
        let [[a, b], [c, d]] = self.m;
        Ok(Self::new(d, -b, -c, a).scale(det.recip()))
    }

    pub fn mul_vec(&self, v: [T; 2]) -> [T; 2] {
        let [[a, b], [c, d]] = self.m;
        [a * v[0] + b * v[1], c * v[0] + d * v[1]]
    }

    pub fn mul(&self, o: &Self) -> Self {
        let [[a, b], [c, d]] = self.m;
        let [[e, f], [g, h]] = o.m;
        Self::new(a * e + b * g, a * f + b * h, c * e + d * g, c * f + d * h)
    }

    pub fn max_abs_diff(&self, o: &Self) -> T {
        let mut worst = T::zero();
        for i in 0..2 {
            for j in 0..2 {
                worst = worst.max((self.m[i][j] - o.m[i][j]).abs());
            }
        }
        worst
    }
}

/// Solves `a·x = rhs` by Gaussian elimination with partial pivoting.
pub fn solve3<T: Real>(mut a: [[T; 3]; 3], mut rhs: [T; 3]) -> Result<[T; 3]> {
    for col in 0..3 {
        let pivot = (col..3)
            .max_by(|&i, &j| {
                a[i][col]
                    .abs()
                    .partial_cmp(&a[j][col].abs())
                    .unwrap_or(std::cmp::Ordering::Equal)
            })
            .unwrap_or(col);
        if a[pivot][col] == T::zero() || !a[pivot][col].is_finite() {
            return Err(Error::SingularMatrix(0.0));
        }
        a.swap(col, pivot);
        rhs.swap(col, pivot);
        for row in col + 1..3 {
            let f = a[row][col] / a[col][col];
            let pivot_row = a[col];
            for (dst, &v) in a[row][col..].iter_mut().zip(&pivot_row[col..]) {
                *dst -= f * v;
            }
            let r = rhs[col];
            rhs[row] -= f * r;
        }
    }
    let mut x = [T::zero(); 3];
    for row in (0..3).rev() {
        let mut acc = rhs[row];
        for k in row + 1..3 {
            acc -= a[row][k] * x[k];
        }
        x[row] = acc / a[row][row];
    }
    Ok(x)
}
