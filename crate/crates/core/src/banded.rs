//! Symmetric banded matrices and their Cholesky factorization.
//!
//! The x-update systems of every estimator are symmetric positive definite
//! with half-bandwidth 3 once the unknowns are interleaved per depth
//! (`[a_i, b_i, n_i]` adjacent), so a dense factorization is never needed.

use crate::error::{QusError, Result};

/// Symmetric matrix holding only the lower band `0 <= i - j <= bandwidth`.
#[derive(Debug, Clone, PartialEq)]
pub struct SymBanded {
    n: usize,
    bandwidth: usize,
    // row-major, `bandwidth + 1` slots per row; slot `k` is entry (i, i - k)
    data: Vec<f64>,
}

impl SymBanded {
    pub fn zeros(n: usize, bandwidth: usize) -> Self {
        Self {
            n,
            bandwidth,
            data: vec![0.0; n * (bandwidth + 1)],
        }
    }

    pub fn dim(&self) -> usize {
        self.n
    }

    pub fn bandwidth(&self) -> usize {
        self.bandwidth
    }

    #[inline]
    fn slot(&self, i: usize, j: usize) -> Option<usize> {
        let (r, c) = if i >= j { (i, j) } else { (j, i) };
        let k = r - c;
        (k <= self.bandwidth).then(|| r * (self.bandwidth + 1) + k)
    }

    pub fn get(&self, i: usize, j: usize) -> f64 {
        self.slot(i, j).map_or(0.0, |s| self.data[s])
    }

    /// Adds `v` to entry (i, j) and, implicitly, (j, i).
    ///
    /// Panics if the entry lies outside the band.
    pub fn add(&mut self, i: usize, j: usize, v: f64) {
        let s = self
            .slot(i, j)
            .unwrap_or_else(|| panic!("entry ({i}, {j}) outside bandwidth {}", self.bandwidth));
        self.data[s] += v;
    }

    pub fn mul_vec(&self, x: &[f64]) -> Vec<f64> {
        assert_eq!(x.len(), self.n);
        let mut y = vec![0.0; self.n];
        for i in 0..self.n {
            let row = &self.data[i * (self.bandwidth + 1)..(i + 1) * (self.bandwidth + 1)];
            y[i] += row[0] * x[i];
            for k in 1..=self.bandwidth.min(i) {
                let j = i - k;
                y[i] += row[k] * x[j];
                y[j] += row[k] * x[i];
            }
        }
        y
    }

    pub fn to_dense(&self) -> Vec<Vec<f64>> {
        (0..self.n)
            .map(|i| (0..self.n).map(|j| self.get(i, j)).collect())
            .collect()
    }

    /// `L Lᵀ` factorization. Fails on a nonpositive pivot.
    pub fn cholesky(&self) -> Result<BandedCholesky> {
        let bw = self.bandwidth;
        let w = bw + 1;
        let mut l = self.data.clone();
        for i in 0..self.n {
            // entries (i, j) for j in [i - bw, i]
            let j0 = i.saturating_sub(bw);
            for j in j0..=i {
                let mut sum = l[i * w + (i - j)];
                let k0 = j0.max(j.saturating_sub(bw));
                for k in k0..j {
                    sum -= l[i * w + (i - k)] * l[j * w + (j - k)];
                }
                if j == i {
                    // relative to the original diagonal: cancellation down to
                    // rounding level means numerically singular
                    if !(sum > self.data[i * w] * 1e-14) {
                        return Err(QusError::NotPositiveDefinite { row: i, pivot: sum });
                    }
                    l[i * w] = sum.sqrt();
                } else {
                    l[i * w + (i - j)] = sum / l[j * w];
                }
            }
        }
        Ok(BandedCholesky {
            n: self.n,
            bandwidth: bw,
            l,
        })
    }
}

#[derive(Debug, Clone)]
pub struct BandedCholesky {
    n: usize,
    bandwidth: usize,
    l: Vec<f64>,
}

impl BandedCholesky {
    pub fn dim(&self) -> usize {
        self.n
    }

    pub fn solve(&self, rhs: &[f64]) -> Vec<f64> {
        let mut x = rhs.to_vec();
        self.solve_in_place(&mut x);
        x
    }

    pub fn solve_in_place(&self, x: &mut [f64]) {
        assert_eq!(x.len(), self.n);
        let w = self.bandwidth + 1;
        // L y = b
        for i in 0..self.n {
            let mut sum = x[i];
            for k in 1..=self.bandwidth.min(i) {
                sum -= self.l[i * w + k] * x[i - k];
            }
            x[i] = sum / self.l[i * w];
        }
        // Lᵀ x = y
        for i in (0..self.n).rev() {
            let mut sum = x[i];
            for k in 1..=self.bandwidth.min(self.n - 1 - i) {
                sum -= self.l[(i + k) * w + k] * x[i + k];
            }
            x[i] = sum / self.l[i * w];
        }
    }

    /// Ratio of the largest to smallest squared pivot; a cheap lower bound
    /// on the 2-norm condition number.
    pub fn pivot_ratio(&self) -> f64 {
        let w = self.bandwidth + 1;
        let (lo, hi) = (0..self.n).fold((f64::INFINITY, 0.0f64), |(lo, hi), i| {
            let d = self.l[i * w] * self.l[i * w];
            (lo.min(d), hi.max(d))
        });
        hi / lo
    }
}

pub type Mat3 = [[f64; 3]; 3];

pub fn mat3_mul(a: &Mat3, b: &Mat3) -> Mat3 {
    let mut c = [[0.0; 3]; 3];
    for i in 0..3 {
        for j in 0..3 {
            c[i][j] = (0..3).map(|k| a[i][k] * b[k][j]).sum();
        }
    }
    c
}

pub fn mat3_vec(a: &Mat3, v: &[f64; 3]) -> [f64; 3] {
    [
        a[0][0] * v[0] + a[0][1] * v[1] + a[0][2] * v[2],
        a[1][0] * v[0] + a[1][1] * v[1] + a[1][2] * v[2],
        a[2][0] * v[0] + a[2][1] * v[1] + a[2][2] * v[2],
    ]
}

/// Inverse by cofactors; `None` when the determinant vanishes.
pub fn mat3_inverse(a: &Mat3) -> Option<Mat3> {
    let c00 = a[1][1] * a[2][2] - a[1][2] * a[2][1];
    let c01 = a[1][2] * a[2][0] - a[1][0] * a[2][2];
    let c02 = a[1][0] * a[2][1] - a[1][1] * a[2][0];
    let det = a[0][0] * c00 + a[0][1] * c01 + a[0][2] * c02;
    if det == 0.0 || !det.is_finite() {
        return None;
    }
    let inv_det = 1.0 / det;
    Some([
        [
            c00 * inv_det,
            (a[0][2] * a[2][1] - a[0][1] * a[2][2]) * inv_det,
            (a[0][1] * a[1][2] - a[0][2] * a[1][1]) * inv_det,
        ],
        [
            c01 * inv_det,
            (a[0][0] * a[2][2] - a[0][2] * a[2][0]) * inv_det,
            (a[0][2] * a[1][0] - a[0][0] * a[1][2]) * inv_det,
        ],
        [
            c02 * inv_det,
            (a[0][1] * a[2][0] - a[0][0] * a[2][1]) * inv_det,
            (a[0][0] * a[1][1] - a[0][1] * a[1][0]) * inv_det,
        ],
    ])
}

fn mat3_norm1(a: &Mat3) -> f64 {
    (0..3)
        .map(|j| (0..3).map(|i| a[i][j].abs()).sum::<f64>())
        .fold(0.0, f64::max)
}

/// 1-norm condition number; infinite for singular matrices.
pub fn mat3_condition(a: &Mat3) -> f64 {
    match mat3_inverse(a) {
        Some(inv) => mat3_norm1(a) * mat3_norm1(&inv),
        None => f64::INFINITY,
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use nalgebra::{DMatrix, DVector};
    use proptest::prelude::*;

    fn random_spd(n: usize, bw: usize, seed: &[f64]) -> SymBanded {
        let mut m = SymBanded::zeros(n, bw);
        let mut it = seed.iter().cycle();
        for i in 0..n {
            for k in 1..=bw.min(i) {
                m.add(i, i - k, *it.next().unwrap());
            }
        }
        // diagonal dominance
        for i in 0..n {
            let off: f64 = (0..n).filter(|&j| j != i).map(|j| m.get(i, j).abs()).sum();
            m.add(i, i, off + 1.0 + it.next().unwrap().abs());
        }
        m
    }

    proptest! {
        #[test]
        fn cholesky_matches_dense_solve(
            n in 2usize..20,
            bw in 1usize..5,
            seed in prop::collection::vec(-2.0..2.0f64, 8..40),
            rhs in prop::collection::vec(-10.0..10.0f64, 20),
        ) {
            let m = random_spd(n, bw, &seed);
            let b = &rhs[..n];
            let x = m.cholesky().unwrap().solve(b);
            let dense = DMatrix::from_fn(n, n, |i, j| m.get(i, j));
            let reference = dense.lu().solve(&DVector::from_column_slice(b)).unwrap();
            for i in 0..n {
                prop_assert!((x[i] - reference[i]).abs() < 1e-10 * (1.0 + reference[i].abs()));
            }
            let back = m.mul_vec(&x);
            for i in 0..n {
                prop_assert!((back[i] - b[i]).abs() < 1e-9);
            }
        }
    }

    #[test]
    fn rejects_indefinite() {
        let mut m = SymBanded::zeros(2, 1);
        m.add(0, 0, 1.0);
        m.add(1, 1, 1.0);
        m.add(1, 0, 2.0);
        assert!(matches!(
            m.cholesky(),
            Err(QusError::NotPositiveDefinite { row: 1, .. })
        ));
    }

    #[test]
    fn mat3_inverse_identity() {
        let a = [[4.0, 1.0, 0.5], [1.0, 3.0, 0.2], [0.5, 0.2, 2.0]];
        let inv = mat3_inverse(&a).unwrap();
        let p = mat3_mul(&a, &inv);
        for i in 0..3 {
            for j in 0..3 {
                let e = if i == j { 1.0 } else { 0.0 };
                assert!((p[i][j] - e).abs() < 1e-14);
            }
        }
        assert!(mat3_condition(&[[1.0, 0.0, 0.0], [0.0, 1.0, 0.0], [0.0, 0.0, 0.0]]).is_infinite());
    }
}
