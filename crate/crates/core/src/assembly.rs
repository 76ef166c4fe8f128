//! Normal-equation assembly and first-difference penalty operators.
//!
//! Unknowns are stacked as `x = [a_1..a_N, b_1..b_N, n_1..n_N]`. The data
//! term is never materialized as the (N_F·N_R) × 3N_R regression matrix;
//! `H = QᵀWQ` and `t = QᵀWY` come straight from per-depth weighted sums, so
//! each of the six blocks of `H` is diagonal.

use crate::banded::{Mat3, SymBanded};
use crate::error::{QusError, Result};
use crate::model::LogRatioMap;
use crate::weighting::WeightMap;

/// Position of parameter `param` (0 = a, 1 = b, 2 = n) at depth `depth` in
/// the interleaved ordering used by the banded factorizations.
#[inline]
pub fn interleaved(param: usize, depth: usize) -> usize {
    3 * depth + param
}

/// First-difference operator `B`, (n-1) × n with rows `e_r - e_{r+1}`.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct DifferenceOperator {
    n: usize,
}

pub fn build_difference(n: usize) -> Result<DifferenceOperator> {
    if n < 2 {
        return Err(QusError::InvalidParameter(format!(
            "difference operator needs n >= 2, got {n}"
        )));
    }
    Ok(DifferenceOperator { n })
}

impl DifferenceOperator {
    pub fn cols(&self) -> usize {
        self.n
    }

    pub fn rows(&self) -> usize {
        self.n - 1
    }

    pub fn apply(&self, x: &[f64]) -> Vec<f64> {
        x.windows(2).map(|w| w[0] - w[1]).collect()
    }

    pub fn apply_transpose(&self, s: &[f64]) -> Vec<f64> {
        let mut out = vec![0.0; self.n];
        for (r, &v) in s.iter().enumerate() {
            out[r] += v;
            out[r + 1] -= v;
        }
        out
    }

    pub fn to_dense(&self) -> Vec<Vec<f64>> {
        (0..self.rows())
            .map(|r| {
                let mut row = vec![0.0; self.n];
                row[r] = 1.0;
                row[r + 1] = -1.0;
                row
            })
            .collect()
    }
}

/// `H` and `t` of the quadratic data term for one lateral column.
#[derive(Debug, Clone, PartialEq)]
pub struct NormalSystem {
    /// Diagonals of the blocks H₁..H₆, in the order
    /// `[H₁ H₂ H₃; H₂ H₄ H₅; H₃ H₅ H₆]`.
    pub h: [Vec<f64>; 6],
    pub t1: Vec<f64>,
    pub t2: Vec<f64>,
    pub t3: Vec<f64>,
}

impl NormalSystem {
    pub fn n_depths(&self) -> usize {
        self.t1.len()
    }

    pub fn dim(&self) -> usize {
        3 * self.n_depths()
    }

    /// The 3 × 3 block of `H` coupling `(a_i, b_i, n_i)`.
    pub fn depth_block(&self, i: usize) -> Mat3 {
        let [h1, h2, h3, h4, h5, h6] = &self.h;
        [
            [h1[i], h2[i], h3[i]],
            [h2[i], h4[i], h5[i]],
            [h3[i], h5[i], h6[i]],
        ]
    }

    pub fn depth_rhs(&self, i: usize) -> [f64; 3] {
        [self.t1[i], self.t2[i], self.t3[i]]
    }

    /// Stacked `t`.
    pub fn t(&self) -> Vec<f64> {
        let mut t = Vec::with_capacity(self.dim());
        t.extend_from_slice(&self.t1);
        t.extend_from_slice(&self.t2);
        t.extend_from_slice(&self.t3);
        t
    }

    /// `H x` for a stacked vector.
    pub fn apply(&self, x: &[f64]) -> Vec<f64> {
        let n = self.n_depths();
        assert_eq!(x.len(), 3 * n);
        let mut y = vec![0.0; 3 * n];
        for i in 0..n {
            let block = self.depth_block(i);
            for r in 0..3 {
                y[r * n + i] = (0..3).map(|c| block[r][c] * x[c * n + i]).sum();
            }
        }
        y
    }

    /// Dense `H` in stacked ordering, row-major.
    pub fn to_dense(&self) -> Vec<Vec<f64>> {
        let n = self.n_depths();
        let mut m = vec![vec![0.0; 3 * n]; 3 * n];
        for i in 0..n {
            let block = self.depth_block(i);
            for r in 0..3 {
                for c in 0..3 {
                    m[r * n + i][c * n + i] = block[r][c];
                }
            }
        }
        m
    }

    /// Adds `scale · H` to a banded matrix in interleaved ordering.
    pub fn add_to_banded(&self, m: &mut SymBanded, scale: f64) {
        for i in 0..self.n_depths() {
            let block = self.depth_block(i);
            for r in 0..3 {
                for c in 0..=r {
                    m.add(interleaved(r, i), interleaved(c, i), scale * block[r][c]);
                }
            }
        }
    }

    /// Adds `scale · HᵀH` to a banded matrix in interleaved ordering.
    pub fn add_squared_to_banded(&self, m: &mut SymBanded, scale: f64) {
        for i in 0..self.n_depths() {
            let block = self.depth_block(i);
            let sq = crate::banded::mat3_mul(&block, &block);
            for r in 0..3 {
                for c in 0..=r {
                    m.add(interleaved(r, i), interleaved(c, i), scale * sq[r][c]);
                }
            }
        }
    }
}

/// Assembles `H` and `t` from a log-ratio map, optionally weighting every
/// (frequency, depth) residual.
///
/// Weights may be zero (the residual is dropped); negative or non-finite
/// weights are rejected, as are non-finite log ratios.
pub fn build_normal_system(x: &LogRatioMap, weights: Option<&WeightMap>) -> Result<NormalSystem> {
    let grid = x.grid();
    if let Some(k) = x.values().iter().position(|v| !v.is_finite()) {
        let nf = grid.n_freqs();
        return Err(QusError::InvalidParameter(format!(
            "non-finite log ratio at frequency index {}, depth index {}",
            k % nf,
            k / nf
        )));
    }
    if let Some(w) = weights {
        if w.grid() != grid {
            return Err(QusError::Dimension(
                "weight map grid differs from log-ratio grid".into(),
            ));
        }
        if let Some((k, v)) = w
            .values()
            .iter()
            .enumerate()
            .find(|(_, v)| !(v.is_finite() && **v >= 0.0))
        {
            let nf = grid.n_freqs();
            return Err(QusError::NonPositive {
                freq: k % nf,
                depth: k / nf,
                value: *v,
            });
        }
    }
    let freqs = grid.freqs();
    let ln_f: Vec<f64> = freqs.iter().map(|f| f.ln()).collect();
    let nr = grid.n_depths();

    let mut h: [Vec<f64>; 6] = Default::default();
    for block in h.iter_mut() {
        *block = vec![0.0; nr];
    }
    let (mut t1, mut t2, mut t3) = (vec![0.0; nr], vec![0.0; nr], vec![0.0; nr]);

    for (i, &z) in grid.depths().iter().enumerate() {
        let xs = x.depth_row(i);
        let ws = weights.map(|w| w.depth_row(i));
        let (mut sf2, mut sf, mut sflf, mut s1, mut slf, mut slf2) = (0.0, 0.0, 0.0, 0.0, 0.0, 0.0);
        let (mut sxf, mut sx, mut sxlf) = (0.0, 0.0, 0.0);
        for (l, (&f, &lf)) in freqs.iter().zip(&ln_f).enumerate() {
            let w = ws.map_or(1.0, |ws| ws[l]);
            sf2 += w * f * f;
            sf += w * f;
            sflf += w * f * lf;
            s1 += w;
            slf += w * lf;
            slf2 += w * lf * lf;
            sxf += w * xs[l] * f;
            sx += w * xs[l];
            sxlf += w * xs[l] * lf;
        }
        h[0][i] = 16.0 * z * z * sf2;
        h[1][i] = -4.0 * z * sf;
        h[2][i] = -4.0 * z * sflf;
        h[3][i] = s1;
        h[4][i] = slf;
        h[5][i] = slf2;
        t1[i] = -4.0 * z * sxf;
        t2[i] = sx;
        t3[i] = sxlf;
    }
    Ok(NormalSystem { h, t1, t2, t3 })
}

/// Per-parameter first-difference penalty `K = blockdiag(w_a B, w_b B, w_n B)`.
///
/// Rows of `K x` are ordered a-differences, then b, then n, so the split
/// form `K₁ = w_a B` (acting on `a`) and `K₂ = blockdiag(w_b B, w_n B)`
/// (acting on `(b, n)`) is the same matrix partitioned after the first
/// `n - 1` rows.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct PenaltyOperator {
    diff: DifferenceOperator,
    weights: [f64; 3],
    split: bool,
}

pub fn build_penalty(w_a: f64, w_b: f64, w_n: f64, n: usize, split: bool) -> Result<PenaltyOperator> {
    let diff = build_difference(n)?;
    for (name, w) in [("w_a", w_a), ("w_b", w_b), ("w_n", w_n)] {
        if !(w.is_finite() && w >= 0.0) {
            return Err(QusError::InvalidParameter(format!(
                "{name} must be nonnegative, got {w}"
            )));
        }
    }
    Ok(PenaltyOperator {
        diff,
        weights: [w_a, w_b, w_n],
        split,
    })
}

impl PenaltyOperator {
    pub fn n_depths(&self) -> usize {
        self.diff.cols()
    }

    pub fn rows(&self) -> usize {
        3 * self.diff.rows()
    }

    pub fn weights(&self) -> [f64; 3] {
        self.weights
    }

    pub fn is_split(&self) -> bool {
        self.split
    }

    /// Rows of `K x` belonging to parameter `param`.
    pub fn block_rows(&self, param: usize) -> std::ops::Range<usize> {
        let m = self.diff.rows();
        param * m..(param + 1) * m
    }

    /// Number of rows of `K₁` in the split form.
    pub fn split_point(&self) -> usize {
        self.diff.rows()
    }

    pub fn apply(&self, x: &[f64]) -> Vec<f64> {
        let n = self.n_depths();
        assert_eq!(x.len(), 3 * n);
        let mut out = Vec::with_capacity(self.rows());
        for p in 0..3 {
            let w = self.weights[p];
            out.extend(self.diff.apply(&x[p * n..(p + 1) * n]).into_iter().map(|v| w * v));
        }
        out
    }

    pub fn apply_transpose(&self, s: &[f64]) -> Vec<f64> {
        assert_eq!(s.len(), self.rows());
        let n = self.n_depths();
        let mut out = Vec::with_capacity(3 * n);
        for p in 0..3 {
            let w = self.weights[p];
            out.extend(
                self.diff
                    .apply_transpose(&s[self.block_rows(p)])
                    .into_iter()
                    .map(|v| w * v),
            );
        }
        out
    }

    /// Adds `Σ_p scale_p · w_p² BᵀB` to a banded matrix in interleaved ordering.
    pub fn add_gram_to_banded(&self, m: &mut SymBanded, scale: [f64; 3]) {
        let n = self.n_depths();
        for p in 0..3 {
            let c = scale[p] * self.weights[p] * self.weights[p];
            if c == 0.0 {
                continue;
            }
            for r in 0..n - 1 {
                let (i, j) = (interleaved(p, r), interleaved(p, r + 1));
                m.add(i, i, c);
                m.add(j, j, c);
                m.add(j, i, -c);
            }
        }
    }

    /// Dense `K`, row-major.
    pub fn to_dense(&self) -> Vec<Vec<f64>> {
        let n = self.n_depths();
        let b = self.diff.to_dense();
        let mut k = Vec::with_capacity(self.rows());
        for p in 0..3 {
            for row in &b {
                let mut full = vec![0.0; 3 * n];
                for (j, v) in row.iter().enumerate() {
                    full[p * n + j] = self.weights[p] * v;
                }
                k.push(full);
            }
        }
        k
    }

    /// Dense `K₁` (acts on `a` only).
    pub fn k1_dense(&self) -> Vec<Vec<f64>> {
        self.diff
            .to_dense()
            .into_iter()
            .map(|row| row.into_iter().map(|v| self.weights[0] * v).collect())
            .collect()
    }

    /// Dense `K₂` (acts on the stacked `(b, n)`).
    pub fn k2_dense(&self) -> Vec<Vec<f64>> {
        let n = self.n_depths();
        let b = self.diff.to_dense();
        let mut k = Vec::new();
        for p in 1..3 {
            for row in &b {
                let mut full = vec![0.0; 2 * n];
                for (j, v) in row.iter().enumerate() {
                    full[(p - 1) * n + j] = self.weights[p] * v;
                }
                k.push(full);
            }
        }
        k
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::model::{forward_log_ratio, FreqDepthMap, ParamColumn, SpectralGrid};

    #[test]
    fn difference_examples() {
        assert_eq!(
            build_difference(3).unwrap().to_dense(),
            vec![vec![1.0, -1.0, 0.0], vec![0.0, 1.0, -1.0]]
        );
        assert_eq!(build_difference(2).unwrap().to_dense(), vec![vec![1.0, -1.0]]);
        assert!(build_difference(1).is_err());
        let b = build_difference(6).unwrap();
        assert!(b.apply(&[2.5; 6]).iter().all(|&v| v == 0.0));
        for row in b.to_dense() {
            assert_eq!(row.iter().sum::<f64>(), 0.0);
            assert_eq!(row.iter().filter(|v| **v != 0.0).count(), 2);
        }
    }

    #[test]
    fn difference_transpose_is_adjoint() {
        let b = build_difference(5).unwrap();
        let x = [1.0, -2.0, 0.5, 3.0, 4.0];
        let s = [0.3, -1.0, 2.0, 0.7];
        let lhs: f64 = b.apply(&x).iter().zip(&s).map(|(u, v)| u * v).sum();
        let rhs: f64 = x.iter().zip(b.apply_transpose(&s)).map(|(u, v)| u * v).sum();
        assert!((lhs - rhs).abs() < 1e-14);
    }

    #[test]
    fn single_cell_normal_system() {
        // 1 × 1 grids are below the SpectralGrid minimum; build the 2 × 2
        // case at f = 1 and check depth z = 1 against hand substitution.
        let grid = SpectralGrid::new(vec![1.0, 2.0], vec![1.0, 2.0]).unwrap();
        let x = FreqDepthMap::filled(grid.clone(), 0.0);
        let mut w = WeightMap::ones(grid);
        w.set(1, 0, 0.0);
        let sys = build_normal_system(&x, Some(&w)).unwrap();
        assert_eq!(
            sys.depth_block(0),
            [[16.0, -4.0, 0.0], [-4.0, 1.0, 0.0], [0.0, 0.0, 0.0]]
        );
    }

    #[test]
    fn uniform_h4_is_count() {
        let grid = SpectralGrid::linspace((3.0, 10.0), 7, (0.5, 3.0), 4).unwrap();
        let x = FreqDepthMap::filled(grid, 1.0);
        let sys = build_normal_system(&x, None).unwrap();
        assert!(sys.h[3].iter().all(|&v| v == 7.0));
        assert!(sys.t2.iter().all(|&v| (v - 7.0).abs() < 1e-14));
    }

    #[test]
    fn noiseless_data_satisfies_normal_equations() {
        let grid = SpectralGrid::linspace((3.0, 10.0), 8, (0.5, 3.0), 5).unwrap();
        let p = ParamColumn::new(
            vec![0.01, 0.02, 0.03, 0.02, 0.01],
            vec![0.5, 0.5, 1.5, 1.5, 0.5],
            vec![0.1; 5],
        )
        .unwrap();
        let x = forward_log_ratio(&p, &grid).unwrap();
        let sys = build_normal_system(&x, None).unwrap();
        let hp = sys.apply(&p.to_stacked());
        for (u, v) in hp.iter().zip(sys.t()) {
            assert!((u - v).abs() < 1e-9 * (1.0 + v.abs()));
        }
    }

    #[test]
    fn rejects_mismatched_weights() {
        let g1 = SpectralGrid::linspace((3.0, 10.0), 4, (0.5, 3.0), 3).unwrap();
        let g2 = SpectralGrid::linspace((3.0, 10.0), 5, (0.5, 3.0), 3).unwrap();
        let x = FreqDepthMap::filled(g1, 0.0);
        assert!(build_normal_system(&x, Some(&WeightMap::ones(g2))).is_err());
    }

    #[test]
    fn penalty_examples() {
        let k = build_penalty(0.0, 0.0, 0.0, 4, false).unwrap();
        assert!(k.apply(&[1.0; 12]).iter().all(|&v| v == 0.0));

        let k = build_penalty(2.0, 0.0, 0.0, 3, false).unwrap();
        let x = [1.0, 3.0, 7.0, 5.0, 5.0, 5.0, 1.0, 1.0, 1.0];
        assert_eq!(&k.apply(&x)[..2], &[-4.0, -8.0]);

        let k = build_penalty(1.5, 2.0, 0.5, 4, true).unwrap();
        let mut stacked = k.k1_dense().into_iter().map(|row| {
            let mut full = row;
            full.extend(vec![0.0; 8]);
            full
        }).collect::<Vec<_>>();
        stacked.extend(k.k2_dense().into_iter().map(|row| {
            let mut full = vec![0.0; 4];
            full.extend(row);
            full
        }));
        assert_eq!(stacked, k.to_dense());
    }

    #[test]
    fn penalty_gram_matches_dense() {
        let k = build_penalty(1.5, 2.0, 0.5, 4, false).unwrap();
        let mut m = SymBanded::zeros(12, 3);
        k.add_gram_to_banded(&mut m, [1.0, 2.0, 3.0]);
        let kd = k.to_dense();
        let scale = |col: usize| [1.0, 2.0, 3.0][col / 4];
        for r in 0..12 {
            for c in 0..12 {
                let g: f64 = kd.iter().map(|row| row[r] * row[c]).sum::<f64>() * scale(r);
                let (pr, ir) = (r / 4, r % 4);
                let (pc, ic) = (c / 4, c % 4);
                let banded = m.get(interleaved(pr, ir), interleaved(pc, ic));
                assert!((g - banded).abs() < 1e-14, "({r},{c}) {g} vs {banded}");
            }
        }
    }
}
