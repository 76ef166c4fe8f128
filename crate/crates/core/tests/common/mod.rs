//! Independent reference solvers and instance generators shared by the
//! integration tests. Everything here works on dense matrices built from
//! first principles and never calls the library's solvers.

#![allow(dead_code)]

use nalgebra::{DMatrix, DVector};
use qus_core::assembly::{NormalSystem, PenaltyOperator};
use qus_core::model::{forward_log_ratio, FreqDepthMap, ParamColumn, SpectralGrid};
use qus_core::solvers::{DataMode, Norm, PenaltyPlan};
use qus_core::weighting::WeightMap;
use rand::Rng;
use rand_chacha::ChaCha8Rng;

pub fn dense(rows: &[Vec<f64>]) -> DMatrix<f64> {
    let r = rows.len();
    let c = rows.first().map_or(0, Vec::len);
    DMatrix::from_fn(r, c, |i, j| rows[i][j])
}

/// Design matrix `Q` (rows indexed by (depth, freq)) for stacked unknowns.
pub fn design_matrix(grid: &SpectralGrid) -> DMatrix<f64> {
    let (nf, nr) = (grid.n_freqs(), grid.n_depths());
    let mut q = DMatrix::zeros(nf * nr, 3 * nr);
    for i in 0..nr {
        let z = grid.depths()[i];
        for l in 0..nf {
            let f = grid.freqs()[l];
            let row = i * nf + l;
            q[(row, i)] = -4.0 * f * z;
            q[(row, nr + i)] = 1.0;
            q[(row, 2 * nr + i)] = f.ln();
        }
    }
    q
}

/// `(QᵀWQ, QᵀWY)` by explicit dense products.
pub fn dense_normal_system(x: &FreqDepthMap, w: Option<&WeightMap>) -> (DMatrix<f64>, DVector<f64>) {
    let q = design_matrix(x.grid());
    let n = x.values().len();
    let wdiag = DMatrix::from_diagonal(&DVector::from_fn(n, |j, _| w.map_or(1.0, |w| w.values()[j])));
    let y = DVector::from_column_slice(x.values());
    (q.transpose() * &wdiag * &q, q.transpose() * wdiag * y)
}

/// Dense data term, summed term by term.
pub fn dense_data_term(x: &DVector<f64>, h: &DMatrix<f64>, t: &DVector<f64>, mode: DataMode) -> f64 {
    match mode {
        DataMode::PaperLiteral => {
            let r = h * x - t;
            0.5 * r.iter().map(|v| v * v).sum::<f64>()
        }
        DataMode::NormalEquations => 0.5 * x.dot(&(h * x)) - t.dot(x),
    }
}

pub fn dense_objective(x: &DVector<f64>, h: &DMatrix<f64>, t: &DVector<f64>, k: &PenaltyOperator, plan: &PenaltyPlan, mode: DataMode) -> f64 {
    let kd = dense(&k.to_dense());
    let kx = kd * x;
    let m = k.rows() / 3;
    let mut total = dense_data_term(x, h, t, mode);
    for p in 0..3 {
        let b = plan.blocks[p];
        for j in p * m..(p + 1) * m {
            total += match b.norm {
                Norm::L1 => b.lambda * kx[j].abs(),
                Norm::L2 => b.lambda * kx[j] * kx[j],
            };
        }
    }
    total
}

/// Quadratic model `½xᵀQx − cᵀx` of data term plus squared-L2 blocks.
fn smooth_part(h: &DMatrix<f64>, t: &DVector<f64>, k: &PenaltyOperator, plan: &PenaltyPlan, mode: DataMode) -> (DMatrix<f64>, DVector<f64>) {
    let (mut q, c) = match mode {
        DataMode::PaperLiteral => (h.transpose() * h, h.transpose() * t),
        DataMode::NormalEquations => (h.clone(), t.clone()),
    };
    let kd = dense(&k.to_dense());
    let m = k.rows() / 3;
    for p in 0..3 {
        let b = plan.blocks[p];
        if b.norm == Norm::L2 && b.lambda > 0.0 {
            let kp = kd.rows(p * m, m).into_owned();
            q += 2.0 * b.lambda * kp.transpose() * kp;
        }
    }
    (q, c)
}

/// Change of variables that makes every L1 block separable: for an L1 block
/// with weight `w`, `x_i = c − Σ_{r<i} d_r / w` so that `(Kx)_r = d_r`.
/// Returns `T` (x = T u) and the list of `(u index, λ)` carrying L1 terms.
fn reparameterize(n: usize, k: &PenaltyOperator, plan: &PenaltyPlan) -> (DMatrix<f64>, Vec<(usize, f64)>) {
    let mut t = DMatrix::zeros(3 * n, 3 * n);
    let mut l1 = Vec::new();
    let w = k.weights();
    for p in 0..3 {
        let b = plan.blocks[p];
        let off = p * n;
        if b.norm == Norm::L1 && b.lambda > 0.0 && w[p] > 0.0 {
            for i in 0..n {
                t[(off + i, off)] = 1.0;
                for r in 0..i {
                    t[(off + i, off + 1 + r)] = -1.0 / w[p];
                }
            }
            for r in 0..n - 1 {
                l1.push((off + 1 + r, b.lambda));
            }
        } else {
            for i in 0..n {
                t[(off + i, off + i)] = 1.0;
            }
        }
    }
    (t, l1)
}

fn soft(x: f64, k: f64) -> f64 {
    x.signum() * (x.abs() - k).max(0.0)
}

/// Minimizer of data term + penalties by accelerated proximal gradient with
/// adaptive restart, followed by an exact polish on the detected support.
pub fn prox_grad_oracle(sys: &NormalSystem, k: &PenaltyOperator, plan: &PenaltyPlan, mode: DataMode, max_iter: usize) -> DVector<f64> {
    let n = sys.n_depths();
    let h = dense(&sys.to_dense());
    let t = DVector::from_vec(sys.t());
    let (q, c) = smooth_part(&h, &t, k, plan, mode);
    let (tm, l1) = reparameterize(n, k, plan);
    let a = tm.transpose() * &q * &tm;
    let b = tm.transpose() * &c;
    let lip = a.clone().symmetric_eigen().eigenvalues.max();
    let step = 1.0 / lip;

    let f = |u: &DVector<f64>| -> f64 {
        0.5 * u.dot(&(&a * u)) - b.dot(u) + l1.iter().map(|&(j, lam)| lam * u[j].abs()).sum::<f64>()
    };
    let prox = |v: &mut DVector<f64>| {
        for &(j, lam) in &l1 {
            v[j] = soft(v[j], step * lam);
        }
    };

    let mut u = DVector::zeros(3 * n);
    let mut v = u.clone();
    let mut theta = 1.0f64;
    let mut fu = f(&u);
    let mut stall = 0;
    for _ in 0..max_iter {
        let grad = &a * &v - &b;
        let mut next = &v - step * grad;
        prox(&mut next);
        let fn_ = f(&next);
        if fn_ > fu {
            // restart momentum from the last accepted point
            v = u.clone();
            theta = 1.0;
            continue;
        }
        let theta_next = 0.5 * (1.0 + (1.0 + 4.0 * theta * theta).sqrt());
        v = &next + ((theta - 1.0) / theta_next) * (&next - &u);
        theta = theta_next;
        let moved = (&next - &u).norm();
        u = next;
        fu = fn_;
        if moved <= 1e-16 * (1.0 + u.norm()) {
            stall += 1;
            if stall > 50 {
                break;
            }
        } else {
            stall = 0;
        }
    }

    // polish: fix the zero pattern and signs, solve the remaining quadratic
    let scale = u.amax().max(1.0);
    let zero: Vec<bool> = (0..3 * n)
        .map(|j| l1.iter().any(|&(i, _)| i == j) && u[j].abs() <= 1e-10 * scale)
        .collect();
    let free: Vec<usize> = (0..3 * n).filter(|&j| !zero[j]).collect();
    let mut rhs = b.clone();
    for &(j, lam) in &l1 {
        if !zero[j] {
            rhs[j] -= lam * u[j].signum();
        }
    }
    let af = DMatrix::from_fn(free.len(), free.len(), |r, s| a[(free[r], free[s])]);
    let bf = DVector::from_fn(free.len(), |r, _| rhs[free[r]]);
    if let Some(sol) = af.cholesky().map(|ch| ch.solve(&bf)) {
        let mut polished = DVector::zeros(3 * n);
        for (r, &j) in free.iter().enumerate() {
            polished[j] = sol[r];
        }
        let signs_kept = l1.iter().all(|&(j, _)| zero[j] || polished[j].signum() == u[j].signum());
        if signs_kept && f(&polished) <= fu {
            u = polished;
        }
    }
    tm * u
}

/// Plain gradient descent with step `1/L` until the gradient norm falls
/// below `tol`; only for fully quadratic objectives.
pub fn gradient_descent_oracle(sys: &NormalSystem, k: &PenaltyOperator, plan: &PenaltyPlan, mode: DataMode, tol: f64, max_iter: usize) -> (DVector<f64>, f64) {
    let h = dense(&sys.to_dense());
    let t = DVector::from_vec(sys.t());
    let (q, c) = smooth_part(&h, &t, k, plan, mode);
    let lip = q.clone().symmetric_eigen().eigenvalues.max();
    let mut x = DVector::zeros(q.nrows());
    let mut gnorm = f64::INFINITY;
    for _ in 0..max_iter {
        let g = &q * &x - &c;
        gnorm = g.norm();
        if gnorm <= tol {
            break;
        }
        x -= g / lip;
    }
    (x, gnorm)
}

pub fn uniform(rng: &mut ChaCha8Rng, lo: f64, hi: f64) -> f64 {
    rng.gen_range(lo..hi)
}

pub fn random_grid(rng: &mut ChaCha8Rng, nf: usize, nr: usize) -> SpectralGrid {
    let f0 = uniform(rng, 1.0, 2.0);
    let f1 = f0 + uniform(rng, 1.0, 3.0);
    let z0 = uniform(rng, 0.2, 0.5);
    let z1 = z0 + uniform(rng, 0.3, 1.0);
    SpectralGrid::linspace((f0, f1), nf, (z0, z1), nr).unwrap()
}

pub fn random_params(rng: &mut ChaCha8Rng, nr: usize) -> ParamColumn {
    ParamColumn::new(
        (0..nr).map(|_| uniform(rng, -0.05, 0.05)).collect(),
        (0..nr).map(|_| uniform(rng, -1.0, 1.0)).collect(),
        (0..nr).map(|_| uniform(rng, -0.5, 0.5)).collect(),
    )
    .unwrap()
}

/// Forward-model log ratio plus independent Gaussian-like perturbation.
pub fn random_log_ratio(rng: &mut ChaCha8Rng, grid: &SpectralGrid, noise: f64) -> FreqDepthMap {
    let p = random_params(rng, grid.n_depths());
    let mut x = forward_log_ratio(&p, grid).unwrap();
    for v in x.values_mut() {
        *v += noise * uniform(rng, -1.0, 1.0);
    }
    x
}

pub fn random_weights(rng: &mut ChaCha8Rng, grid: &SpectralGrid) -> WeightMap {
    let n = grid.n_freqs() * grid.n_depths();
    let values = (0..n).map(|_| uniform(rng, 1e-3, 1.0)).collect();
    WeightMap::new(FreqDepthMap::new(grid.clone(), values).unwrap()).unwrap()
}

pub fn rel_diff(a: &[f64], b: &[f64]) -> f64 {
    let num: f64 = a.iter().zip(b).map(|(x, y)| (x - y) * (x - y)).sum::<f64>().sqrt();
    let den: f64 = b.iter().map(|y| y * y).sum::<f64>().sqrt();
    num / den.max(1e-300)
}

pub fn max_rel_err(a: &[f64], b: &[f64]) -> f64 {
    a.iter()
        .zip(b)
        .map(|(x, y)| (x - y).abs() / y.abs().max(1.0))
        .fold(0.0, f64::max)
}
