//! Estimators for the per-column parameter vector.
//!
//! All solvers minimize a quadratic data term plus first-difference
//! penalties along depth. Two readings of the data term are supported:
//!
//! * [`DataMode::PaperLiteral`]: `½‖Hx − t‖²`, the squared residual of the
//!   normal equations.
//! * [`DataMode::NormalEquations`]: `½xᵀHx − tᵀx`, the weighted
//!   least-squares cost itself (up to a constant).
//!
//! Both share the unregularized minimizer `Hx = t`; the second is better
//! conditioned.

mod admm;
mod closed;
mod estimate;

pub use admm::{admm_l1, admm_l1l2, admm_l2, admm_solve, AdmmOutput};
pub use closed::{solve_l2l2, solve_lsq};
pub use estimate::{
    estimate_column, estimate_map, estimate_map_sequential, ColumnEstimate, EstimatorConfig,
    MapEstimate, Method,
};
#[cfg(feature = "parallel")]
pub use estimate::estimate_map_parallel;

use crate::assembly::{NormalSystem, PenaltyOperator};
use crate::error::{QusError, Result};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum DataMode {
    PaperLiteral,
    NormalEquations,
}

impl DataMode {
    pub fn as_str(&self) -> &'static str {
        match self {
            DataMode::PaperLiteral => "paper_literal",
            DataMode::NormalEquations => "normal_equations",
        }
    }
}

impl std::str::FromStr for DataMode {
    type Err = QusError;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "paper_literal" => Ok(DataMode::PaperLiteral),
            "normal_equations" => Ok(DataMode::NormalEquations),
            _ => Err(QusError::InvalidParameter(format!("unknown data mode '{s}'"))),
        }
    }
}

/// Update rule for squared-L2 split variables.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum ProxVariant {
    /// Exact proximal step `ρ v / (ρ + 2λ)`.
    Derived,
    /// `v / (ρ + λ)`, kept for comparison with the published update.
    PaperLiteral,
}

impl ProxVariant {
    pub fn as_str(&self) -> &'static str {
        match self {
            ProxVariant::Derived => "derived",
            ProxVariant::PaperLiteral => "paper_literal",
        }
    }
}

impl std::str::FromStr for ProxVariant {
    type Err = QusError;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "derived" => Ok(ProxVariant::Derived),
            "paper_literal" => Ok(ProxVariant::PaperLiteral),
            _ => Err(QusError::InvalidParameter(format!("unknown prox variant '{s}'"))),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SolverConfig {
    pub rho: f64,
    /// Strength of the all-L1 penalty.
    pub lambda: f64,
    /// Squared-L2 strength on attenuation differences (mixed penalty).
    pub lambda1: f64,
    /// L1 strength on BSC differences (mixed penalty).
    pub lambda2: f64,
    pub max_iter: usize,
    pub eps_abs: f64,
    pub eps_rel: f64,
    pub data_mode: DataMode,
    pub prox_variant: ProxVariant,
}

impl Default for SolverConfig {
    fn default() -> Self {
        Self {
            rho: 1.0,
            lambda: 0.0,
            lambda1: 0.0,
            lambda2: 0.0,
            max_iter: 5000,
            eps_abs: 1e-6,
            eps_rel: 1e-4,
            data_mode: DataMode::PaperLiteral,
            prox_variant: ProxVariant::Derived,
        }
    }
}

impl SolverConfig {
    pub fn validate(&self) -> Result<()> {
        if !(self.rho.is_finite() && self.rho > 0.0) {
            return Err(QusError::InvalidParameter(format!("rho must be positive, got {}", self.rho)));
        }
        for (name, v) in [("lambda", self.lambda), ("lambda1", self.lambda1), ("lambda2", self.lambda2)] {
            if !(v.is_finite() && v >= 0.0) {
                return Err(QusError::InvalidParameter(format!("{name} must be nonnegative, got {v}")));
            }
        }
        if !(self.eps_abs > 0.0 && self.eps_rel > 0.0) {
            return Err(QusError::InvalidParameter("tolerances must be positive".into()));
        }
        if self.max_iter == 0 {
            return Err(QusError::InvalidParameter("max_iter must be positive".into()));
        }
        Ok(())
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct SolveReport {
    pub iterations: usize,
    pub primal_residual: f64,
    pub dual_residual: f64,
    pub objective_trace: Vec<f64>,
    pub converged: bool,
    pub data_mode: DataMode,
}

impl SolveReport {
    /// Report for a closed-form solve: one "iteration", exact optimality.
    pub(crate) fn direct(objective: f64, data_mode: DataMode) -> Self {
        Self {
            iterations: 1,
            primal_residual: 0.0,
            dual_residual: 0.0,
            objective_trace: vec![objective],
            converged: true,
            data_mode,
        }
    }

    pub fn final_objective(&self) -> Option<f64> {
        self.objective_trace.last().copied()
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Norm {
    L1,
    /// Squared L2.
    L2,
}

/// Penalty norm and strength for one parameter's difference block.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct BlockPenalty {
    pub norm: Norm,
    pub lambda: f64,
}

/// Norm configuration for the three blocks `(a, b, n)` of `K x`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct PenaltyPlan {
    pub blocks: [BlockPenalty; 3],
}

impl PenaltyPlan {
    pub fn all_l1(lambda: f64) -> Self {
        Self {
            blocks: [BlockPenalty { norm: Norm::L1, lambda }; 3],
        }
    }

    pub fn all_l2(lambda: f64) -> Self {
        Self {
            blocks: [BlockPenalty { norm: Norm::L2, lambda }; 3],
        }
    }

    /// Squared L2 on attenuation, L1 on the BSC parameters.
    pub fn mixed(lambda1: f64, lambda2: f64) -> Self {
        Self {
            blocks: [
                BlockPenalty { norm: Norm::L2, lambda: lambda1 },
                BlockPenalty { norm: Norm::L1, lambda: lambda2 },
                BlockPenalty { norm: Norm::L1, lambda: lambda2 },
            ],
        }
    }

    pub fn none() -> Self {
        Self::all_l2(0.0)
    }
}

/// `sgn(v) · max(|v| − κ, 0)` element-wise.
pub fn soft_threshold(v: &[f64], kappa: f64) -> Vec<f64> {
    assert!(kappa >= 0.0, "threshold must be nonnegative");
    v.iter().map(|&x| soft(x, kappa)).collect()
}

#[inline]
pub(crate) fn soft(x: f64, kappa: f64) -> f64 {
    if x > kappa {
        x - kappa
    } else if x < -kappa {
        x + kappa
    } else {
        0.0
    }
}

pub(crate) fn norm2(v: &[f64]) -> f64 {
    v.iter().map(|x| x * x).sum::<f64>().sqrt()
}

/// Value of the data term alone.
pub fn data_term(x: &[f64], sys: &NormalSystem, mode: DataMode) -> f64 {
    let hx = sys.apply(x);
    let t = sys.t();
    match mode {
        DataMode::PaperLiteral => 0.5 * hx.iter().zip(&t).map(|(a, b)| (a - b) * (a - b)).sum::<f64>(),
        DataMode::NormalEquations => {
            0.5 * x.iter().zip(&hx).map(|(a, b)| a * b).sum::<f64>() - x.iter().zip(&t).map(|(a, b)| a * b).sum::<f64>()
        }
    }
}

/// Data term plus the configured penalties, with `s = K x`.
pub fn objective(x: &[f64], sys: &NormalSystem, k: &PenaltyOperator, plan: &PenaltyPlan, mode: DataMode) -> Result<f64> {
    if x.len() != sys.dim() || k.n_depths() != sys.n_depths() {
        return Err(QusError::Dimension(format!(
            "x has {} entries, system has {}, penalty has {} depths",
            x.len(),
            sys.dim(),
            k.n_depths()
        )));
    }
    let kx = k.apply(x);
    let penalty: f64 = (0..3)
        .map(|p| {
            let BlockPenalty { norm, lambda } = plan.blocks[p];
            let block = &kx[k.block_rows(p)];
            match norm {
                Norm::L1 => lambda * block.iter().map(|v| v.abs()).sum::<f64>(),
                Norm::L2 => lambda * block.iter().map(|v| v * v).sum::<f64>(),
            }
        })
        .sum();
    Ok(data_term(x, sys, mode) + penalty)
}

/// Gradient of the data term.
pub fn data_gradient(x: &[f64], sys: &NormalSystem, mode: DataMode) -> Vec<f64> {
    let hx = sys.apply(x);
    let t = sys.t();
    let r: Vec<f64> = hx.iter().zip(&t).map(|(a, b)| a - b).collect();
    match mode {
        DataMode::PaperLiteral => sys.apply(&r),
        DataMode::NormalEquations => r,
    }
}

/// Smallest `‖∇q(x) + Kᵀg‖` over subgradients `g` of the penalty at `x`.
///
/// On L1 blocks `g_j = λ sgn(s_j)` wherever the split variable `s_j` is
/// nonzero and `g_j ∈ [−λ, λ]` is optimized (by coordinate descent)
/// wherever it is exactly zero; on L2 blocks `g = 2λ K x`.
pub fn stationarity_residual(
    x: &[f64],
    s: &[f64],
    sys: &NormalSystem,
    k: &PenaltyOperator,
    plan: &PenaltyPlan,
    mode: DataMode,
) -> f64 {
    let kx = k.apply(x);
    let mut g = vec![0.0; k.rows()];
    let mut free = Vec::new();
    for p in 0..3 {
        let BlockPenalty { norm, lambda } = plan.blocks[p];
        for j in k.block_rows(p) {
            match norm {
                Norm::L2 => g[j] = 2.0 * lambda * kx[j],
                Norm::L1 if s[j] != 0.0 => g[j] = lambda * s[j].signum(),
                Norm::L1 => free.push((j, lambda)),
            }
        }
    }
    let grad = data_gradient(x, sys, mode);
    let mut r: Vec<f64> = grad.iter().zip(k.apply_transpose(&g)).map(|(a, b)| a + b).collect();
    if free.is_empty() {
        return norm2(&r);
    }
    // columns of Kᵀ for the free entries: two nonzeros each
    let n = k.n_depths();
    let m = n - 1;
    let w = k.weights();
    let column = |j: usize| {
        let p = j / m;
        let row = j % m;
        [(p * n + row, w[p]), (p * n + row + 1, -w[p])]
    };
    for _ in 0..20_000 {
        let mut change = 0.0f64;
        for &(j, lambda) in &free {
            let col = column(j);
            let cc: f64 = col.iter().map(|(_, v)| v * v).sum();
            if cc == 0.0 {
                continue;
            }
            // remove current contribution, minimize over g_j, add back
            let dot: f64 = col.iter().map(|&(idx, v)| v * r[idx]).sum();
            let target = g[j] - dot / cc;
            let new = target.clamp(-lambda, lambda);
            let delta = new - g[j];
            if delta != 0.0 {
                for &(idx, v) in &col {
                    r[idx] += v * delta;
                }
                g[j] = new;
                change = change.max(delta.abs());
            }
        }
        if change < 1e-14 {
            break;
        }
    }
    norm2(&r)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn soft_threshold_examples() {
        assert_eq!(soft_threshold(&[2.0, -0.5, 0.0], 1.0), vec![1.0, 0.0, 0.0]);
        let v = [1.5, -2.0, 0.3];
        assert_eq!(soft_threshold(&v, 0.0), v.to_vec());
        assert_eq!(soft_threshold(&[1.0, -1.0], 1.0), vec![0.0, 0.0]);
        assert_eq!(soft_threshold(&[-3.0], 1.0), vec![-2.0]);
    }

    #[test]
    fn mode_parsing() {
        assert_eq!("paper_literal".parse::<DataMode>().unwrap(), DataMode::PaperLiteral);
        assert_eq!("derived".parse::<ProxVariant>().unwrap(), ProxVariant::Derived);
        assert!("foo".parse::<DataMode>().is_err());
    }

    #[test]
    fn config_validation() {
        assert!(SolverConfig::default().validate().is_ok());
        assert!(SolverConfig { rho: 0.0, ..Default::default() }.validate().is_err());
        assert!(SolverConfig { lambda2: -1.0, ..Default::default() }.validate().is_err());
    }
}
