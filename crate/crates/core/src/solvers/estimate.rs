use crate::assembly::{build_normal_system, build_penalty};
use crate::error::{QusError, Result};
use crate::metrics::Image;
use crate::model::{reconstruct, LogRatioMap, ParamColumn, ReferenceCalibration, TissueField};
use crate::weighting::WeightMap;

use super::{admm_solve, objective, solve_lsq, PenaltyPlan, SolveReport, SolverConfig};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum Method {
    Lsq,
    L2L2,
    AdmmL1,
    AdmmL1L2,
    /// ADMM with squared-L2 differences on all parameters.
    AdmmL2,
}

impl Method {
    pub const ALL: [Method; 5] = [Method::Lsq, Method::L2L2, Method::AdmmL1, Method::AdmmL1L2, Method::AdmmL2];

    pub fn as_str(&self) -> &'static str {
        match self {
            Method::Lsq => "lsq",
            Method::L2L2 => "l2l2",
            Method::AdmmL1 => "admm_l1",
            Method::AdmmL1L2 => "admm_l1l2",
            Method::AdmmL2 => "admm_l2",
        }
    }

    fn plan(&self, cfg: &SolverConfig) -> PenaltyPlan {
        match self {
            Method::Lsq => PenaltyPlan::none(),
            Method::L2L2 | Method::AdmmL2 => PenaltyPlan::all_l2(cfg.lambda),
            Method::AdmmL1 => PenaltyPlan::all_l1(cfg.lambda),
            Method::AdmmL1L2 => PenaltyPlan::mixed(cfg.lambda1, cfg.lambda2),
        }
    }
}

impl std::fmt::Display for Method {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(self.as_str())
    }
}

impl std::str::FromStr for Method {
    type Err = QusError;

    fn from_str(s: &str) -> Result<Self> {
        Method::ALL
            .into_iter()
            .find(|m| m.as_str() == s)
            .ok_or_else(|| QusError::InvalidParameter(format!("unknown solver '{s}'")))
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct EstimatorConfig {
    pub method: Method,
    pub solver: SolverConfig,
    /// Difference-penalty weights `(w_a, w_b, w_n)`; only their products
    /// with the λ's matter.
    pub penalty_weights: [f64; 3],
    pub calibration: ReferenceCalibration,
    /// Frequency (MHz) at which the BSC map is reported.
    pub center_freq: f64,
}

impl Default for EstimatorConfig {
    fn default() -> Self {
        Self {
            method: Method::AdmmL1L2,
            solver: SolverConfig::default(),
            penalty_weights: [1.0; 3],
            calibration: ReferenceCalibration::default(),
            center_freq: 8.0,
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct ColumnEstimate {
    pub params: ParamColumn,
    pub field: TissueField,
    /// BSC at the configured center frequency, per depth.
    pub bsc_center: Vec<f64>,
    pub report: SolveReport,
}

/// Solves one lateral column with the configured estimator.
pub fn estimate_column(x: &LogRatioMap, weights: Option<&WeightMap>, cfg: &EstimatorConfig) -> Result<ColumnEstimate> {
    cfg.solver.validate()?;
    let sys = build_normal_system(x, weights)?;
    let n = sys.n_depths();
    let [w_a, w_b, w_n] = cfg.penalty_weights;
    let plan = cfg.method.plan(&cfg.solver);
    let mode = cfg.solver.data_mode;
    let (params, report) = match cfg.method {
        Method::Lsq => {
            let p = solve_lsq(&sys)?;
            let obj = if n >= 2 {
                objective(&p.to_stacked(), &sys, &build_penalty(w_a, w_b, w_n, n, false)?, &plan, mode)?
            } else {
                super::data_term(&p.to_stacked(), &sys, mode)
            };
            (p, SolveReport::direct(obj, mode))
        }
        Method::L2L2 => {
            let k = build_penalty(w_a, w_b, w_n, n, false)?;
            let p = super::solve_l2l2(&sys, &k, cfg.solver.lambda, mode)?;
            let obj = objective(&p.to_stacked(), &sys, &k, &plan, mode)?;
            (p, SolveReport::direct(obj, mode))
        }
        Method::AdmmL1 | Method::AdmmL1L2 | Method::AdmmL2 => {
            let k = build_penalty(w_a, w_b, w_n, n, cfg.method == Method::AdmmL1L2)?;
            let out = admm_solve(&sys, &k, &plan, &cfg.solver)?;
            (out.params, out.report)
        }
    };
    let field = reconstruct(&params, &cfg.calibration);
    let bsc_center = field.bsc_at(cfg.center_freq);
    Ok(ColumnEstimate {
        params,
        field,
        bsc_center,
        report,
    })
}

/// Per-column results of a map estimate, ordered by column index.
///
/// A failed column does not abort the map; its error is kept in place.
#[derive(Debug, Clone)]
pub struct MapEstimate {
    pub columns: Vec<Result<ColumnEstimate>>,
}

impl MapEstimate {
    pub fn n_columns(&self) -> usize {
        self.columns.len()
    }

    pub fn failures(&self) -> Vec<(usize, &QusError)> {
        self.columns
            .iter()
            .enumerate()
            .filter_map(|(c, r)| r.as_ref().err().map(|e| (c, e)))
            .collect()
    }

    /// Indices of columns that solved but hit `max_iter`.
    pub fn unconverged(&self) -> Vec<usize> {
        self.columns
            .iter()
            .enumerate()
            .filter_map(|(c, r)| match r {
                Ok(est) if !est.report.converged => Some(c),
                _ => None,
            })
            .collect()
    }

    /// Depth × lateral image of a per-column quantity; failed columns are
    /// filled with NaN.
    pub fn image(&self, n_depths: usize, f: impl Fn(&ColumnEstimate) -> Vec<f64>) -> Image {
        let profiles: Vec<Vec<f64>> = self
            .columns
            .iter()
            .map(|r| match r {
                Ok(est) => {
                    let mut v = f(est);
                    v.resize(n_depths, f64::NAN);
                    v
                }
                Err(_) => vec![f64::NAN; n_depths],
            })
            .collect();
        Image::from_fn(n_depths, profiles.len(), |i, c| profiles[c][i])
    }
}

fn check_inputs(columns: &[LogRatioMap], weights: Option<&[WeightMap]>) -> Result<()> {
    if columns.is_empty() {
        return Err(QusError::Empty("no columns to estimate".into()));
    }
    let g = columns[0].grid();
    if let Some(c) = columns.iter().position(|x| x.grid() != g) {
        return Err(QusError::Dimension(format!("column {c} has a different grid than column 0")));
    }
    if let Some(w) = weights {
        if w.len() != columns.len() {
            return Err(QusError::Dimension(format!(
                "{} weight maps for {} columns",
                w.len(),
                columns.len()
            )));
        }
    }
    Ok(())
}

/// Solves every column one after another.
pub fn estimate_map_sequential(
    columns: &[LogRatioMap],
    weights: Option<&[WeightMap]>,
    cfg: &EstimatorConfig,
) -> Result<MapEstimate> {
    check_inputs(columns, weights)?;
    let columns = columns
        .iter()
        .enumerate()
        .map(|(c, x)| estimate_column(x, weights.map(|w| &w[c]), cfg))
        .collect();
    Ok(MapEstimate { columns })
}

/// Solves columns on the rayon pool; output order follows column index.
#[cfg(feature = "parallel")]
pub fn estimate_map_parallel(
    columns: &[LogRatioMap],
    weights: Option<&[WeightMap]>,
    cfg: &EstimatorConfig,
) -> Result<MapEstimate> {
    use rayon::prelude::*;
    check_inputs(columns, weights)?;
    let columns = columns
        .par_iter()
        .enumerate()
        .map(|(c, x)| estimate_column(x, weights.map(|w| &w[c]), cfg))
        .collect();
    Ok(MapEstimate { columns })
}

/// Solves each lateral column independently, in parallel when the
/// `parallel` feature is enabled.
pub fn estimate_map(columns: &[LogRatioMap], weights: Option<&[WeightMap]>, cfg: &EstimatorConfig) -> Result<MapEstimate> {
    #[cfg(feature = "parallel")]
    {
        estimate_map_parallel(columns, weights, cfg)
    }
    #[cfg(not(feature = "parallel"))]
    {
        estimate_map_sequential(columns, weights, cfg)
    }
}
