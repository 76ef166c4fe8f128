//! `qus sweep`: regularization-weight ladder with a doubling check.
//!
//! ```text
//! [sweep]
//! manifest = run/manifest.cfg
//! method = admm_l1l2
//! ladder = 0.1, 10, 100, 1e3, 1e4, 1e5, 1e6, 1e7, 1e8
//! small_tol = 0.01          # too small: relative Frobenius change vs LSQ
//! constant_tol = 0.01       # too large: depth spread vs LSQ dynamic range
//! stable_tol = 0.05         # doubling check
//! doubling = true
//! scale_rho = true          # use rho · max(1, weight) for each solve
//! ```
//!
//! Each ladder weight sets every λ the method uses. At a fixed ρ, ADMM
//! needs thousands of iterations once the penalty dominates the data term,
//! so by default ρ grows with the weight. Maps are compared per
//! parameter (a, b, n) and the worst parameter decides. The candidate is
//! the middle weight classified `ok`; without one, the geometric midpoint
//! of the largest too-small and smallest too-large weights. The candidate is
//! stable when its maps and those at twice the weight differ by less than
//! `stable_tol`.

use qus_core::metrics::Image;
use qus_core::solvers::{estimate_map, EstimatorConfig, Method};
use qus_core::weighting::WeightMap;
use qus_core::LogRatioMap;

use super::{data_weights, estimate_images};
use crate::error::{CliError, Result};
use crate::format::{fmt_f64, write_table};
use crate::{inputs, settings, Context};

pub const SWEEP_KIND: &str = "qus-sweep v1";
pub const VERDICT_KIND: &str = "qus-verdict v1";
pub const DEFAULT_LADDER: [f64; 9] = [0.1, 10.0, 1e2, 1e3, 1e4, 1e5, 1e6, 1e7, 1e8];

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Class {
    TooSmall,
    Ok,
    TooLarge,
}

impl Class {
    pub fn as_str(&self) -> &'static str {
        match self {
            Class::TooSmall => "too_small",
            Class::Ok => "ok",
            Class::TooLarge => "too_large",
        }
    }
}

/// `a, b, n` maps of one solve.
struct Solved {
    maps: [Image; 3],
    max_iterations: usize,
    converged: bool,
}

struct Problem<'a> {
    columns: &'a [LogRatioMap],
    weights: Option<&'a [WeightMap]>,
    base: EstimatorConfig,
    n_depths: usize,
    scale_rho: bool,
}

impl Problem<'_> {
    fn solve(&self, method: Method, w: f64) -> Result<Solved> {
        let mut cfg = EstimatorConfig { method, ..self.base };
        cfg.solver.lambda = w;
        cfg.solver.lambda1 = w;
        cfg.solver.lambda2 = w;
        if self.scale_rho {
            cfg.solver.rho *= w.max(1.0);
        }
        let est = estimate_map(self.columns, self.weights, &cfg)?;
        if let Some((c, e)) = est.failures().first() {
            return Err(CliError::Data(qus_core::QusError::InvalidParameter(format!(
                "{method} at weight {w}: column {c} failed: {e}"
            ))));
        }
        let [a, b, n, _, _] = estimate_images(&est, self.n_depths);
        let reports = est.columns.iter().filter_map(|r| r.as_ref().ok()).map(|e| &e.report);
        let (mut max_iterations, mut converged) = (0, true);
        for r in reports {
            max_iterations = max_iterations.max(r.iterations);
            converged &= r.converged;
        }
        Ok(Solved {
            maps: [a, b, n],
            max_iterations,
            converged,
        })
    }
}

fn frobenius(v: impl Iterator<Item = f64>) -> f64 {
    v.map(|x| x * x).sum::<f64>().sqrt()
}

/// Worst relative Frobenius difference over parameters; an all-zero
/// reference map falls back to the absolute difference.
pub fn relative_difference(m: &[Image; 3], reference: &[Image; 3]) -> f64 {
    m.iter()
        .zip(reference)
        .map(|(x, r)| {
            let diff = frobenius(x.values().iter().zip(r.values()).map(|(a, b)| a - b));
            let norm = frobenius(r.values().iter().copied());
            if norm > 0.0 {
                diff / norm
            } else {
                diff
            }
        })
        .fold(0.0, f64::max)
}

fn range(v: &[f64]) -> f64 {
    let (lo, hi) = v.iter().fold((f64::INFINITY, f64::NEG_INFINITY), |(lo, hi), &x| (lo.min(x), hi.max(x)));
    hi - lo
}

/// Worst per-column depth spread of each parameter, relative to the
/// dynamic range of the reference map of that parameter.
pub fn depth_spread(m: &[Image; 3], reference: &[Image; 3]) -> f64 {
    m.iter()
        .zip(reference)
        .map(|(x, r)| {
            let spread = (0..x.n_laterals())
                .map(|c| range(&(0..x.n_depths()).map(|i| x.get(i, c)).collect::<Vec<_>>()))
                .fold(0.0, f64::max);
            let dynamic = range(r.values());
            if dynamic > 0.0 {
                spread / dynamic
            } else if spread > 0.0 {
                f64::INFINITY
            } else {
                0.0
            }
        })
        .fold(0.0, f64::max)
}

pub fn classify(rel_diff_lsq: f64, spread: f64, small_tol: f64, constant_tol: f64) -> Class {
    if rel_diff_lsq < small_tol {
        Class::TooSmall
    } else if spread < constant_tol {
        Class::TooLarge
    } else {
        Class::Ok
    }
}

/// Middle `ok` weight, else the geometric midpoint between the largest
/// too-small and the smallest too-large weight above it.
pub fn candidate(ladder: &[f64], classes: &[Class]) -> Option<f64> {
    let ok: Vec<f64> = ladder.iter().zip(classes).filter(|(_, c)| **c == Class::Ok).map(|(w, _)| *w).collect();
    if !ok.is_empty() {
        return Some(ok[(ok.len() - 1) / 2]);
    }
    let small = ladder.iter().zip(classes).filter(|(_, c)| **c == Class::TooSmall).map(|(w, _)| *w).next_back()?;
    let large = ladder
        .iter()
        .zip(classes)
        .find(|(w, c)| **c == Class::TooLarge && **w > small)
        .map(|(w, _)| *w)?;
    Some((small * large).sqrt())
}

pub fn run(ctx: &Context) -> Result<()> {
    let sec = ctx.config.section("sweep");
    let method: Method = match sec.words("method")?.as_deref() {
        None => Method::AdmmL1L2,
        Some([one]) => one.parse().map_err(|e: qus_core::QusError| sec.err(sec.line("method"), e.to_string()))?,
        Some(_) => return Err(sec.err(sec.line("method"), "sweep takes a single method")),
    };
    if method == Method::Lsq {
        return Err(sec.err(sec.line("method"), "lsq has no regularization weight to sweep"));
    }
    let ladder = sec.list("ladder")?.unwrap_or_else(|| DEFAULT_LADDER.to_vec());
    if ladder.is_empty() || ladder.iter().any(|w| !(*w > 0.0 && w.is_finite())) || ladder.windows(2).any(|p| p[1] <= p[0]) {
        return Err(sec.err(sec.line("ladder"), "ladder must be nonempty, positive and strictly increasing"));
    }
    let small_tol: f64 = sec.get("small_tol", 0.01)?;
    let constant_tol: f64 = sec.get("constant_tol", 0.01)?;
    let stable_tol: f64 = sec.get("stable_tol", 0.05)?;
    let doubling: bool = sec.get("doubling", true)?;
    let scale_rho: bool = sec.get("scale_rho", true)?;
    let base = settings::estimator(&sec)?;
    let data = inputs::load(&sec)?;
    let weights = data_weights(&sec, &data)?;
    sec.finish()?;

    let columns = data.frame_mean()?;
    let problem = Problem {
        columns: &columns,
        weights: weights.as_deref(),
        base,
        n_depths: data.depths().len(),
        scale_rho,
    };
    let lsq = problem.solve(Method::Lsq, 0.0)?;
    let mut rows = vec![vec![
        fmt_f64(0.0),
        "lsq_anchor".to_string(),
        fmt_f64(0.0),
        fmt_f64(depth_spread(&lsq.maps, &lsq.maps)),
        lsq.max_iterations.to_string(),
        lsq.converged.to_string(),
    ]];
    let mut classes = Vec::with_capacity(ladder.len());
    let mut all_converged = true;
    for &w in &ladder {
        let s = problem.solve(method, w)?;
        let rel = relative_difference(&s.maps, &lsq.maps);
        let spread = depth_spread(&s.maps, &lsq.maps);
        let class = classify(rel, spread, small_tol, constant_tol);
        all_converged &= s.converged;
        classes.push(class);
        rows.push(vec![
            fmt_f64(w),
            class.as_str().to_string(),
            fmt_f64(rel),
            fmt_f64(spread),
            s.max_iterations.to_string(),
            s.converged.to_string(),
        ]);
    }

    let pick = candidate(&ladder, &classes);
    let verdict = match (pick, doubling) {
        (None, _) => vec!["nan".into(), "nan".into(), "nan".into(), "none".into()],
        (Some(w), false) => vec![fmt_f64(w), "nan".into(), "nan".into(), "unchecked".into()],
        (Some(w), true) => {
            let at = problem.solve(method, w)?;
            let twice = problem.solve(method, 2.0 * w)?;
            all_converged &= at.converged && twice.converged;
            let rel = relative_difference(&twice.maps, &at.maps);
            let v = if rel < stable_tol { "stable" } else { "unstable" };
            vec![fmt_f64(w), fmt_f64(2.0 * w), fmt_f64(rel), v.into()]
        }
    };

    let prov = ctx.provenance();
    write_table(
        &ctx.out_path("sweep.csv"),
        SWEEP_KIND,
        prov,
        &["weight", "class", "rel_diff_lsq", "depth_spread", "max_iterations", "converged"],
        &rows,
    )?;
    write_table(
        &ctx.out_path("verdict.csv"),
        VERDICT_KIND,
        prov,
        &["candidate", "doubled", "rel_diff", "verdict"],
        &[verdict],
    )?;
    if !all_converged {
        if ctx.strict {
            return Err(CliError::Convergence("some sweep solves did not converge".into()));
        }
        log::warn!("some sweep solves stopped at max_iter without converging");
    }
    Ok(())
}
