//! `qus estimate`: parameter maps for each configured method.
//!
//! ```text
//! [estimate]
//! manifest = run/manifest.cfg    # or log_ratio / sample+reference / rf_sample+rf_reference
//! methods = lsq, admm_l1l2
//! lambda1 = 1
//! lambda2 = 1
//! rho = 1
//! weighting = spectra            # none | spectra
//! frames = each                  # each | average
//! ```
//!
//! Writes `{out}/{method}/{a,b,n,alpha,bsc}_fNNN.csv` depth × lateral maps
//! and `{out}/{method}/report.csv` with one row per frame and column.
//! Only the products of `w_a, w_b, w_n` with the λ's matter.

use qus_core::solvers::{estimate_map, EstimatorConfig};

use super::{csv_text, data_weights, estimate_images, Outputs, MAP_NAMES};
use crate::error::{CliError, Result};
use crate::format::{fmt_f64, write_table, GridFile};
use crate::{inputs, settings, Context};

pub const REPORT_KIND: &str = "qus-report v1";
pub const REPORT_COLUMNS: [&str; 9] = [
    "frame",
    "column",
    "lateral(cm)",
    "status",
    "iterations",
    "primal_residual",
    "dual_residual",
    "objective",
    "message",
];

pub fn map_file(method: &str, name: &str, frame: usize) -> String {
    format!("{method}/{name}_f{frame:03}.csv")
}

pub fn run(ctx: &Context) -> Result<()> {
    let sec = ctx.config.section("estimate");
    let methods = settings::methods(&sec, "methods")?;
    let base = settings::estimator(&sec)?;
    let average = match sec.get::<String>("frames", "each".into())?.as_str() {
        "each" => false,
        "average" => true,
        other => return Err(sec.err(sec.line("frames"), format!("frames must be each or average, got '{other}'"))),
    };
    let data = inputs::load(&sec)?;
    let weights = data_weights(&sec, &data)?;
    sec.finish()?;

    let frames = if average {
        vec![data.frame_mean()?]
    } else {
        data.frames.clone()
    };
    let depths = data.depths().to_vec();
    let mut out = Outputs::default();
    let mut reports = Vec::new();
    let mut problems = 0usize;
    for &method in &methods {
        let cfg = EstimatorConfig { method, ..base };
        let mut rows = Vec::new();
        for (k, columns) in frames.iter().enumerate() {
            let est = estimate_map(columns, weights.as_deref(), &cfg)?;
            for (name, img) in MAP_NAMES.iter().zip(estimate_images(&est, depths.len())) {
                out.grid(
                    ctx.out_path(map_file(method.as_str(), name, k)),
                    GridFile::from_image(&img, &depths, &data.laterals),
                );
            }
            for (c, r) in est.columns.iter().enumerate() {
                let mut row = vec![k.to_string(), c.to_string(), fmt_f64(data.laterals[c])];
                match r {
                    Ok(e) => {
                        let rep = &e.report;
                        if !rep.converged {
                            problems += 1;
                            log::warn!("{method}: frame {k}, column {c} stopped at max_iter without converging");
                        }
                        row.extend([
                            if rep.converged { "ok" } else { "unconverged" }.to_string(),
                            rep.iterations.to_string(),
                            fmt_f64(rep.primal_residual),
                            fmt_f64(rep.dual_residual),
                            rep.final_objective().map_or("nan".into(), fmt_f64),
                            String::new(),
                        ]);
                    }
                    Err(e) => {
                        problems += 1;
                        log::warn!("{method}: frame {k}, column {c} failed: {e}");
                        row.extend(["failed", "0", "nan", "nan", "nan"].map(String::from));
                        row.push(csv_text(&e.to_string()));
                    }
                }
                rows.push(row);
            }
        }
        reports.push((method, rows));
    }

    let prov = ctx.provenance();
    out.write(prov)?;
    for (method, rows) in &reports {
        write_table(
            &ctx.out_path(format!("{method}/report.csv")),
            REPORT_KIND,
            prov,
            &REPORT_COLUMNS,
            rows,
        )?;
    }
    if ctx.strict && problems > 0 {
        return Err(CliError::Convergence(format!(
            "{problems} column solve(s) failed or did not converge"
        )));
    }
    Ok(())
}
