//! `qus evaluate`: bias and variance of estimated maps inside ROIs.
//!
//! ```text
//! [evaluate]
//! manifest = run/manifest.cfg    # truth maps; or truth_alpha + truth_bsc
//! estimates = est                # output directory of `estimate`
//! methods = lsq, admm_l1l2
//! roi = top, 0.5, 1.5, 0, 4      # name, z0, z1, x0, x1 (cm, inclusive)
//! roi = bottom, 2.5, 4, 0, 4
//! variance_mode = roi_cells      # roi_cells | across_frames
//! ```
//!
//! Attenuation metrics are in dB/cm/MHz, BSC metrics in dB re 10⁻⁴. Rows
//! follow method, ROI, parameter, metric order.

use std::path::{Path, PathBuf};

use qus_core::metrics::{evaluate_rois, Image, RoiSpec, VarianceMode};

use super::estimate::map_file;
use crate::config::SectionReader;
use crate::error::{CliError, Result};
use crate::format::{fmt_f64, write_table, GridFile, MAP_KIND};
use crate::{settings, Context};

pub const METRICS_KIND: &str = "qus-metrics v1";
pub const METRICS_COLUMNS: [&str; 5] = ["method", "roi", "parameter", "metric", "value"];

fn read_image(path: &Path) -> Result<(GridFile, Image)> {
    let g = GridFile::read(path, MAP_KIND)?;
    let img = g.to_image(path)?;
    Ok((g, img))
}

/// All frames `{name}_f000.csv, {name}_f001.csv, ...` of one method.
fn read_frames(dir: &Path, method: &str, name: &str) -> Result<Vec<Image>> {
    let mut frames = Vec::new();
    loop {
        let path = dir.join(map_file(method, name, frames.len()));
        if !path.exists() {
            break;
        }
        frames.push(read_image(&path)?.1);
    }
    if frames.is_empty() {
        return Err(CliError::MissingPath(dir.join(map_file(method, name, 0))));
    }
    Ok(frames)
}

fn truth_paths(sec: &SectionReader<'_>) -> Result<(PathBuf, PathBuf)> {
    if let Some(manifest) = sec.input_path("manifest")? {
        for key in ["truth_alpha", "truth_bsc"] {
            if sec.line(key) > 0 {
                return Err(sec.err(sec.line(key), format!("'{key}' conflicts with 'manifest'")));
            }
        }
        let dir = manifest.parent().unwrap_or(Path::new("")).to_path_buf();
        return Ok((dir.join("truth_alpha.csv"), dir.join("truth_bsc.csv")));
    }
    let need = |key: &str| {
        sec.input_path(key)?
            .ok_or_else(|| sec.err(0, format!("set 'manifest' or both 'truth_alpha' and 'truth_bsc' (missing '{key}')")))
    };
    Ok((need("truth_alpha")?, need("truth_bsc")?))
}

/// Index range of the axis values inside `[lo, hi]`.
fn index_range(axis: &[f64], lo: f64, hi: f64) -> Option<std::ops::Range<usize>> {
    let first = axis.iter().position(|&v| v >= lo)?;
    let last = axis.iter().rposition(|&v| v <= hi)?;
    (first <= last).then_some(first..last + 1)
}

fn rois(sec: &SectionReader<'_>, depths: &[f64], laterals: &[f64]) -> Result<Vec<RoiSpec>> {
    let lines = sec.all("roi");
    if lines.is_empty() {
        return Ok(vec![RoiSpec::new("all", 0..depths.len(), 0..laterals.len())]);
    }
    let mut out: Vec<RoiSpec> = Vec::new();
    for (v, line) in lines {
        let parts: Vec<&str> = v.split(',').map(str::trim).collect();
        let [name, rest @ ..] = parts.as_slice() else { unreachable!() };
        let nums = crate::config::parse_list(&rest.join(",")).map_err(|m| sec.err(line, format!("roi: {m}")))?;
        let [z0, z1, x0, x1] = nums[..] else {
            return Err(sec.err(line, "roi takes name, z0, z1, x0, x1"));
        };
        if name.is_empty() || out.iter().any(|r| r.name == *name) {
            return Err(sec.err(line, format!("roi names must be unique and nonempty, got '{name}'")));
        }
        let d = index_range(depths, z0.min(z1), z0.max(z1));
        let l = index_range(laterals, x0.min(x1), x0.max(x1));
        match (d, l) {
            (Some(d), Some(l)) => out.push(RoiSpec::new(*name, d, l)),
            _ => return Err(sec.err(line, format!("roi '{name}' contains no map cells"))),
        }
    }
    Ok(out)
}

pub fn run(ctx: &Context) -> Result<()> {
    let sec = ctx.config.section("evaluate");
    let methods = settings::methods(&sec, "methods")?;
    let mode: VarianceMode = sec.get("variance_mode", VarianceMode::default())?;
    let (alpha_path, bsc_path) = truth_paths(&sec)?;
    let estimates = sec
        .input_path("estimates")?
        .ok_or_else(|| sec.err(0, "missing required key 'estimates'"))?;
    let (grid, gt_alpha) = read_image(&alpha_path)?;
    let (_, gt_bsc) = read_image(&bsc_path)?;
    let rois = rois(&sec, &grid.rows, &grid.cols)?;
    sec.finish()?;

    let mut rows = Vec::new();
    for method in methods {
        let m = method.as_str();
        let alpha = read_frames(&estimates, m, "alpha")?;
        let bsc = read_frames(&estimates, m, "bsc")?;
        let report = evaluate_rois(&alpha, &bsc, &gt_alpha, &gt_bsc, &rois, mode)?;
        for r in &report.rois {
            for (param, bias, var) in [("alpha", r.bias_alpha, r.var_alpha), ("bsc_db", r.bias_bsc_db, r.var_bsc_db)] {
                for (metric, value) in [("bias", bias), ("variance", var)] {
                    rows.push(vec![m.to_string(), r.name.clone(), param.into(), metric.into(), fmt_f64(value)]);
                }
            }
        }
    }
    write_table(
        &ctx.out_path("metrics.csv"),
        METRICS_KIND,
        ctx.provenance(),
        &METRICS_COLUMNS,
        &rows,
    )
}
