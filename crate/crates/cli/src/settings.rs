//! Typed settings shared by several commands.

use qus_core::model::{linspace, ReferenceCalibration};
use qus_core::solvers::{DataMode, EstimatorConfig, Method, ProxVariant, SolverConfig};
use qus_core::weighting::{CombineMode, WeightConfig};

use crate::config::SectionReader;
use crate::error::Result;

/// Settings the core library rejects are configuration errors here.
fn invalid<T>(sec: &SectionReader<'_>, key: &str, r: qus_core::Result<T>) -> Result<T> {
    r.map_err(|e| sec.err(sec.line(key), e.to_string()))
}

/// `key = alpha0_r, beta_r, nu_r`; defaults to the Gammex 410SCG values.
pub fn calibration(sec: &SectionReader<'_>) -> Result<ReferenceCalibration> {
    match sec.list("calibration")? {
        None => Ok(ReferenceCalibration::gammex_410scg()),
        Some(v) if v.len() == 3 => invalid(sec, "calibration", ReferenceCalibration::new(v[0], v[1], v[2])),
        Some(_) => Err(sec.err(sec.line("calibration"), "calibration takes alpha0_r, beta_r, nu_r")),
    }
}

pub type AxisSpec = (f64, f64, usize);

/// `key = start, end, count`, both ends inclusive.
pub fn axis_spec(sec: &SectionReader<'_>, key: &str, default: AxisSpec) -> Result<AxisSpec> {
    match sec.list(key)? {
        None => Ok(default),
        Some(v) if v.len() == 3 && v[2] >= 1.0 && v[2].fract() == 0.0 => Ok((v[0], v[1], v[2] as usize)),
        Some(_) => Err(sec.err(sec.line(key), format!("{key} takes start, end, count"))),
    }
}

pub fn axis(sec: &SectionReader<'_>, key: &str, default: AxisSpec) -> Result<Vec<f64>> {
    let (a, b, n) = axis_spec(sec, key, default)?;
    Ok(linspace(a, b, n))
}

pub fn solver(sec: &SectionReader<'_>) -> Result<SolverConfig> {
    let d = SolverConfig::default();
    let cfg = SolverConfig {
        rho: sec.get("rho", d.rho)?,
        lambda: sec.get("lambda", d.lambda)?,
        lambda1: sec.get("lambda1", d.lambda1)?,
        lambda2: sec.get("lambda2", d.lambda2)?,
        max_iter: sec.get("max_iter", d.max_iter)?,
        eps_abs: sec.get("eps_abs", d.eps_abs)?,
        eps_rel: sec.get("eps_rel", d.eps_rel)?,
        data_mode: sec.get::<DataMode>("data_mode", d.data_mode)?,
        prox_variant: sec.get::<ProxVariant>("prox_variant", d.prox_variant)?,
    };
    invalid(sec, "", cfg.validate())?;
    Ok(cfg)
}

/// Estimator settings except the method. Only the products of the penalty
/// weights `w_a, w_b, w_n` with the λ's matter.
pub fn estimator(sec: &SectionReader<'_>) -> Result<EstimatorConfig> {
    let d = EstimatorConfig::default();
    Ok(EstimatorConfig {
        method: d.method,
        solver: solver(sec)?,
        penalty_weights: [
            sec.get("w_a", d.penalty_weights[0])?,
            sec.get("w_b", d.penalty_weights[1])?,
            sec.get("w_n", d.penalty_weights[2])?,
        ],
        calibration: calibration(sec)?,
        center_freq: sec.get("center_freq", d.center_freq)?,
    })
}

pub fn methods(sec: &SectionReader<'_>, key: &str) -> Result<Vec<Method>> {
    let words = sec.words(key)?.unwrap_or_else(|| vec![Method::AdmmL1L2.as_str().to_string()]);
    let mut out = Vec::new();
    for w in words {
        let m: Method = invalid(sec, key, w.parse())?;
        if !out.contains(&m) {
            out.push(m);
        }
    }
    Ok(out)
}

pub fn weight_config(sec: &SectionReader<'_>) -> Result<WeightConfig> {
    let d = WeightConfig::default();
    let combine_mode = match sec.opt::<String>("combine_mode")?.as_deref() {
        None | Some("both") => CombineMode::Both,
        Some("reference_only") => CombineMode::ReferenceOnly,
        Some(other) => return Err(sec.err(sec.line("combine_mode"), format!("combine_mode must be both or reference_only, got '{other}'"))),
    };
    let cfg = WeightConfig {
        band_fraction: sec.get("band_fraction", d.band_fraction)?,
        upper_fraction: sec.get("upper_fraction", d.upper_fraction)?,
        lower_fraction: sec.get("lower_fraction", d.lower_fraction)?,
        floor: sec.get("floor", d.floor)?,
        combine_mode,
    };
    invalid(sec, "", cfg.validate())?;
    Ok(cfg)
}
