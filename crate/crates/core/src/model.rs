//! Domain types and the forward physics of the reference phantom method.
//!
//! Units: frequencies in MHz, depths in cm. Attenuation is carried
//! internally in Np·cm⁻¹·MHz⁻¹ and converted to dB·cm⁻¹·MHz⁻¹ only at the
//! boundaries (reports, calibration constants, file I/O).
//!
//! The log of the sample/reference spectral ratio is linear in the unknowns
//! `a`, `b`, `n` at each depth:
//!
//! ```text
//! X(f, z) = -4 a(z) f z + b(z) + n(z) ln f
//! ```

use crate::error::{QusError, Result};

/// Nepers per decibel, `ln(10) / 20`.
pub const NP_PER_DB: f64 = std::f64::consts::LN_10 / 20.0;

pub fn db_to_np(alpha_db: f64) -> f64 {
    alpha_db * NP_PER_DB
}

pub fn np_to_db(alpha_np: f64) -> f64 {
    alpha_np / NP_PER_DB
}

/// Frequency bins (MHz) and depth positions (cm) over which spectra,
/// log ratios and weights are indexed.
#[derive(Debug, Clone, PartialEq)]
pub struct SpectralGrid {
    freqs: Vec<f64>,
    depths: Vec<f64>,
}

fn check_axis(name: &str, values: &[f64]) -> Result<()> {
    if values.len() < 2 {
        return Err(QusError::InvalidGrid(format!(
            "{name} needs at least 2 entries, got {}",
            values.len()
        )));
    }
    if let Some(v) = values.iter().find(|v| !(v.is_finite() && **v > 0.0)) {
        return Err(QusError::InvalidGrid(format!(
            "{name} must be finite and positive, found {v}"
        )));
    }
    if values.windows(2).any(|w| w[1] <= w[0]) {
        return Err(QusError::InvalidGrid(format!(
            "{name} must be strictly increasing"
        )));
    }
    Ok(())
}

impl SpectralGrid {
    pub fn new(freqs: Vec<f64>, depths: Vec<f64>) -> Result<Self> {
        check_axis("freqs", &freqs)?;
        check_axis("depths", &depths)?;
        Ok(Self { freqs, depths })
    }

    /// Evenly spaced grid, both ends inclusive.
    pub fn linspace(
        freq_range: (f64, f64),
        n_freqs: usize,
        depth_range: (f64, f64),
        n_depths: usize,
    ) -> Result<Self> {
        Self::new(
            linspace(freq_range.0, freq_range.1, n_freqs),
            linspace(depth_range.0, depth_range.1, n_depths),
        )
    }

    pub fn freqs(&self) -> &[f64] {
        &self.freqs
    }

    pub fn depths(&self) -> &[f64] {
        &self.depths
    }

    pub fn n_freqs(&self) -> usize {
        self.freqs.len()
    }

    pub fn n_depths(&self) -> usize {
        self.depths.len()
    }
}

pub fn linspace(start: f64, end: f64, n: usize) -> Vec<f64> {
    match n {
        0 => Vec::new(),
        1 => vec![start],
        _ => {
            let step = (end - start) / (n - 1) as f64;
            (0..n)
                .map(|k| if k == n - 1 { end } else { start + step * k as f64 })
                .collect()
        }
    }
}

/// Acoustic properties of the calibrated reference phantom.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ReferenceCalibration {
    /// Attenuation slope, dB·cm⁻¹·MHz⁻¹.
    pub alpha0_r: f64,
    /// BSC power-law magnitude, cm⁻¹·sr⁻¹·MHz⁻ᵛ.
    pub beta_r: f64,
    /// BSC power-law exponent.
    pub nu_r: f64,
}

impl ReferenceCalibration {
    pub fn new(alpha0_r: f64, beta_r: f64, nu_r: f64) -> Result<Self> {
        if !(beta_r.is_finite() && beta_r > 0.0) {
            return Err(QusError::InvalidParameter(format!(
                "beta_r must be positive, got {beta_r}"
            )));
        }
        if !(alpha0_r.is_finite() && alpha0_r >= 0.0) {
            return Err(QusError::InvalidParameter(format!(
                "alpha0_r must be nonnegative, got {alpha0_r}"
            )));
        }
        if !nu_r.is_finite() {
            return Err(QusError::InvalidParameter("nu_r must be finite".into()));
        }
        Ok(Self { alpha0_r, beta_r, nu_r })
    }

    /// Background material of the Gammex 410SCG phantom.
    pub fn gammex_410scg() -> Self {
        Self {
            alpha0_r: 0.6035,
            beta_r: 2.9966e-6,
            nu_r: 3.4281,
        }
    }
}

impl Default for ReferenceCalibration {
    fn default() -> Self {
        Self::gammex_410scg()
    }
}

/// Solver unknowns for one lateral column, one entry per depth.
///
/// `a` is the attenuation difference to the reference (Np·cm⁻¹·MHz⁻¹),
/// `b` the log BSC magnitude difference and `n` the BSC exponent difference.
#[derive(Debug, Clone, PartialEq)]
pub struct ParamColumn {
    pub a: Vec<f64>,
    pub b: Vec<f64>,
    pub n: Vec<f64>,
}

impl ParamColumn {
    pub fn new(a: Vec<f64>, b: Vec<f64>, n: Vec<f64>) -> Result<Self> {
        if a.len() != b.len() || a.len() != n.len() {
            return Err(QusError::Dimension(format!(
                "parameter lengths differ: a={}, b={}, n={}",
                a.len(),
                b.len(),
                n.len()
            )));
        }
        if a.iter().chain(&b).chain(&n).any(|v| !v.is_finite()) {
            return Err(QusError::InvalidParameter(
                "parameter column contains non-finite values".into(),
            ));
        }
        Ok(Self { a, b, n })
    }

    pub fn zeros(n_depths: usize) -> Self {
        Self {
            a: vec![0.0; n_depths],
            b: vec![0.0; n_depths],
            n: vec![0.0; n_depths],
        }
    }

    pub fn len(&self) -> usize {
        self.a.len()
    }

    pub fn is_empty(&self) -> bool {
        self.a.is_empty()
    }

    /// Stacked `[a_1..a_N, b_1..b_N, n_1..n_N]`.
    pub fn to_stacked(&self) -> Vec<f64> {
        let mut x = Vec::with_capacity(3 * self.len());
        x.extend_from_slice(&self.a);
        x.extend_from_slice(&self.b);
        x.extend_from_slice(&self.n);
        x
    }

    pub fn from_stacked(x: &[f64]) -> Result<Self> {
        if !x.len().is_multiple_of(3) {
            return Err(QusError::Dimension(format!(
                "stacked vector length {} is not a multiple of 3",
                x.len()
            )));
        }
        let n = x.len() / 3;
        Ok(Self {
            a: x[..n].to_vec(),
            b: x[n..2 * n].to_vec(),
            n: x[2 * n..].to_vec(),
        })
    }
}

/// Physical properties per depth.
#[derive(Debug, Clone, PartialEq)]
pub struct TissueField {
    /// Effective attenuation, dB·cm⁻¹·MHz⁻¹.
    pub alpha_eff: Vec<f64>,
    /// BSC magnitude, cm⁻¹·sr⁻¹·MHz⁻ᵛ.
    pub beta: Vec<f64>,
    pub nu: Vec<f64>,
}

impl TissueField {
    pub fn new(alpha_eff: Vec<f64>, beta: Vec<f64>, nu: Vec<f64>) -> Result<Self> {
        if alpha_eff.len() != beta.len() || alpha_eff.len() != nu.len() {
            return Err(QusError::Dimension("tissue field lengths differ".into()));
        }
        if let Some(b) = beta.iter().find(|b| !(b.is_finite() && **b > 0.0)) {
            return Err(QusError::InvalidParameter(format!(
                "beta must be positive, found {b}"
            )));
        }
        Ok(Self { alpha_eff, beta, nu })
    }

    /// The reference material repeated at every depth.
    pub fn uniform(calib: &ReferenceCalibration, n_depths: usize) -> Self {
        Self {
            alpha_eff: vec![calib.alpha0_r; n_depths],
            beta: vec![calib.beta_r; n_depths],
            nu: vec![calib.nu_r; n_depths],
        }
    }

    pub fn len(&self) -> usize {
        self.alpha_eff.len()
    }

    pub fn is_empty(&self) -> bool {
        self.alpha_eff.is_empty()
    }

    /// Backscatter coefficient at frequency `f` for every depth.
    pub fn bsc_at(&self, f: f64) -> Vec<f64> {
        self.beta
            .iter()
            .zip(&self.nu)
            .map(|(&b, &v)| b * f.powf(v))
            .collect()
    }
}

/// A scalar field over the frequency × depth grid.
///
/// Storage is depth-major: the `n_freqs` values of one depth are contiguous.
#[derive(Debug, Clone, PartialEq)]
pub struct FreqDepthMap {
    grid: SpectralGrid,
    values: Vec<f64>,
}

/// Normalized log-spectrum `X(f, z)`.
pub type LogRatioMap = FreqDepthMap;

/// Power spectrum `S(f, z)`.
pub type SpectrumMap = FreqDepthMap;

impl FreqDepthMap {
    pub fn new(grid: SpectralGrid, values: Vec<f64>) -> Result<Self> {
        let expected = grid.n_freqs() * grid.n_depths();
        if values.len() != expected {
            return Err(QusError::Dimension(format!(
                "map has {} values, grid needs {expected}",
                values.len()
            )));
        }
        Ok(Self { grid, values })
    }

    pub fn filled(grid: SpectralGrid, value: f64) -> Self {
        let n = grid.n_freqs() * grid.n_depths();
        Self {
            grid,
            values: vec![value; n],
        }
    }

    pub fn from_fn(grid: SpectralGrid, mut f: impl FnMut(usize, usize) -> f64) -> Self {
        let (nf, nr) = (grid.n_freqs(), grid.n_depths());
        let mut values = Vec::with_capacity(nf * nr);
        for i in 0..nr {
            for l in 0..nf {
                values.push(f(l, i));
            }
        }
        Self { grid, values }
    }

    pub fn grid(&self) -> &SpectralGrid {
        &self.grid
    }

    pub fn values(&self) -> &[f64] {
        &self.values
    }

    pub fn values_mut(&mut self) -> &mut [f64] {
        &mut self.values
    }

    pub fn into_values(self) -> Vec<f64> {
        self.values
    }

    #[inline]
    pub fn get(&self, freq: usize, depth: usize) -> f64 {
        self.values[depth * self.grid.n_freqs() + freq]
    }

    #[inline]
    pub fn set(&mut self, freq: usize, depth: usize, value: f64) {
        let nf = self.grid.n_freqs();
        self.values[depth * nf + freq] = value;
    }

    /// All frequencies at one depth.
    pub fn depth_row(&self, depth: usize) -> &[f64] {
        let nf = self.grid.n_freqs();
        &self.values[depth * nf..(depth + 1) * nf]
    }

    pub fn depth_row_mut(&mut self, depth: usize) -> &mut [f64] {
        let nf = self.grid.n_freqs();
        &mut self.values[depth * nf..(depth + 1) * nf]
    }

    pub fn map(&self, f: impl Fn(f64) -> f64) -> Self {
        Self {
            grid: self.grid.clone(),
            values: self.values.iter().map(|&v| f(v)).collect(),
        }
    }

    pub fn max(&self) -> f64 {
        self.values.iter().copied().fold(f64::NEG_INFINITY, f64::max)
    }

    pub fn min(&self) -> f64 {
        self.values.iter().copied().fold(f64::INFINITY, f64::min)
    }

    pub fn same_grid(&self, other: &Self) -> bool {
        self.grid == other.grid
    }
}

/// Backscatter coefficient `beta * f^nu`.
pub fn bsc_at(beta: f64, nu: f64, f: f64) -> Result<f64> {
    if !(beta > 0.0) {
        return Err(QusError::InvalidParameter(format!(
            "beta must be positive, got {beta}"
        )));
    }
    if !(f > 0.0) {
        return Err(QusError::InvalidParameter(format!(
            "frequency must be positive, got {f}"
        )));
    }
    Ok(beta * f.powf(nu))
}

/// Two-way attenuation `exp(-4 f alpha z)` with `alpha` in nepers.
pub fn attenuation_factor(alpha_np: f64, f: f64, z: f64) -> f64 {
    (-4.0 * f * alpha_np * z).exp()
}

/// Evaluates the linear log-ratio model for one parameter column.
pub fn forward_log_ratio(params: &ParamColumn, grid: &SpectralGrid) -> Result<LogRatioMap> {
    if params.len() != grid.n_depths() {
        return Err(QusError::Dimension(format!(
            "parameter column has {} depths, grid has {}",
            params.len(),
            grid.n_depths()
        )));
    }
    let freqs = grid.freqs().to_vec();
    let depths = grid.depths().to_vec();
    Ok(FreqDepthMap::from_fn(grid.clone(), |l, i| {
        let f = freqs[l];
        -4.0 * params.a[i] * f * depths[i] + params.b[i] + params.n[i] * f.ln()
    }))
}

/// Maps solver unknowns back to physical properties.
pub fn reconstruct(params: &ParamColumn, calib: &ReferenceCalibration) -> TissueField {
    TissueField {
        alpha_eff: params.a.iter().map(|&a| np_to_db(a) + calib.alpha0_r).collect(),
        beta: params.b.iter().map(|&b| calib.beta_r * b.exp()).collect(),
        nu: params.n.iter().map(|&n| calib.nu_r + n).collect(),
    }
}

/// Inverse of [`reconstruct`]: the unknowns that describe `field` relative
/// to the reference.
pub fn parameterize(field: &TissueField, calib: &ReferenceCalibration) -> ParamColumn {
    ParamColumn {
        a: field
            .alpha_eff
            .iter()
            .map(|&al| db_to_np(al - calib.alpha0_r))
            .collect(),
        b: field.beta.iter().map(|&b| (b / calib.beta_r).ln()).collect(),
        n: field.nu.iter().map(|&v| v - calib.nu_r).collect(),
    }
}
