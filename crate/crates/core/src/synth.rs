//! Synthetic phantoms and noisy spectra with known ground truth.
//!
//! Noise is additive Gaussian on the log spectra (multiplicative log-normal
//! on power) with standard deviation `sigma0 + slope_fz · f · z`, so the
//! high-frequency content at depth is the least reliable.
//!
//! Every frame draws from its own ChaCha stream of the configured seed, so
//! output is identical whether frames are generated sequentially or in
//! parallel.

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, StandardNormal};

use crate::error::{QusError, Result};
use crate::model::{
    attenuation_factor, db_to_np, forward_log_ratio, parameterize, FreqDepthMap, LogRatioMap,
    ParamColumn, ReferenceCalibration, SpectralGrid, SpectrumMap, TissueField,
};

/// Homogeneous material over the depth interval `[z_start, z_end)`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Layer {
    pub z_start: f64,
    pub z_end: f64,
    /// dB·cm⁻¹·MHz⁻¹.
    pub alpha_eff: f64,
    pub beta: f64,
    pub nu: f64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct PhantomSpec {
    pub layout: Vec<Layer>,
    pub grid: SpectralGrid,
    pub background: ReferenceCalibration,
}

const COVER_TOL: f64 = 1e-9;

impl PhantomSpec {
    pub fn new(layout: Vec<Layer>, grid: SpectralGrid, background: ReferenceCalibration) -> Result<Self> {
        let spec = Self {
            layout,
            grid,
            background,
        };
        spec.validate()?;
        Ok(spec)
    }

    /// Background material over the whole depth range.
    pub fn homogeneous(grid: SpectralGrid, background: ReferenceCalibration) -> Self {
        let depths = grid.depths();
        let layer = Layer {
            z_start: depths[0],
            z_end: depths[depths.len() - 1],
            alpha_eff: background.alpha0_r,
            beta: background.beta_r,
            nu: background.nu_r,
        };
        Self {
            layout: vec![layer],
            grid,
            background,
        }
    }

    pub fn validate(&self) -> Result<()> {
        if self.layout.is_empty() {
            return Err(QusError::Empty("phantom layout has no layers".into()));
        }
        for l in &self.layout {
            if !(l.beta.is_finite() && l.beta > 0.0) {
                return Err(QusError::InvalidParameter(format!(
                    "layer beta must be positive, got {}",
                    l.beta
                )));
            }
            if !(l.z_end > l.z_start) {
                return Err(QusError::InvalidParameter(format!(
                    "layer [{}, {}) is empty",
                    l.z_start, l.z_end
                )));
            }
        }
        for w in self.layout.windows(2) {
            if (w[1].z_start - w[0].z_end).abs() > COVER_TOL {
                return Err(QusError::InvalidParameter(format!(
                    "layers must be contiguous and ordered: gap or overlap at {} / {}",
                    w[0].z_end, w[1].z_start
                )));
            }
        }
        let depths = self.grid.depths();
        let (first, last) = (&self.layout[0], &self.layout[self.layout.len() - 1]);
        if first.z_start > depths[0] + COVER_TOL || last.z_end < depths[depths.len() - 1] - COVER_TOL {
            return Err(QusError::InvalidParameter(format!(
                "layers cover [{}, {}], grid spans [{}, {}]",
                first.z_start,
                last.z_end,
                depths[0],
                depths[depths.len() - 1]
            )));
        }
        Ok(())
    }

    fn layer_at(&self, z: f64) -> &Layer {
        self.layout
            .iter()
            .find(|l| z >= l.z_start - COVER_TOL && z < l.z_end - COVER_TOL)
            .unwrap_or(&self.layout[self.layout.len() - 1])
    }

    pub fn tissue_field(&self) -> TissueField {
        let layers: Vec<&Layer> = self.grid.depths().iter().map(|&z| self.layer_at(z)).collect();
        TissueField {
            alpha_eff: layers.iter().map(|l| l.alpha_eff).collect(),
            beta: layers.iter().map(|l| l.beta).collect(),
            nu: layers.iter().map(|l| l.nu).collect(),
        }
    }

    pub fn true_params(&self) -> ParamColumn {
        parameterize(&self.tissue_field(), &self.background)
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct NoiseSpec {
    /// Log-spectrum noise std at zero frequency·depth, nepers.
    pub sigma0: f64,
    /// Growth of the std per MHz·cm.
    pub slope_fz: f64,
    pub seed: u64,
}

impl NoiseSpec {
    pub fn none() -> Self {
        Self {
            sigma0: 0.0,
            slope_fz: 0.0,
            seed: 0,
        }
    }

    pub fn validate(&self) -> Result<()> {
        if !(self.sigma0 >= 0.0 && self.slope_fz >= 0.0) {
            return Err(QusError::InvalidParameter(format!(
                "noise parameters must be nonnegative (sigma0={}, slope_fz={})",
                self.sigma0, self.slope_fz
            )));
        }
        Ok(())
    }

    pub fn std_at(&self, f: f64, z: f64) -> f64 {
        self.sigma0 + self.slope_fz * f * z
    }

    pub fn is_zero(&self) -> bool {
        self.sigma0 == 0.0 && self.slope_fz == 0.0
    }

    fn rng(&self, stream: u64) -> ChaCha8Rng {
        let mut rng = ChaCha8Rng::seed_from_u64(self.seed);
        rng.set_stream(stream);
        rng
    }

    /// One noise realization over the grid, in log units.
    pub fn sample_map(&self, grid: &SpectralGrid, stream: u64) -> FreqDepthMap {
        let mut rng = self.rng(stream);
        let (freqs, depths) = (grid.freqs(), grid.depths());
        FreqDepthMap::from_fn(grid.clone(), |l, i| {
            let e: f64 = StandardNormal.sample(&mut rng);
            self.std_at(freqs[l], depths[i]) * e
        })
    }
}

fn add_noise(clean: &LogRatioMap, noise: &NoiseSpec, stream: u64) -> LogRatioMap {
    if noise.is_zero() {
        return clean.clone();
    }
    let e = noise.sample_map(clean.grid(), stream);
    let mut out = clean.clone();
    for (v, d) in out.values_mut().iter_mut().zip(e.values()) {
        *v += d;
    }
    out
}

/// Noisy log-ratio frames for a column with the given per-depth truth.
pub fn generate_column_from_params(
    params: &ParamColumn,
    grid: &SpectralGrid,
    noise: &NoiseSpec,
    n_frames: usize,
) -> Result<Vec<LogRatioMap>> {
    noise.validate()?;
    if n_frames == 0 {
        return Err(QusError::InvalidParameter("n_frames must be at least 1".into()));
    }
    let clean = forward_log_ratio(params, grid)?;
    let frame = |k: usize| add_noise(&clean, noise, k as u64);
    #[cfg(feature = "parallel")]
    {
        use rayon::prelude::*;
        Ok((0..n_frames).into_par_iter().map(frame).collect())
    }
    #[cfg(not(feature = "parallel"))]
    {
        Ok((0..n_frames).map(frame).collect())
    }
}

pub fn generate_column(spec: &PhantomSpec, noise: &NoiseSpec, n_frames: usize) -> Result<Vec<LogRatioMap>> {
    spec.validate()?;
    generate_column_from_params(&spec.true_params(), &spec.grid, noise, n_frames)
}

/// `response · σ_b(f) · A(f, z)` on the grid, without noise.
fn model_spectrum(
    grid: &SpectralGrid,
    response: &[f64],
    field: &TissueField,
) -> SpectrumMap {
    let (freqs, depths) = (grid.freqs(), grid.depths());
    FreqDepthMap::from_fn(grid.clone(), |l, i| {
        let f = freqs[l];
        response[l]
            * field.beta[i]
            * f.powf(field.nu[i])
            * attenuation_factor(db_to_np(field.alpha_eff[i]), f, depths[i])
    })
}

/// Raw sample and reference power spectra sharing one system response.
///
/// Sample noise uses stream 0 of `noise.seed`, reference noise stream 1.
pub fn generate_spectra_pair(
    spec: &PhantomSpec,
    system_response: &[f64],
    noise: &NoiseSpec,
) -> Result<(SpectrumMap, SpectrumMap)> {
    spec.validate()?;
    noise.validate()?;
    let grid = &spec.grid;
    if system_response.len() != grid.n_freqs() {
        return Err(QusError::Dimension(format!(
            "system response has {} entries, grid has {} frequencies",
            system_response.len(),
            grid.n_freqs()
        )));
    }
    if let Some(r) = system_response.iter().find(|r| !(r.is_finite() && **r > 0.0)) {
        return Err(QusError::InvalidParameter(format!(
            "system response must be strictly positive, found {r}"
        )));
    }
    let sample = model_spectrum(grid, system_response, &spec.tissue_field());
    let reference = model_spectrum(
        grid,
        system_response,
        &TissueField::uniform(&spec.background, grid.n_depths()),
    );
    if noise.is_zero() {
        return Ok((sample, reference));
    }
    let perturb = |s: SpectrumMap, stream: u64| {
        let e = noise.sample_map(grid, stream);
        let mut s = s;
        for (v, d) in s.values_mut().iter_mut().zip(e.values()) {
            *v *= d.exp();
        }
        s
    };
    Ok((perturb(sample, 0), perturb(reference, 1)))
}

/// Gaussian transducer response sampled at `freqs`.
pub fn gaussian_response(freqs: &[f64], center: f64, sigma: f64, amplitude: f64) -> Vec<f64> {
    freqs
        .iter()
        .map(|f| amplitude * (-(f - center).powi(2) / (2.0 * sigma * sigma)).exp())
        .collect()
}

/// Scales whole depth rows of a sample spectrum, mimicking coherent echoes
/// from specular reflectors at those depths.
pub fn inject_specular(s: &SpectrumMap, depth_indices: &[usize], boost: f64) -> Result<SpectrumMap> {
    if !(boost > 1.0 && boost.is_finite()) {
        return Err(QusError::InvalidParameter(format!(
            "specular boost must exceed 1, got {boost}"
        )));
    }
    let nr = s.grid().n_depths();
    let mut out = s.clone();
    for &i in depth_indices {
        if i >= nr {
            return Err(QusError::OutOfRange { index: i, len: nr });
        }
    }
    let mut seen = vec![false; nr];
    for &i in depth_indices {
        if std::mem::replace(&mut seen[i], true) {
            continue;
        }
        for v in out.depth_row_mut(i) {
            *v *= boost;
        }
    }
    Ok(out)
}

/// Circular inclusion whose BSC differs from the background by `bsc_db`
/// decibels at every frequency.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Inclusion {
    pub x_center: f64,
    pub z_center: f64,
    pub radius: f64,
    pub bsc_db: f64,
}

/// A 2-D phantom, reduced to independent 1-D depth layouts per lateral
/// column. Attenuation is the background's everywhere.
#[derive(Debug, Clone, PartialEq)]
pub struct InclusionPhantom {
    pub grid: SpectralGrid,
    /// Lateral column positions, cm.
    pub laterals: Vec<f64>,
    pub background: ReferenceCalibration,
    pub inclusions: Vec<Inclusion>,
}

impl InclusionPhantom {
    /// Three inclusions at +12, +6 and -6 dB, spread laterally across the
    /// field of view at mid depth.
    pub fn three_inclusions(grid: SpectralGrid, laterals: Vec<f64>, background: ReferenceCalibration) -> Self {
        let (x0, x1) = (laterals[0], laterals[laterals.len() - 1]);
        let depths = grid.depths();
        let (z0, z1) = (depths[0], depths[depths.len() - 1]);
        let width = x1 - x0;
        let radius = (width / 8.0).min((z1 - z0) / 4.0);
        let z_center = 0.5 * (z0 + z1);
        let inclusions = [(1.0 / 6.0, 12.0), (0.5, 6.0), (5.0 / 6.0, -6.0)]
            .into_iter()
            .map(|(frac, db)| Inclusion {
                x_center: x0 + frac * width,
                z_center,
                radius,
                bsc_db: db,
            })
            .collect();
        Self {
            grid,
            laterals,
            background,
            inclusions,
        }
    }

    pub fn n_columns(&self) -> usize {
        self.laterals.len()
    }

    /// BSC offset in dB at a point; the first containing inclusion wins.
    pub fn bsc_db_at(&self, x: f64, z: f64) -> f64 {
        self.inclusions
            .iter()
            .find(|inc| (x - inc.x_center).powi(2) + (z - inc.z_center).powi(2) <= inc.radius * inc.radius)
            .map_or(0.0, |inc| inc.bsc_db)
    }

    /// Depth layout of one column.
    pub fn column_spec(&self, column: usize) -> Result<PhantomSpec> {
        let x = *self
            .laterals
            .get(column)
            .ok_or(QusError::OutOfRange {
                index: column,
                len: self.laterals.len(),
            })?;
        let depths = self.grid.depths();
        let (z0, z1) = (depths[0], depths[depths.len() - 1]);
        let mut cuts = vec![z0, z1];
        for inc in &self.inclusions {
            let dx = x - inc.x_center;
            if dx.abs() <= inc.radius {
                let h = (inc.radius * inc.radius - dx * dx).sqrt();
                cuts.extend([inc.z_center - h, inc.z_center + h].into_iter().filter(|&c| c > z0 && c < z1));
            }
        }
        cuts.sort_by(|a, b| a.total_cmp(b));
        cuts.dedup_by(|a, b| (*a - *b).abs() <= COVER_TOL);
        let bg = self.background;
        let layout = cuts
            .windows(2)
            .map(|w| {
                let db = self.bsc_db_at(x, 0.5 * (w[0] + w[1]));
                Layer {
                    z_start: w[0],
                    z_end: w[1],
                    alpha_eff: bg.alpha0_r,
                    beta: bg.beta_r * 10f64.powf(db / 10.0),
                    nu: bg.nu_r,
                }
            })
            .collect();
        PhantomSpec::new(layout, self.grid.clone(), bg)
    }

    /// Seed for column `c`: consecutive columns get consecutive seeds.
    pub fn column_noise(noise: &NoiseSpec, column: usize) -> NoiseSpec {
        NoiseSpec {
            seed: noise.seed.wrapping_add(column as u64),
            ..*noise
        }
    }
}
