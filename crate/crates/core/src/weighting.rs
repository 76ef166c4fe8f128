//! Bandwidth selection and SNR-driven data-term weights.
//!
//! Weights come from contour levels of the lateral-averaged log power
//! spectra: cells above `T₁ = upper_fraction · max` get full weight, cells
//! below `T₂ = lower_fraction · min` get none, and a linear ramp joins the
//! two. Sample and reference weights are multiplied cell-wise, then shifted
//! by a floor and renormalized so no residual is discarded outright.

use std::ops::RangeInclusive;

use crate::error::{QusError, Result};
use crate::model::{FreqDepthMap, SpectralGrid};

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum CombineMode {
    /// `w_d = w_s ⊙ w_r`.
    Both,
    /// `w_d = w_r`, for samples whose spectra are contaminated by specular
    /// reflectors.
    ReferenceOnly,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct WeightConfig {
    pub band_fraction: f64,
    pub upper_fraction: f64,
    pub lower_fraction: f64,
    pub floor: f64,
    pub combine_mode: CombineMode,
}

impl Default for WeightConfig {
    fn default() -> Self {
        Self {
            band_fraction: 0.8,
            upper_fraction: 0.9,
            lower_fraction: 1.67,
            floor: 0.05,
            combine_mode: CombineMode::Both,
        }
    }
}

impl WeightConfig {
    pub fn validate(&self) -> Result<()> {
        if !(self.floor > 0.0 && self.floor < 1.0) {
            return Err(QusError::InvalidParameter(format!(
                "floor must lie in (0, 1), got {}",
                self.floor
            )));
        }
        for (name, v) in [
            ("band_fraction", self.band_fraction),
            ("upper_fraction", self.upper_fraction),
            ("lower_fraction", self.lower_fraction),
        ] {
            if !(v.is_finite() && v > 0.0) {
                return Err(QusError::InvalidParameter(format!(
                    "{name} must be positive, got {v}"
                )));
            }
        }
        Ok(())
    }
}

/// Per-cell data-term weights with every entry in `[0, 1]`.
#[derive(Debug, Clone, PartialEq)]
pub struct WeightMap(FreqDepthMap);

impl WeightMap {
    pub fn new(map: FreqDepthMap) -> Result<Self> {
        let nf = map.grid().n_freqs();
        if let Some((k, v)) = map
            .values()
            .iter()
            .enumerate()
            .find(|(_, v)| !(**v >= 0.0 && **v <= 1.0))
        {
            return Err(QusError::InvalidParameter(format!(
                "weight {v} outside [0, 1] at frequency index {}, depth index {}",
                k % nf,
                k / nf
            )));
        }
        Ok(Self(map))
    }

    pub fn ones(grid: SpectralGrid) -> Self {
        Self(FreqDepthMap::filled(grid, 1.0))
    }

    pub fn grid(&self) -> &SpectralGrid {
        self.0.grid()
    }

    pub fn values(&self) -> &[f64] {
        self.0.values()
    }

    pub fn get(&self, freq: usize, depth: usize) -> f64 {
        self.0.get(freq, depth)
    }

    pub fn set(&mut self, freq: usize, depth: usize, value: f64) {
        assert!((0.0..=1.0).contains(&value), "weight {value} outside [0, 1]");
        self.0.set(freq, depth, value);
    }

    pub fn depth_row(&self, depth: usize) -> &[f64] {
        self.0.depth_row(depth)
    }

    pub fn as_map(&self) -> &FreqDepthMap {
        &self.0
    }

    pub fn into_map(self) -> FreqDepthMap {
        self.0
    }

    /// Multiplies every weight by `c` in `(0, 1]`.
    pub fn scaled(&self, c: f64) -> Result<Self> {
        if !(c > 0.0 && c <= 1.0) {
            return Err(QusError::InvalidParameter(format!(
                "weight scale must lie in (0, 1], got {c}"
            )));
        }
        Ok(Self(self.0.map(|v| v * c)))
    }
}

/// Per depth, the contiguous frequency-index range around the spectral peak
/// where the log spectrum stays at or above `band_fraction · peak`.
pub fn select_band(s_log: &FreqDepthMap, band_fraction: f64) -> Vec<RangeInclusive<usize>> {
    (0..s_log.grid().n_depths())
        .map(|i| {
            let row = s_log.depth_row(i);
            let (peak_idx, peak) = row
                .iter()
                .copied()
                .enumerate()
                .fold((0, f64::NEG_INFINITY), |best, (k, v)| {
                    if v > best.1 {
                        (k, v)
                    } else {
                        best
                    }
                });
            let level = band_fraction * peak;
            let mut lo = peak_idx;
            while lo > 0 && row[lo - 1] >= level {
                lo -= 1;
            }
            let mut hi = peak_idx;
            while hi + 1 < row.len() && row[hi + 1] >= level {
                hi += 1;
            }
            lo..=hi
        })
        .collect()
}

/// Contour-level weights of one phantom's log spectrum.
///
/// Thresholds use the global extremes of the whole map. Cells strictly above
/// `T₁` always receive 1 and cells strictly below `T₂` receive 0; a
/// [`QusError::DegenerateRange`] is raised only when `T₁ <= T₂` leaves some
/// cell without a defined ramp value.
pub fn phantom_weights(s_log: &FreqDepthMap, upper_fraction: f64, lower_fraction: f64) -> Result<WeightMap> {
    if let Some(v) = s_log.values().iter().find(|v| !v.is_finite()) {
        return Err(QusError::InvalidParameter(format!(
            "log spectrum contains non-finite value {v}"
        )));
    }
    let t1 = upper_fraction * s_log.max();
    let t2 = lower_fraction * s_log.min();
    if t1 <= t2 && s_log.values().iter().any(|&s| s <= t1 && s >= t2) {
        return Err(QusError::DegenerateRange { upper: t1, lower: t2 });
    }
    let w = s_log.map(|s| {
        if s > t1 {
            1.0
        } else if s < t2 {
            0.0
        } else {
            ((s - t2) / (t1 - t2)).clamp(0.0, 1.0)
        }
    });
    WeightMap::new(w)
}

pub fn combine_weights(w_s: &WeightMap, w_r: &WeightMap, mode: CombineMode) -> Result<WeightMap> {
    if w_s.grid() != w_r.grid() {
        return Err(QusError::Dimension(
            "sample and reference weight grids differ".into(),
        ));
    }
    match mode {
        CombineMode::Both => {
            let values = w_s
                .values()
                .iter()
                .zip(w_r.values())
                .map(|(a, b)| a * b)
                .collect();
            WeightMap::new(FreqDepthMap::new(w_s.grid().clone(), values)?)
        }
        CombineMode::ReferenceOnly => Ok(w_r.clone()),
    }
}

/// `w' = (w + floor) / max(w + floor)`.
pub fn normalize_floor(w: &WeightMap, floor: f64) -> Result<WeightMap> {
    if !(floor.is_finite() && floor >= 0.0) {
        return Err(QusError::InvalidParameter(format!(
            "floor must be nonnegative, got {floor}"
        )));
    }
    let max = w.as_map().max();
    if !(max > 0.0) {
        return Err(QusError::Empty("weight map is identically zero".into()));
    }
    let shifted_max = max + floor;
    Ok(WeightMap(w.as_map().map(|v| (v + floor) / shifted_max)))
}

/// Every intermediate of the weighting pipeline.
#[derive(Debug, Clone)]
pub struct WeightSet {
    pub w_s: WeightMap,
    pub w_r: WeightMap,
    /// Combined weights before the floor shift.
    pub w_d_raw: WeightMap,
    /// Final data-term weights.
    pub w_d: WeightMap,
    pub band_sample: Vec<RangeInclusive<usize>>,
    pub band_reference: Vec<RangeInclusive<usize>>,
    /// Set when a degenerate map forced uniform weights.
    pub fallback_uniform: bool,
}

/// Runs band selection and the weight pipeline on lateral-averaged log
/// spectra of the sample and the reference.
///
/// A degenerate dynamic range on either phantom falls back to uniform
/// weights for that phantom.
pub fn compute_weights(sample_log: &FreqDepthMap, reference_log: &FreqDepthMap, cfg: &WeightConfig) -> Result<WeightSet> {
    cfg.validate()?;
    if !sample_log.same_grid(reference_log) {
        return Err(QusError::Dimension(
            "sample and reference spectra grids differ".into(),
        ));
    }
    let mut fallback = false;
    let mut weights_or_uniform = |s: &FreqDepthMap| match phantom_weights(s, cfg.upper_fraction, cfg.lower_fraction) {
        Ok(w) => Ok(w),
        Err(QusError::DegenerateRange { upper, lower }) => {
            log::warn!("degenerate weight thresholds (T1={upper}, T2={lower}); using uniform weights");
            fallback = true;
            Ok(WeightMap::ones(s.grid().clone()))
        }
        Err(e) => Err(e),
    };
    let w_s = weights_or_uniform(sample_log)?;
    let w_r = weights_or_uniform(reference_log)?;
    let w_d_raw = combine_weights(&w_s, &w_r, cfg.combine_mode)?;
    let w_d = match normalize_floor(&w_d_raw, cfg.floor) {
        Ok(w) => w,
        Err(QusError::Empty(_)) => {
            log::warn!("combined weights are identically zero; using uniform weights");
            fallback = true;
            WeightMap::ones(sample_log.grid().clone())
        }
        Err(e) => return Err(e),
    };
    Ok(WeightSet {
        w_s,
        w_r,
        w_d_raw,
        w_d,
        band_sample: select_band(sample_log, cfg.band_fraction),
        band_reference: select_band(reference_log, cfg.band_fraction),
        fallback_uniform: fallback,
    })
}
