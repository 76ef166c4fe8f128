//! RF front end: windowed periodograms and the reference-phantom log ratio.

use std::sync::Arc;

use rustfft::num_complex::Complex;
use rustfft::{Fft, FftPlanner};

use crate::error::{QusError, Result};
use crate::model::{FreqDepthMap, LogRatioMap, SpectralGrid, SpectrumMap};

/// Beamformed RF data, one contiguous A-line per lateral position.
#[derive(Debug, Clone, PartialEq)]
pub struct RfFrame {
    n_samples: usize,
    n_lines: usize,
    data: Vec<f64>,
    /// MHz.
    pub sampling_rate: f64,
    /// m/s.
    pub sound_speed: f64,
}

impl RfFrame {
    /// `data` holds `n_lines` lines of `n_samples` axial samples each.
    pub fn new(data: Vec<f64>, n_samples: usize, sampling_rate: f64, sound_speed: f64) -> Result<Self> {
        if n_samples == 0 || data.is_empty() || !data.len().is_multiple_of(n_samples) {
            return Err(QusError::Dimension(format!(
                "{} samples cannot be split into lines of {n_samples}",
                data.len()
            )));
        }
        if !(sampling_rate > 0.0 && sound_speed > 0.0) {
            return Err(QusError::InvalidParameter(
                "sampling rate and sound speed must be positive".into(),
            ));
        }
        if !(1400.0..=1650.0).contains(&sound_speed) {
            log::warn!("sound speed {sound_speed} m/s is outside the soft-tissue range [1400, 1650]");
        }
        Ok(Self {
            n_lines: data.len() / n_samples,
            n_samples,
            data,
            sampling_rate,
            sound_speed,
        })
    }

    pub fn n_samples(&self) -> usize {
        self.n_samples
    }

    pub fn n_lines(&self) -> usize {
        self.n_lines
    }

    pub fn line(&self, k: usize) -> &[f64] {
        &self.data[k * self.n_samples..(k + 1) * self.n_samples]
    }

    /// A frame made of a contiguous subset of lines.
    pub fn sub_frame(&self, lines: std::ops::Range<usize>) -> Result<Self> {
        if lines.is_empty() || lines.end > self.n_lines {
            return Err(QusError::OutOfRange {
                index: lines.end,
                len: self.n_lines,
            });
        }
        Ok(Self {
            n_samples: self.n_samples,
            n_lines: lines.len(),
            data: self.data[lines.start * self.n_samples..lines.end * self.n_samples].to_vec(),
            sampling_rate: self.sampling_rate,
            sound_speed: self.sound_speed,
        })
    }

    /// Depth in cm of axial sample position `sample` (may be fractional).
    pub fn depth_of(&self, sample: f64) -> f64 {
        // two-way travel: z = c t / 2, t in µs, c in m/s -> cm
        self.sound_speed * (sample / self.sampling_rate) * 1e-6 / 2.0 * 100.0
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct WindowSettings {
    /// Axial window length in samples.
    pub window_len: usize,
    /// Fractional overlap between consecutive windows, in [0, 1).
    pub overlap: f64,
}

impl Default for WindowSettings {
    fn default() -> Self {
        Self {
            window_len: 64,
            overlap: 0.5,
        }
    }
}

fn hann(n: usize) -> Vec<f64> {
    if n == 1 {
        return vec![1.0];
    }
    (0..n)
        .map(|k| 0.5 - 0.5 * (2.0 * std::f64::consts::PI * k as f64 / (n - 1) as f64).cos())
        .collect()
}

fn segment_periodogram(segment: &[f64], taper: &[f64], fft: &Arc<dyn Fft<f64>>, scale: f64) -> Vec<f64> {
    let mean = segment.iter().sum::<f64>() / segment.len() as f64;
    let mut buf: Vec<Complex<f64>> = segment
        .iter()
        .zip(taper)
        .map(|(&s, &w)| Complex::new((s - mean) * w, 0.0))
        .collect();
    fft.process(&mut buf);
    buf.iter().map(|c| c.norm_sqr() * scale).collect()
}

fn interpolate_bins(periodogram: &[f64], bin_width: f64, freqs: &[f64]) -> Vec<f64> {
    freqs
        .iter()
        .map(|&f| {
            let pos = f / bin_width;
            let k = pos.floor() as usize;
            let frac = pos - k as f64;
            if k + 1 >= periodogram.len() {
                periodogram[periodogram.len() - 1]
            } else {
                periodogram[k] * (1.0 - frac) + periodogram[k + 1] * frac
            }
        })
        .collect()
}

/// Depth-resolved power spectrum: Hann-tapered, mean-detrended periodograms
/// of sliding axial windows, averaged over all lines and linearly
/// interpolated at `freqs` (MHz). Window centres become the depth axis.
pub fn power_spectrum(frame: &RfFrame, settings: &WindowSettings, freqs: &[f64]) -> Result<SpectrumMap> {
    let n = settings.window_len;
    if n == 0 || n > frame.n_samples() {
        return Err(QusError::InvalidParameter(format!(
            "window of {n} samples does not fit {} axial samples",
            frame.n_samples()
        )));
    }
    if !(0.0..1.0).contains(&settings.overlap) {
        return Err(QusError::InvalidParameter(format!(
            "overlap must lie in [0, 1), got {}",
            settings.overlap
        )));
    }
    let nyquist = frame.sampling_rate / 2.0;
    if let Some(f) = freqs.iter().find(|&&f| f >= nyquist) {
        return Err(QusError::InvalidParameter(format!(
            "analysis frequency {f} MHz is at or above Nyquist ({nyquist} MHz)"
        )));
    }
    let hop = ((n as f64 * (1.0 - settings.overlap)).round() as usize).max(1);
    let starts: Vec<usize> = (0..)
        .map(|k| k * hop)
        .take_while(|s| s + n <= frame.n_samples())
        .collect();
    let depths: Vec<f64> = starts
        .iter()
        .map(|&s| frame.depth_of(s as f64 + n as f64 / 2.0))
        .collect();
    let grid = SpectralGrid::new(freqs.to_vec(), depths)?;

    let taper = hann(n);
    let energy: f64 = taper.iter().map(|w| w * w).sum();
    let scale = 1.0 / (frame.sampling_rate * energy);
    let fft = FftPlanner::<f64>::new().plan_fft_forward(n);
    let bin_width = frame.sampling_rate / n as f64;
    let lines = frame.n_lines() as f64;

    let window_spectrum = |&start: &usize| -> Vec<f64> {
        let mut acc = vec![0.0; n];
        for k in 0..frame.n_lines() {
            let p = segment_periodogram(&frame.line(k)[start..start + n], &taper, &fft, scale);
            for (a, v) in acc.iter_mut().zip(p) {
                *a += v;
            }
        }
        acc.iter_mut().for_each(|a| *a /= lines);
        interpolate_bins(&acc[..n / 2 + 1], bin_width, freqs)
    };
    #[cfg(feature = "parallel")]
    let rows: Vec<Vec<f64>> = {
        use rayon::prelude::*;
        starts.par_iter().map(window_spectrum).collect()
    };
    #[cfg(not(feature = "parallel"))]
    let rows: Vec<Vec<f64>> = starts.iter().map(window_spectrum).collect();

    FreqDepthMap::new(grid, rows.into_iter().flatten().collect())
}

/// `X = ln(S_s / S_r)` cell-wise.
pub fn rpm_log_ratio(sample: &SpectrumMap, reference: &SpectrumMap) -> Result<LogRatioMap> {
    if !sample.same_grid(reference) {
        return Err(QusError::Dimension(
            "sample and reference spectra use different grids".into(),
        ));
    }
    let nf = sample.grid().n_freqs();
    for (k, (&s, &r)) in sample.values().iter().zip(reference.values()).enumerate() {
        for v in [r, s] {
            if !(v > 0.0 && v.is_finite()) {
                return Err(QusError::NonPositive {
                    freq: k % nf,
                    depth: k / nf,
                    value: v,
                });
            }
        }
    }
    let values = sample
        .values()
        .iter()
        .zip(reference.values())
        .map(|(s, r)| (s / r).ln())
        .collect();
    FreqDepthMap::new(sample.grid().clone(), values)
}

/// Element-wise mean of spectra sharing one grid.
pub fn lateral_average(maps: &[SpectrumMap]) -> Result<SpectrumMap> {
    let first = maps
        .first()
        .ok_or_else(|| QusError::Empty("no spectra to average".into()))?;
    if maps.iter().any(|m| !m.same_grid(first)) {
        return Err(QusError::Dimension("spectra grids differ".into()));
    }
    Ok(running_mean(first.grid().clone(), maps.iter().map(|m| m.values())))
}

/// Incremental mean; exact when all inputs are identical.
pub(crate) fn running_mean<'a>(grid: SpectralGrid, maps: impl Iterator<Item = &'a [f64]>) -> FreqDepthMap {
    let mut mean: Vec<f64> = Vec::new();
    for (k, values) in maps.enumerate() {
        if k == 0 {
            mean = values.to_vec();
            continue;
        }
        let c = (k + 1) as f64;
        for (m, &v) in mean.iter_mut().zip(values) {
            *m += (v - *m) / c;
        }
    }
    FreqDepthMap::new(grid, mean).expect("shape checked by caller")
}
