//! One module per subcommand, plus helpers they share.

pub mod estimate;
pub mod evaluate;
pub mod sweep;
pub mod synth;
pub mod weights;

use std::path::PathBuf;

use qus_core::metrics::Image;
use qus_core::model::{FreqDepthMap, SpectrumMap};
use qus_core::solvers::MapEstimate;
use qus_core::weighting::{compute_weights, WeightMap, WeightSet};
use qus_core::QusError;

use crate::config::SectionReader;
use crate::error::Result;
use crate::format::{GridFile, Provenance, MAP_KIND};
use crate::inputs::Dataset;
use crate::settings;

/// Natural log of a power spectrum; zero or negative power is a data error.
pub fn log_spectrum(s: &SpectrumMap) -> Result<FreqDepthMap> {
    let nf = s.grid().n_freqs();
    if let Some(k) = s.values().iter().position(|v| !(*v > 0.0 && v.is_finite())) {
        return Err(QusError::NonPositive {
            freq: k % nf,
            depth: k / nf,
            value: s.values()[k],
        }
        .into());
    }
    Ok(s.map(f64::ln))
}

/// Runs the weighting pipeline on every column of a dataset with spectra.
pub fn weight_sets(sec: &SectionReader<'_>, data: &Dataset) -> Result<Vec<WeightSet>> {
    let cfg = settings::weight_config(sec)?;
    let spectra = data
        .spectra
        .as_ref()
        .ok_or_else(|| sec.err(0, "weighting needs spectra: use a sample/reference, rf or manifest-with-spectra input"))?;
    spectra
        .iter()
        .map(|p| Ok(compute_weights(&log_spectrum(&p.sample)?, &log_spectrum(&p.reference)?, &cfg)?))
        .collect()
}

/// `weighting = none | spectra`; data-term weights per column.
pub fn data_weights(sec: &SectionReader<'_>, data: &Dataset) -> Result<Option<Vec<WeightMap>>> {
    match sec.get::<String>("weighting", "none".into())?.as_str() {
        "none" => Ok(None),
        "spectra" => Ok(Some(weight_sets(sec, data)?.into_iter().map(|w| w.w_d).collect())),
        other => Err(sec.err(sec.line("weighting"), format!("weighting must be none or spectra, got '{other}'"))),
    }
}

/// Names of the per-column maps written for every estimate.
pub const MAP_NAMES: [&str; 5] = ["a", "b", "n", "alpha", "bsc"];

/// `a, b, n`, attenuation (dB/cm/MHz) and BSC at the center frequency, as
/// depth × lateral images in [`MAP_NAMES`] order.
pub fn estimate_images(est: &MapEstimate, n_depths: usize) -> [Image; 5] {
    [
        est.image(n_depths, |e| e.params.a.clone()),
        est.image(n_depths, |e| e.params.b.clone()),
        est.image(n_depths, |e| e.params.n.clone()),
        est.image(n_depths, |e| e.field.alpha_eff.clone()),
        est.image(n_depths, |e| e.bsc_center.clone()),
    ]
}

/// Files queued for writing once all computation has finished.
#[derive(Default)]
pub struct Outputs {
    grids: Vec<(PathBuf, GridFile)>,
}

impl Outputs {
    pub fn grid(&mut self, path: PathBuf, g: GridFile) {
        self.grids.push((path, g));
    }

    pub fn write(self, prov: Provenance<'_>) -> Result<()> {
        for (path, g) in &self.grids {
            g.write(path, MAP_KIND, prov)?;
        }
        Ok(())
    }
}

/// Commas would break the CSV row.
pub fn csv_text(s: &str) -> String {
    s.replace(',', ";")
}
