//! Input datasets shared by `estimate`, `weights` and `sweep`.
//!
//! A section names exactly one source:
//!
//! - `manifest = run/manifest.cfg`: a `synth` output directory.
//! - `log_ratio = c0.csv, c1.csv, ...`: one log-ratio map per column.
//! - `sample = ...` with `reference = ...`: power spectra per column; a
//!   single reference file is shared by every column.
//! - `rf_sample = frame.csv` with `rf_reference = frame.csv`: RF frames,
//!   split into columns of `lines_per_column` lines and windowed into
//!   spectra sampled at `freqs`.

use std::path::{Path, PathBuf};

use qus_core::model::{LogRatioMap, SpectrumMap};
use qus_core::spectra::{lateral_average, power_spectrum, rpm_log_ratio, RfFrame, WindowSettings};

use crate::config::{ConfigFile, SectionReader};
use crate::error::Result;
use crate::format::{GridFile, MAP_KIND, RF_KIND};
use crate::settings;

/// Row and column labels of an RF file.
pub const RF_SAMPLE: &str = "sample";
pub const RF_LINE: &str = "line";

/// Where a column's spectra came from, for the weighting pipeline.
#[derive(Debug, Clone)]
pub struct SpectraPair {
    pub sample: SpectrumMap,
    pub reference: SpectrumMap,
}

#[derive(Debug, Clone)]
pub struct Dataset {
    /// Lateral position of each column, cm.
    pub laterals: Vec<f64>,
    /// `frames[k][c]`: log ratio of frame `k`, column `c`.
    pub frames: Vec<Vec<LogRatioMap>>,
    /// Per-column spectra, when the source provides them.
    pub spectra: Option<Vec<SpectraPair>>,
}

impl Dataset {
    pub fn n_columns(&self) -> usize {
        self.laterals.len()
    }

    pub fn depths(&self) -> &[f64] {
        self.frames[0][0].grid().depths()
    }

    /// Cell-wise mean over frames, per column.
    pub fn frame_mean(&self) -> Result<Vec<LogRatioMap>> {
        if self.frames.len() == 1 {
            return Ok(self.frames[0].clone());
        }
        (0..self.n_columns())
            .map(|c| {
                let stack: Vec<LogRatioMap> = self.frames.iter().map(|f| f[c].clone()).collect();
                Ok(lateral_average(&stack)?)
            })
            .collect()
    }
}

pub fn x_file(frame: usize, column: usize) -> String {
    format!("x/f{frame:03}_c{column:04}.csv")
}

pub fn spectra_file(kind: &str, column: usize) -> String {
    format!("spectra/{kind}_c{column:04}.csv")
}

fn read_map(path: &Path) -> Result<LogRatioMap> {
    GridFile::read(path, MAP_KIND)?.to_freq_depth(path)
}

const SOURCES: [&str; 4] = ["manifest", "log_ratio", "sample", "rf_sample"];

pub fn load(sec: &SectionReader<'_>) -> Result<Dataset> {
    let given: Vec<&str> = SOURCES.iter().copied().filter(|k| sec.line(k) > 0).collect();
    match given.as_slice() {
        ["manifest"] => load_manifest(sec),
        ["log_ratio"] => load_log_ratio(sec),
        ["sample"] => load_spectra(sec),
        [_] => load_rf(sec),
        [] => Err(sec.err(0, format!("no input: set one of {}", SOURCES.join(", ")))),
        [_, second, ..] => Err(sec.err(sec.line(second), format!("inputs are exclusive: {}", given.join(", ")))),
    }
}

/// Path to a synth manifest, when the section names one.
pub fn manifest_path(sec: &SectionReader<'_>) -> Result<Option<PathBuf>> {
    sec.input_path("manifest")
}

fn load_manifest(sec: &SectionReader<'_>) -> Result<Dataset> {
    let path = manifest_path(sec)?.expect("manifest key present");
    let manifest = ConfigFile::load(&path)?;
    let dir = path.parent().unwrap_or(Path::new(""));
    let ds = manifest.section("dataset");
    let n_frames: usize = ds.require("frames")?;
    let n_columns: usize = ds.require("columns")?;
    let has_spectra: bool = ds.get("spectra", false)?;
    let laterals = ds
        .list("laterals")?
        .ok_or_else(|| ds.err(0, "[dataset] missing required key 'laterals'"))?;
    let _ = ds.raw("version")?;
    if laterals.len() != n_columns {
        return Err(ds.err(ds.line("laterals"), format!("{} laterals for {n_columns} columns", laterals.len())));
    }
    ds.finish()?;
    let frames = (0..n_frames)
        .map(|k| (0..n_columns).map(|c| read_map(&dir.join(x_file(k, c)))).collect())
        .collect::<Result<Vec<Vec<_>>>>()?;
    let spectra = if has_spectra {
        Some(
            (0..n_columns)
                .map(|c| {
                    Ok(SpectraPair {
                        sample: read_map(&dir.join(spectra_file("sample", c)))?,
                        reference: read_map(&dir.join(spectra_file("reference", c)))?,
                    })
                })
                .collect::<Result<Vec<_>>>()?,
        )
    } else {
        None
    };
    Ok(Dataset {
        laterals,
        frames,
        spectra,
    })
}

/// `laterals = start, end, count`, defaulting to column indices.
fn laterals(sec: &SectionReader<'_>, n: usize) -> Result<Vec<f64>> {
    let v = settings::axis(sec, "laterals", (0.0, n.saturating_sub(1) as f64, n))?;
    if v.len() != n {
        return Err(sec.err(sec.line("laterals"), format!("laterals has {} entries for {n} columns", v.len())));
    }
    Ok(v)
}

fn load_log_ratio(sec: &SectionReader<'_>) -> Result<Dataset> {
    let paths = sec.input_paths("log_ratio")?.unwrap_or_default();
    let columns = paths.iter().map(|p| read_map(p)).collect::<Result<Vec<_>>>()?;
    Ok(Dataset {
        laterals: laterals(sec, columns.len())?,
        frames: vec![columns],
        spectra: None,
    })
}

fn pair_up(sec: &SectionReader<'_>, samples: Vec<SpectrumMap>, references: Vec<SpectrumMap>) -> Result<Dataset> {
    let n = samples.len();
    let references = match references.len() {
        1 => vec![references[0].clone(); n],
        m if m == n => references,
        m => {
            return Err(sec.err(
                sec.line("reference"),
                format!("{m} reference spectra for {n} sample columns; give one or {n}"),
            ))
        }
    };
    let pairs: Vec<SpectraPair> = samples
        .into_iter()
        .zip(references)
        .map(|(sample, reference)| SpectraPair { sample, reference })
        .collect();
    let columns = pairs
        .iter()
        .map(|p| Ok(rpm_log_ratio(&p.sample, &p.reference)?))
        .collect::<Result<Vec<_>>>()?;
    Ok(Dataset {
        laterals: laterals(sec, n)?,
        frames: vec![columns],
        spectra: Some(pairs),
    })
}

fn required_paths(sec: &SectionReader<'_>, key: &str) -> Result<Vec<PathBuf>> {
    sec.input_paths(key)?
        .ok_or_else(|| sec.err(0, format!("missing required key '{key}'")))
}

fn load_spectra(sec: &SectionReader<'_>) -> Result<Dataset> {
    let samples = required_paths(sec, "sample")?
        .iter()
        .map(|p| read_map(p))
        .collect::<Result<Vec<_>>>()?;
    let references = required_paths(sec, "reference")?
        .iter()
        .map(|p| read_map(p))
        .collect::<Result<Vec<_>>>()?;
    pair_up(sec, samples, references)
}

fn read_rf(path: &Path, sampling_rate: f64, sound_speed: f64) -> Result<RfFrame> {
    let g = GridFile::read(path, RF_KIND)?;
    g.expect_axes(path, RF_SAMPLE, RF_LINE)?;
    let (ns, nl) = (g.n_rows(), g.n_cols());
    let mut lines = Vec::with_capacity(ns * nl);
    for l in 0..nl {
        lines.extend((0..ns).map(|s| g.get(s, l)));
    }
    Ok(RfFrame::new(lines, ns, sampling_rate, sound_speed)?)
}

fn load_rf(sec: &SectionReader<'_>) -> Result<Dataset> {
    let sample_path = sec.input_path("rf_sample")?.expect("rf_sample key present");
    let reference_path = sec
        .input_path("rf_reference")?
        .ok_or_else(|| sec.err(0, "missing required key 'rf_reference'"))?;
    let sampling_rate: f64 = sec.require("sampling_rate")?;
    let sound_speed: f64 = sec.get("sound_speed", 1540.0)?;
    let d = WindowSettings::default();
    let window = WindowSettings {
        window_len: sec.get("window_len", d.window_len)?,
        overlap: sec.get("overlap", d.overlap)?,
    };
    let freqs = settings::axis(sec, "freqs", (3.0, 10.0, 32))?;
    let sample = read_rf(&sample_path, sampling_rate, sound_speed)?;
    let reference = read_rf(&reference_path, sampling_rate, sound_speed)?;
    let per_column: usize = sec.get("lines_per_column", sample.n_lines())?;
    if per_column == 0 || per_column > sample.n_lines() {
        return Err(sec.err(
            sec.line("lines_per_column"),
            format!("lines_per_column must be in 1..={}", sample.n_lines()),
        ));
    }
    let n_columns = sample.n_lines() / per_column;
    let samples = (0..n_columns)
        .map(|c| {
            let sub = sample.sub_frame(c * per_column..(c + 1) * per_column)?;
            Ok(power_spectrum(&sub, &window, &freqs)?)
        })
        .collect::<Result<Vec<_>>>()?;
    let references = vec![power_spectrum(&reference, &window, &freqs)?];
    pair_up(sec, samples, references)
}
