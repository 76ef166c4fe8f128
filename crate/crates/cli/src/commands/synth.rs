//! `qus synth`: synthetic log-ratio frames with ground truth.
//!
//! ```text
//! [synth]
//! freqs = 3, 10, 32            # start, end, count (MHz)
//! depths = 0.5, 4, 64          # cm
//! laterals = 0, 4, 1           # cm, one column per entry
//! phantom = layered            # homogeneous | layered | inclusions
//! layer = 0.5, 2, 0.6035, 2.9966e-6, 3.4281   # z0, z1, alpha (dB/cm/MHz), beta, nu
//! inclusion = 1, 2.25, 0.5, 12                 # x, z, radius (cm), BSC offset (dB)
//! sigma0 = 0.05
//! slope_fz = 0
//! seed = 7
//! frames = 4
//! spectra = true               # also write sample/reference spectra
//! response = 6.5, 2.5, 1       # center, sigma (MHz), amplitude
//! specular = 10, 11            # depth indices of specular rows
//! specular_boost = 10
//! ```
//!
//! The output directory holds `manifest.cfg`, which restates every setting
//! with defaults filled in and can be fed back to `synth` or to the other
//! commands through `manifest = .../manifest.cfg`.

use std::fmt::Write as _;

use qus_core::metrics::Image;
use qus_core::model::{linspace, ReferenceCalibration, SpectralGrid};
use qus_core::synth::{
    gaussian_response, generate_column, generate_spectra_pair, inject_specular, Inclusion, InclusionPhantom, Layer,
    NoiseSpec, PhantomSpec,
};

use super::{Outputs, MAP_NAMES};
use crate::config::SectionReader;
use crate::error::Result;
use crate::format::{fmt_f64, write_text, GridFile};
use crate::inputs::{spectra_file, x_file};
use crate::settings::{self, AxisSpec};
use crate::Context;

pub const MANIFEST: &str = "manifest.cfg";
pub const MANIFEST_KIND: &str = "qus-manifest v1";

const FREQS: AxisSpec = (3.0, 10.0, 32);
const DEPTHS: AxisSpec = (0.5, 4.0, 64);
const LATERALS: AxisSpec = (0.0, 4.0, 1);

#[derive(Debug, Clone)]
enum Phantom {
    Homogeneous([f64; 3]),
    Layered(Vec<Layer>),
    Inclusions(Vec<Inclusion>),
}

#[derive(Debug, Clone)]
struct Settings {
    freqs: AxisSpec,
    depths: AxisSpec,
    laterals: AxisSpec,
    phantom: Phantom,
    calibration: ReferenceCalibration,
    noise: NoiseSpec,
    frames: usize,
    center_freq: f64,
    spectra: bool,
    response: [f64; 3],
    specular: Vec<usize>,
    specular_boost: f64,
}

fn numbers<const N: usize>(sec: &SectionReader<'_>, value: &str, line: usize, what: &str) -> Result<[f64; N]> {
    let v = crate::config::parse_list(value).map_err(|m| sec.err(line, format!("{what}: {m}")))?;
    v.try_into()
        .map_err(|v: Vec<f64>| sec.err(line, format!("{what} takes {N} numbers, got {}", v.len())))
}

fn read_settings(sec: &SectionReader<'_>, seed_override: Option<u64>) -> Result<Settings> {
    let freqs = settings::axis_spec(sec, "freqs", FREQS)?;
    let depths = settings::axis_spec(sec, "depths", DEPTHS)?;
    let laterals = settings::axis_spec(sec, "laterals", LATERALS)?;
    let calibration = settings::calibration(sec)?;
    let kind: String = sec.get("phantom", "homogeneous".to_string())?;
    let material = match sec.raw("material")? {
        Some((v, line)) => Some(numbers::<3>(sec, v, line, "material")?),
        None => None,
    };
    let layers = sec.all("layer");
    let inclusions = sec.all("inclusion");
    let stray = |key: &str, present: bool| {
        if present {
            Err(sec.err(sec.line(key), format!("'{key}' does not apply to phantom = {kind}")))
        } else {
            Ok(())
        }
    };
    let phantom = match kind.as_str() {
        "homogeneous" => {
            stray("layer", !layers.is_empty())?;
            stray("inclusion", !inclusions.is_empty())?;
            let c = calibration;
            Phantom::Homogeneous(material.unwrap_or([c.alpha0_r, c.beta_r, c.nu_r]))
        }
        "layered" => {
            stray("material", material.is_some())?;
            stray("inclusion", !inclusions.is_empty())?;
            if layers.is_empty() {
                return Err(sec.err(sec.line("phantom"), "phantom = layered needs at least one 'layer' line"));
            }
            let layout = layers
                .iter()
                .map(|&(v, line)| {
                    let [z_start, z_end, alpha_eff, beta, nu] = numbers::<5>(sec, v, line, "layer")?;
                    Ok(Layer {
                        z_start,
                        z_end,
                        alpha_eff,
                        beta,
                        nu,
                    })
                })
                .collect::<Result<Vec<_>>>()?;
            Phantom::Layered(layout)
        }
        "inclusions" => {
            stray("material", material.is_some())?;
            stray("layer", !layers.is_empty())?;
            let list = inclusions
                .iter()
                .map(|&(v, line)| {
                    let [x_center, z_center, radius, bsc_db] = numbers::<4>(sec, v, line, "inclusion")?;
                    if radius.is_nan() || radius <= 0.0 {
                        return Err(sec.err(line, "inclusion radius must be positive"));
                    }
                    Ok(Inclusion {
                        x_center,
                        z_center,
                        radius,
                        bsc_db,
                    })
                })
                .collect::<Result<Vec<_>>>()?;
            Phantom::Inclusions(list)
        }
        other => {
            return Err(sec.err(
                sec.line("phantom"),
                format!("phantom must be homogeneous, layered or inclusions, got '{other}'"),
            ))
        }
    };
    let noise = NoiseSpec {
        sigma0: sec.get("sigma0", 0.0)?,
        slope_fz: sec.get("slope_fz", 0.0)?,
        seed: sec.get("seed", 0u64)?,
    };
    let noise = NoiseSpec {
        seed: seed_override.unwrap_or(noise.seed),
        ..noise
    };
    let frames: usize = sec.get("frames", 1)?;
    if frames == 0 {
        return Err(sec.err(sec.line("frames"), "frames must be at least 1"));
    }
    let response = match sec.raw("response")? {
        Some((v, line)) => numbers::<3>(sec, v, line, "response")?,
        None => [6.5, 2.5, 1.0],
    };
    let specular = match sec.list("specular")? {
        None => Vec::new(),
        Some(v) => v
            .iter()
            .map(|&i| {
                if i >= 0.0 && i.fract() == 0.0 {
                    Ok(i as usize)
                } else {
                    Err(sec.err(sec.line("specular"), format!("specular takes depth indices, got {i}")))
                }
            })
            .collect::<Result<Vec<_>>>()?,
    };
    Ok(Settings {
        freqs,
        depths,
        laterals,
        phantom,
        calibration,
        noise,
        frames,
        center_freq: sec.get("center_freq", 8.0)?,
        spectra: sec.get("spectra", false)?,
        response,
        specular,
        specular_boost: sec.get("specular_boost", 10.0)?,
    })
}

fn join(v: &[f64]) -> String {
    v.iter().map(|x| fmt_f64(*x)).collect::<Vec<_>>().join(", ")
}

fn axis_text(a: AxisSpec) -> String {
    format!("{}, {}, {}", fmt_f64(a.0), fmt_f64(a.1), a.2)
}

/// The `[synth]` section with every default made explicit.
fn manifest_body(s: &Settings, phantom: &Phantom, laterals: &[f64], n_columns: usize) -> String {
    let mut out = String::from("[synth]\n");
    let c = s.calibration;
    let mut kv = |k: &str, v: String| writeln!(out, "{k} = {v}").unwrap();
    kv("freqs", axis_text(s.freqs));
    kv("depths", axis_text(s.depths));
    kv("laterals", axis_text(s.laterals));
    kv("calibration", join(&[c.alpha0_r, c.beta_r, c.nu_r]));
    match phantom {
        Phantom::Homogeneous(m) => {
            kv("phantom", "homogeneous".into());
            kv("material", join(m));
        }
        Phantom::Layered(layers) => {
            kv("phantom", "layered".into());
            for l in layers {
                kv("layer", join(&[l.z_start, l.z_end, l.alpha_eff, l.beta, l.nu]));
            }
        }
        Phantom::Inclusions(list) => {
            kv("phantom", "inclusions".into());
            for i in list {
                kv("inclusion", join(&[i.x_center, i.z_center, i.radius, i.bsc_db]));
            }
        }
    }
    kv("sigma0", fmt_f64(s.noise.sigma0));
    kv("slope_fz", fmt_f64(s.noise.slope_fz));
    kv("seed", s.noise.seed.to_string());
    kv("frames", s.frames.to_string());
    kv("center_freq", fmt_f64(s.center_freq));
    kv("spectra", s.spectra.to_string());
    kv("response", join(&s.response));
    if !s.specular.is_empty() {
        kv("specular", s.specular.iter().map(usize::to_string).collect::<Vec<_>>().join(", "));
    }
    kv("specular_boost", fmt_f64(s.specular_boost));
    out.push_str("\n[dataset]\n");
    writeln!(out, "version = {}", env!("CARGO_PKG_VERSION")).unwrap();
    writeln!(out, "frames = {}", s.frames).unwrap();
    writeln!(out, "columns = {n_columns}").unwrap();
    writeln!(out, "laterals = {}", join(laterals)).unwrap();
    writeln!(out, "spectra = {}", s.spectra).unwrap();
    out
}

pub fn run(ctx: &Context) -> Result<()> {
    let sec = ctx.config.section("synth");
    let s = read_settings(&sec, ctx.seed)?;
    sec.finish()?;

    let grid = SpectralGrid::new(
        linspace(s.freqs.0, s.freqs.1, s.freqs.2),
        linspace(s.depths.0, s.depths.1, s.depths.2),
    )?;
    let laterals = linspace(s.laterals.0, s.laterals.1, s.laterals.2);
    let bg = s.calibration;
    let (columns, phantom): (Vec<PhantomSpec>, Phantom) = match &s.phantom {
        Phantom::Homogeneous(m) => {
            let d = grid.depths();
            let layer = Layer {
                z_start: d[0],
                z_end: d[d.len() - 1],
                alpha_eff: m[0],
                beta: m[1],
                nu: m[2],
            };
            let spec = PhantomSpec::new(vec![layer], grid.clone(), bg)?;
            (vec![spec; laterals.len()], s.phantom.clone())
        }
        Phantom::Layered(layout) => {
            let spec = PhantomSpec::new(layout.clone(), grid.clone(), bg)?;
            (vec![spec; laterals.len()], s.phantom.clone())
        }
        Phantom::Inclusions(list) => {
            let mut p = InclusionPhantom::three_inclusions(grid.clone(), laterals.clone(), bg);
            if !list.is_empty() {
                p.inclusions = list.clone();
            }
            let specs = (0..p.n_columns()).map(|c| p.column_spec(c)).collect::<qus_core::Result<Vec<_>>>()?;
            (specs, Phantom::Inclusions(p.inclusions))
        }
    };

    let mut out = Outputs::default();
    let mut truth: [Vec<Vec<f64>>; 5] = Default::default();
    let response = gaussian_response(grid.freqs(), s.response[0], s.response[1], s.response[2]);
    for (c, spec) in columns.iter().enumerate() {
        let noise = InclusionPhantom::column_noise(&s.noise, c);
        for (k, x) in generate_column(spec, &noise, s.frames)?.iter().enumerate() {
            out.grid(ctx.out_path(x_file(k, c)), GridFile::from_freq_depth(x));
        }
        let params = spec.true_params();
        let field = spec.tissue_field();
        for (slot, v) in truth.iter_mut().zip([params.a, params.b, params.n, field.alpha_eff.clone(), field.bsc_at(s.center_freq)]) {
            slot.push(v);
        }
        if s.spectra {
            let (sample, reference) = generate_spectra_pair(spec, &response, &noise)?;
            let sample = if s.specular.is_empty() {
                sample
            } else {
                inject_specular(&sample, &s.specular, s.specular_boost)?
            };
            out.grid(ctx.out_path(spectra_file("sample", c)), GridFile::from_freq_depth(&sample));
            out.grid(ctx.out_path(spectra_file("reference", c)), GridFile::from_freq_depth(&reference));
        }
    }
    for (name, cols) in MAP_NAMES.iter().zip(&truth) {
        let img = Image::from_columns(cols)?;
        out.grid(ctx.out_path(format!("truth_{name}.csv")), GridFile::from_image(&img, grid.depths(), &laterals));
    }

    let prov = ctx.provenance();
    out.write(prov)?;
    write_text(
        &ctx.out_path(MANIFEST),
        MANIFEST_KIND,
        prov,
        &manifest_body(&s, &phantom, &laterals, columns.len()),
    )
}
