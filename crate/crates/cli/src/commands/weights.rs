//! `qus weights`: the data-term weighting pipeline, exported per column.
//!
//! ```text
//! [weights]
//! sample = s0.csv, s1.csv       # or manifest / rf_sample+rf_reference
//! reference = ref.csv
//! band_fraction = 0.5
//! upper_fraction = 0.5
//! lower_fraction = 1.67
//! floor = 0.1
//! combine_mode = both           # both | reference_only
//! ```
//!
//! Writes `w_s`, `w_r`, `w_d_raw` (combined, before the floor shift) and
//! `w_d` as depth × frequency maps per column, `bands.csv` with the selected
//! frequency band per depth, and `summary.csv` flagging columns that fell
//! back to uniform weights.

use super::{weight_sets, Outputs};
use crate::error::Result;
use crate::format::{fmt_f64, write_table, GridFile};
use crate::{inputs, Context};

pub const BANDS_KIND: &str = "qus-bands v1";
pub const SUMMARY_KIND: &str = "qus-weights v1";

pub fn weight_file(name: &str, column: usize) -> String {
    format!("{name}_c{column:04}.csv")
}

pub fn run(ctx: &Context) -> Result<()> {
    let sec = ctx.config.section("weights");
    let data = inputs::load(&sec)?;
    let sets = weight_sets(&sec, &data)?;
    sec.finish()?;

    let mut out = Outputs::default();
    let mut bands = Vec::new();
    let mut summary = Vec::new();
    for (c, set) in sets.iter().enumerate() {
        for (name, w) in [("w_s", &set.w_s), ("w_r", &set.w_r), ("w_d_raw", &set.w_d_raw), ("w_d", &set.w_d)] {
            out.grid(ctx.out_path(weight_file(name, c)), GridFile::from_freq_depth(w.as_map()));
        }
        let grid = set.w_d.grid();
        let (freqs, depths) = (grid.freqs(), grid.depths());
        for (phantom, ranges) in [("sample", &set.band_sample), ("reference", &set.band_reference)] {
            for (i, r) in ranges.iter().enumerate() {
                bands.push(vec![
                    c.to_string(),
                    phantom.to_string(),
                    i.to_string(),
                    fmt_f64(depths[i]),
                    r.start().to_string(),
                    r.end().to_string(),
                    fmt_f64(freqs[*r.start()]),
                    fmt_f64(freqs[*r.end()]),
                ]);
            }
        }
        if set.fallback_uniform {
            log::warn!("column {c}: degenerate weights, fell back to uniform");
        }
        summary.push(vec![c.to_string(), fmt_f64(data.laterals[c]), set.fallback_uniform.to_string()]);
    }

    let prov = ctx.provenance();
    out.write(prov)?;
    write_table(
        &ctx.out_path("bands.csv"),
        BANDS_KIND,
        prov,
        &["column", "phantom", "depth_index", "depth(cm)", "first", "last", "f_first(MHz)", "f_last(MHz)"],
        &bands,
    )?;
    write_table(
        &ctx.out_path("summary.csv"),
        SUMMARY_KIND,
        prov,
        &["column", "lateral(cm)", "fallback_uniform"],
        &summary,
    )
}
