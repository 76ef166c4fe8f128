//! CSV containers.
//!
//! A grid file is
//!
//! ```text
//! # qus-map v1, rows=depth(cm), cols=freq(MHz), command=synth, config=<sha256>
//! depth(cm),3e0,3.5e0,4e0
//! 5e-1,0.1e0,0.2e0,0.3e0
//! ...
//! ```
//!
//! The second line holds the column axis, every data line starts with its
//! row-axis value. Numbers are written in shortest round-trip exponent form,
//! so reading a file back reproduces the values bit for bit. RF frames use
//! the same layout with kind `qus-rf` (rows are axial samples, columns lines).
//! Tables (reports, metrics, sweeps) share the header line and are plain
//! comma-separated rows.

use std::fmt::Write as _;
use std::path::Path;

use qus_core::metrics::Image;
use qus_core::model::{FreqDepthMap, SpectralGrid};

use crate::error::{CliError, Result};

pub const MAP_KIND: &str = "qus-map v1";
pub const RF_KIND: &str = "qus-rf v1";

pub const DEPTH: &str = "depth(cm)";
pub const FREQ: &str = "freq(MHz)";
pub const LATERAL: &str = "lateral(cm)";

/// Who wrote a file, recorded in its first line.
#[derive(Debug, Clone, Copy)]
pub struct Provenance<'a> {
    pub command: &'a str,
    pub config_hash: &'a str,
}

impl Provenance<'_> {
    fn header(&self, kind: &str, extra: &str) -> String {
        format!("# {kind}{extra}, command={}, config={}\n", self.command, self.config_hash)
    }
}

pub fn fmt_f64(v: f64) -> String {
    format!("{v:e}")
}

fn write_file(path: &Path, text: &str) -> Result<()> {
    if let Some(dir) = path.parent() {
        if !dir.as_os_str().is_empty() {
            std::fs::create_dir_all(dir).map_err(|e| CliError::io(dir, e))?;
        }
    }
    std::fs::write(path, text).map_err(|e| CliError::io(path, e))
}

fn read_file(path: &Path) -> Result<String> {
    if !path.exists() {
        return Err(CliError::MissingPath(path.to_path_buf()));
    }
    std::fs::read_to_string(path).map_err(|e| CliError::io(path, e))
}

/// A dense row-major grid with labelled axes.
#[derive(Debug, Clone, PartialEq)]
pub struct GridFile {
    pub row_label: String,
    pub col_label: String,
    pub rows: Vec<f64>,
    pub cols: Vec<f64>,
    pub data: Vec<f64>,
}

impl GridFile {
    pub fn new(row_label: &str, col_label: &str, rows: Vec<f64>, cols: Vec<f64>, data: Vec<f64>) -> Self {
        assert_eq!(rows.len() * cols.len(), data.len(), "grid shape");
        Self {
            row_label: row_label.to_string(),
            col_label: col_label.to_string(),
            rows,
            cols,
            data,
        }
    }

    pub fn n_rows(&self) -> usize {
        self.rows.len()
    }

    pub fn n_cols(&self) -> usize {
        self.cols.len()
    }

    pub fn get(&self, r: usize, c: usize) -> f64 {
        self.data[r * self.cols.len() + c]
    }

    /// Depth × frequency map.
    pub fn from_freq_depth(map: &FreqDepthMap) -> Self {
        let g = map.grid();
        Self::new(DEPTH, FREQ, g.depths().to_vec(), g.freqs().to_vec(), map.values().to_vec())
    }

    pub fn to_freq_depth(&self, path: &Path) -> Result<FreqDepthMap> {
        self.expect_axes(path, DEPTH, FREQ)?;
        let grid = SpectralGrid::new(self.cols.clone(), self.rows.clone())?;
        Ok(FreqDepthMap::new(grid, self.data.clone())?)
    }

    /// Depth × lateral image.
    pub fn from_image(img: &Image, depths: &[f64], laterals: &[f64]) -> Self {
        Self::new(DEPTH, LATERAL, depths.to_vec(), laterals.to_vec(), img.values().to_vec())
    }

    pub fn to_image(&self, path: &Path) -> Result<Image> {
        self.expect_axes(path, DEPTH, LATERAL)?;
        Ok(Image::new(self.n_rows(), self.n_cols(), self.data.clone())?)
    }

    pub fn expect_axes(&self, path: &Path, rows: &str, cols: &str) -> Result<()> {
        if self.row_label != rows || self.col_label != cols {
            return Err(CliError::Parse {
                path: path.to_path_buf(),
                line: 1,
                col: 1,
                msg: format!(
                    "expected rows={rows}, cols={cols}; found rows={}, cols={}",
                    self.row_label, self.col_label
                ),
            });
        }
        Ok(())
    }

    pub fn write(&self, path: &Path, kind: &str, prov: Provenance<'_>) -> Result<()> {
        let mut out = prov.header(kind, &format!(", rows={}, cols={}", self.row_label, self.col_label));
        out.push_str(&self.row_label);
        for c in &self.cols {
            write!(out, ",{}", fmt_f64(*c)).unwrap();
        }
        out.push('\n');
        for (r, z) in self.rows.iter().enumerate() {
            out.push_str(&fmt_f64(*z));
            for v in &self.data[r * self.cols.len()..(r + 1) * self.cols.len()] {
                write!(out, ",{}", fmt_f64(*v)).unwrap();
            }
            out.push('\n');
        }
        write_file(path, &out)
    }

    pub fn read(path: &Path, kind: &str) -> Result<Self> {
        let text = read_file(path)?;
        Self::parse(&text, path, kind)
    }

    pub fn parse(text: &str, path: &Path, kind: &str) -> Result<Self> {
        let err = |line: usize, col: usize, msg: String| CliError::Parse {
            path: path.to_path_buf(),
            line,
            col,
            msg,
        };
        let mut lines = text.lines().enumerate().map(|(k, l)| (k + 1, l));
        let (_, header) = lines.next().ok_or_else(|| err(1, 1, "empty file".into()))?;
        let fields = header
            .strip_prefix("# ")
            .and_then(|h| h.strip_prefix(kind))
            .ok_or_else(|| err(1, 1, format!("expected a '# {kind}' header")))?;
        let mut row_label = None;
        let mut col_label = None;
        for f in fields.split(',').map(str::trim) {
            if let Some(v) = f.strip_prefix("rows=") {
                row_label = Some(v.to_string());
            } else if let Some(v) = f.strip_prefix("cols=") {
                col_label = Some(v.to_string());
            }
        }
        let row_label = row_label.ok_or_else(|| err(1, 1, "header lacks rows=".into()))?;
        let col_label = col_label.ok_or_else(|| err(1, 1, "header lacks cols=".into()))?;

        let number = |s: &str, line: usize, col: usize| {
            s.trim()
                .parse::<f64>()
                .map_err(|_| err(line, col, format!("not a number: '{}'", s.trim())))
        };
        let (axis_line, axis) = lines.next().ok_or_else(|| err(2, 1, "missing axis row".into()))?;
        let mut cells = axis.split(',');
        let label = cells.next().unwrap_or("").trim();
        if label != row_label {
            return Err(err(axis_line, 1, format!("axis row should start with '{row_label}', found '{label}'")));
        }
        let cols = cells
            .enumerate()
            .map(|(k, s)| number(s, axis_line, k + 2))
            .collect::<Result<Vec<f64>>>()?;
        if cols.is_empty() {
            return Err(err(axis_line, 2, "axis row has no values".into()));
        }
        let mut rows = Vec::new();
        let mut data = Vec::new();
        for (line, l) in lines {
            if l.trim().is_empty() {
                continue;
            }
            let cells: Vec<&str> = l.split(',').collect();
            if cells.len() != cols.len() + 1 {
                return Err(err(
                    line,
                    cells.len().min(cols.len() + 1),
                    format!("expected {} fields, found {}", cols.len() + 1, cells.len()),
                ));
            }
            rows.push(number(cells[0], line, 1)?);
            for (k, s) in cells[1..].iter().enumerate() {
                data.push(number(s, line, k + 2)?);
            }
        }
        if rows.is_empty() {
            return Err(err(3, 1, "no data rows".into()));
        }
        Ok(Self {
            row_label,
            col_label,
            rows,
            cols,
            data,
        })
    }
}

/// Comma-separated table with a provenance header and a column-name row.
pub fn write_table(path: &Path, kind: &str, prov: Provenance<'_>, columns: &[&str], rows: &[Vec<String>]) -> Result<()> {
    let mut out = prov.header(kind, "");
    out.push_str(&columns.join(","));
    out.push('\n');
    for r in rows {
        debug_assert_eq!(r.len(), columns.len());
        out.push_str(&r.join(","));
        out.push('\n');
    }
    write_file(path, &out)
}

/// Rows of a table written by [`write_table`], keyed by the column names.
pub fn read_table(path: &Path, kind: &str) -> Result<(Vec<String>, Vec<Vec<String>>)> {
    let text = read_file(path)?;
    let err = |line: usize, msg: String| CliError::Parse {
        path: path.to_path_buf(),
        line,
        col: 1,
        msg,
    };
    let mut lines = text.lines();
    let header = lines.next().unwrap_or("");
    if !header.starts_with(&format!("# {kind}")) {
        return Err(err(1, format!("expected a '# {kind}' header")));
    }
    let columns: Vec<String> = lines
        .next()
        .ok_or_else(|| err(2, "missing column names".into()))?
        .split(',')
        .map(str::to_string)
        .collect();
    let mut rows = Vec::new();
    for (k, l) in lines.enumerate() {
        let cells: Vec<String> = l.split(',').map(str::to_string).collect();
        if cells.len() != columns.len() {
            return Err(err(k + 3, format!("expected {} fields, found {}", columns.len(), cells.len())));
        }
        rows.push(cells);
    }
    Ok((columns, rows))
}

/// Plain text with the provenance header (manifests).
pub fn write_text(path: &Path, kind: &str, prov: Provenance<'_>, body: &str) -> Result<()> {
    let mut out = prov.header(kind, "");
    out.push_str(body);
    write_file(path, &out)
}
