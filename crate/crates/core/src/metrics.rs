//! ROI bias and variance of parametric images.

use std::ops::Range;

use crate::error::{QusError, Result};

/// Depth × lateral image, row-major by depth.
#[derive(Debug, Clone, PartialEq)]
pub struct Image {
    n_depths: usize,
    n_laterals: usize,
    data: Vec<f64>,
}

impl Image {
    pub fn new(n_depths: usize, n_laterals: usize, data: Vec<f64>) -> Result<Self> {
        if data.len() != n_depths * n_laterals {
            return Err(QusError::Dimension(format!(
                "{} values for a {n_depths}x{n_laterals} image",
                data.len()
            )));
        }
        Ok(Self {
            n_depths,
            n_laterals,
            data,
        })
    }

    pub fn filled(n_depths: usize, n_laterals: usize, value: f64) -> Self {
        Self {
            n_depths,
            n_laterals,
            data: vec![value; n_depths * n_laterals],
        }
    }

    pub fn from_fn(n_depths: usize, n_laterals: usize, mut f: impl FnMut(usize, usize) -> f64) -> Self {
        let mut data = Vec::with_capacity(n_depths * n_laterals);
        for i in 0..n_depths {
            for c in 0..n_laterals {
                data.push(f(i, c));
            }
        }
        Self {
            n_depths,
            n_laterals,
            data,
        }
    }

    /// Builds an image from per-column depth profiles.
    pub fn from_columns(columns: &[Vec<f64>]) -> Result<Self> {
        let n_depths = columns.first().map_or(0, Vec::len);
        if columns.iter().any(|c| c.len() != n_depths) {
            return Err(QusError::Dimension("columns differ in length".into()));
        }
        Ok(Self::from_fn(n_depths, columns.len(), |i, c| columns[c][i]))
    }

    pub fn n_depths(&self) -> usize {
        self.n_depths
    }

    pub fn n_laterals(&self) -> usize {
        self.n_laterals
    }

    pub fn values(&self) -> &[f64] {
        &self.data
    }

    pub fn get(&self, depth: usize, lateral: usize) -> f64 {
        self.data[depth * self.n_laterals + lateral]
    }

    pub fn row(&self, depth: usize) -> &[f64] {
        &self.data[depth * self.n_laterals..(depth + 1) * self.n_laterals]
    }

    pub fn map(&self, f: impl Fn(f64) -> f64) -> Self {
        Self {
            data: self.data.iter().map(|&v| f(v)).collect(),
            ..*self
        }
    }

    fn same_shape(&self, other: &Self) -> bool {
        self.n_depths == other.n_depths && self.n_laterals == other.n_laterals
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct RoiSpec {
    pub name: String,
    pub depths: Range<usize>,
    pub laterals: Range<usize>,
}

impl RoiSpec {
    pub fn new(name: impl Into<String>, depths: Range<usize>, laterals: Range<usize>) -> Self {
        Self {
            name: name.into(),
            depths,
            laterals,
        }
    }

    pub fn len(&self) -> usize {
        self.depths.len() * self.laterals.len()
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }

    pub fn check(&self, image: &Image) -> Result<()> {
        if self.is_empty() {
            return Err(QusError::Empty(format!("ROI '{}' is empty", self.name)));
        }
        if self.depths.end > image.n_depths {
            return Err(QusError::OutOfRange {
                index: self.depths.end - 1,
                len: image.n_depths,
            });
        }
        if self.laterals.end > image.n_laterals {
            return Err(QusError::OutOfRange {
                index: self.laterals.end - 1,
                len: image.n_laterals,
            });
        }
        Ok(())
    }

    /// Cell values of `image` inside the ROI, depth-major.
    pub fn extract(&self, image: &Image) -> Result<Vec<f64>> {
        self.check(image)?;
        Ok(self
            .depths
            .clone()
            .flat_map(|i| self.laterals.clone().map(move |c| (i, c)))
            .map(|(i, c)| image.get(i, c))
            .collect())
    }
}

/// Which index set the variance runs over.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum VarianceMode {
    /// Sample variance over ROI cells of the frame-averaged map.
    #[default]
    RoiCells,
    /// Per-cell sample variance across frames, averaged over the ROI.
    AcrossFrames,
}

impl VarianceMode {
    pub fn as_str(&self) -> &'static str {
        match self {
            VarianceMode::RoiCells => "roi_cells",
            VarianceMode::AcrossFrames => "across_frames",
        }
    }
}

impl std::str::FromStr for VarianceMode {
    type Err = QusError;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "roi_cells" => Ok(VarianceMode::RoiCells),
            "across_frames" => Ok(VarianceMode::AcrossFrames),
            _ => Err(QusError::InvalidParameter(format!("unknown variance mode '{s}'"))),
        }
    }
}

/// Mean that returns the common value unchanged when all inputs agree.
fn mean(v: &[f64]) -> f64 {
    let first = v[0];
    if v.iter().all(|&x| x == first) {
        return first;
    }
    v.iter().sum::<f64>() / v.len() as f64
}

/// Two-pass sample variance; zero for a single value.
fn sample_variance(v: &[f64]) -> f64 {
    if v.len() < 2 {
        return 0.0;
    }
    let m = mean(v);
    v.iter().map(|x| (x - m) * (x - m)).sum::<f64>() / (v.len() - 1) as f64
}

/// Element-wise mean across frames.
pub fn frame_average(frames: &[Image]) -> Result<Image> {
    let first = frames
        .first()
        .ok_or_else(|| QusError::Empty("no frames to average".into()))?;
    if frames.iter().any(|f| !f.same_shape(first)) {
        return Err(QusError::Dimension("frames differ in shape".into()));
    }
    let mut cell = vec![0.0; frames.len()];
    let data = (0..first.data.len())
        .map(|j| {
            for (slot, f) in cell.iter_mut().zip(frames) {
                *slot = f.data[j];
            }
            mean(&cell)
        })
        .collect();
    Ok(Image { data, ..*first })
}

/// `(|mean(M) − gt|, var(M))` over the given ROI cells.
pub fn bias_variance_attenuation(roi_values: &[f64], gt: f64) -> Result<(f64, f64)> {
    if roi_values.is_empty() {
        return Err(QusError::Empty("ROI has no cells".into()));
    }
    Ok(((mean(roi_values) - gt).abs(), sample_variance(roi_values)))
}

/// `10·log₁₀(v / 10⁻⁴)`.
pub fn bsc_to_db(v: f64) -> f64 {
    10.0 * (v.log10() + 4.0)
}

fn bsc_db_checked(v: &[f64]) -> Result<Vec<f64>> {
    v.iter()
        .enumerate()
        .map(|(j, &x)| {
            if x > 0.0 && x.is_finite() {
                Ok(bsc_to_db(x))
            } else {
                Err(QusError::NonPositive {
                    freq: 0,
                    depth: j,
                    value: x,
                })
            }
        })
        .collect()
}

/// Bias and variance after mapping every BSC value to dB re 10⁻⁴.
pub fn bias_variance_bsc_db(roi_values: &[f64], gt: f64) -> Result<(f64, f64)> {
    if roi_values.is_empty() {
        return Err(QusError::Empty("ROI has no cells".into()));
    }
    let gt_db = bsc_db_checked(&[gt])?[0];
    let db = bsc_db_checked(roi_values)?;
    Ok(((mean(&db) - gt_db).abs(), sample_variance(&db)))
}

#[derive(Debug, Clone, PartialEq)]
pub struct RoiMetrics {
    pub name: String,
    pub bias_alpha: f64,
    pub var_alpha: f64,
    pub bias_bsc_db: f64,
    pub var_bsc_db: f64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct MetricsReport {
    pub variance_mode: VarianceMode,
    pub rois: Vec<RoiMetrics>,
}

/// Ground-truth value of an ROI: the mean of the truth map over its cells.
fn roi_truth(roi: &RoiSpec, gt: &Image) -> Result<f64> {
    Ok(mean(&roi.extract(gt)?))
}

fn across_frames_variance(roi: &RoiSpec, frames: &[Image], transform: impl Fn(&[f64]) -> Result<Vec<f64>>) -> Result<f64> {
    let per_frame = frames
        .iter()
        .map(|f| roi.extract(f).and_then(|v| transform(&v)))
        .collect::<Result<Vec<_>>>()?;
    let mut cell = vec![0.0; frames.len()];
    let vars: Vec<f64> = (0..roi.len())
        .map(|j| {
            for (slot, f) in cell.iter_mut().zip(&per_frame) {
                *slot = f[j];
            }
            sample_variance(&cell)
        })
        .collect();
    Ok(mean(&vars))
}

/// Evaluates attenuation (dB/cm/MHz) and BSC frames against truth maps.
pub fn evaluate_rois(
    alpha_frames: &[Image],
    bsc_frames: &[Image],
    gt_alpha: &Image,
    gt_bsc: &Image,
    rois: &[RoiSpec],
    mode: VarianceMode,
) -> Result<MetricsReport> {
    let m_alpha = frame_average(alpha_frames)?;
    let m_bsc = frame_average(bsc_frames)?;
    if !m_alpha.same_shape(gt_alpha) || !m_bsc.same_shape(gt_bsc) || !m_alpha.same_shape(&m_bsc) {
        return Err(QusError::Dimension("estimate and truth maps differ in shape".into()));
    }
    let rois = rois
        .iter()
        .map(|roi| {
            let (bias_alpha, mut var_alpha) = bias_variance_attenuation(&roi.extract(&m_alpha)?, roi_truth(roi, gt_alpha)?)?;
            let (bias_bsc_db, mut var_bsc_db) = bias_variance_bsc_db(&roi.extract(&m_bsc)?, roi_truth(roi, gt_bsc)?)?;
            if mode == VarianceMode::AcrossFrames {
                var_alpha = across_frames_variance(roi, alpha_frames, |v| Ok(v.to_vec()))?;
                var_bsc_db = across_frames_variance(roi, bsc_frames, bsc_db_checked)?;
            }
            Ok(RoiMetrics {
                name: roi.name.clone(),
                bias_alpha,
                var_alpha,
                bias_bsc_db,
                var_bsc_db,
            })
        })
        .collect::<Result<Vec<_>>>()?;
    Ok(MetricsReport {
        variance_mode: mode,
        rois,
    })
}
