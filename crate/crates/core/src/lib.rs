//! Attenuation and backscatter estimation from reference-normalized
//! ultrasound spectra.
//!
//! The log ratio of sample to reference power spectra is modeled per depth
//! `z` and frequency `f` as
//!
//! ```text
//! X(f, z) = −4 a f z + b + n ln f
//! ```
//!
//! with `a` the attenuation difference (Np/cm/MHz), `b` the log BSC
//! magnitude ratio and `n` the BSC exponent difference. Columns are solved
//! independently with least squares, a closed-form L2 penalty or ADMM with
//! L1 / mixed difference penalties along depth.

// Index loops mirror the matrix notation; negated comparisons keep NaN on
// the rejecting side.
#![allow(clippy::needless_range_loop, clippy::neg_cmp_op_on_partial_ord)]

pub mod assembly;
pub mod banded;
pub mod error;
pub mod metrics;
pub mod model;
pub mod solvers;
pub mod spectra;
pub mod synth;
pub mod weighting;

pub use error::{QusError, Result};
pub use model::{
    FreqDepthMap, LogRatioMap, ParamColumn, ReferenceCalibration, SpectralGrid, SpectrumMap, TissueField,
};
pub use solvers::{EstimatorConfig, Method, SolverConfig};
