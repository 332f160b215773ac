//! Image-quality measurement for denoising experiments.
//!
//! * registration of a denoised image onto its reference (phase correlation)
//! * full-reference measures: PSNR and SSIM
//! * mask-based measures: CNR and MSR, with masks found by iso-contouring
//! * per-method aggregate reports and a wall-clock runtime benchmark
//!
//! All intensities are taken to have data range 1. Standard deviations are
//! population values throughout. Degenerate cases (zero MSE, zero spread)
//! return infinite sentinels rather than errors.

pub mod contour;
pub mod contrast;
pub mod error;
pub mod masks;
pub mod overlay;
pub mod quality;
pub mod registration;
pub mod report;
pub mod runtime;

pub use contrast::{cnr, msr};
pub use error::{MetricError, Result};
pub use masks::{extract_masks, Level, MaskConfig, MaskPair};
pub use overlay::{mask_overlay, save_mask_overlay};
pub use quality::{mse, psnr, ssim};
pub use registration::{apply_shift, register_translation, Shift};
pub use report::{evaluate_method, EvalConfig, Evaluation, MetricReport, MetricRow, SampleMetrics, Stat};
pub use runtime::{benchmark_runtime, RuntimeReport, RuntimeRow};
