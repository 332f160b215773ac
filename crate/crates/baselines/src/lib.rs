//! Classical single-image denoisers used as comparison baselines.
//!
//! All filters take intensities in `[0, 1]`, use reflect boundary handling,
//! and return images clipped to `[0, 1]`. They are pure functions of the
//! input and parameters.

pub mod bilateral;
pub mod bm3d;
pub mod error;
pub mod median;
pub mod nlmeans;
pub mod run;
pub mod wavelet;

pub use bilateral::{bilateral_denoise, BilateralParams};
pub use bm3d::{bm3d_denoise, Bm3dParams};
pub use error::{BaselineError, Result};
pub use median::{median_denoise, MedianParams};
pub use nlmeans::{nlmeans_denoise, NlMeansParams};
pub use run::{denoise, run_baseline, run_baseline_repeated, BaselineParams, DenoiserParams, Method};
pub use wavelet::{estimate_noise_sigma, wavelet_denoise, ThresholdRule, Wavelet, WaveletParams};
