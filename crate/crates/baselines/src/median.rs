use hdcg_core::imgops::median_filter;
use ndarray::Array2;
use serde::{Deserialize, Serialize};

use crate::error::{odd, Result};

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct MedianParams {
    pub window: usize,
}

impl Default for MedianParams {
    fn default() -> Self {
        MedianParams { window: 5 }
    }
}

/// Square median filter with reflect padding.
pub fn median_denoise(img: &Array2<f64>, window: usize) -> Result<Array2<f64>> {
    odd("window", window)?;
    if window == 1 {
        return Ok(img.clone());
    }
    Ok(median_filter(img, window))
}
