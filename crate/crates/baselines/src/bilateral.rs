use hdcg_core::imgops::reflect_index;
use ndarray::Array2;
use serde::{Deserialize, Serialize};

use crate::error::{positive, Result};

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct BilateralParams {
    pub sigma_spatial: f64,
    pub sigma_range: f64,
}

impl Default for BilateralParams {
    fn default() -> Self {
        BilateralParams {
            sigma_spatial: 1.0,
            sigma_range: 1.0,
        }
    }
}

/// Window half-width used for a spatial sigma.
pub fn bilateral_radius(sigma_spatial: f64) -> usize {
    (3.0 * sigma_spatial).ceil().max(1.0) as usize
}

/// Gaussian-in-space times Gaussian-in-intensity weighting over a
/// `2 * ceil(3 sigma_spatial) + 1` square window, reflect padded.
pub fn bilateral_denoise(img: &Array2<f64>, sigma_spatial: f64, sigma_range: f64) -> Result<Array2<f64>> {
    positive("sigma_spatial", sigma_spatial)?;
    positive("sigma_range", sigma_range)?;
    let (h, w) = img.dim();
    let r = bilateral_radius(sigma_spatial) as isize;
    let side = (2 * r + 1) as usize;
    let mut spatial = vec![0.0; side * side];
    for dy in -r..=r {
        for dx in -r..=r {
            spatial[((dy + r) as usize) * side + (dx + r) as usize] = (-((dy * dy + dx * dx) as f64) / (2.0 * sigma_spatial * sigma_spatial)).exp();
        }
    }
    let inv_range = 1.0 / (2.0 * sigma_range * sigma_range);
    let mut out = Array2::zeros((h, w));
    for y in 0..h {
        for x in 0..w {
            let c = img[[y, x]];
            let (mut num, mut den) = (0.0, 0.0);
            for dy in -r..=r {
                let yy = reflect_index(y as isize + dy, h);
                for dx in -r..=r {
                    let v = img[[yy, reflect_index(x as isize + dx, w)]];
                    let wgt = spatial[((dy + r) as usize) * side + (dx + r) as usize] * (-(v - c) * (v - c) * inv_range).exp();
                    num += wgt * v;
                    den += wgt;
                }
            }
            out[[y, x]] = num / den;
        }
    }
    Ok(out)
}
