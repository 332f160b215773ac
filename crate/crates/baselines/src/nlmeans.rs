use hdcg_core::imgops::reflect_index;
use ndarray::Array2;
use serde::{Deserialize, Serialize};

use crate::error::{odd, positive, BaselineError, Result};

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct NlMeansParams {
    pub patch: usize,
    pub search: usize,
    pub h: f64,
}

impl Default for NlMeansParams {
    fn default() -> Self {
        NlMeansParams {
            patch: 5,
            search: 15,
            h: 0.15,
        }
    }
}

/// Non-local means. The distance between two patches is the mean squared
/// difference over the patch; a neighbour at distance `d` gets weight
/// `exp(-d / h^2)`. Every pixel of the search window, the centre included,
/// contributes.
pub fn nlmeans_denoise(img: &Array2<f64>, patch: usize, search: usize, h: f64) -> Result<Array2<f64>> {
    odd("patch", patch)?;
    odd("search", search)?;
    positive("h", h)?;
    if patch > search {
        return Err(BaselineError::Param(format!("patch {patch} larger than search {search}")));
    }
    let (rows, cols) = img.dim();
    let pr = (patch / 2) as isize;
    let sr = (search / 2) as isize;
    // Padded copy so every patch of every search candidate is in range.
    let m = pr + sr;
    let (ph, pw) = (rows + 2 * m as usize, cols + 2 * m as usize);
    let padded = Array2::from_shape_fn((ph, pw), |(y, x)| img[[reflect_index(y as isize - m, rows), reflect_index(x as isize - m, cols)]]);
    let inv_h2 = if h.is_infinite() { 0.0 } else { 1.0 / (h * h) };
    let npatch = (patch * patch) as f64;

    let mut num = Array2::<f64>::zeros((rows, cols));
    let mut den = Array2::<f64>::zeros((rows, cols));
    // For each displacement, box-sum the squared differences with an
    // integral image, then accumulate weights for every pixel at once.
    let mut diff = Array2::<f64>::zeros((ph, pw));
    let mut integral = Array2::<f64>::zeros((ph + 1, pw + 1));
    for dy in -sr..=sr {
        for dx in -sr..=sr {
            for y in 0..ph {
                for x in 0..pw {
                    let yy = y as isize + dy;
                    let xx = x as isize + dx;
                    diff[[y, x]] = if yy >= 0 && xx >= 0 && (yy as usize) < ph && (xx as usize) < pw {
                        let d = padded[[y, x]] - padded[[yy as usize, xx as usize]];
                        d * d
                    } else {
                        0.0
                    };
                }
            }
            for y in 0..ph {
                let mut run = 0.0;
                for x in 0..pw {
                    run += diff[[y, x]];
                    integral[[y + 1, x + 1]] = integral[[y, x + 1]] + run;
                }
            }
            for y in 0..rows {
                for x in 0..cols {
                    let (cy, cx) = (y as isize + m, x as isize + m);
                    let (y0, y1) = ((cy - pr) as usize, (cy + pr + 1) as usize);
                    let (x0, x1) = ((cx - pr) as usize, (cx + pr + 1) as usize);
                    let ssd = integral[[y1, x1]] - integral[[y0, x1]] - integral[[y1, x0]] + integral[[y0, x0]];
                    let wgt = (-(ssd / npatch).max(0.0) * inv_h2).exp();
                    num[[y, x]] += wgt * padded[[(cy + dy) as usize, (cx + dx) as usize]];
                    den[[y, x]] += wgt;
                }
            }
        }
    }
    Ok(num / den)
}
