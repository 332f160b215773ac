//! Debug rendering of extracted masks over the source image.

use std::path::Path;

use image::{Rgb, RgbImage};
use ndarray::Array2;

use crate::error::{MetricError, Result};
use crate::masks::MaskPair;

const BACKGROUND_TINT: [f64; 3] = [0.2, 0.4, 1.0];
const SIGNAL_TINT: [f64; 3] = [0.2, 1.0, 0.3];
const CONTOUR: Rgb<u8> = Rgb([255, 40, 40]);

/// Grey image with the background tinted blue, the signal tinted green and
/// the retina outline drawn in red.
pub fn mask_overlay(img: &Array2<f64>, masks: &MaskPair) -> RgbImage {
    let (h, w) = img.dim();
    let mut out = RgbImage::new(w as u32, h as u32);
    for ((y, x), &v) in img.indexed_iter() {
        let g = v.clamp(0.0, 1.0);
        let tint = if masks.signal[[y, x]] {
            Some(SIGNAL_TINT)
        } else if masks.background[[y, x]] {
            Some(BACKGROUND_TINT)
        } else {
            None
        };
        let px = match tint {
            Some(t) => t.map(|c| ((0.55 * g + 0.45 * c * (0.3 + 0.7 * g)) * 255.0).round() as u8),
            None => [(g * 255.0).round() as u8; 3],
        };
        out.put_pixel(x as u32, y as u32, Rgb(px));
    }
    let c = &masks.retina_contour;
    for i in 0..c.len() {
        let [y0, x0] = c[i];
        let [y1, x1] = c[(i + 1) % c.len()];
        let steps = ((y1 - y0).abs().max((x1 - x0).abs()).ceil() as usize).max(1);
        for s in 0..=steps {
            let t = s as f64 / steps as f64;
            let (y, x) = ((y0 + t * (y1 - y0)).round(), (x0 + t * (x1 - x0)).round());
            if y >= 0.0 && x >= 0.0 && (y as usize) < h && (x as usize) < w {
                out.put_pixel(x as u32, y as u32, CONTOUR);
            }
        }
    }
    out
}

pub fn save_mask_overlay(path: impl AsRef<Path>, img: &Array2<f64>, masks: &MaskPair) -> Result<()> {
    let path = path.as_ref();
    if let Some(parent) = path.parent().filter(|p| !p.as_os_str().is_empty()) {
        std::fs::create_dir_all(parent)?;
    }
    mask_overlay(img, masks)
        .save(path)
        .map_err(|e| MetricError::Io(std::io::Error::other(e)))
}
