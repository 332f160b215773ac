//! PNG / TIFF reading and writing for single-channel b-scans.

use std::path::Path;

use image::{DynamicImage, ImageBuffer, ImageFormat, Luma};
use ndarray::Array2;

use crate::bscan::{BScan, Domain};
use crate::error::{DataError, Result};

/// Sample depth used when writing an image.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum BitDepth {
    Eight,
    #[default]
    Sixteen,
}

/// Reads an 8- or 16-bit grayscale PNG/TIFF and scales it to `[0, 1]` by the
/// bit-depth maximum.
pub fn load_bscan(path: impl AsRef<Path>, domain: Domain) -> Result<BScan> {
    let path = path.as_ref();
    let bytes = std::fs::read(path).map_err(|e| DataError::io(path, e))?;
    let format = image::guess_format(&bytes)
        .map_err(|e| DataError::Format(format!("{}: {e}", path.display())))?;
    if !matches!(format, ImageFormat::Png | ImageFormat::Tiff) {
        return Err(DataError::Format(format!(
            "{}: only PNG and TIFF are supported, found {format:?}",
            path.display()
        )));
    }
    let img = image::load_from_memory_with_format(&bytes, format)
        .map_err(|e| DataError::Format(format!("{}: {e}", path.display())))?;
    let source_id = path.to_string_lossy().into_owned();
    let pixels = match img {
        DynamicImage::ImageLuma8(buf) => {
            let (w, h) = buf.dimensions();
            to_array(h, w, buf.as_raw().iter().map(|&v| v as f64 / u8::MAX as f64))
        }
        DynamicImage::ImageLuma16(buf) => {
            let (w, h) = buf.dimensions();
            to_array(h, w, buf.as_raw().iter().map(|&v| v as f64 / u16::MAX as f64))
        }
        other => {
            return Err(DataError::Format(format!(
                "{}: expected a single-channel image, found {:?}",
                path.display(),
                other.color()
            )))
        }
    };
    BScan::new(pixels, domain, source_id)
}

fn to_array(h: u32, w: u32, values: impl Iterator<Item = f64>) -> Array2<f64> {
    Array2::from_shape_vec((h as usize, w as usize), values.collect())
        .expect("decoder returned a buffer of the advertised size")
}

/// Writes a b-scan as grayscale PNG or TIFF depending on the file extension.
pub fn save_bscan(path: impl AsRef<Path>, img: &BScan, depth: BitDepth) -> Result<()> {
    let path = path.as_ref();
    let format = ImageFormat::from_path(path)
        .map_err(|e| DataError::Format(format!("{}: {e}", path.display())))?;
    if !matches!(format, ImageFormat::Png | ImageFormat::Tiff) {
        return Err(DataError::Format(format!(
            "{}: only PNG and TIFF output is supported",
            path.display()
        )));
    }
    if let Some(parent) = path.parent().filter(|p| !p.as_os_str().is_empty()) {
        std::fs::create_dir_all(parent).map_err(|e| DataError::io(parent, e))?;
    }
    let (h, w) = img.dim();
    let dynimg = match depth {
        BitDepth::Eight => {
            let raw: Vec<u8> = img.pixels().iter().map(|&v| quantize(v, u8::MAX as f64) as u8).collect();
            DynamicImage::ImageLuma8(
                ImageBuffer::<Luma<u8>, _>::from_raw(w as u32, h as u32, raw).expect("sized buffer"),
            )
        }
        BitDepth::Sixteen => {
            let raw: Vec<u16> = img.pixels().iter().map(|&v| quantize(v, u16::MAX as f64) as u16).collect();
            DynamicImage::ImageLuma16(
                ImageBuffer::<Luma<u16>, _>::from_raw(w as u32, h as u32, raw).expect("sized buffer"),
            )
        }
    };
    dynimg
        .save_with_format(path, format)
        .map_err(|e| DataError::Format(format!("{}: {e}", path.display())))
}

fn quantize(v: f64, max: f64) -> f64 {
    (v.clamp(0.0, 1.0) * max).round()
}
