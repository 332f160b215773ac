//! Pseudo-coloured feature-map overlays and labelled PNG grids.

use std::path::Path;

use hdcg_core::imgops::resize_bilinear;
use hdcg_core::BScan;
use image::{Rgb, RgbImage};
use ndarray::Array2;

use crate::error::{InspectionError, Result};
use crate::features::{normalize_unit, FeatureMapSet};

/// Piecewise-linear "jet" colormap on [0, 1].
pub fn jet(v: f64) -> [u8; 3] {
    let v = if v.is_finite() { v.clamp(0.0, 1.0) } else { 0.0 };
    let ch = |c: f64| ((1.5 - (4.0 * v - c).abs()).clamp(0.0, 1.0) * 255.0).round() as u8;
    [ch(3.0), ch(2.0), ch(1.0)]
}

fn gray(v: f64) -> u8 {
    (v.clamp(0.0, 1.0) * 255.0).round() as u8
}

/// Blends the colour-mapped `map` (resized to the b-scan, min-max scaled)
/// over the grayscale b-scan. `alpha` is the weight of the map.
pub fn overlay(img: &BScan, map: &Array2<f64>, alpha: f64) -> Result<RgbImage> {
    if !(0.0..=1.0).contains(&alpha) {
        return Err(InspectionError::Param(format!("alpha must be in [0, 1], got {alpha}")));
    }
    if map.is_empty() {
        return Err(InspectionError::Shape("empty map".into()));
    }
    let (h, w) = img.dim();
    let m = normalize_unit(&resize_bilinear(map, h, w));
    let px = img.pixels();
    Ok(RgbImage::from_fn(w as u32, h as u32, |x, y| {
        let (y, x) = (y as usize, x as usize);
        let g = px[[y, x]].clamp(0.0, 1.0) * 255.0;
        let c = jet(m[[y, x]]);
        Rgb(c.map(|cv| ((1.0 - alpha) * g + alpha * cv as f64).round() as u8))
    }))
}

/// Grayscale rendering of a [0, 1] array.
pub fn render_gray(a: &Array2<f64>) -> RgbImage {
    let (h, w) = a.dim();
    RgbImage::from_fn(w as u32, h as u32, |x, y| {
        let g = gray(a[[y as usize, x as usize]]);
        Rgb([g, g, g])
    })
}

/// Colour-mapped rendering of a min-max scaled array.
pub fn render_jet(a: &Array2<f64>) -> RgbImage {
    let m = normalize_unit(a);
    let (h, w) = m.dim();
    RgbImage::from_fn(w as u32, h as u32, |x, y| Rgb(jet(m[[y as usize, x as usize]])))
}

const LABEL_HEIGHT: u32 = 9;
const GAP: u32 = 2;

/// One row per channel: input | overlay | map, each `img`-sized, with a
/// "<layer> CH <n>" label above the row.
pub fn feature_grid(img: &BScan, set: &FeatureMapSet, channels: &[usize], alpha: f64) -> Result<RgbImage> {
    if channels.is_empty() {
        return Err(InspectionError::Param("no channels selected".into()));
    }
    if let Some(&c) = channels.iter().find(|&&c| c >= set.n_channels()) {
        return Err(InspectionError::Param(format!(
            "channel {c} out of range for {} channels",
            set.n_channels()
        )));
    }
    let (h, w) = (img.height() as u32, img.width() as u32);
    let row_h = LABEL_HEIGHT + h + GAP;
    let mut out = RgbImage::from_pixel(3 * w + 2 * GAP, row_h * channels.len() as u32, Rgb([255, 255, 255]));
    let input = render_gray(img.pixels());
    for (r, &c) in channels.iter().enumerate() {
        let top = r as u32 * row_h;
        draw_text(&mut out, 1, top + 1, &format!("{} ch {c}", set.layer_name), Rgb([0, 0, 0]));
        let map = resize_bilinear(&set.maps[c], h as usize, w as usize);
        let tiles = [input.clone(), overlay(img, &set.maps[c], alpha)?, render_jet(&map)];
        for (i, tile) in tiles.iter().enumerate() {
            image::imageops::replace(&mut out, tile, (i as u32 * (w + GAP)) as i64, (top + LABEL_HEIGHT) as i64);
        }
    }
    Ok(out)
}

pub fn save_feature_grid(
    path: impl AsRef<Path>,
    img: &BScan,
    set: &FeatureMapSet,
    channels: &[usize],
    alpha: f64,
) -> Result<()> {
    feature_grid(img, set, channels, alpha)?.save(path)?;
    Ok(())
}

// 3x5 glyphs, one row per u8 (low three bits, MSB on the left).
fn glyph(c: char) -> [u8; 5] {
    match c.to_ascii_uppercase() {
        '0' => [7, 5, 5, 5, 7],
        '1' => [2, 6, 2, 2, 7],
        '2' => [7, 1, 7, 4, 7],
        '3' => [7, 1, 3, 1, 7],
        '4' => [5, 5, 7, 1, 1],
        '5' => [7, 4, 7, 1, 7],
        '6' => [7, 4, 7, 5, 7],
        '7' => [7, 1, 1, 2, 2],
        '8' => [7, 5, 7, 5, 7],
        '9' => [7, 5, 7, 1, 7],
        'A' => [2, 5, 7, 5, 5],
        'B' => [6, 5, 6, 5, 6],
        'C' => [3, 4, 4, 4, 3],
        'D' => [6, 5, 5, 5, 6],
        'E' => [7, 4, 6, 4, 7],
        'F' => [7, 4, 6, 4, 4],
        'G' => [3, 4, 5, 5, 3],
        'H' => [5, 5, 7, 5, 5],
        'I' => [7, 2, 2, 2, 7],
        'J' => [1, 1, 1, 5, 2],
        'K' => [5, 5, 6, 5, 5],
        'L' => [4, 4, 4, 4, 7],
        'M' => [5, 7, 7, 5, 5],
        'N' => [6, 5, 5, 5, 5],
        'O' => [2, 5, 5, 5, 2],
        'P' => [6, 5, 6, 4, 4],
        'Q' => [2, 5, 5, 6, 3],
        'R' => [6, 5, 6, 5, 5],
        'S' => [3, 4, 2, 1, 6],
        'T' => [7, 2, 2, 2, 2],
        'U' => [5, 5, 5, 5, 7],
        'V' => [5, 5, 5, 5, 2],
        'W' => [5, 5, 7, 7, 5],
        'X' => [5, 5, 2, 5, 5],
        'Y' => [5, 5, 2, 2, 2],
        'Z' => [7, 1, 2, 4, 7],
        '-' => [0, 0, 7, 0, 0],
        '.' => [0, 0, 0, 0, 2],
        ':' => [0, 2, 0, 2, 0],
        _ => [0; 5],
    }
}

/// Draws `text` at scale 1 (4 px advance); clipped to the canvas.
pub fn draw_text(canvas: &mut RgbImage, x0: u32, y0: u32, text: &str, color: Rgb<u8>) {
    for (i, ch) in text.chars().enumerate() {
        let gx = x0 + 4 * i as u32;
        for (r, bits) in glyph(ch).iter().enumerate() {
            for b in 0..3u32 {
                if bits >> (2 - b) & 1 == 1 {
                    let (x, y) = (gx + b, y0 + r as u32);
                    if x < canvas.width() && y < canvas.height() {
                        canvas.put_pixel(x, y, color);
                    }
                }
            }
        }
    }
}
