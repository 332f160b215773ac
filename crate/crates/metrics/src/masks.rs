//! Signal and background masks for the contrast measures.

use hdcg_core::imgops::{gaussian_blur, Boundary};
use ndarray::Array2;
use serde::{Deserialize, Serialize};

use crate::contour::{fill_even_odd, find_contours, signed_area, Contour};
use crate::error::{MetricError, Result};

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Level {
    Auto,
    Value(f64),
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct MaskConfig {
    /// Retina outline level; `Auto` uses Otsu on the smoothed image.
    pub level_retina: Level,
    /// Bright-layer level; `Auto` uses a percentile inside the retina.
    pub level_signal: Level,
    pub signal_percentile: f64,
    pub smoothing_sigma: f64,
    pub background_margin: usize,
}

impl Default for MaskConfig {
    fn default() -> Self {
        MaskConfig {
            level_retina: Level::Auto,
            level_signal: Level::Auto,
            signal_percentile: 75.0,
            smoothing_sigma: 3.0,
            background_margin: 3,
        }
    }
}

impl MaskConfig {
    pub fn with_levels(retina: f64, signal: f64) -> Self {
        MaskConfig {
            level_retina: Level::Value(retina),
            level_signal: Level::Value(signal),
            ..MaskConfig::default()
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct MaskPair {
    pub signal: Array2<bool>,
    pub background: Array2<bool>,
    pub retina: Array2<bool>,
    pub retina_contour: Contour,
    pub level_retina: f64,
    pub level_signal: f64,
}

/// Otsu threshold over a 256-bin histogram spanning the value range.
pub fn otsu_threshold(values: &[f64]) -> f64 {
    let (lo, hi) = values.iter().fold((f64::INFINITY, f64::NEG_INFINITY), |(a, b), &v| (a.min(v), b.max(v)));
    if !(hi > lo) {
        return lo;
    }
    const BINS: usize = 256;
    let width = (hi - lo) / BINS as f64;
    let mut hist = [0usize; BINS];
    for &v in values {
        hist[(((v - lo) / width) as usize).min(BINS - 1)] += 1;
    }
    let centre = |i: usize| lo + (i as f64 + 0.5) * width;
    let total = values.len() as f64;
    let sum_all: f64 = (0..BINS).map(|i| hist[i] as f64 * centre(i)).sum();
    let (mut w0, mut sum0) = (0.0, 0.0);
    let (mut best, mut best_i) = (-1.0, 0);
    for i in 0..BINS - 1 {
        w0 += hist[i] as f64;
        sum0 += hist[i] as f64 * centre(i);
        let w1 = total - w0;
        if w0 == 0.0 || w1 == 0.0 {
            continue;
        }
        let d = sum0 / w0 - (sum_all - sum0) / w1;
        let between = w0 * w1 * d * d;
        if between > best {
            best = between;
            best_i = i;
        }
    }
    lo + (best_i as f64 + 1.0) * width
}

/// Linear-interpolated percentile (`q` in `[0, 100]`).
pub fn percentile(values: &mut [f64], q: f64) -> f64 {
    values.sort_by(f64::total_cmp);
    let pos = q / 100.0 * (values.len() - 1) as f64;
    let i = pos.floor() as usize;
    let j = (i + 1).min(values.len() - 1);
    values[i] + (pos - i as f64) * (values[j] - values[i])
}

// Marks pixels within Chebyshev distance `r` of any set pixel.
fn dilate(mask: &Array2<bool>, r: usize) -> Array2<bool> {
    let (h, w) = mask.dim();
    let mut rows = Array2::from_elem((h, w), false);
    for y in 0..h {
        for x in 0..w {
            let a = x.saturating_sub(r);
            let b = (x + r).min(w - 1);
            rows[[y, x]] = (a..=b).any(|c| mask[[y, c]]);
        }
    }
    Array2::from_shape_fn((h, w), |(y, x)| {
        let a = y.saturating_sub(r);
        let b = (y + r).min(h - 1);
        (a..=b).any(|rr| rows[[rr, x]])
    })
}

fn resolve(level: Level, auto: impl FnOnce() -> f64) -> f64 {
    match level {
        Level::Value(v) => v,
        Level::Auto => auto(),
    }
}

/// Smooths the image, outlines the retina as the largest closed contour at
/// the retina level, takes the complement (minus a safety margin) as
/// background, and the regions inside the retina above the signal level as
/// signal.
pub fn extract_masks(img: &Array2<f64>, cfg: &MaskConfig) -> Result<MaskPair> {
    let smooth = gaussian_blur(img, cfg.smoothing_sigma, Boundary::Zero);
    let level_retina = resolve(cfg.level_retina, || otsu_threshold(smooth.as_slice().unwrap()));

    let contours = find_contours(&smooth, level_retina);
    let largest = contours
        .iter()
        .max_by(|a, b| signed_area(a).abs().total_cmp(&signed_area(b).abs()))
        .ok_or_else(|| MetricError::MaskExtraction(format!("no closed contour at level {level_retina:.4}")))?;
    let retina = fill_even_odd(&[largest], img.dim());
    if !retina.iter().any(|&v| v) {
        return Err(MetricError::MaskExtraction("retina contour encloses no pixel".into()));
    }
    let background = dilate(&retina, cfg.background_margin).mapv(|v| !v);

    let level_signal = resolve(cfg.level_signal, || {
        let mut inside: Vec<f64> = smooth.iter().zip(&retina).filter(|(_, &m)| m).map(|(&v, _)| v).collect();
        percentile(&mut inside, cfg.signal_percentile)
    });
    let floor = smooth.iter().cloned().fold(f64::INFINITY, f64::min).min(level_signal) - 1.0;
    let restricted = Array2::from_shape_fn(img.dim(), |i| if retina[i] { smooth[i] } else { floor });
    let signal_contours = find_contours(&restricted, level_signal);
    let refs: Vec<&Contour> = signal_contours.iter().collect();
    let mut signal = fill_even_odd(&refs, img.dim());
    signal.zip_mut_with(&retina, |s, &r| *s &= r);

    if !signal.iter().any(|&v| v) {
        return Err(MetricError::MaskExtraction(format!("empty signal mask at level {level_signal:.4}")));
    }
    if !background.iter().any(|&v| v) {
        return Err(MetricError::MaskExtraction("empty background mask".into()));
    }
    Ok(MaskPair {
        signal,
        background,
        retina,
        retina_contour: largest.clone(),
        level_retina,
        level_signal,
    })
}
