//! Orthogonal wavelet shrinkage.
//!
//! The image is reflect-padded to a multiple of `2^levels` (plus a margin of
//! one filter length) and transformed with a periodised orthonormal DWT, so
//! a zero threshold reconstructs the input to round-off.

use ndarray::{s, Array2};
use serde::{Deserialize, Serialize};

use crate::error::{BaselineError, Result};
use hdcg_core::imgops::reflect_index;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize, Default)]
#[serde(rename_all = "snake_case")]
pub enum Wavelet {
    Haar,
    Db2,
    #[default]
    Db4,
}

const HAAR: [f64; 2] = [std::f64::consts::FRAC_1_SQRT_2, std::f64::consts::FRAC_1_SQRT_2];
const DB2: [f64; 4] = [-0.12940952255126037, 0.2241438680420134, 0.8365163037378079, 0.48296291314453416];
const DB4: [f64; 8] = [
    -0.010597401785069032,
    0.0328830116668852,
    0.030841381835560764,
    -0.18703481171909309,
    -0.027983769416859854,
    0.6308807679298589,
    0.7148465705529157,
    0.2303778133088965,
];

impl Wavelet {
    /// Decomposition low-pass filter.
    pub fn lowpass(self) -> &'static [f64] {
        match self {
            Wavelet::Haar => &HAAR,
            Wavelet::Db2 => &DB2,
            Wavelet::Db4 => &DB4,
        }
    }

    /// Quadrature-mirror high-pass filter.
    pub fn highpass(self) -> Vec<f64> {
        let h = self.lowpass();
        let l = h.len();
        (0..l).map(|k| if k % 2 == 0 { 1.0 } else { -1.0 } * h[l - 1 - k]).collect()
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize, Default)]
#[serde(rename_all = "snake_case")]
pub enum ThresholdRule {
    /// Per-subband BayesShrink threshold `sigma^2 / sigma_x`.
    #[default]
    Bayes,
    /// `sigma * sqrt(2 ln N)` for every subband.
    Universal,
}

fn analysis_1d(x: &[f64], lo: &[f64], hi: &[f64], a: &mut [f64], d: &mut [f64]) {
    let n = x.len();
    for i in 0..n / 2 {
        let (mut sa, mut sd) = (0.0, 0.0);
        for k in 0..lo.len() {
            let v = x[(2 * i + k) % n];
            sa += lo[k] * v;
            sd += hi[k] * v;
        }
        a[i] = sa;
        d[i] = sd;
    }
}

fn synthesis_1d(a: &[f64], d: &[f64], lo: &[f64], hi: &[f64], x: &mut [f64]) {
    let n = 2 * a.len();
    x.iter_mut().for_each(|v| *v = 0.0);
    for i in 0..a.len() {
        for k in 0..lo.len() {
            x[(2 * i + k) % n] += lo[k] * a[i] + hi[k] * d[i];
        }
    }
}

/// Detail subbands of one level: horizontal, vertical, diagonal.
#[derive(Debug, Clone)]
pub struct Details {
    pub lh: Array2<f64>,
    pub hl: Array2<f64>,
    pub hh: Array2<f64>,
}

/// One level of the separable 2D transform. Both sides must be even.
pub fn dwt2(x: &Array2<f64>, w: Wavelet) -> (Array2<f64>, Details) {
    let (h, wd) = x.dim();
    let (lo, hi) = (w.lowpass(), w.highpass());
    let mut rows_lo = Array2::zeros((h, wd / 2));
    let mut rows_hi = Array2::zeros((h, wd / 2));
    let (mut a, mut d) = (vec![0.0; wd / 2], vec![0.0; wd / 2]);
    for r in 0..h {
        let line: Vec<f64> = x.row(r).to_vec();
        analysis_1d(&line, lo, &hi, &mut a, &mut d);
        rows_lo.row_mut(r).assign(&ndarray::ArrayView1::from(&a));
        rows_hi.row_mut(r).assign(&ndarray::ArrayView1::from(&d));
    }
    let cols = |m: &Array2<f64>| -> (Array2<f64>, Array2<f64>) {
        let mut l = Array2::zeros((h / 2, wd / 2));
        let mut g = Array2::zeros((h / 2, wd / 2));
        let (mut a, mut d) = (vec![0.0; h / 2], vec![0.0; h / 2]);
        for c in 0..wd / 2 {
            let line: Vec<f64> = m.column(c).to_vec();
            analysis_1d(&line, lo, &hi, &mut a, &mut d);
            l.column_mut(c).assign(&ndarray::ArrayView1::from(&a));
            g.column_mut(c).assign(&ndarray::ArrayView1::from(&d));
        }
        (l, g)
    };
    let (ll, lh) = cols(&rows_lo);
    let (hl, hh) = cols(&rows_hi);
    (ll, Details { lh, hl, hh })
}

pub fn idwt2(ll: &Array2<f64>, det: &Details, w: Wavelet) -> Array2<f64> {
    let (h2, w2) = ll.dim();
    let (lo, hi) = (w.lowpass(), w.highpass());
    let cols = |l: &Array2<f64>, g: &Array2<f64>| -> Array2<f64> {
        let mut out = Array2::zeros((2 * h2, w2));
        let mut x = vec![0.0; 2 * h2];
        for c in 0..w2 {
            synthesis_1d(&l.column(c).to_vec(), &g.column(c).to_vec(), lo, &hi, &mut x);
            out.column_mut(c).assign(&ndarray::ArrayView1::from(&x));
        }
        out
    };
    let rows_lo = cols(ll, &det.lh);
    let rows_hi = cols(&det.hl, &det.hh);
    let mut out = Array2::zeros((2 * h2, 2 * w2));
    let mut x = vec![0.0; 2 * w2];
    for r in 0..2 * h2 {
        synthesis_1d(&rows_lo.row(r).to_vec(), &rows_hi.row(r).to_vec(), lo, &hi, &mut x);
        out.row_mut(r).assign(&ndarray::ArrayView1::from(&x));
    }
    out
}

/// Reflect-pads so both sides become multiples of `2^levels`, with at least
/// `margin` extra pixels on every side. Returns the padded image and the
/// offset of the original inside it.
pub(crate) fn pad_for_levels(img: &Array2<f64>, levels: usize, margin: usize) -> (Array2<f64>, (usize, usize)) {
    let (h, w) = img.dim();
    let m = 1usize << levels;
    let size = |n: usize| (n + 2 * margin).div_ceil(m) * m;
    let (ph, pw) = (size(h), size(w));
    let padded = Array2::from_shape_fn((ph, pw), |(y, x)| {
        img[[
            reflect_index(y as isize - margin as isize, h),
            reflect_index(x as isize - margin as isize, w),
        ]]
    });
    (padded, (margin, margin))
}

/// Robust noise level: median absolute finest diagonal coefficient / 0.6745.
pub fn estimate_noise_sigma(img: &Array2<f64>) -> f64 {
    let (padded, (oy, ox)) = pad_for_levels(img, 1, 0);
    let (_, det) = dwt2(&padded, Wavelet::Db2);
    let (h, w) = img.dim();
    let mut v: Vec<f64> = det
        .hh
        .slice(s![oy / 2..(oy + h) / 2, ox / 2..(ox + w) / 2])
        .iter()
        .map(|c| c.abs())
        .collect();
    if v.is_empty() {
        return 0.0;
    }
    v.sort_by(f64::total_cmp);
    let n = v.len();
    let med = if n % 2 == 1 { v[n / 2] } else { 0.5 * (v[n / 2 - 1] + v[n / 2]) };
    med / 0.6745
}

fn soft(c: &mut Array2<f64>, t: f64) {
    c.mapv_inplace(|v| v.signum() * (v.abs() - t).max(0.0));
}

fn bayes_threshold(c: &Array2<f64>, sigma: f64) -> f64 {
    let var = c.iter().map(|v| v * v).sum::<f64>() / c.len() as f64;
    let sx = (var - sigma * sigma).max(0.0).sqrt();
    if sx == 0.0 {
        c.iter().fold(0.0f64, |m, v| m.max(v.abs()))
    } else {
        sigma * sigma / sx
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct WaveletParams {
    pub wavelet: Wavelet,
    pub rule: ThresholdRule,
    pub levels: usize,
    /// Noise level; estimated from the image when absent.
    pub sigma: Option<f64>,
    /// Multiplies every threshold. Zero turns shrinkage off.
    pub threshold_scale: f64,
}

impl Default for WaveletParams {
    fn default() -> Self {
        WaveletParams {
            wavelet: Wavelet::Db4,
            rule: ThresholdRule::Universal,
            levels: 3,
            sigma: None,
            threshold_scale: 2.0,
        }
    }
}

/// Soft-thresholds all detail subbands and reconstructs, clipped to [0, 1].
pub fn wavelet_denoise(img: &Array2<f64>, p: &WaveletParams) -> Result<Array2<f64>> {
    let (h, w) = img.dim();
    let flen = p.wavelet.lowpass().len();
    if p.levels == 0 {
        return Err(BaselineError::Param("levels must be >= 1".into()));
    }
    // The coarsest level must still hold a full filter support.
    let coarsest = h.min(w) >> (p.levels - 1).min(usize::BITS as usize - 1);
    if p.levels >= usize::BITS as usize || coarsest < flen {
        return Err(BaselineError::Param(format!(
            "{} levels infeasible for a {h}x{w} image with a {flen}-tap filter",
            p.levels
        )));
    }
    if !(p.threshold_scale >= 0.0) {
        return Err(BaselineError::Param("threshold_scale must be >= 0".into()));
    }
    let sigma = match p.sigma {
        Some(s) if s >= 0.0 => s,
        Some(s) => return Err(BaselineError::Param(format!("sigma must be >= 0, got {s}"))),
        None => estimate_noise_sigma(img),
    };
    let (padded, (oy, ox)) = pad_for_levels(img, p.levels, flen);
    let mut approx = padded;
    let mut stack = Vec::with_capacity(p.levels);
    for _ in 0..p.levels {
        let (ll, det) = dwt2(&approx, p.wavelet);
        stack.push(det);
        approx = ll;
    }
    let universal = sigma * (2.0 * ((h * w) as f64).ln()).sqrt();
    for det in &mut stack {
        for band in [&mut det.lh, &mut det.hl, &mut det.hh] {
            let t = match p.rule {
                ThresholdRule::Universal => universal,
                ThresholdRule::Bayes => bayes_threshold(band, sigma),
            };
            soft(band, t * p.threshold_scale);
        }
    }
    for det in stack.iter().rev() {
        approx = idwt2(&approx, det, p.wavelet);
    }
    Ok(approx.slice(s![oy..oy + h, ox..ox + w]).mapv(|v| v.clamp(0.0, 1.0)))
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn filters_are_orthonormal() {
        for w in [Wavelet::Haar, Wavelet::Db2, Wavelet::Db4] {
            let h = w.lowpass();
            let g = w.highpass();
            assert!((h.iter().map(|v| v * v).sum::<f64>() - 1.0).abs() < 1e-14);
            assert!((h.iter().sum::<f64>() - 2f64.sqrt()).abs() < 1e-12);
            // Orthogonal to even shifts of itself and of the high-pass.
            for shift in (2..h.len()).step_by(2) {
                let dot: f64 = (0..h.len() - shift).map(|k| h[k] * h[k + shift]).sum();
                assert!(dot.abs() < 1e-14, "{w:?} shift {shift}");
            }
            assert!(h.iter().zip(&g).map(|(a, b)| a * b).sum::<f64>().abs() < 1e-12);
        }
    }

    #[test]
    fn single_level_round_trip() {
        let x = Array2::from_shape_fn((16, 12), |(y, x)| ((y * 7 + x * 3) % 11) as f64 / 11.0);
        for w in [Wavelet::Haar, Wavelet::Db2, Wavelet::Db4] {
            let (ll, det) = dwt2(&x, w);
            let back = idwt2(&ll, &det, w);
            let err = (&back - &x).mapv(f64::abs).fold(0.0f64, |m, &v| m.max(v));
            assert!(err < 1e-12, "{w:?}: {err}");
        }
    }

    #[test]
    fn noise_estimate_on_flat_image_is_zero() {
        assert!(estimate_noise_sigma(&Array2::from_elem((20, 20), 0.3)) < 1e-15);
    }

    #[test]
    fn infeasible_levels_are_rejected() {
        let img = Array2::from_elem((32, 32), 0.5);
        let p = WaveletParams {
            levels: 4,
            ..WaveletParams::default()
        };
        assert!(wavelet_denoise(&img, &p).is_err());
        let p = WaveletParams {
            levels: 0,
            ..WaveletParams::default()
        };
        assert!(wavelet_denoise(&img, &p).is_err());
        let p = WaveletParams {
            levels: 3,
            ..WaveletParams::default()
        };
        assert!(wavelet_denoise(&img, &p).is_ok());
    }
}
