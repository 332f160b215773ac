//! Translation estimation by phase correlation.

use hdcg_core::imgops::reflect_index;
use ndarray::Array2;
use rustfft::num_complex::Complex;
use rustfft::FftPlanner;
use serde::{Deserialize, Serialize};

use crate::error::{same_shape, Result};

/// Translation that maps `moving` onto `reference`: shifting `moving` by
/// `(dy, dx)` with [`apply_shift`] reproduces `reference`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Shift {
    pub dy: f64,
    pub dx: f64,
    /// Height of the phase-correlation peak in `[0, 1]`; 1 for identical
    /// images, 0 when no structure is available to correlate.
    pub peak_confidence: f64,
}

impl Shift {
    pub const ZERO: Shift = Shift {
        dy: 0.0,
        dx: 0.0,
        peak_confidence: 1.0,
    };

    pub fn new(dy: f64, dx: f64) -> Self {
        Shift {
            dy,
            dx,
            peak_confidence: 1.0,
        }
    }

    pub fn is_low_confidence(&self) -> bool {
        self.peak_confidence <= 0.0
    }
}

fn fft2(img: &Array2<f64>, inverse: bool, data: &mut [Complex<f64>], planner: &mut FftPlanner<f64>) {
    let (h, w) = img.dim();
    let (row, col) = if inverse {
        (planner.plan_fft_inverse(w), planner.plan_fft_inverse(h))
    } else {
        (planner.plan_fft_forward(w), planner.plan_fft_forward(h))
    };
    for r in data.chunks_mut(w) {
        row.process(r);
    }
    let mut column = vec![Complex::default(); h];
    for x in 0..w {
        for y in 0..h {
            column[y] = data[y * w + x];
        }
        col.process(&mut column);
        for y in 0..h {
            data[y * w + x] = column[y];
        }
    }
}

fn hann(n: usize) -> Vec<f64> {
    if n < 2 {
        return vec![1.0; n];
    }
    (0..n)
        .map(|i| 0.5 - 0.5 * (2.0 * std::f64::consts::PI * i as f64 / (n - 1) as f64).cos())
        .collect()
}

// Mean-removed and tapered towards the borders so the frame edges do not
// correlate with themselves at zero shift.
fn to_complex(img: &Array2<f64>) -> Vec<Complex<f64>> {
    let (h, w) = img.dim();
    let (wy, wx) = (hann(h), hann(w));
    let mean = img.mean().unwrap_or(0.0);
    img.indexed_iter()
        .map(|((y, x), &v)| Complex::new((v - mean) * wy[y] * wx[x], 0.0))
        .collect()
}

// Vertex offset of a parabola through (-1, a), (0, b), (1, c).
fn parabolic_offset(a: f64, b: f64, c: f64) -> f64 {
    let denom = a - 2.0 * b + c;
    if denom.abs() < 1e-15 {
        return 0.0;
    }
    (0.5 * (a - c) / denom).clamp(-0.5, 0.5)
}

/// Phase correlation between two equally sized images.
pub fn register_translation(reference: &Array2<f64>, moving: &Array2<f64>, subpixel: bool) -> Result<Shift> {
    same_shape(reference, moving)?;
    let (h, w) = reference.dim();
    let mut planner = FftPlanner::new();
    let mut fa = to_complex(reference);
    let mut fb = to_complex(moving);
    fft2(reference, false, &mut fa, &mut planner);
    fft2(moving, false, &mut fb, &mut planner);

    let scale = fa.iter().chain(&fb).map(|c| c.norm()).fold(0.0, f64::max);
    let floor = scale * 1e-12;
    let mut cross: Vec<Complex<f64>> = fa
        .iter()
        .zip(&fb)
        .enumerate()
        .map(|(i, (a, b))| {
            let p = a * b.conj();
            let m = p.norm();
            // DC carries no translation information.
            if i == 0 || m <= floor {
                Complex::default()
            } else {
                p / m
            }
        })
        .collect();
    let n_active = cross.iter().filter(|c| c.norm() > 0.0).count();
    if n_active == 0 {
        return Ok(Shift {
            dy: 0.0,
            dx: 0.0,
            peak_confidence: 0.0,
        });
    }
    fft2(reference, true, &mut cross, &mut planner);
    let surface = Array2::from_shape_fn((h, w), |(y, x)| cross[y * w + x].re / n_active as f64);

    let (mut py, mut px, mut best) = (0, 0, f64::NEG_INFINITY);
    for ((y, x), &v) in surface.indexed_iter() {
        if v > best {
            best = v;
            py = y;
            px = x;
        }
    }
    let wrap = |i: usize, n: usize| -> f64 {
        if i > n / 2 {
            i as f64 - n as f64
        } else {
            i as f64
        }
    };
    let mut dy = wrap(py, h);
    let mut dx = wrap(px, w);
    if subpixel {
        let at = |y: isize, x: isize| surface[[y.rem_euclid(h as isize) as usize, x.rem_euclid(w as isize) as usize]];
        let (y, x) = (py as isize, px as isize);
        if h >= 3 {
            dy += parabolic_offset(at(y - 1, x), best, at(y + 1, x));
        }
        if w >= 3 {
            dx += parabolic_offset(at(y, x - 1), best, at(y, x + 1));
        }
    }
    Ok(Shift {
        dy,
        dx,
        peak_confidence: best.clamp(0.0, 1.0),
    })
}

fn sample_bilinear(img: &Array2<f64>, y: f64, x: f64) -> f64 {
    let (h, w) = img.dim();
    let (y0, x0) = (y.floor(), x.floor());
    let (fy, fx) = (y - y0, x - x0);
    let get = |yy: isize, xx: isize| img[[reflect_index(yy, h), reflect_index(xx, w)]];
    let (y0, x0) = (y0 as isize, x0 as isize);
    let top = get(y0, x0) * (1.0 - fx) + get(y0, x0 + 1) * fx;
    if fy == 0.0 {
        return top;
    }
    let bottom = get(y0 + 1, x0) * (1.0 - fx) + get(y0 + 1, x0 + 1) * fx;
    top * (1.0 - fy) + bottom * fy
}

/// Translates image content by `(dy, dx)`: `out[y, x] = img[y - dy, x - dx]`,
/// with reflected fill and bilinear interpolation.
pub fn apply_shift(img: &Array2<f64>, shift: &Shift) -> Array2<f64> {
    if shift.dy == 0.0 && shift.dx == 0.0 {
        return img.clone();
    }
    Array2::from_shape_fn(img.dim(), |(y, x)| sample_bilinear(img, y as f64 - shift.dy, x as f64 - shift.dx))
}

/// Rows and columns of a shifted image whose source lies fully inside the
/// original frame, as half-open ranges.
pub fn valid_overlap(dim: (usize, usize), shift: &Shift) -> (std::ops::Range<usize>, std::ops::Range<usize>) {
    let axis = |n: usize, d: f64| {
        let lo = d.ceil().max(0.0) as usize;
        let hi = ((n as f64 - 1.0 + d).floor() + 1.0).clamp(0.0, n as f64) as usize;
        lo.min(hi)..hi
    };
    (axis(dim.0, shift.dy), axis(dim.1, shift.dx))
}

#[cfg(test)]
mod tests {
    use super::*;

    fn texture(h: usize, w: usize) -> Array2<f64> {
        Array2::from_shape_fn((h, w), |(y, x)| {
            let (y, x) = (y as f64, x as f64);
            0.5 + 0.2 * (0.37 * x + 0.11 * y).sin() + 0.15 * (0.23 * y - 0.05 * x * x / 9.0).cos() + 0.1 * ((x * 7.0 + y * 13.0) % 5.0) / 5.0
        })
    }

    #[test]
    fn identity_gives_zero_shift() {
        let t = texture(32, 40);
        let s = register_translation(&t, &t, true).unwrap();
        assert!(s.dy.abs() < 1e-12 && s.dx.abs() < 1e-12);
        let s = register_translation(&t, &t, false).unwrap();
        assert_eq!((s.dy, s.dx), (0.0, 0.0));
        assert!((s.peak_confidence - 1.0).abs() < 1e-9);
    }

    #[test]
    fn constant_images_are_low_confidence() {
        let c = Array2::from_elem((16, 16), 0.3);
        let s = register_translation(&c, &c, false).unwrap();
        assert!(s.is_low_confidence());
        assert_eq!((s.dy, s.dx), (0.0, 0.0));
    }

    #[test]
    fn zero_shift_is_identity() {
        let t = texture(10, 12);
        assert_eq!(apply_shift(&t, &Shift::new(0.0, 0.0)), t);
    }

    #[test]
    fn valid_overlap_ranges() {
        let (r, c) = valid_overlap((10, 8), &Shift::new(2.0, -3.0));
        assert_eq!((r, c), (2..10, 0..5));
        let (r, _) = valid_overlap((10, 8), &Shift::new(0.5, 0.0));
        assert_eq!(r, 1..10);
    }
}
