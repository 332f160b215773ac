//! Two-stage block-matching and 3D filtering, simplified.
//!
//! Stage 1 groups similar blocks of the noisy image, hard-thresholds their
//! 3D spectrum (orthonormal 2D DCT per block, Haar across the group) and
//! aggregates the estimates. Stage 2 re-matches on the stage-1 estimate and
//! applies an empirical Wiener filter with the stage-1 groups as pilot.
//! The group mean (3D DC coefficient) is never shrunk.

use ndarray::Array2;
use serde::{Deserialize, Serialize};

use crate::error::{positive, BaselineError, Result};

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct Bm3dParams {
    /// Noise level; estimated from the image when absent.
    pub sigma: Option<f64>,
    pub block: usize,
    pub search: usize,
    pub max_group: usize,
    pub step: usize,
    /// Hard threshold in units of sigma.
    pub lambda_3d: f64,
    /// Stage-1 matching threshold on the mean squared block difference, on
    /// top of the `2 sigma^2` expected between two noisy copies of a block.
    pub tau_match_1: f64,
    /// Stage-2 threshold, applied to blocks of the stage-1 estimate.
    pub tau_match_2: f64,
}

impl Default for Bm3dParams {
    fn default() -> Self {
        Bm3dParams {
            sigma: Some(0.2),
            block: 8,
            search: 39,
            max_group: 16,
            step: 3,
            lambda_3d: 2.7,
            tau_match_1: 0.0384,
            tau_match_2: 0.0062,
        }
    }
}

/// Orthonormal DCT-II matrix, `c[k][n]`.
fn dct_matrix(n: usize) -> Vec<f64> {
    let mut m = vec![0.0; n * n];
    for k in 0..n {
        let a = if k == 0 { (1.0 / n as f64).sqrt() } else { (2.0 / n as f64).sqrt() };
        for i in 0..n {
            m[k * n + i] = a * (std::f64::consts::PI * (2 * i + 1) as f64 * k as f64 / (2 * n) as f64).cos();
        }
    }
    m
}

struct Transform {
    n: usize,
    c: Vec<f64>,
}

impl Transform {
    fn new(n: usize) -> Self {
        Transform { n, c: dct_matrix(n) }
    }

    // C X C^T
    fn forward(&self, x: &[f64], out: &mut [f64]) {
        let n = self.n;
        let mut tmp = vec![0.0; n * n];
        for k in 0..n {
            for j in 0..n {
                tmp[k * n + j] = (0..n).map(|i| self.c[k * n + i] * x[i * n + j]).sum();
            }
        }
        for k in 0..n {
            for l in 0..n {
                out[k * n + l] = (0..n).map(|j| tmp[k * n + j] * self.c[l * n + j]).sum();
            }
        }
    }

    // C^T Y C
    fn inverse(&self, y: &[f64], out: &mut [f64]) {
        let n = self.n;
        let mut tmp = vec![0.0; n * n];
        for i in 0..n {
            for l in 0..n {
                tmp[i * n + l] = (0..n).map(|k| self.c[k * n + i] * y[k * n + l]).sum();
            }
        }
        for i in 0..n {
            for j in 0..n {
                out[i * n + j] = (0..n).map(|l| tmp[i * n + l] * self.c[l * n + j]).sum();
            }
        }
    }
}

/// Orthonormal Haar transform along the group axis; `len` is a power of two.
/// `data` holds `len` vectors of `stride` values each. Output ordering puts
/// the overall mean coefficient first.
fn haar_forward(data: &mut [f64], len: usize, stride: usize) {
    let s = std::f64::consts::FRAC_1_SQRT_2;
    let mut tmp = vec![0.0; len];
    for e in 0..stride {
        let mut n = len;
        while n > 1 {
            for i in 0..n / 2 {
                let (a, b) = (data[2 * i * stride + e], data[(2 * i + 1) * stride + e]);
                tmp[i] = (a + b) * s;
                tmp[n / 2 + i] = (a - b) * s;
            }
            for i in 0..n {
                data[i * stride + e] = tmp[i];
            }
            n /= 2;
        }
    }
}

fn haar_inverse(data: &mut [f64], len: usize, stride: usize) {
    let s = std::f64::consts::FRAC_1_SQRT_2;
    let mut tmp = vec![0.0; len];
    for e in 0..stride {
        let mut n = 2;
        while n <= len {
            for i in 0..n / 2 {
                let (a, d) = (data[i * stride + e], data[(n / 2 + i) * stride + e]);
                tmp[2 * i] = (a + d) * s;
                tmp[2 * i + 1] = (a - d) * s;
            }
            for i in 0..n {
                data[i * stride + e] = tmp[i];
            }
            n *= 2;
        }
    }
}

fn positions(n: usize, block: usize, step: usize) -> Vec<usize> {
    let last = n - block;
    let mut p: Vec<usize> = (0..=last).step_by(step).collect();
    if *p.last().unwrap() != last {
        p.push(last);
    }
    p
}

fn block_at(img: &Array2<f64>, y: usize, x: usize, b: usize, out: &mut [f64]) {
    for i in 0..b {
        for j in 0..b {
            out[i * b + j] = img[[y + i, x + j]];
        }
    }
}

/// Up to `max_group` blocks closest to the reference block at `(y, x)`,
/// nearest first, truncated to a power of two. The reference is always
/// first.
fn match_blocks(img: &Array2<f64>, y: usize, x: usize, p: &Bm3dParams, tau: f64) -> Vec<(usize, usize)> {
    let (h, w) = img.dim();
    let b = p.block;
    let r = (p.search / 2) as isize;
    let y0 = (y as isize - r).max(0) as usize;
    let y1 = ((y as isize + r) as usize).min(h - b);
    let x0 = (x as isize - r).max(0) as usize;
    let x1 = ((x as isize + r) as usize).min(w - b);
    let nb = (b * b) as f64;
    let mut found: Vec<(f64, usize, usize)> = Vec::new();
    for cy in y0..=y1 {
        for cx in x0..=x1 {
            if cy == y && cx == x {
                continue;
            }
            let mut d = 0.0;
            'rows: for i in 0..b {
                for j in 0..b {
                    let e = img[[y + i, x + j]] - img[[cy + i, cx + j]];
                    d += e * e;
                }
                if d / nb > tau {
                    break 'rows;
                }
            }
            let d = d / nb;
            if d <= tau {
                found.push((d, cy, cx));
            }
        }
    }
    found.sort_by(|a, b| a.0.total_cmp(&b.0).then((a.1, a.2).cmp(&(b.1, b.2))));
    let mut group = vec![(y, x)];
    group.extend(found.into_iter().take(p.max_group.saturating_sub(1)).map(|(_, cy, cx)| (cy, cx)));
    let keep = 1usize << (usize::BITS - 1 - group.len().leading_zeros());
    group.truncate(keep);
    group
}

struct Accumulator {
    num: Array2<f64>,
    den: Array2<f64>,
}

impl Accumulator {
    fn new(dim: (usize, usize)) -> Self {
        Accumulator {
            num: Array2::zeros(dim),
            den: Array2::zeros(dim),
        }
    }

    fn add(&mut self, y: usize, x: usize, b: usize, block: &[f64], weight: f64) {
        for i in 0..b {
            for j in 0..b {
                self.num[[y + i, x + j]] += weight * block[i * b + j];
                self.den[[y + i, x + j]] += weight;
            }
        }
    }

    fn finish(self, fallback: &Array2<f64>) -> Array2<f64> {
        Array2::from_shape_fn(self.num.dim(), |i| if self.den[i] > 0.0 { self.num[i] / self.den[i] } else { fallback[i] })
    }
}

fn group_spectrum(img: &Array2<f64>, group: &[(usize, usize)], t: &Transform, buf: &mut [f64]) -> Vec<f64> {
    let bb = t.n * t.n;
    let mut spec = vec![0.0; group.len() * bb];
    for (g, &(y, x)) in group.iter().enumerate() {
        block_at(img, y, x, t.n, buf);
        t.forward(buf, &mut spec[g * bb..(g + 1) * bb]);
    }
    haar_forward(&mut spec, group.len(), bb);
    spec
}

fn write_back(spec: &mut [f64], group: &[(usize, usize)], t: &Transform, weight: f64, acc: &mut Accumulator) {
    let bb = t.n * t.n;
    haar_inverse(spec, group.len(), bb);
    let mut out = vec![0.0; bb];
    for (g, &(y, x)) in group.iter().enumerate() {
        t.inverse(&spec[g * bb..(g + 1) * bb], &mut out);
        acc.add(y, x, t.n, &out, weight);
    }
}

pub fn bm3d_denoise(img: &Array2<f64>, sigma: f64, p: &Bm3dParams) -> Result<Array2<f64>> {
    positive("sigma", sigma)?;
    let (h, w) = img.dim();
    let b = p.block;
    if b == 0 || p.step == 0 || p.max_group == 0 || p.search < b {
        return Err(BaselineError::Param(format!(
            "block {b}, step {}, group {} and search {} must be positive with search >= block",
            p.step, p.max_group, p.search
        )));
    }
    if h < b || w < b {
        return Err(BaselineError::TooSmall(format!("{h}x{w} image, block {b}")));
    }
    let t = Transform::new(b);
    let bb = b * b;
    let mut buf = vec![0.0; bb];
    let (ys, xs) = (positions(h, b, p.step), positions(w, b, p.step));
    let s2 = sigma * sigma;

    // Stage 1: hard thresholding.
    let mut acc = Accumulator::new((h, w));
    let thr = p.lambda_3d * sigma;
    for &y in &ys {
        for &x in &xs {
            let group = match_blocks(img, y, x, p, 2.0 * s2 + p.tau_match_1);
            let mut spec = group_spectrum(img, &group, &t, &mut buf);
            let mut kept = 0usize;
            for (i, c) in spec.iter_mut().enumerate() {
                if i == 0 || c.abs() >= thr {
                    kept += 1;
                } else {
                    *c = 0.0;
                }
            }
            write_back(&mut spec, &group, &t, 1.0 / kept as f64, &mut acc);
        }
    }
    let basic = acc.finish(img);

    // Stage 2: Wiener filtering with the basic estimate as pilot.
    let mut acc = Accumulator::new((h, w));
    for &y in &ys {
        for &x in &xs {
            let group = match_blocks(&basic, y, x, p, p.tau_match_2);
            let pilot = group_spectrum(&basic, &group, &t, &mut buf);
            let mut spec = group_spectrum(img, &group, &t, &mut buf);
            let mut energy = 0.0;
            for (i, (c, q)) in spec.iter_mut().zip(&pilot).enumerate() {
                let wf = if i == 0 { 1.0 } else { q * q / (q * q + s2) };
                *c *= wf;
                energy += wf * wf;
            }
            write_back(&mut spec, &group, &t, 1.0 / (s2 * energy), &mut acc);
        }
    }
    Ok(acc.finish(&basic).mapv(|v| v.clamp(0.0, 1.0)))
}
