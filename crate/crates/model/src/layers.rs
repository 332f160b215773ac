//! Forward and backward kernels for the network building blocks.
//!
//! Activations are `(channels, height, width)` arrays in standard layout.
//! Convolutions lower to matrix products over im2col tiles so that the
//! column buffer stays bounded for large inputs.

use ndarray::linalg::general_mat_mul;
use ndarray::{concatenate, s, Array3, ArrayView2, ArrayViewMut2, Axis, ShapeBuilder};

pub type Tensor = Array3<f64>;

/// Upper bound on im2col buffer entries per tile (32 MiB of f64).
const MAX_TILE_ENTRIES: usize = 1 << 22;
const NORM_EPS: f64 = 1e-5;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct ConvGeom {
    pub k: usize,
    pub stride: usize,
    pub pad: usize,
}

impl ConvGeom {
    pub fn same(k: usize) -> Self {
        ConvGeom { k, stride: 1, pad: k / 2 }
    }

    pub fn down(k: usize) -> Self {
        ConvGeom { k, stride: 2, pad: k / 2 }
    }

    pub fn out_len(&self, n: usize) -> usize {
        (n + 2 * self.pad - self.k) / self.stride + 1
    }
}

fn contiguous(x: &Tensor) -> &[f64] {
    x.as_slice().expect("activations are kept in standard layout")
}

/// Writes columns for output rows `oy0..oy1`. Row index of `cols` is
/// `(ci * k + ky) * k + kx`, column index `(oy - oy0) * ow + ox`.
#[allow(clippy::too_many_arguments)]
fn im2col_rows(x: &[f64], c: usize, h: usize, w: usize, g: ConvGeom, ow: usize, oy0: usize, oy1: usize, cols: &mut [f64]) {
    let np = (oy1 - oy0) * ow;
    let (k, s, p) = (g.k, g.stride as isize, g.pad as isize);
    for ci in 0..c {
        let plane = &x[ci * h * w..(ci + 1) * h * w];
        for ky in 0..k {
            for kx in 0..k {
                let row = (ci * k + ky) * k + kx;
                let dst = &mut cols[row * np..(row + 1) * np];
                for oy in oy0..oy1 {
                    let iy = oy as isize * s + ky as isize - p;
                    let line = &mut dst[(oy - oy0) * ow..(oy - oy0 + 1) * ow];
                    if iy < 0 || iy >= h as isize {
                        line.fill(0.0);
                        continue;
                    }
                    let src = &plane[iy as usize * w..(iy as usize + 1) * w];
                    for (ox, v) in line.iter_mut().enumerate() {
                        let ix = ox as isize * s + kx as isize - p;
                        *v = if ix < 0 || ix >= w as isize { 0.0 } else { src[ix as usize] };
                    }
                }
            }
        }
    }
}

/// Adjoint of [`im2col_rows`]: scatters columns back onto the image, adding.
#[allow(clippy::too_many_arguments)]
fn col2im_rows(cols: &[f64], c: usize, h: usize, w: usize, g: ConvGeom, ow: usize, oy0: usize, oy1: usize, out: &mut [f64]) {
    let np = (oy1 - oy0) * ow;
    let (k, s, p) = (g.k, g.stride as isize, g.pad as isize);
    for ci in 0..c {
        let plane = &mut out[ci * h * w..(ci + 1) * h * w];
        for ky in 0..k {
            for kx in 0..k {
                let row = (ci * k + ky) * k + kx;
                let src = &cols[row * np..(row + 1) * np];
                for oy in oy0..oy1 {
                    let iy = oy as isize * s + ky as isize - p;
                    if iy < 0 || iy >= h as isize {
                        continue;
                    }
                    let line = &src[(oy - oy0) * ow..(oy - oy0 + 1) * ow];
                    let dst = &mut plane[iy as usize * w..(iy as usize + 1) * w];
                    for (ox, v) in line.iter().enumerate() {
                        let ix = ox as isize * s + kx as isize - p;
                        if ix >= 0 && ix < w as isize {
                            dst[ix as usize] += v;
                        }
                    }
                }
            }
        }
    }
}

fn tile_rows(kk: usize, ow: usize, oh: usize) -> usize {
    (MAX_TILE_ENTRIES / (kk * ow).max(1)).clamp(1, oh)
}

/// Cross-correlation with weights `(out_c, in_c, k, k)` and optional bias.
pub fn conv2d_forward(x: &Tensor, weight: &[f64], bias: Option<&[f64]>, out_c: usize, g: ConvGeom) -> Tensor {
    let (c, h, w) = x.dim();
    let (oh, ow) = (g.out_len(h), g.out_len(w));
    let kk = c * g.k * g.k;
    assert_eq!(weight.len(), out_c * kk, "conv weight size");
    let wmat = ArrayView2::from_shape((out_c, kk), weight).unwrap();
    let xs = contiguous(x);
    let mut y = Tensor::zeros((out_c, oh, ow));
    let ys = y.as_slice_mut().unwrap();
    let rows = tile_rows(kk, ow, oh);
    let mut cols = vec![0.0; kk * rows * ow];
    for oy0 in (0..oh).step_by(rows) {
        let oy1 = (oy0 + rows).min(oh);
        let np = (oy1 - oy0) * ow;
        im2col_rows(xs, c, h, w, g, ow, oy0, oy1, &mut cols[..kk * np]);
        let colv = ArrayView2::from_shape((kk, np), &cols[..kk * np]).unwrap();
        let mut yv = ArrayViewMut2::from_shape((out_c, np).strides((oh * ow, 1)), &mut ys[oy0 * ow..]).unwrap();
        general_mat_mul(1.0, &wmat, &colv, 0.0, &mut yv);
    }
    if let Some(b) = bias {
        for (mut plane, &bv) in y.outer_iter_mut().zip(b) {
            plane += bv;
        }
    }
    y
}

/// Accumulates weight/bias gradients and returns the input gradient when
/// `need_input_grad` is set.
#[allow(clippy::too_many_arguments)]
pub fn conv2d_backward(
    x: &Tensor,
    weight: &[f64],
    gy: &Tensor,
    g: ConvGeom,
    grad_w: &mut [f64],
    grad_b: Option<&mut [f64]>,
    need_input_grad: bool,
) -> Option<Tensor> {
    let (c, h, w) = x.dim();
    let (out_c, oh, ow) = gy.dim();
    let kk = c * g.k * g.k;
    let wmat = ArrayView2::from_shape((out_c, kk), weight).unwrap();
    let mut gw = ArrayViewMut2::from_shape((out_c, kk), grad_w).unwrap();
    let xs = contiguous(x);
    let gys = contiguous(gy);
    let mut gx = need_input_grad.then(|| Tensor::zeros((c, h, w)));
    let rows = tile_rows(kk, ow, oh);
    let mut cols = vec![0.0; kk * rows * ow];
    let mut gcols = if need_input_grad { vec![0.0; kk * rows * ow] } else { Vec::new() };
    for oy0 in (0..oh).step_by(rows) {
        let oy1 = (oy0 + rows).min(oh);
        let np = (oy1 - oy0) * ow;
        im2col_rows(xs, c, h, w, g, ow, oy0, oy1, &mut cols[..kk * np]);
        let colv = ArrayView2::from_shape((kk, np), &cols[..kk * np]).unwrap();
        let gyv = ArrayView2::from_shape((out_c, np).strides((oh * ow, 1)), &gys[oy0 * ow..]).unwrap();
        general_mat_mul(1.0, &gyv, &colv.t(), 1.0, &mut gw);
        if let Some(gx) = gx.as_mut() {
            let mut gc = ArrayViewMut2::from_shape((kk, np), &mut gcols[..kk * np]).unwrap();
            general_mat_mul(1.0, &wmat.t(), &gyv, 0.0, &mut gc);
            col2im_rows(&gcols[..kk * np], c, h, w, g, ow, oy0, oy1, gx.as_slice_mut().unwrap());
        }
    }
    if let Some(gb) = grad_b {
        for (b, plane) in gb.iter_mut().zip(gy.outer_iter()) {
            *b += plane.sum();
        }
    }
    gx
}

/// Fractionally strided convolution (transpose of a stride-2 `k x k` conv
/// with `k / 2` padding), doubling both spatial sides. Weights are
/// `(in_c, out_c, k, k)`.
pub fn conv_transpose_forward(x: &Tensor, weight: &[f64], bias: Option<&[f64]>, out_c: usize, k: usize) -> Tensor {
    let (c, h, w) = x.dim();
    let g = ConvGeom::down(k);
    let kk = out_c * k * k;
    let wmat = ArrayView2::from_shape((c, kk), weight).unwrap();
    let xm = ArrayView2::from_shape((c, h * w), contiguous(x)).unwrap();
    let cols = wmat.t().dot(&xm);
    let mut y = Tensor::zeros((out_c, 2 * h, 2 * w));
    col2im_rows(cols.as_slice().unwrap(), out_c, 2 * h, 2 * w, g, w, 0, h, y.as_slice_mut().unwrap());
    if let Some(b) = bias {
        for (mut plane, &bv) in y.outer_iter_mut().zip(b) {
            plane += bv;
        }
    }
    y
}

pub fn conv_transpose_backward(
    x: &Tensor,
    weight: &[f64],
    gy: &Tensor,
    k: usize,
    grad_w: &mut [f64],
    grad_b: Option<&mut [f64]>,
) -> Tensor {
    let (c, h, w) = x.dim();
    let (out_c, bh, bw) = gy.dim();
    let g = ConvGeom::down(k);
    let kk = out_c * k * k;
    let mut gcols = vec![0.0; kk * h * w];
    im2col_rows(contiguous(gy), out_c, bh, bw, g, w, 0, h, &mut gcols);
    let gcv = ArrayView2::from_shape((kk, h * w), &gcols).unwrap();
    let wmat = ArrayView2::from_shape((c, kk), weight).unwrap();
    let xm = ArrayView2::from_shape((c, h * w), contiguous(x)).unwrap();
    let mut gw = ArrayViewMut2::from_shape((c, kk), grad_w).unwrap();
    general_mat_mul(1.0, &xm, &gcv.t(), 1.0, &mut gw);
    if let Some(gb) = grad_b {
        for (b, plane) in gb.iter_mut().zip(gy.outer_iter()) {
            *b += plane.sum();
        }
    }
    wmat.dot(&gcv).into_shape_with_order((c, h, w)).unwrap()
}

#[derive(Debug, Clone)]
pub struct NormCache {
    xhat: Tensor,
    inv_std: Vec<f64>,
}

/// Per-channel normalisation over the spatial extent, no affine parameters.
pub fn instance_norm_forward(x: &Tensor) -> (Tensor, NormCache) {
    let (c, h, w) = x.dim();
    let n = (h * w) as f64;
    let mut xhat = x.clone();
    let mut inv_std = Vec::with_capacity(c);
    for mut plane in xhat.outer_iter_mut() {
        let mean = plane.sum() / n;
        let var = plane.iter().map(|v| (v - mean) * (v - mean)).sum::<f64>() / n;
        let is = 1.0 / (var + NORM_EPS).sqrt();
        plane.mapv_inplace(|v| (v - mean) * is);
        inv_std.push(is);
    }
    (xhat.clone(), NormCache { xhat, inv_std })
}

pub fn instance_norm_backward(cache: &NormCache, gy: &Tensor) -> Tensor {
    let (_, h, w) = gy.dim();
    let n = (h * w) as f64;
    let mut gx = gy.clone();
    for ((mut g, xh), &is) in gx.outer_iter_mut().zip(cache.xhat.outer_iter()).zip(&cache.inv_std) {
        let sum_g = g.sum();
        let sum_gx: f64 = g.iter().zip(xh.iter()).map(|(a, b)| a * b).sum();
        g.zip_mut_with(&xh, |gv, &xv| *gv = is / n * (n * *gv - sum_g - xv * sum_gx));
    }
    gx
}

pub fn relu_inplace(x: &mut Tensor) {
    x.mapv_inplace(|v| v.max(0.0));
}

/// Masks `gy` where the (post-ReLU) output was not positive.
pub fn relu_backward(out: &Tensor, gy: &mut Tensor) {
    gy.zip_mut_with(out, |g, &o| {
        if o <= 0.0 {
            *g = 0.0
        }
    });
}

/// Source taps `(i0, i1, frac)` of a 2x bilinear up-scaling with half-pixel
/// centres.
fn upsample_taps(n: usize) -> Vec<(usize, usize, f64)> {
    (0..2 * n)
        .map(|o| {
            let src = ((o as f64 + 0.5) / 2.0 - 0.5).max(0.0);
            let i0 = (src.floor() as usize).min(n - 1);
            let i1 = (i0 + 1).min(n - 1);
            (i0, i1, src - i0 as f64)
        })
        .collect()
}

pub fn upsample2x_forward(x: &Tensor) -> Tensor {
    let (c, h, w) = x.dim();
    let ty = upsample_taps(h);
    let tx = upsample_taps(w);
    let mut y = Tensor::zeros((c, 2 * h, 2 * w));
    for ci in 0..c {
        let src = x.index_axis(Axis(0), ci);
        let mut dst = y.index_axis_mut(Axis(0), ci);
        for (oy, &(y0, y1, fy)) in ty.iter().enumerate() {
            for (ox, &(x0, x1, fx)) in tx.iter().enumerate() {
                let top = src[[y0, x0]] * (1.0 - fx) + src[[y0, x1]] * fx;
                let bot = src[[y1, x0]] * (1.0 - fx) + src[[y1, x1]] * fx;
                dst[[oy, ox]] = top * (1.0 - fy) + bot * fy;
            }
        }
    }
    y
}

pub fn upsample2x_backward(gy: &Tensor) -> Tensor {
    let (c, bh, bw) = gy.dim();
    let (h, w) = (bh / 2, bw / 2);
    let ty = upsample_taps(h);
    let tx = upsample_taps(w);
    let mut gx = Tensor::zeros((c, h, w));
    for ci in 0..c {
        let src = gy.index_axis(Axis(0), ci);
        let mut dst = gx.index_axis_mut(Axis(0), ci);
        for (oy, &(y0, y1, fy)) in ty.iter().enumerate() {
            for (ox, &(x0, x1, fx)) in tx.iter().enumerate() {
                let g = src[[oy, ox]];
                dst[[y0, x0]] += g * (1.0 - fy) * (1.0 - fx);
                dst[[y0, x1]] += g * (1.0 - fy) * fx;
                dst[[y1, x0]] += g * fy * (1.0 - fx);
                dst[[y1, x1]] += g * fy * fx;
            }
        }
    }
    gx
}

pub fn concat_channels(a: &Tensor, b: &Tensor) -> Tensor {
    concatenate(Axis(0), &[a.view(), b.view()]).expect("matching spatial size")
}

pub fn split_channels(g: &Tensor, first: usize) -> (Tensor, Tensor) {
    (
        g.slice(s![..first, .., ..]).to_owned(),
        g.slice(s![first.., .., ..]).to_owned(),
    )
}

pub fn global_avg_pool(x: &Tensor) -> Vec<f64> {
    let (_, h, w) = x.dim();
    x.outer_iter().map(|p| p.sum() / (h * w) as f64).collect()
}

pub fn global_avg_pool_backward(g: &[f64], h: usize, w: usize) -> Tensor {
    let n = (h * w) as f64;
    Tensor::from_shape_fn((g.len(), h, w), |(c, _, _)| g[c] / n)
}

/// `y = W x + b` with `W` of shape `(out, in)`.
pub fn linear_forward(x: &[f64], weight: &[f64], bias: &[f64]) -> Vec<f64> {
    let n_in = x.len();
    bias.iter()
        .enumerate()
        .map(|(o, b)| b + weight[o * n_in..(o + 1) * n_in].iter().zip(x).map(|(w, v)| w * v).sum::<f64>())
        .collect()
}

pub fn linear_backward(x: &[f64], weight: &[f64], gy: &[f64], grad_w: &mut [f64], grad_b: &mut [f64]) -> Vec<f64> {
    let n_in = x.len();
    let mut gx = vec![0.0; n_in];
    for (o, &g) in gy.iter().enumerate() {
        grad_b[o] += g;
        for i in 0..n_in {
            grad_w[o * n_in + i] += g * x[i];
            gx[i] += g * weight[o * n_in + i];
        }
    }
    gx
}

pub fn softmax(logits: &[f64]) -> Vec<f64> {
    let m = logits.iter().copied().fold(f64::NEG_INFINITY, f64::max);
    let e: Vec<f64> = logits.iter().map(|z| (z - m).exp()).collect();
    let s: f64 = e.iter().sum();
    e.into_iter().map(|v| v / s).collect()
}

/// Pulls a gradient w.r.t. softmax probabilities back to the logits.
pub fn softmax_backward(probs: &[f64], gp: &[f64]) -> Vec<f64> {
    let dot: f64 = probs.iter().zip(gp).map(|(p, g)| p * g).sum();
    probs.iter().zip(gp).map(|(p, g)| p * (g - dot)).collect()
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    fn rand_tensor(c: usize, h: usize, w: usize, seed: u64) -> Tensor {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        Tensor::from_shape_fn((c, h, w), |_| rng.random_range(-1.0..1.0))
    }

    fn rand_vec(n: usize, seed: u64) -> Vec<f64> {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        (0..n).map(|_| rng.random_range(-1.0..1.0)).collect()
    }

    /// Direct nested-loop correlation used as a reference.
    fn naive_conv(x: &Tensor, w: &[f64], out_c: usize, g: ConvGeom) -> Tensor {
        let (c, h, wd) = x.dim();
        let (oh, ow) = (g.out_len(h), g.out_len(wd));
        Tensor::from_shape_fn((out_c, oh, ow), |(o, oy, ox)| {
            let mut acc = 0.0;
            for ci in 0..c {
                for ky in 0..g.k {
                    for kx in 0..g.k {
                        let iy = (oy * g.stride + ky) as isize - g.pad as isize;
                        let ix = (ox * g.stride + kx) as isize - g.pad as isize;
                        if iy >= 0 && ix >= 0 && (iy as usize) < h && (ix as usize) < wd {
                            acc += w[((o * c + ci) * g.k + ky) * g.k + kx] * x[[ci, iy as usize, ix as usize]];
                        }
                    }
                }
            }
            acc
        })
    }

    fn max_diff(a: &Tensor, b: &Tensor) -> f64 {
        a.iter().zip(b.iter()).map(|(x, y)| (x - y).abs()).fold(0.0, f64::max)
    }

    #[test]
    fn conv_matches_naive() {
        for (g, h) in [(ConvGeom::same(3), 9), (ConvGeom::down(3), 10), (ConvGeom::same(7), 12), (ConvGeom::down(3), 7)] {
            let x = rand_tensor(3, h, h + 2, 1);
            let w = rand_vec(4 * 3 * g.k * g.k, 2);
            let y = conv2d_forward(&x, &w, None, 4, g);
            assert!(max_diff(&y, &naive_conv(&x, &w, 4, g)) < 1e-12);
        }
    }

    /// `<conv(x), gy> == <x, conv^T(gy)>` and `<conv(x), gy>` is linear in w.
    #[test]
    fn conv_backward_is_adjoint() {
        let g = ConvGeom::down(3);
        let x = rand_tensor(2, 8, 6, 3);
        let w = rand_vec(5 * 2 * 9, 4);
        let y = conv2d_forward(&x, &w, None, 5, g);
        let gy = rand_tensor(5, y.dim().1, y.dim().2, 5);
        let mut gw = vec![0.0; w.len()];
        let gx = conv2d_backward(&x, &w, &gy, g, &mut gw, None, true).unwrap();
        let lhs: f64 = (&y * &gy).sum();
        assert!((lhs - (&x * &gx).sum()).abs() < 1e-10);
        let via_w: f64 = w.iter().zip(&gw).map(|(a, b)| a * b).sum();
        assert!((lhs - via_w).abs() < 1e-10);
    }

    #[test]
    fn transpose_conv_is_adjoint_of_strided_conv() {
        let x = rand_tensor(3, 4, 5, 6);
        let w = rand_vec(3 * 2 * 9, 7);
        let y = conv_transpose_forward(&x, &w, None, 2, 3);
        assert_eq!(y.dim(), (2, 8, 10));
        let z = rand_tensor(2, 8, 10, 8);
        // conv_transpose(x) with weights (in=3,out=2) is the adjoint of the
        // strided conv with weights (out=3, in=2).
        let down = conv2d_forward(&z, &w, None, 3, ConvGeom::down(3));
        assert!(((&y * &z).sum() - (&down * &x).sum()).abs() < 1e-10);
        let mut gw = vec![0.0; w.len()];
        let gx = conv_transpose_backward(&x, &w, &z, 3, &mut gw, None);
        assert!((gx - &down).iter().all(|v| v.abs() < 1e-12));
        let via_w: f64 = w.iter().zip(&gw).map(|(a, b)| a * b).sum();
        assert!((via_w - (&y * &z).sum()).abs() < 1e-10);
    }

    #[test]
    fn upsample_adjoint_and_constants() {
        let x = rand_tensor(2, 3, 5, 9);
        let y = upsample2x_forward(&x);
        let gy = rand_tensor(2, 6, 10, 10);
        let gx = upsample2x_backward(&gy);
        assert!(((&y * &gy).sum() - (&x * &gx).sum()).abs() < 1e-12);
        let c = Tensor::from_elem((1, 4, 4), 0.3);
        assert!(upsample2x_forward(&c).iter().all(|v| (v - 0.3).abs() < 1e-15));
    }

    #[test]
    fn instance_norm_gradient_matches_finite_differences() {
        let x = rand_tensor(2, 3, 3, 11);
        let gy = rand_tensor(2, 3, 3, 12);
        let f = |x: &Tensor| (&instance_norm_forward(x).0 * &gy).sum();
        let (_, cache) = instance_norm_forward(&x);
        let gx = instance_norm_backward(&cache, &gy);
        for idx in [(0, 0, 0), (1, 2, 1), (0, 1, 2)] {
            let mut a = x.clone();
            let mut b = x.clone();
            a[idx] += 1e-6;
            b[idx] -= 1e-6;
            let fd = (f(&a) - f(&b)) / 2e-6;
            assert!((fd - gx[idx]).abs() < 1e-6, "{fd} vs {}", gx[idx]);
        }
    }

    #[test]
    fn softmax_sums_to_one_and_backward() {
        let z = [0.3, -1.2, 2.0];
        let p = softmax(&z);
        assert!((p.iter().sum::<f64>() - 1.0).abs() < 1e-15);
        // d(-log p0)/dz = p - e0
        let g = softmax_backward(&p, &[-1.0 / p[0], 0.0, 0.0]);
        assert!((g[0] - (p[0] - 1.0)).abs() < 1e-12);
        assert!((g[2] - p[2]).abs() < 1e-12);
    }
}
