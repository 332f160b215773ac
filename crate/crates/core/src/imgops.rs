//! Small image primitives shared by the denoisers, metrics and inspection code.

use ndarray::Array2;

/// Maps an arbitrary (possibly negative) index into `0..n` by mirror
/// reflection about the edge pixels (`... 2 1 | 0 1 2 ... n-1 | n-2 ...`).
pub fn reflect_index(i: isize, n: usize) -> usize {
    if n == 1 {
        return 0;
    }
    let period = 2 * (n as isize - 1);
    let m = i.rem_euclid(period);
    if m < n as isize {
        m as usize
    } else {
        (period - m) as usize
    }
}

/// Normalised 1D Gaussian kernel with radius `ceil(truncate * sigma)`.
pub fn gaussian_kernel(sigma: f64, truncate: f64) -> Vec<f64> {
    let radius = (truncate * sigma).ceil().max(0.0) as isize;
    let mut k: Vec<f64> = (-radius..=radius)
        .map(|x| (-(x * x) as f64 / (2.0 * sigma * sigma)).exp())
        .collect();
    let s: f64 = k.iter().sum();
    k.iter_mut().for_each(|v| *v /= s);
    k
}

/// Boundary rule for separable filtering.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Boundary {
    Reflect,
    Zero,
}

/// Separable convolution with a symmetric odd-length kernel along both axes.
pub fn separable_filter(img: &Array2<f64>, kernel: &[f64], boundary: Boundary) -> Array2<f64> {
    let (h, w) = img.dim();
    let r = (kernel.len() / 2) as isize;
    let fetch = |line: &dyn Fn(usize) -> f64, i: isize, n: usize| -> f64 {
        match boundary {
            Boundary::Reflect => line(reflect_index(i, n)),
            Boundary::Zero if i < 0 || i >= n as isize => 0.0,
            Boundary::Zero => line(i as usize),
        }
    };
    let mut tmp = Array2::zeros((h, w));
    for y in 0..h {
        for x in 0..w {
            let mut acc = 0.0;
            for (k, kv) in kernel.iter().enumerate() {
                let xi = x as isize + k as isize - r;
                acc += kv * fetch(&|c| img[[y, c]], xi, w);
            }
            tmp[[y, x]] = acc;
        }
    }
    let mut out = Array2::zeros((h, w));
    for y in 0..h {
        for x in 0..w {
            let mut acc = 0.0;
            for (k, kv) in kernel.iter().enumerate() {
                let yi = y as isize + k as isize - r;
                acc += kv * fetch(&|rr| tmp[[rr, x]], yi, h);
            }
            out[[y, x]] = acc;
        }
    }
    out
}

/// Gaussian blur truncated at 4 sigma.
pub fn gaussian_blur(img: &Array2<f64>, sigma: f64, boundary: Boundary) -> Array2<f64> {
    if sigma <= 0.0 {
        return img.clone();
    }
    separable_filter(img, &gaussian_kernel(sigma, 4.0), boundary)
}

/// Square median filter with reflect padding. `window` must be odd.
pub fn median_filter(img: &Array2<f64>, window: usize) -> Array2<f64> {
    assert!(window % 2 == 1, "median window must be odd");
    if window == 1 {
        return img.clone();
    }
    let (h, w) = img.dim();
    let r = (window / 2) as isize;
    let mut buf = Vec::with_capacity(window * window);
    Array2::from_shape_fn((h, w), |(y, x)| {
        buf.clear();
        for dy in -r..=r {
            let yy = reflect_index(y as isize + dy, h);
            for dx in -r..=r {
                buf.push(img[[yy, reflect_index(x as isize + dx, w)]]);
            }
        }
        let mid = buf.len() / 2;
        *buf.select_nth_unstable_by(mid, f64::total_cmp).1
    })
}

/// Bilinear resampling to an arbitrary size using half-pixel centres
/// (the `align_corners = false` convention).
pub fn resize_bilinear(img: &Array2<f64>, out_h: usize, out_w: usize) -> Array2<f64> {
    let (h, w) = img.dim();
    let sy = h as f64 / out_h as f64;
    let sx = w as f64 / out_w as f64;
    let axis = |o: usize, scale: f64, n: usize| -> (usize, usize, f64) {
        let src = ((o as f64 + 0.5) * scale - 0.5).max(0.0);
        let i0 = (src.floor() as usize).min(n - 1);
        let i1 = (i0 + 1).min(n - 1);
        (i0, i1, src - i0 as f64)
    };
    Array2::from_shape_fn((out_h, out_w), |(y, x)| {
        let (y0, y1, fy) = axis(y, sy, h);
        let (x0, x1, fx) = axis(x, sx, w);
        let top = img[[y0, x0]] * (1.0 - fx) + img[[y0, x1]] * fx;
        let bot = img[[y1, x0]] * (1.0 - fx) + img[[y1, x1]] * fx;
        top * (1.0 - fy) + bot * fy
    })
}

/// Mean and population standard deviation.
pub fn mean_std(values: impl IntoIterator<Item = f64>) -> (f64, f64) {
    let v: Vec<f64> = values.into_iter().collect();
    if v.is_empty() {
        return (f64::NAN, f64::NAN);
    }
    let n = v.len() as f64;
    let mean = v.iter().sum::<f64>() / n;
    let var = v.iter().map(|x| (x - mean) * (x - mean)).sum::<f64>() / n;
    (mean, var.sqrt())
}
