//! Thinning of a feature-weighted b-scan into ILM / RPE curves.

use hdcg_core::imgops::median_filter;
use hdcg_core::BScan;
use ndarray::Array2;

use crate::error::{InspectionError, Result};

/// Minimum column span of an accepted curve, as a fraction of the width.
pub const MIN_CURVE_FRACTION: f64 = 0.2;

// Clockwise from north: P2..P9 in Zhang–Suen notation.
const RING: [(isize, isize); 8] = [(-1, 0), (-1, 1), (0, 1), (1, 1), (1, 0), (1, -1), (0, -1), (-1, -1)];

/// A connected 1-px curve, pixels as `(row, col)` in raster order.
#[derive(Debug, Clone, PartialEq)]
pub struct Curve {
    pub pixels: Vec<(usize, usize)>,
}

impl Curve {
    /// Number of distinct columns the curve covers.
    pub fn column_span(&self) -> usize {
        let mut cols: Vec<usize> = self.pixels.iter().map(|p| p.1).collect();
        cols.sort_unstable();
        cols.dedup();
        cols.len()
    }

    pub fn mean_row(&self) -> f64 {
        self.pixels.iter().map(|p| p.0 as f64).sum::<f64>() / self.pixels.len() as f64
    }

    /// Mean row of the curve in each column, `None` where absent.
    pub fn rows_per_column(&self, width: usize) -> Vec<Option<f64>> {
        let mut sum = vec![0.0; width];
        let mut n = vec![0usize; width];
        for &(r, c) in &self.pixels {
            sum[c] += r as f64;
            n[c] += 1;
        }
        sum.iter().zip(&n).map(|(&s, &k)| (k > 0).then(|| s / k as f64)).collect()
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct LayerSkeleton {
    pub ilm_curve: Vec<Option<f64>>,
    pub rpe_curve: Vec<Option<f64>>,
    pub thickness: Vec<Option<f64>>,
    /// Every curve left after thinning, longest first.
    pub curves: Vec<Curve>,
    pub dim: (usize, usize),
}

impl LayerSkeleton {
    /// Mask of all curve pixels.
    pub fn mask(&self) -> Array2<bool> {
        let mut m = Array2::from_elem(self.dim, false);
        for c in &self.curves {
            for &p in &c.pixels {
                m[p] = true;
            }
        }
        m
    }
}

fn get(img: &Array2<bool>, r: usize, c: usize, d: (isize, isize)) -> bool {
    let (h, w) = img.dim();
    let (y, x) = (r as isize + d.0, c as isize + d.1);
    y >= 0 && x >= 0 && (y as usize) < h && (x as usize) < w && img[[y as usize, x as usize]]
}

fn ring(img: &Array2<bool>, r: usize, c: usize) -> [bool; 8] {
    RING.map(|d| get(img, r, c, d))
}

/// Zhang–Suen thinning. Pixels outside the image count as background.
pub fn zhang_suen(mask: &Array2<bool>) -> Array2<bool> {
    let mut img = mask.clone();
    let (h, w) = img.dim();
    loop {
        let mut changed = false;
        for pass in 0..2 {
            let mut remove = Vec::new();
            for r in 0..h {
                for c in 0..w {
                    if !img[[r, c]] {
                        continue;
                    }
                    let p = ring(&img, r, c);
                    let b = p.iter().filter(|&&v| v).count();
                    let a = (0..8).filter(|&i| !p[i] && p[(i + 1) % 8]).count();
                    let (n, e, s, west) = (p[0], p[2], p[4], p[6]);
                    let ok = if pass == 0 {
                        !(n && e && s) && !(e && s && west)
                    } else {
                        !(n && e && west) && !(n && s && west)
                    };
                    if (2..=6).contains(&b) && a == 1 && ok {
                        remove.push((r, c));
                    }
                }
            }
            changed |= !remove.is_empty();
            for p in remove {
                img[p] = false;
            }
        }
        if !changed {
            return img;
        }
    }
}

/// Number of 8-connected groups formed by the set ring neighbours among
/// themselves.
fn ring_groups(p: &[bool; 8]) -> usize {
    let mut seen = [false; 8];
    let mut groups = 0;
    for start in 0..8 {
        if !p[start] || seen[start] {
            continue;
        }
        groups += 1;
        let mut stack = vec![start];
        seen[start] = true;
        while let Some(i) = stack.pop() {
            for j in 0..8 {
                let (a, b) = (RING[i], RING[j]);
                if p[j] && !seen[j] && (a.0 - b.0).abs() <= 1 && (a.1 - b.1).abs() <= 1 {
                    seen[j] = true;
                    stack.push(j);
                }
            }
        }
    }
    groups
}

/// Removes staircase corners left by thinning, then deletes branch points,
/// so every remaining pixel has at most two 8-neighbours.
pub fn to_simple_curves(skel: &Array2<bool>) -> Array2<bool> {
    let mut img = skel.clone();
    let (h, w) = img.dim();
    loop {
        let mut changed = false;
        for r in 0..h {
            for c in 0..w {
                if !img[[r, c]] {
                    continue;
                }
                let p = ring(&img, r, c);
                if p.iter().filter(|&&v| v).count() >= 3 && ring_groups(&p) == 1 {
                    img[[r, c]] = false;
                    changed = true;
                }
            }
        }
        if !changed {
            break;
        }
    }
    let branch: Vec<(usize, usize)> = img
        .indexed_iter()
        .filter(|&((r, c), &v)| v && ring(&img, r, c).iter().filter(|&&b| b).count() > 2)
        .map(|(p, _)| p)
        .collect();
    for p in branch {
        img[p] = false;
    }
    img
}

/// 8-connected components in raster order of their first pixel.
pub fn components(mask: &Array2<bool>) -> Vec<Curve> {
    let (h, w) = mask.dim();
    let mut label = Array2::from_elem((h, w), false);
    let mut out = Vec::new();
    for r in 0..h {
        for c in 0..w {
            if !mask[[r, c]] || label[[r, c]] {
                continue;
            }
            label[[r, c]] = true;
            let mut stack = vec![(r, c)];
            let mut pixels = Vec::new();
            while let Some((y, x)) = stack.pop() {
                pixels.push((y, x));
                for d in RING {
                    if get(mask, y, x, d) {
                        let q = ((y as isize + d.0) as usize, (x as isize + d.1) as usize);
                        if !label[q] {
                            label[q] = true;
                            stack.push(q);
                        }
                    }
                }
            }
            pixels.sort_unstable();
            out.push(Curve { pixels });
        }
    }
    out
}

/// `img * map`, thresholded at its mean, 3x3 median filtered, thinned, and
/// split into simple curves. The two longest curves, ordered by mean row,
/// become ILM and RPE.
pub fn skeletonize_layers(img: &BScan, map: &Array2<f64>) -> Result<LayerSkeleton> {
    skeletonize_array(img.pixels(), map)
}

pub fn skeletonize_array(img: &Array2<f64>, map: &Array2<f64>) -> Result<LayerSkeleton> {
    if img.dim() != map.dim() {
        return Err(InspectionError::Shape(format!(
            "map {:?} must be up-scaled to the image size {:?}",
            map.dim(),
            img.dim()
        )));
    }
    let (h, w) = img.dim();
    let product = img * map;
    let mean = product.mean().unwrap_or(0.0);
    let binary = product.mapv(|v| if v > mean { 1.0 } else { 0.0 });
    let cleaned = median_filter(&binary, 3).mapv(|v| v > 0.5);
    let thin = to_simple_curves(&zhang_suen(&cleaned));
    let mut curves = components(&thin);
    curves.sort_by_key(|c| std::cmp::Reverse(c.column_span()));
    let min_len = ((MIN_CURVE_FRACTION * w as f64).ceil() as usize).max(1);
    let found = curves.iter().filter(|c| c.column_span() >= min_len).count();
    if found < 2 {
        return Err(InspectionError::InsufficientStructure { found, min_len });
    }
    let (mut top, mut bottom) = (&curves[0], &curves[1]);
    if top.mean_row() > bottom.mean_row() {
        std::mem::swap(&mut top, &mut bottom);
    }
    let mut ilm = top.rows_per_column(w);
    let mut rpe = bottom.rows_per_column(w);
    // Columns where the curves cross are left undefined.
    for c in 0..w {
        if let (Some(a), Some(b)) = (ilm[c], rpe[c]) {
            if b < a {
                ilm[c] = None;
                rpe[c] = None;
            }
        }
    }
    let thickness = ilm.iter().zip(&rpe).map(|(a, b)| Some((*b)? - (*a)?)).collect();
    Ok(LayerSkeleton {
        ilm_curve: ilm,
        rpe_curve: rpe,
        thickness,
        curves,
        dim: (h, w),
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn thin_bar_becomes_centre_line() {
        let mut m = Array2::from_elem((11, 30), false);
        m.slice_mut(ndarray::s![3..8, 2..28]).fill(true);
        let t = zhang_suen(&m);
        let rows: Vec<usize> = t.indexed_iter().filter(|(_, &v)| v).map(|((r, _), _)| r).collect();
        assert!(!rows.is_empty());
        assert!(rows.iter().filter(|&&r| r == 5).count() >= 20);
    }

    #[test]
    fn ring_group_counts() {
        assert_eq!(ring_groups(&[true, false, false, false, true, false, false, false]), 2);
        assert_eq!(ring_groups(&[true, false, false, false, false, false, true, false]), 1);
        assert_eq!(ring_groups(&[false; 8]), 0);
    }

    #[test]
    fn branch_points_removed() {
        // A plus sign: the centre is a junction.
        let mut m = Array2::from_elem((7, 7), false);
        for i in 0..7 {
            m[[3, i]] = true;
            m[[i, 3]] = true;
        }
        let s = to_simple_curves(&m);
        assert!(!s[[3, 3]]);
        assert_eq!(components(&s).len(), 4);
    }
}
