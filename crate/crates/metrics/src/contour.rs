//! Marching squares iso-contours and polygon filling.
//!
//! The field is framed by one ring of values below the level before
//! tracing, so every contour closes, including around regions that touch
//! the image border. Points are `[row, col]` in pixel-centre coordinates.

use std::collections::HashMap;

use ndarray::Array2;

pub type Contour = Vec<[f64; 2]>;

// Identifies a crossing point by the grid edge it lies on: horizontal edges
// join (r, c)-(r, c+1), vertical edges join (r, c)-(r+1, c).
type EdgeKey = (usize, usize, bool);

/// Closed contours of `field` at `level`. Values `>= level` are inside.
/// Each contour is returned without repeating its first point.
pub fn find_contours(field: &Array2<f64>, level: f64) -> Vec<Contour> {
    let (h, w) = field.dim();
    let lo = field.iter().cloned().fold(level, f64::min) - 1.0;
    let (ph, pw) = (h + 2, w + 2);
    let get = |r: usize, c: usize| -> f64 {
        if r == 0 || c == 0 || r == ph - 1 || c == pw - 1 {
            lo
        } else {
            field[[r - 1, c - 1]]
        }
    };
    let inside = |v: f64| v >= level;

    let point = |key: EdgeKey| -> [f64; 2] {
        let (r, c, horizontal) = key;
        let (r2, c2) = if horizontal { (r, c + 1) } else { (r + 1, c) };
        let (a, b) = (get(r, c), get(r2, c2));
        let t = if a == b { 0.5 } else { ((level - a) / (b - a)).clamp(0.0, 1.0) };
        [r as f64 + t * (r2 as f64 - r as f64) - 1.0, c as f64 + t * (c2 as f64 - c as f64) - 1.0]
    };

    // Oriented segments, start edge -> end edge.
    let mut next: HashMap<EdgeKey, EdgeKey> = HashMap::new();
    for r in 0..ph - 1 {
        for c in 0..pw - 1 {
            // Clockwise walk: tl -> tr -> br -> bl.
            let corners = [(r, c), (r, c + 1), (r + 1, c + 1), (r + 1, c)];
            let edges: [EdgeKey; 4] = [(r, c, true), (r, c + 1, false), (r + 1, c, true), (r, c, false)];
            let ins: Vec<bool> = corners.iter().map(|&(y, x)| inside(get(y, x))).collect();
            // entering[i]: walking edge i goes outside -> inside.
            let mut entering = Vec::new();
            let mut leaving = Vec::new();
            for i in 0..4 {
                let (a, b) = (ins[i], ins[(i + 1) % 4]);
                if !a && b {
                    entering.push(i);
                } else if a && !b {
                    leaving.push(i);
                }
            }
            match entering.len() {
                0 => {}
                1 => {
                    next.insert(edges[leaving[0]], edges[entering[0]]);
                }
                _ => {
                    // Saddle: decide connectivity from the cell centre.
                    let centre = corners.iter().map(|&(y, x)| get(y, x)).sum::<f64>() / 4.0;
                    let joined = inside(centre);
                    for &l in &leaving {
                        // A joined centre cuts off the outside corners, so a
                        // leaving edge pairs with the next edge clockwise;
                        // otherwise it wraps the inside corner behind it.
                        let step = if joined { 1 } else { 3 };
                        let e = *entering.iter().find(|&&e| (e + 4 - l) % 4 == step).unwrap();
                        next.insert(edges[l], edges[e]);
                    }
                }
            }
        }
    }

    let mut contours = Vec::new();
    let mut keys: Vec<EdgeKey> = next.keys().copied().collect();
    keys.sort_unstable();
    for start in keys {
        if !next.contains_key(&start) {
            continue;
        }
        let mut pts = Vec::new();
        let mut cur = start;
        while let Some(n) = next.remove(&cur) {
            pts.push(point(cur));
            cur = n;
        }
        if pts.len() >= 3 {
            contours.push(pts);
        }
    }
    contours
}

/// Signed shoelace area.
pub fn signed_area(c: &Contour) -> f64 {
    let n = c.len();
    (0..n)
        .map(|i| {
            let [y0, x0] = c[i];
            let [y1, x1] = c[(i + 1) % n];
            x0 * y1 - x1 * y0
        })
        .sum::<f64>()
        / 2.0
}

/// Pixels whose centres lie inside the union of `contours` under the
/// even-odd rule.
pub fn fill_even_odd(contours: &[&Contour], dim: (usize, usize)) -> Array2<bool> {
    let (h, w) = dim;
    let mut out = Array2::from_elem(dim, false);
    let mut xs = Vec::new();
    for r in 0..h {
        let y = r as f64;
        xs.clear();
        for c in contours {
            let n = c.len();
            for i in 0..n {
                let [y0, x0] = c[i];
                let [y1, x1] = c[(i + 1) % n];
                if (y0 <= y && y < y1) || (y1 <= y && y < y0) {
                    xs.push(x0 + (y - y0) / (y1 - y0) * (x1 - x0));
                }
            }
        }
        xs.sort_by(f64::total_cmp);
        for pair in xs.chunks_exact(2) {
            let start = pair[0].ceil().max(0.0) as usize;
            let end = (pair[1].ceil().min(w as f64)).max(0.0) as usize;
            for x in start..end.max(start) {
                out[[r, x]] = true;
            }
        }
    }
    out
}
