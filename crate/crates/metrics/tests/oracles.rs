//! Independent re-evaluations of the metric formulas on random images.

use hdcg_metrics::{cnr, msr, psnr, ssim};
use ndarray::Array2;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

fn random_image(rng: &mut ChaCha8Rng) -> Array2<f64> {
    Array2::from_shape_fn((16, 16), |_| rng.random::<f64>())
}

fn brute_psnr(a: &Array2<f64>, b: &Array2<f64>) -> f64 {
    let mut se = 0.0;
    for y in 0..a.nrows() {
        for x in 0..a.ncols() {
            se += (a[[y, x]] - b[[y, x]]).powi(2);
        }
    }
    10.0 * (1.0 / (se / (a.len() as f64))).log10()
}

// Direct per-window SSIM with explicit 2D Gaussian weights.
fn brute_ssim(a: &Array2<f64>, b: &Array2<f64>) -> f64 {
    let win = 11usize;
    let sigma = 1.5f64;
    let c = 5.0f64;
    let mut wts = vec![vec![0.0; win]; win];
    let mut total = 0.0;
    for (i, row) in wts.iter_mut().enumerate() {
        for (j, w) in row.iter_mut().enumerate() {
            let d2 = (i as f64 - c).powi(2) + (j as f64 - c).powi(2);
            *w = (-d2 / (2.0 * sigma * sigma)).exp();
            total += *w;
        }
    }
    let (c1, c2) = (0.0001, 0.0009);
    let mut sum = 0.0;
    let mut count = 0;
    for oy in 0..=a.nrows() - win {
        for ox in 0..=a.ncols() - win {
            let (mut ma, mut mb) = (0.0, 0.0);
            for i in 0..win {
                for j in 0..win {
                    let w = wts[i][j] / total;
                    ma += w * a[[oy + i, ox + j]];
                    mb += w * b[[oy + i, ox + j]];
                }
            }
            let (mut va, mut vb, mut cov) = (0.0, 0.0, 0.0);
            for i in 0..win {
                for j in 0..win {
                    let w = wts[i][j] / total;
                    let (da, db) = (a[[oy + i, ox + j]] - ma, b[[oy + i, ox + j]] - mb);
                    va += w * da * da;
                    vb += w * db * db;
                    cov += w * da * db;
                }
            }
            sum += (2.0 * ma * mb + c1) * (2.0 * cov + c2) / ((ma * ma + mb * mb + c1) * (va + vb + c2));
            count += 1;
        }
    }
    sum / count as f64
}

fn brute_region(img: &Array2<f64>, mask: &Array2<bool>) -> (f64, f64) {
    let mut vals = Vec::new();
    for y in 0..img.nrows() {
        for x in 0..img.ncols() {
            if mask[[y, x]] {
                vals.push(img[[y, x]]);
            }
        }
    }
    let n = vals.len() as f64;
    let mean = vals.iter().sum::<f64>() / n;
    let var = vals.iter().map(|v| (v - mean).powi(2)).sum::<f64>() / n;
    (mean, var)
}

#[test]
fn hundred_random_instances_match_brute_force() {
    let mut rng = ChaCha8Rng::seed_from_u64(2024);
    for _ in 0..100 {
        let a = random_image(&mut rng);
        let b = random_image(&mut rng);
        assert!((psnr(&a, &b).unwrap() - brute_psnr(&a, &b)).abs() < 1e-9);
        assert!((ssim(&a, &b).unwrap() - brute_ssim(&a, &b)).abs() < 1e-6);

        let signal = Array2::from_shape_fn((16, 16), |_| rng.random_bool(0.3));
        let background = Array2::from_shape_fn((16, 16), |(y, x)| !signal[[y, x]] && rng.random_bool(0.5));
        if !signal.iter().any(|&v| v) || !background.iter().any(|&v| v) {
            continue;
        }
        let (ms, vs) = brute_region(&a, &signal);
        let (mb, vb) = brute_region(&a, &background);
        assert!((cnr(&a, &signal, &background).unwrap() - (ms - mb) / (vs + vb).sqrt()).abs() < 1e-12);
        assert!((msr(&a, &signal).unwrap() - ms / vs.sqrt()).abs() < 1e-12);
    }
}

#[test]
fn ssim_is_symmetric_and_detects_inversion() {
    let mut rng = ChaCha8Rng::seed_from_u64(5);
    let a = random_image(&mut rng);
    let b = random_image(&mut rng);
    assert!((ssim(&a, &b).unwrap() - ssim(&b, &a).unwrap()).abs() < 1e-15);
    assert!((psnr(&a, &b).unwrap() - psnr(&b, &a).unwrap()).abs() < 1e-15);
    let inv = a.mapv(|v| 1.0 - v);
    let v = ssim(&a, &inv).unwrap();
    assert!(v < 1.0 && (v - brute_ssim(&a, &inv)).abs() < 1e-6);
}
