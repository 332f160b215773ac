//! Grid search of baseline parameters on held-out phantoms.
//!
//! `cargo run --release -p hdcg-baselines --example tune_defaults`
//!
//! Scores each setting by mean PSNR to the clean phantom over ten phantoms
//! whose seeds are not used anywhere else, and prints the best per method.

use hdcg_baselines::*;
use hdcg_core::{generate_phantom, PhantomConfig};
use hdcg_metrics::psnr;
use ndarray::Array2;

const SEEDS: std::ops::Range<u64> = 9000..9010;

fn score(pairs: &[(Array2<f64>, Array2<f64>)], p: &DenoiserParams) -> f64 {
    pairs
        .iter()
        .map(|(hn, clean)| psnr(&p.apply(hn).unwrap(), clean).unwrap())
        .sum::<f64>()
        / pairs.len() as f64
}

fn best(pairs: &[(Array2<f64>, Array2<f64>)], grid: Vec<DenoiserParams>) {
    let mut scored: Vec<(f64, DenoiserParams)> = grid.into_iter().map(|p| (score(pairs, &p), p)).collect();
    scored.sort_by(|a, b| b.0.total_cmp(&a.0));
    for (s, p) in scored.iter().take(3) {
        println!("{s:8.3} dB  {}", serde_json::to_string(p).unwrap());
    }
    println!();
}

fn main() {
    let pairs: Vec<(Array2<f64>, Array2<f64>)> = SEEDS
        .map(|s| {
            let p = generate_phantom(&PhantomConfig::with_size(128, 128), 12, 60, s).unwrap();
            (p.hn.into_pixels(), p.clean.into_pixels())
        })
        .collect();
    let raw = pairs.iter().map(|(h, c)| psnr(h, c).unwrap()).sum::<f64>() / pairs.len() as f64;
    println!("raw {raw:.3} dB\n");

    best(&pairs, [3, 5, 7, 9].map(|window| DenoiserParams::Median(MedianParams { window })).to_vec());

    let mut g = Vec::new();
    for rule in [ThresholdRule::Bayes, ThresholdRule::Universal] {
        for levels in [3, 4] {
            for threshold_scale in [0.5, 1.0, 1.5, 2.0, 2.5, 3.0, 4.0] {
                g.push(DenoiserParams::Wavelet(WaveletParams {
                    rule,
                    levels,
                    threshold_scale,
                    ..WaveletParams::default()
                }));
            }
        }
    }
    best(&pairs, g);

    let mut g = Vec::new();
    for sigma_spatial in [0.75, 1.0, 1.5, 2.0] {
        for sigma_range in [0.2, 0.5, 1.0, 2.0, 5.0] {
            g.push(DenoiserParams::Bilateral(BilateralParams { sigma_spatial, sigma_range }));
        }
    }
    best(&pairs, g);

    let mut g = Vec::new();
    for (patch, search) in [(5, 11), (5, 15), (7, 15)] {
        for h in [0.1, 0.15, 0.2, 0.3, 0.4] {
            g.push(DenoiserParams::Nlmeans(NlMeansParams { patch, search, h }));
        }
    }
    best(&pairs, g);

    let mut g = Vec::new();
    for sigma in [None, Some(0.12), Some(0.16), Some(0.2), Some(0.25), Some(0.3), Some(0.4)] {
        for lambda_3d in [2.0, 2.7] {
            g.push(DenoiserParams::Bm3d(Bm3dParams {
                sigma,
                lambda_3d,
                ..Bm3dParams::default()
            }));
        }
    }
    best(&pairs, g);
}
