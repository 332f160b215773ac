//! Monte-Carlo checks of the frame-averaged speckle model.

use hdcg_core::phantom::speckle_average;
use ndarray::Array2;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

fn variance(v: &[f64]) -> f64 {
    let n = v.len() as f64;
    let m = v.iter().sum::<f64>() / n;
    v.iter().map(|x| (x - m) * (x - m)).sum::<f64>() / (n - 1.0)
}

/// Multiplicative speckle factor of an `n`-frame average, sampled over a
/// constant unit region.
fn factors(n: usize, pixels: usize, seed: u64) -> Vec<f64> {
    let clean = Array2::from_elem((1, pixels), 1.0);
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    speckle_average(&clean, n, &mut rng).into_raw_vec_and_offset().0
}

#[test]
fn variance_ratio_twelve_vs_sixty_frames() {
    // Var(Gamma(N, 1/N)) = 1/N, so the expected ratio is 60 / 12 = 5.
    let v12 = variance(&factors(12, 1000, 100));
    let v60 = variance(&factors(60, 1000, 200));
    let ratio = v12 / v60;
    assert!((ratio - 5.0).abs() <= 0.5, "variance ratio {ratio}");
    // Each variance also matches its closed form within sampling error.
    assert!((v12 - 1.0 / 12.0).abs() < 0.1 / 12.0 * 1.5);
    assert!((v60 - 1.0 / 60.0).abs() < 0.1 / 60.0 * 1.5);
}

#[test]
fn mean_unbiased_within_three_standard_errors() {
    for (n, c) in [(12usize, 0.3), (60, 0.7), (1, 0.5)] {
        let clean = Array2::from_elem((40, 40), c);
        let mut rng = ChaCha8Rng::seed_from_u64(n as u64);
        let noisy = speckle_average(&clean, n, &mut rng);
        let mean = noisy.mean().unwrap();
        let se = c * (1.0 / n as f64).sqrt() / (1600f64).sqrt();
        assert!((mean - c).abs() < 3.0 * se, "n={n}: mean {mean} vs {c}");
    }
}
