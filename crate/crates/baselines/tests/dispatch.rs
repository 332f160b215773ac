use hdcg_baselines::*;
use hdcg_core::{BScan, Domain};
use ndarray::Array2;

fn scan() -> BScan {
    let px = Array2::from_shape_fn((32, 32), |(y, x)| ((y * 5 + x * 3) % 13) as f64 / 13.0);
    BScan::new(px, Domain::HighNoise, "vol/0").unwrap()
}

#[test]
fn run_baseline_dispatches_and_times() {
    let img = scan();
    let params = BaselineParams::default();
    let (out, elapsed) = run_baseline("median", &img, &params).unwrap();
    let direct = median_denoise(img.pixels(), params.median.window).unwrap();
    assert_eq!(out.pixels(), &direct);
    assert_eq!(out.domain(), Domain::Generated);
    assert_eq!(out.source_id(), "vol/0");
    assert!(elapsed.as_nanos() > 0);
    assert!(matches!(run_baseline("gaussian", &img, &params), Err(BaselineError::UnknownMethod(_))));
}

#[test]
fn repeated_runs_report_every_timing() {
    let (_, times) = run_baseline_repeated("bilateral", &scan(), &BaselineParams::default(), 5).unwrap();
    assert_eq!(times.len(), 5);
    assert!(times.iter().all(|t| t.as_nanos() > 0));
}

#[test]
fn all_methods_keep_unit_range() {
    let img = scan();
    let params = BaselineParams::default();
    for m in Method::ALL {
        let out = denoise(&params.for_method(m), &img).unwrap();
        assert!(out.pixels().iter().all(|v| (0.0..=1.0).contains(v)), "{m}");
    }
}

proptest::proptest! {
    #![proptest_config(proptest::prelude::ProptestConfig::with_cases(64))]
    #[test]
    fn outputs_stay_in_unit_range(seed in 0u64..10_000, method in 0usize..4) {
        use rand::{Rng, SeedableRng};
        let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(seed);
        let px = Array2::from_shape_fn((32, 32), |_| rng.random::<f64>());
        let img = BScan::new(px, Domain::HighNoise, "p").unwrap();
        let m = Method::ALL[method];
        let out = denoise(&BaselineParams::default().for_method(m), &img).unwrap();
        proptest::prop_assert!(out.pixels().iter().all(|v| (0.0..=1.0).contains(v)));
    }
}
