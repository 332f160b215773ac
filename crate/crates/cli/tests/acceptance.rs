//! Acceptance gate. Runs every primary criterion and prints one line each.
//!
//! `cargo test -p hdcg-cli --test acceptance`. The training criterion runs 50
//! epochs and dominates the runtime.

mod common;

use std::collections::HashMap;
use std::sync::Arc;
use std::time::Instant;

use hdcg_baselines::{run_baseline, BaselineParams, Method};
use hdcg_cli::rating::{presentation_order, router, Store};
use hdcg_core::imgops::{gaussian_blur, Boundary};
use hdcg_core::phantom::speckle_average;
use hdcg_core::{generate_phantom, BScan, Domain, PhantomConfig, UnpairedIterator};
use hdcg_inspection::{skeletonize_layers, thickness_profile, two_line_image};
use hdcg_metrics::{apply_shift, benchmark_runtime, cnr, evaluate_method, extract_masks, msr, psnr, register_translation, ssim};
use hdcg_metrics::{EvalConfig, MaskConfig, Shift};
use hdcg_model::cyclegan::TermWeights;
use hdcg_model::loss::{discriminator_loss, generator_loss, total_loss, ClassTargets};
use hdcg_model::params::ParamSet;
use hdcg_model::train::{epoch_mean_cycle, train_epoch};
use hdcg_model::{denoise, discriminator_score_report, CriticMode, CycleGan, DiscriminatorSpec, GeneratorSpec, LossWeights};
use hdcg_model::{Generator, TrainConfig, TrainState};
use hdcg_model::discriminator::Discriminator;
use ndarray::{Array2, Array3};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde_json::json;

type Outcome = Result<String, String>;

fn ensure(ok: bool, detail: String) -> Outcome {
    if ok { Ok(detail) } else { Err(detail) }
}

// ---------------------------------------------------------------- losses

fn loss_oracle() -> Outcome {
    let u = [1.0 / 3.0; 3];
    let t = ClassTargets::default();
    let lg = generator_loss(&u, &u, &t);
    let ld = discriminator_loss(&u, &u, &u, &u, &t);
    let ln3 = 3f64.ln();
    // 1*2.1972 + 1*4.3944 + 10*0.1, summed by hand.
    let total = total_loss(2.1972, 4.3944, 0.1, LossWeights { gan: 1.0, cycle: 10.0 });
    let ok = (lg - 2.0 * ln3).abs() < 1e-6 && (ld - 4.0 * ln3).abs() < 1e-6 && (total - 7.5916).abs() < 1e-9;
    ensure(ok, format!("L_G {lg:.9} L_D {ld:.9} total {total:.10}"))
}

// ---------------------------------------------------------------- gradients

fn tiny_specs() -> (GeneratorSpec, DiscriminatorSpec) {
    let g = GeneratorSpec {
        base_channels: 1,
        n_downsample: 1,
        n_resblocks: 1,
        convs_per_resblock: 2,
        initial_kernel: 3,
        ..GeneratorSpec::default()
    };
    let d = DiscriminatorSpec {
        base_channels: 1,
        n_downsample: 2,
        convs_per_resblock: 1,
        ..DiscriminatorSpec::default()
    };
    (g, d)
}

fn param_sets_mut(model: &mut CycleGan) -> Vec<&mut ParamSet> {
    let mut out = vec![model.gen_h.params_mut(), model.gen_l.params_mut()];
    out.extend(model.critic.networks_mut().into_iter().map(|d| d.params_mut()));
    out
}

fn total(model: &CycleGan, l: &Array2<f64>, h: &Array2<f64>, w: LossWeights) -> f64 {
    let (loss, _, _) = model.forward_backward(l, h, TermWeights::ZERO, TermWeights::ZERO).unwrap();
    loss.with_total(w).total
}

fn worst_gradient_error(mode: CriticMode, seed: u64) -> (usize, f64) {
    let (gs, ds) = tiny_specs();
    let mut model = CycleGan::new(&gs, &ds, mode, seed).unwrap();
    let count = model.param_count();
    let mut rng = ChaCha8Rng::seed_from_u64(seed + 100);
    for set in param_sets_mut(&mut model) {
        for p in &mut set.params {
            for v in &mut p.data {
                *v = rng.random_range(-0.5..0.5);
            }
        }
    }
    let l = Array2::from_shape_fn((8, 8), |_| rng.random::<f64>());
    let h = Array2::from_shape_fn((8, 8), |_| rng.random::<f64>());
    let w = LossWeights { gan: 1.0, cycle: 10.0 };
    let tw = TermWeights::total(w);
    let (_, grads, _) = model.forward_backward(&l, &h, tw, tw).unwrap();
    let mut analytic: Vec<Vec<f64>> = vec![grads.gen_h.flatten(), grads.gen_l.flatten()];
    analytic.extend(grads.critic.iter().map(|g| g.flatten()));

    let step = 1e-5;
    let mut worst = 0.0f64;
    for (s, analytic_set) in analytic.iter().enumerate() {
        let lens: Vec<usize> = param_sets_mut(&mut model)[s].params.iter().map(|p| p.data.len()).collect();
        let mut flat = 0;
        for (pi, len) in lens.into_iter().enumerate() {
            for k in 0..len {
                let orig = param_sets_mut(&mut model)[s].params[pi].data[k];
                param_sets_mut(&mut model)[s].params[pi].data[k] = orig + step;
                let up = total(&model, &l, &h, w);
                param_sets_mut(&mut model)[s].params[pi].data[k] = orig - step;
                let down = total(&model, &l, &h, w);
                param_sets_mut(&mut model)[s].params[pi].data[k] = orig;
                let numeric = (up - down) / (2.0 * step);
                let a = analytic_set[flat];
                worst = worst.max((a - numeric).abs() / a.abs().max(numeric.abs()).max(1e-6));
                flat += 1;
            }
        }
    }
    (count, worst)
}

fn gradient_check() -> Outcome {
    let (n_shared, e_shared) = worst_gradient_error(CriticMode::SharedDiscriminator, 7);
    let (n_vanilla, e_vanilla) = worst_gradient_error(CriticMode::VanillaTwoDiscriminators, 11);
    let ok = n_shared <= 500 && n_vanilla <= 500 && e_shared < 1e-3 && e_vanilla < 1e-3;
    ensure(ok, format!("shared {n_shared} params max rel {e_shared:.2e}; vanilla {n_vanilla} params max rel {e_vanilla:.2e}"))
}

// ---------------------------------------------------------------- shapes

const GENERATOR_ROWS: &[(&str, &str)] = &[
    ("initial convolution", "512x512x16"),
    ("down-sampling 1", "256x256x32"),
    ("down-sampling 2", "128x128x64"),
    ("down-sampling 3", "64x64x128"),
    ("residual block 1", "64x64x128"),
    ("residual block 2", "64x64x128"),
    ("residual block 3", "64x64x128"),
    ("residual block 4", "64x64x128"),
    ("residual block 5", "64x64x128"),
    ("residual block 6", "64x64x128"),
    ("up-sampling 1", "128x128x64"),
    ("up-sampling 2", "256x256x32"),
    ("up-sampling 3", "512x512x16"),
    ("final convolution", "512x512x1"),
];

const DISCRIMINATOR_ROWS: &[(&str, &str)] = &[
    ("down-sampling 1", "256x256x16"),
    ("residual block 1", "256x256x16"),
    ("down-sampling 2", "128x128x32"),
    ("residual block 2", "128x128x32"),
    ("down-sampling 3", "64x64x64"),
    ("residual block 3", "64x64x64"),
    ("down-sampling 4", "32x32x128"),
    ("residual block 4", "32x32x128"),
    ("down-sampling 5", "16x16x256"),
    ("residual block 5", "16x16x256"),
    ("down-sampling 6", "8x8x512"),
    ("residual block 6", "8x8x512"),
    ("down-sampling 7", "4x4x1024"),
    ("residual block 7", "4x4x1024"),
    ("average pooling", "1024"),
    ("logits", "3"),
];

fn label(shape: &[usize]) -> String {
    match shape {
        [c, h, w] => format!("{h}x{w}x{c}"),
        [n] => n.to_string(),
        other => format!("{other:?}"),
    }
}

fn matches(got: &[(String, String)], want: &[(&str, &str)]) -> usize {
    if got.len() != want.len() {
        return 0;
    }
    got.iter().zip(want).filter(|((n, s), (wn, ws))| n == wn && s == ws).count()
}

fn shape_conformance() -> Outcome {
    let gen_table: Vec<(String, String)> = GeneratorSpec::default()
        .layer_shapes(512, 512)
        .map_err(|e| e.to_string())?
        .iter()
        .map(|s| (s.name.clone(), s.output_label()))
        .collect();
    let disc_table: Vec<(String, String)> = DiscriminatorSpec::default()
        .layer_shapes(512, 512)
        .map_err(|e| e.to_string())?
        .iter()
        .map(|s| (s.name.clone(), s.output_label()))
        .collect();

    let mut rng = ChaCha8Rng::seed_from_u64(0);
    let x = Array3::from_elem((1, 512, 512), 0.5);
    let gen = Generator::new(&GeneratorSpec::default(), &mut rng).map_err(|e| e.to_string())?;
    let gen_real: Vec<(String, String)> = gen.trace(&x).iter().map(|(n, t)| (n.clone(), label(t.shape()))).collect();
    let disc = Discriminator::new(&DiscriminatorSpec::default(), &mut rng).map_err(|e| e.to_string())?;
    let disc_real: Vec<(String, String)> = disc.trace_shapes(&x).iter().map(|(n, s)| (n.clone(), label(s))).collect();

    let counts = [
        matches(&gen_table, GENERATOR_ROWS),
        matches(&gen_real, GENERATOR_ROWS),
        matches(&disc_table, DISCRIMINATOR_ROWS),
        matches(&disc_real, DISCRIMINATOR_ROWS),
    ];
    let ok = counts[0] == GENERATOR_ROWS.len()
        && counts[1] == GENERATOR_ROWS.len()
        && counts[2] == DISCRIMINATOR_ROWS.len()
        && counts[3] == DISCRIMINATOR_ROWS.len();
    ensure(
        ok,
        format!(
            "generator {}/{} rows (spec) {}/{} (tensors); discriminator {}/{} (spec) {}/{} (tensors)",
            counts[0],
            GENERATOR_ROWS.len(),
            counts[1],
            GENERATOR_ROWS.len(),
            counts[2],
            DISCRIMINATOR_ROWS.len(),
            counts[3],
            DISCRIMINATOR_ROWS.len()
        ),
    )
}

// ---------------------------------------------------------------- metrics

fn brute_psnr(a: &Array2<f64>, b: &Array2<f64>) -> f64 {
    let mut se = 0.0;
    for (x, y) in a.iter().zip(b.iter()) {
        se += (x - y) * (x - y);
    }
    10.0 * (1.0 / (se / a.len() as f64)).log10()
}

fn brute_ssim(a: &Array2<f64>, b: &Array2<f64>) -> f64 {
    let win = 11usize;
    let mut wts = vec![vec![0.0; win]; win];
    let mut norm = 0.0;
    for (i, row) in wts.iter_mut().enumerate() {
        for (j, w) in row.iter_mut().enumerate() {
            let d2 = (i as f64 - 5.0).powi(2) + (j as f64 - 5.0).powi(2);
            *w = (-d2 / 4.5).exp();
            norm += *w;
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
                    ma += wts[i][j] / norm * a[[oy + i, ox + j]];
                    mb += wts[i][j] / norm * b[[oy + i, ox + j]];
                }
            }
            let (mut va, mut vb, mut cov) = (0.0, 0.0, 0.0);
            for i in 0..win {
                for j in 0..win {
                    let w = wts[i][j] / norm;
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

fn region(img: &Array2<f64>, mask: &Array2<bool>) -> (f64, f64) {
    let vals: Vec<f64> = img.iter().zip(mask.iter()).filter(|(_, &m)| m).map(|(&v, _)| v).collect();
    let n = vals.len() as f64;
    let mean = vals.iter().sum::<f64>() / n;
    (mean, vals.iter().map(|v| (v - mean).powi(2)).sum::<f64>() / n)
}

fn metric_oracles() -> Outcome {
    let mut rng = ChaCha8Rng::seed_from_u64(2024);
    let mut worst = [0.0f64; 4];
    for _ in 0..100 {
        let a = Array2::from_shape_fn((16, 16), |_| rng.random::<f64>());
        let b = Array2::from_shape_fn((16, 16), |_| rng.random::<f64>());
        let signal = Array2::from_shape_fn((16, 16), |_| rng.random_bool(0.3));
        let background = Array2::from_shape_fn((16, 16), |(y, x)| !signal[[y, x]] && rng.random_bool(0.5));
        worst[0] = worst[0].max((psnr(&a, &b).map_err(|e| e.to_string())? - brute_psnr(&a, &b)).abs());
        worst[1] = worst[1].max((ssim(&a, &b).map_err(|e| e.to_string())? - brute_ssim(&a, &b)).abs());
        if signal.iter().any(|&v| v) && background.iter().any(|&v| v) {
            let (ms, vs) = region(&a, &signal);
            let (mb, vb) = region(&a, &background);
            let c = cnr(&a, &signal, &background).map_err(|e| e.to_string())?;
            worst[2] = worst[2].max((c - (ms - mb) / (vs + vb).sqrt()).abs());
            let m = msr(&a, &signal).map_err(|e| e.to_string())?;
            worst[3] = worst[3].max((m - ms / vs.sqrt()).abs());
        }
    }

    let mut hits = 0;
    for i in 0..100u64 {
        let reference = generate_phantom(&PhantomConfig::with_size(64, 64), 12, 60, 100 + i).map_err(|e| e.to_string())?.hn.into_pixels();
        let (dy, dx) = (rng.random_range(-10i64..=10), rng.random_range(-10i64..=10));
        let (h, w) = (64i64, 64i64);
        let moving = Array2::from_shape_fn((64, 64), |(y, x)| {
            reference[[(y as i64 + dy).rem_euclid(h) as usize, (x as i64 + dx).rem_euclid(w) as usize]]
        });
        let s = register_translation(&reference, &moving, false).map_err(|e| e.to_string())?;
        hits += usize::from((s.dy, s.dx) == (dy as f64, dx as f64));
    }

    let noise = Array2::from_shape_fn((96, 96), |_| rng.random::<f64>());
    let texture = gaussian_blur(&noise, 1.5, Boundary::Reflect);
    let mut sub_worst = 0.0f64;
    for (dy, dx) in [(-7.5, 2.25), (1.25, -3.75), (0.4, 0.6), (5.7, -9.3)] {
        let moved = apply_shift(&texture, &Shift::new(dy, dx));
        let s = register_translation(&moved, &texture, true).map_err(|e| e.to_string())?;
        sub_worst = sub_worst.max((s.dy - dy).abs()).max((s.dx - dx).abs());
    }

    let ok = worst[0] < 1e-9 && worst[1] < 1e-6 && worst[2] < 1e-12 && worst[3] < 1e-12 && hits == 100 && sub_worst <= 0.25;
    ensure(
        ok,
        format!(
            "max err psnr {:.1e} ssim {:.1e} cnr {:.1e} msr {:.1e}; integer shifts {hits}/100; subpixel max err {sub_worst:.3} px",
            worst[0], worst[1], worst[2], worst[3]
        ),
    )
}

// ---------------------------------------------------------------- phantom

fn sample_variance(v: &[f64]) -> f64 {
    let n = v.len() as f64;
    let m = v.iter().sum::<f64>() / n;
    v.iter().map(|x| (x - m) * (x - m)).sum::<f64>() / (n - 1.0)
}

fn frame_averaging_law() -> Outcome {
    let clean = Array2::from_elem((1, 1000), 1.0);
    let v12 = sample_variance(speckle_average(&clean, 12, &mut ChaCha8Rng::seed_from_u64(100)).as_slice().unwrap());
    let v60 = sample_variance(speckle_average(&clean, 60, &mut ChaCha8Rng::seed_from_u64(200)).as_slice().unwrap());
    let ratio = v12 / v60;
    ensure((ratio - 5.0).abs() <= 0.5, format!("var12 {v12:.5} var60 {v60:.5} ratio {ratio:.3}"))
}

// ---------------------------------------------------------------- baselines

fn baseline_ordering() -> Outcome {
    let cfg = PhantomConfig::with_size(128, 128);
    let pairs: Vec<(BScan, BScan)> = (0..50u64)
        .map(|i| generate_phantom(&cfg, 12, 60, 20_000 + i).map(|s| (s.hn, s.clean)))
        .collect::<Result<_, _>>()
        .map_err(|e| e.to_string())?;
    let eval_cfg = EvalConfig::default();
    let params = BaselineParams::default();
    let mut overlaps = 0usize;
    let mut extracted = 0usize;
    let mut check_masks = |img: &BScan| {
        if let Ok(m) = extract_masks(img.pixels(), &MaskConfig::default()) {
            extracted += 1;
            overlaps += m.signal.iter().zip(m.background.iter()).filter(|(&s, &b)| s && b).count();
        }
    };

    let raw = evaluate_method("raw", &pairs, |img| Ok::<_, String>(img.clone()), &eval_cfg).map_err(|e| e.to_string())?;
    for (hn, _) in &pairs {
        check_masks(hn);
    }
    let mut lines = vec![format!("raw cnr {:.3} msr {:.3} psnr {:.2}", raw.row.cnr.mean, raw.row.msr.mean, raw.row.psnr.mean)];
    let mut ok = true;
    for m in Method::ALL {
        let mut outputs = Vec::new();
        let ev = evaluate_method(
            m.name(),
            &pairs,
            |img| {
                let out = run_baseline(m.name(), img, &params).map(|(b, _)| b).map_err(|e| e.to_string())?;
                outputs.push(out.clone());
                Ok::<_, String>(out)
            },
            &eval_cfg,
        )
        .map_err(|e| e.to_string())?;
        for o in &outputs {
            check_masks(o);
        }
        let r = &ev.row;
        let better = r.cnr.mean >= raw.row.cnr.mean && r.msr.mean >= raw.row.msr.mean && r.psnr.mean >= raw.row.psnr.mean;
        ok &= better;
        lines.push(format!(
            "{} cnr {:.3} msr {:.3} psnr {:.2}{}",
            m.name(),
            r.cnr.mean,
            r.msr.mean,
            r.psnr.mean,
            if better { "" } else { " (below raw)" }
        ));
    }
    ok &= overlaps == 0 && extracted > 0;
    lines.push(format!("{extracted} mask extractions, {overlaps} overlapping pixels"));
    ensure(ok, lines.join("; "))
}

// ---------------------------------------------------------------- training

const TRAIN_EPOCHS: usize = 50;
const N_TRAIN: u64 = 20;
const N_HELD_OUT: u64 = 20;

fn desk_scale_training() -> Outcome {
    let cfg = PhantomConfig::with_size(64, 64);
    let phantom = |seed: u64| generate_phantom(&cfg, 12, 60, seed).map_err(|e| e.to_string());
    let hn: Vec<BScan> = (0..N_TRAIN).map(|s| phantom(100 + s).map(|p| p.hn)).collect::<Result<_, _>>()?;
    let ln: Vec<BScan> = (0..N_TRAIN).map(|s| phantom(500 + s).map(|p| p.ln)).collect::<Result<_, _>>()?;
    let held_out: Vec<_> = (0..N_HELD_OUT).map(|s| phantom(9000 + s)).collect::<Result<_, _>>()?;

    let mut tc = TrainConfig::toy();
    tc.epochs = TRAIN_EPOCHS;
    tc.checkpoint_every = 0;
    tc.seed = 1;
    let mut state = TrainState::new(&tc).map_err(|e| e.to_string())?;
    let mut data = UnpairedIterator::new(&hn, &ln, 1).map_err(|e| e.to_string())?;
    let start = Instant::now();
    for _ in 0..TRAIN_EPOCHS {
        train_epoch(&mut state, &mut data).map_err(|e| e.to_string())?;
    }
    let minutes = start.elapsed().as_secs_f64() / 60.0;

    let (mut raw, mut den) = (0.0, 0.0);
    for s in &held_out {
        raw += psnr(s.hn.pixels(), s.clean.pixels()).map_err(|e| e.to_string())?;
        let d = denoise(&state.model, &s.hn).map_err(|e| e.to_string())?;
        den += psnr(d.pixels(), s.clean.pixels()).map_err(|e| e.to_string())?;
    }
    raw /= N_HELD_OUT as f64;
    den /= N_HELD_OUT as f64;
    let gain = den - raw;

    let cycle = epoch_mean_cycle(&state.history);
    let (first, last) = (cycle[0], *cycle.last().unwrap());
    let ratio = last / first;

    let hn_ho: Vec<BScan> = held_out.iter().map(|s| s.hn.clone()).collect();
    let ln_ho: Vec<BScan> = held_out.iter().map(|s| s.ln.clone()).collect();
    let report = discriminator_score_report(&state.model, &hn_ho, &ln_ho).map_err(|e| e.to_string())?;
    let mut csv = Vec::new();
    report.write_csv(&mut csv).map_err(|e| e.to_string())?;
    let table = String::from_utf8_lossy(&csv).replace('\n', " | ");
    let report_ok = csv.iter().filter(|&&b| b == b'\n').count() >= 3;

    let (a, b) = (gain >= 1.0, ratio < 0.25);
    ensure(
        a && b && report_ok,
        format!(
            "(a) raw {raw:.2} dB denoised {den:.2} dB gain {gain:+.2} dB [{}]; (b) cycle epoch 1 {first:.4} epoch {TRAIN_EPOCHS} {last:.4} ratio {ratio:.3} [{}]; (c) score report [{}] {table}; {minutes:.1} min",
            verdict(a),
            verdict(b),
            verdict(report_ok)
        ),
    )
}

fn verdict(ok: bool) -> &'static str {
    if ok { "ok" } else { "fail" }
}

// ---------------------------------------------------------------- inspection

fn inspection_two_lines() -> Outcome {
    let img = BScan::new(two_line_image(400, 512, [100, 300], 3), Domain::LowNoise, "lines").map_err(|e| e.to_string())?;
    let skel = skeletonize_layers(&img, &Array2::ones((400, 512))).map_err(|e| e.to_string())?;
    let ilm: Vec<f64> = skel.ilm_curve.iter().flatten().copied().collect();
    let rpe: Vec<f64> = skel.rpe_curve.iter().flatten().copied().collect();
    let thick: Vec<f64> = skel.thickness.iter().flatten().copied().collect();
    let max_dev = |v: &[f64], want: f64| v.iter().map(|r| (r - want).abs()).fold(0.0f64, f64::max);
    let mask = skel.mask();
    let (h, w) = mask.dim();
    let mut max_neighbours = 0;
    for ((r, c), _) in mask.indexed_iter().filter(|(_, &v)| v) {
        let mut n = 0;
        for y in r.saturating_sub(1)..=(r + 1).min(h - 1) {
            for x in c.saturating_sub(1)..=(c + 1).min(w - 1) {
                n += usize::from((y, x) != (r, c) && mask[[y, x]]);
            }
        }
        max_neighbours = max_neighbours.max(n);
    }
    let summary = thickness_profile(&skel, None).summary_px.map(|s| s.mean).unwrap_or(f64::NAN);
    let (di, dr, dt) = (max_dev(&ilm, 100.0), max_dev(&rpe, 300.0), max_dev(&thick, 200.0));
    let ok = !ilm.is_empty() && !rpe.is_empty() && !thick.is_empty() && di <= 1.0 && dr <= 1.0 && dt <= 1.0 && max_neighbours <= 2;
    ensure(
        ok,
        format!(
            "ilm dev {di:.2} px over {} cols, rpe dev {dr:.2} px over {} cols, thickness mean {summary:.2} max dev {dt:.2}, max skeleton neighbours {max_neighbours}",
            ilm.len(),
            rpe.len()
        ),
    )
}

// ---------------------------------------------------------------- runtime

fn runtime_harness() -> Outcome {
    let cfg = PhantomConfig::with_size(128, 128);
    let images: Vec<BScan> = (0..4u64)
        .map(|i| generate_phantom(&cfg, 12, 60, 30_000 + i).map(|s| s.hn))
        .collect::<Result<_, _>>()
        .map_err(|e| e.to_string())?;
    let params = &BaselineParams::default();
    let run = |name: &'static str| move |img: &BScan| run_baseline(name, img, params).map(|(b, _)| b).map_err(|e| e.to_string());
    let (median, bm3d) = (run("median"), run("bm3d"));
    let methods: Vec<hdcg_metrics::runtime::Method<'_>> = vec![("median", &median), ("bm3d", &bm3d)];
    let repeats = 3;
    let report = benchmark_runtime(&methods, &images, repeats, "cpu").map_err(|e| e.to_string())?;
    let want = images.len() * repeats;
    let complete = report.rows.len() == 2
        && report.rows.iter().all(|r| r.n == want && r.samples_s.len() == want && r.samples_s.iter().all(|t| t.is_finite() && *t >= 0.0));
    let (m, b) = match (report.row("median"), report.row("bm3d")) {
        (Some(m), Some(b)) => (m.mean_s, b.mean_s),
        _ => return Err("report is missing a method".into()),
    };
    ensure(complete && m < b, format!("median {:.4} s, bm3d {:.4} s, {want} timed runs each, complete {complete}", m, b))
}

// ---------------------------------------------------------------- rating

async fn blinding_scan() -> Result<(usize, usize), String> {
    use common::*;
    let dir = tempfile::tempdir().map_err(|e| e.to_string())?;
    write_dataset(dir.path(), "set", 6);
    let app = router(Arc::new(Store::open(dir.path()).map_err(|e| e.to_string())?));
    let mut served: Vec<Vec<u8>> = Vec::new();
    let created = call(&app, "POST", "/sessions", Some(session_request("set", 6, "r", 3))).await;
    served.push(created.bytes.clone());
    let id = created.json()["session_id"].as_str().ok_or("no session id")?.to_string();
    loop {
        let next = call(&app, "GET", &format!("/sessions/{id}/next"), None).await;
        served.push(next.bytes.clone());
        let v = next.json();
        if v["done"] == true {
            break;
        }
        let s = &v["sample"];
        served.push(call(&app, "GET", s["reference_url"].as_str().ok_or("no reference url")?, None).await.bytes);
        let mut ranking = Vec::new();
        for c in s["candidates"].as_array().ok_or("no candidates")? {
            served.push(call(&app, "GET", c["image_url"].as_str().ok_or("no image url")?, None).await.bytes);
            ranking.push(c["candidate_id"].clone());
        }
        let body = json!({"schema": "hdcg.rating.v1", "sample_id": s["sample_id"], "ranking": ranking});
        served.push(call(&app, "POST", &format!("/sessions/{id}/ratings"), Some(body)).await.bytes);
    }
    let mut hits = 0;
    for p in &served {
        for m in METHODS {
            hits += usize::from(contains(p, m) || contains(p, &m.to_ascii_uppercase()));
        }
    }
    Ok((served.len(), hits))
}

fn replay_matches() -> Result<bool, String> {
    use common::*;
    use hdcg_cli::rating::{CreateSessionRequest, SubmitRequest};
    let dir = tempfile::tempdir().map_err(|e| e.to_string())?;
    write_dataset(dir.path(), "set", 4);
    let store = Store::open(dir.path()).map_err(|e| e.to_string())?;
    let mut ids = Vec::new();
    for (n, seed) in [(4, 1), (3, 2)] {
        let req: CreateSessionRequest = serde_json::from_value(session_request("set", n, "rater", seed)).map_err(|e| e.to_string())?;
        ids.push(store.create_session(&req).map_err(|e| e.to_string())?.session_id);
    }
    for id in [&ids[0], &ids[0], &ids[1]] {
        let s = store.next_sample(id).map_err(|e| e.to_string())?.sample.ok_or("session ended early")?;
        let mut ranking: Vec<String> = s.candidates.iter().map(|c| c.candidate_id.clone()).collect();
        ranking.reverse();
        let req = SubmitRequest { schema: "hdcg.rating.v1".into(), sample_id: s.sample_id, rater_id: None, ranking };
        store.submit_rating(id, &req).map_err(|e| e.to_string())?;
    }
    let before = store.snapshot();
    let next = store.next_sample(&ids[0]).map_err(|e| e.to_string())?;
    drop(store);
    let reopened = Store::open(dir.path()).map_err(|e| e.to_string())?;
    Ok(reopened.snapshot() == before && reopened.next_sample(&ids[0]).map_err(|e| e.to_string())? == next)
}

fn rating_backend() -> Outcome {
    let rt = tokio::runtime::Builder::new_current_thread().enable_all().build().map_err(|e| e.to_string())?;
    let (payloads, hits) = rt.block_on(blinding_scan())?;

    let n = 10_000;
    let mut counts: HashMap<Vec<usize>, usize> = HashMap::new();
    for i in 0..n {
        *counts.entry(presentation_order(2024, i, 3)).or_insert(0) += 1;
    }
    let worst = counts.values().map(|&c| (c as f64 / n as f64 - 1.0 / 6.0).abs()).fold(0.0f64, f64::max);
    let fair = counts.len() == 6 && worst <= 0.02;

    let replay = replay_matches()?;
    ensure(
        hits == 0 && fair && replay,
        format!("{hits} method-name hits in {payloads} payloads; {} orders seen, max deviation from 1/6 {worst:.4}; replay identical {replay}", counts.len()),
    )
}

fn main() {
    let criteria: Vec<(&str, fn() -> Outcome)> = vec![
        ("loss oracle", loss_oracle),
        ("gradient check", gradient_check),
        ("shape conformance", shape_conformance),
        ("metric oracles", metric_oracles),
        ("phantom frame averaging", frame_averaging_law),
        ("baseline ordering", baseline_ordering),
        ("desk-scale training", desk_scale_training),
        ("inspection two lines", inspection_two_lines),
        ("runtime harness", runtime_harness),
        ("rating backend", rating_backend),
    ];
    let mut failed = 0;
    for (name, run) in criteria {
        let start = Instant::now();
        let result = std::panic::catch_unwind(run).unwrap_or_else(|_| Err("panicked".into()));
        let secs = start.elapsed().as_secs_f64();
        match result {
            Ok(detail) => println!("PASS {name} ({secs:.1} s): {detail}"),
            Err(detail) => {
                failed += 1;
                println!("FAIL {name} ({secs:.1} s): {detail}");
            }
        }
    }
    println!("acceptance: {failed} of 10 criteria failed");
    if failed > 0 {
        std::process::exit(1);
    }
}
