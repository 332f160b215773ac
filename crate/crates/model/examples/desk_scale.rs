//! Toy-scale training probe on 64x64 phantoms with per-epoch held-out PSNR.
//!
//! `cargo run --release -p hdcg-model --example desk_scale -- [n_train] [epochs] [lr] [pretrain_epochs] [critic_base] [critic_downs] [gen_base]`

use hdcg_core::{generate_phantom, BScan, PhantomConfig, UnpairedIterator};
use hdcg_model::pretrain::{pretrain_generator_autoencoder, PretrainConfig};
use hdcg_model::train::epoch_mean_cycle;
use hdcg_model::*;
use ndarray::Array2;
use std::time::Instant;

fn psnr(a: &Array2<f64>, b: &Array2<f64>) -> f64 {
    let mse = (a - b).mapv(|v| v * v).mean().unwrap();
    -10.0 * mse.log10()
}

fn affine_psnr(a: &Array2<f64>, b: &Array2<f64>) -> f64 {
    let (ma, mb) = (a.mean().unwrap(), b.mean().unwrap());
    let cov = ((a - ma) * (b - mb)).mean().unwrap();
    let var = (a - ma).mapv(|v| v * v).mean().unwrap();
    let g = cov / var;
    psnr(&a.mapv(|v| (v - ma) * g + mb), b)
}

fn main() {
    let args: Vec<String> = std::env::args().collect();
    let n_train: usize = args.get(1).map_or(20, |s| s.parse().unwrap());
    let epochs: usize = args.get(2).map_or(50, |s| s.parse().unwrap());
    let lr: f64 = args.get(3).map_or(5e-4, |s| s.parse().unwrap());
    let pre: usize = args.get(4).map_or(0, |s| s.parse().unwrap());
    let dbase: usize = args.get(5).map_or(8, |s| s.parse().unwrap());
    let dn: usize = args.get(6).map_or(4, |s| s.parse().unwrap());
    let gbase: usize = args.get(7).map_or(8, |s| s.parse().unwrap());
    let cfg = PhantomConfig::with_size(64, 64);
    let hn: Vec<BScan> = (0..n_train as u64).map(|s| generate_phantom(&cfg, 12, 60, 100 + s).unwrap().hn).collect();
    let ln: Vec<BScan> = (0..n_train as u64).map(|s| generate_phantom(&cfg, 12, 60, 500 + s).unwrap().ln).collect();
    let test: Vec<_> = (0..20u64).map(|s| generate_phantom(&cfg, 12, 60, 9000 + s).unwrap()).collect();
    let mut tc = TrainConfig::toy();
    tc.epochs = epochs;
    tc.learning_rate = lr;
    tc.checkpoint_every = 0;
    tc.seed = 1;
    tc.discriminator.base_channels = dbase;
    tc.discriminator.n_downsample = dn;
    tc.generator.base_channels = gbase;
    let mut state = TrainState::new(&tc).unwrap();
    if pre > 0 {
        let pc = PretrainConfig { epochs: pre, learning_rate: 2e-3, seed: 0 };
        let hn_a: Vec<&Array2<f64>> = hn.iter().map(|b| b.pixels()).collect();
        let ln_a: Vec<&Array2<f64>> = ln.iter().map(|b| b.pixels()).collect();
        let mut gl = state.model.gen_l.clone();
        let o = pretrain_generator_autoencoder(&mut gl, &hn_a, &pc).unwrap();
        let mut gh = state.model.gen_h.clone();
        pretrain_generator_autoencoder(&mut gh, &ln_a, &pc).unwrap();
        println!("pretrain mae {:?}", o.epoch_losses.last());
        state.init_generators(Some(gh.params()), Some(gl.params())).unwrap();
    }
    let mut data = UnpairedIterator::new(&hn, &ln, 1).unwrap();
    let t = Instant::now();
    for e in 0..epochs {
        train::train_epoch(&mut state, &mut data).unwrap();
        let (mut raw, mut den, mut aff, mut bias) = (0.0, 0.0, 0.0, 0.0);
        for s in &test {
            raw += psnr(s.hn.pixels(), s.clean.pixels());
            let d = denoise(&state.model, &s.hn).unwrap();
            den += psnr(d.pixels(), s.clean.pixels());
            aff += affine_psnr(d.pixels(), s.clean.pixels());
            bias += d.pixels().mean().unwrap() - s.clean.pixels().mean().unwrap();
        }
        let cyc = epoch_mean_cycle(&state.history);
        let h = &state.history;
        let k = h.len() / (e + 1);
        let last = &h[h.len() - k..];
        let lg = last.iter().map(|r| r.gen).sum::<f64>() / k as f64;
        let ld = last.iter().map(|r| r.disc).sum::<f64>() / k as f64;
        println!(
            "ep {:2} t={:4.0}s raw {:.2} den {:.2} aff {:.2} bias {:+.3} LG {:.3} LD {:.3} cyc {:.4} ratio {:.2}",
            e + 1, t.elapsed().as_secs_f64(), raw / 20.0, den / 20.0, aff / 20.0, bias / 20.0, lg, ld, cyc.last().unwrap(), cyc.last().unwrap() / cyc[0]
        );
    }
}
