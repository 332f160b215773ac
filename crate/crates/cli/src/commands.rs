//! Command-line interface: argument types and one function per command.

use std::fs;
use std::net::SocketAddr;
use std::path::{Path, PathBuf};

use clap::{Args, Parser, Subcommand, ValueEnum};
use hdcg_core::dataset::{list_volumes, load_volumes, write_slice};
use hdcg_core::io::BitDepth;
use hdcg_core::phantom::PhantomFile;
use hdcg_core::split::{read_id_list, write_id_list};
use hdcg_core::{generate_phantom, load_bscan, save_bscan, split_by_volume, Domain, PhantomConfig, UnpairedIterator};
use hdcg_metrics::{benchmark_runtime, evaluate_method, EvalConfig, MetricReport};
use hdcg_model::train::{save_loss_csv, train_with};
use hdcg_model::{discriminator_score_report, Checkpoint, TrainConfig, TrainState};
use serde::Serialize;

use crate::error::{CliError, Result};
use crate::pipeline::{file_stem, load_model, load_pairs, load_params, parse_methods, Denoiser, OURS};

#[derive(Debug, Parser)]
#[command(name = "hdcg", version, about = "Unpaired OCT denoising: data, training, evaluation and blind rating")]
pub struct Cli {
    /// Log filter, e.g. `info` or `hdcg_model=debug`.
    #[arg(long, global = true, env = "RUST_LOG", default_value = "info")]
    pub log: String,
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Write phantom clean/HN/LN triples and a manifest.
    Synth(SynthArgs),
    /// Train the cycle model on an hn/ln dataset directory.
    Train(TrainArgs),
    /// Denoise one PNG or a directory of PNGs.
    Denoise(DenoiseArgs),
    /// Score denoisers on paired data and write the metric table.
    Evaluate(EvaluateArgs),
    /// Time denoisers per image.
    Bench(BenchArgs),
    /// Render feature maps of the denoising generator and layer skeletons.
    Inspect(InspectArgs),
    /// Serve the blind rating API.
    RateServe(RateServeArgs),
}

#[derive(Debug, Args)]
pub struct SynthArgs {
    /// Number of phantom triples.
    #[arg(long, default_value_t = 50)]
    pub n: usize,
    #[arg(long)]
    pub out: PathBuf,
    /// Phantom JSON config (geometry, frames_hn, frames_ln, seed).
    #[arg(long)]
    pub config: Option<PathBuf>,
    #[arg(long, default_value_t = 64)]
    pub size: usize,
    /// First seed; phantom i uses seed + i. Overrides the config's seed.
    #[arg(long)]
    pub seed: Option<u64>,
}

#[derive(Debug, Args)]
pub struct TrainArgs {
    /// Dataset root with hn/ and ln/ volume folders.
    #[arg(long)]
    pub data: PathBuf,
    /// Training config JSON; the toy configuration when omitted.
    #[arg(long)]
    pub config: Option<PathBuf>,
    #[arg(long)]
    pub out: PathBuf,
    #[arg(long)]
    pub epochs: Option<usize>,
    #[arg(long)]
    pub seed: Option<u64>,
    /// Fraction of volumes used for training.
    #[arg(long, default_value_t = 0.8)]
    pub train_fraction: f64,
    #[arg(long, default_value_t = 0)]
    pub split_seed: u64,
    /// Continue from a checkpoint.
    #[arg(long)]
    pub resume: Option<PathBuf>,
}

#[derive(Debug, Args)]
pub struct DenoiseArgs {
    /// `ours` or a baseline name.
    #[arg(long, default_value = OURS)]
    pub method: String,
    #[arg(long)]
    pub ckpt: Option<PathBuf>,
    /// Baseline parameter JSON.
    #[arg(long)]
    pub params: Option<PathBuf>,
    #[arg(long = "in")]
    pub input: PathBuf,
    #[arg(long)]
    pub out: PathBuf,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum Reference {
    Ln,
    Clean,
}

impl Reference {
    fn domain(self) -> Domain {
        match self {
            Reference::Ln => Domain::LowNoise,
            Reference::Clean => Domain::Clean,
        }
    }
}

#[derive(Debug, Args)]
pub struct EvaluateArgs {
    #[arg(long)]
    pub pairs: PathBuf,
    #[arg(long, default_value = "raw,median,wavelet,bilateral,nlmeans,bm3d,ours")]
    pub methods: String,
    #[arg(long)]
    pub ckpt: Option<PathBuf>,
    #[arg(long)]
    pub params: Option<PathBuf>,
    /// File with one volume id per line; all volumes when omitted.
    #[arg(long)]
    pub ids: Option<PathBuf>,
    #[arg(long, value_enum, default_value_t = Reference::Ln)]
    pub reference: Reference,
    /// Use subpixel registration.
    #[arg(long)]
    pub subpixel: bool,
    #[arg(long, default_value = "metrics.csv")]
    pub out: PathBuf,
    /// Directory for per-sample CSVs, one per method.
    #[arg(long)]
    pub samples_dir: Option<PathBuf>,
    /// Also write `<dir>/<reference>/<id>.png` and `<dir>/<method>/<id>.png`
    /// (the layout the rating service reads).
    #[arg(long)]
    pub save_outputs: Option<PathBuf>,
}

#[derive(Debug, Args)]
pub struct BenchArgs {
    #[arg(long)]
    pub pairs: PathBuf,
    #[arg(long, default_value = "median,wavelet,bilateral,nlmeans,bm3d,ours")]
    pub methods: String,
    #[arg(long)]
    pub ckpt: Option<PathBuf>,
    #[arg(long)]
    pub params: Option<PathBuf>,
    #[arg(long, default_value_t = 3)]
    pub repeats: usize,
    /// Use at most this many images.
    #[arg(long, default_value_t = 10)]
    pub limit: usize,
    #[arg(long, default_value = "runtime.csv")]
    pub out: PathBuf,
}

#[derive(Debug, Args)]
pub struct InspectArgs {
    #[arg(long)]
    pub ckpt: PathBuf,
    #[arg(long = "in")]
    pub input: PathBuf,
    /// Layer name, e.g. "residual block 2". Lists the layers when omitted.
    #[arg(long)]
    pub layer: Option<String>,
    /// Comma-separated channel indices for the grid.
    #[arg(long, default_value = "0,1,2,3")]
    pub channels: String,
    #[arg(long, default_value_t = 0.5)]
    pub alpha: f64,
    /// Skeletonize this channel and write its thickness profile.
    #[arg(long)]
    pub skeleton_channel: Option<usize>,
    /// Micrometres per pixel for the thickness summary.
    #[arg(long)]
    pub scale_um: Option<f64>,
    #[arg(long)]
    pub out: PathBuf,
}

#[derive(Debug, Args)]
pub struct RateServeArgs {
    #[arg(long, env = "PORT", default_value_t = 8080)]
    pub port: u16,
    #[arg(long, default_value = "127.0.0.1")]
    pub host: String,
    #[arg(long, env = "DATA_DIR", default_value = "rating-data")]
    pub data_dir: PathBuf,
}

pub fn run(cli: Cli) -> Result<()> {
    match cli.command {
        Command::Synth(a) => synth(&a),
        Command::Train(a) => train(&a),
        Command::Denoise(a) => denoise(&a),
        Command::Evaluate(a) => evaluate(&a),
        Command::Bench(a) => bench(&a),
        Command::Inspect(a) => inspect(&a),
        Command::RateServe(a) => rate_serve(&a),
    }
}

fn create_dir(p: &Path) -> Result<()> {
    fs::create_dir_all(p).map_err(|e| CliError::Data(format!("{}: {e}", p.display())))
}

fn read_text(p: &Path) -> Result<String> {
    fs::read_to_string(p).map_err(|e| CliError::Config(format!("{}: {e}", p.display())))
}

fn write_json<T: Serialize>(p: &Path, value: &T) -> Result<()> {
    let text = serde_json::to_string_pretty(value).map_err(|e| CliError::Runtime(e.to_string()))?;
    fs::write(p, text + "\n").map_err(|e| CliError::Data(format!("{}: {e}", p.display())))
}

#[derive(Debug, Serialize)]
struct Manifest {
    config: PhantomFile,
    volumes: Vec<ManifestEntry>,
}

#[derive(Debug, Serialize)]
struct ManifestEntry {
    volume: String,
    seed: u64,
}

pub fn synth(a: &SynthArgs) -> Result<()> {
    if a.n == 0 {
        return Err(CliError::Config("--n must be at least 1".into()));
    }
    let mut file = match &a.config {
        Some(p) => PhantomFile::from_json(&read_text(p)?)?,
        None => PhantomFile {
            geometry: PhantomConfig::with_size(a.size, a.size),
            frames_hn: hdcg_core::phantom::DEFAULT_FRAMES_HN,
            frames_ln: hdcg_core::phantom::DEFAULT_FRAMES_LN,
            seed: 0,
        },
    };
    if let Some(s) = a.seed {
        file.seed = s;
    }
    create_dir(&a.out)?;
    let mut volumes = Vec::with_capacity(a.n);
    for i in 0..a.n as u64 {
        let seed = file.seed + i;
        let s = generate_phantom(&file.geometry, file.frames_hn, file.frames_ln, seed)?;
        let volume = format!("phantom-{seed}");
        for img in [&s.hn, &s.ln, &s.clean] {
            write_slice(&a.out, img.domain(), &volume, 0, img)?;
        }
        volumes.push(ManifestEntry { volume, seed });
    }
    write_json(&a.out.join("manifest.json"), &Manifest { config: file, volumes })?;
    tracing::info!(n = a.n, out = %a.out.display(), "phantoms written");
    Ok(())
}

pub fn train(a: &TrainArgs) -> Result<()> {
    let mut state = match &a.resume {
        Some(p) => Checkpoint::load(p)?.to_state()?,
        None => {
            let mut cfg = match &a.config {
                Some(p) => TrainConfig::from_json(&read_text(p)?)?,
                None => TrainConfig::toy(),
            };
            if let Some(s) = a.seed {
                cfg.seed = s;
            }
            TrainState::new(&cfg)?
        }
    };
    if let Some(e) = a.epochs {
        state.config.epochs = e;
    }
    create_dir(&a.out)?;
    let volumes = list_volumes(&a.data, Domain::HighNoise)?;
    let split = split_by_volume(&volumes, a.train_fraction, a.split_seed)?;
    write_id_list(a.out.join("train_ids.txt"), &split.train_volumes)?;
    write_id_list(a.out.join("test_ids.txt"), &split.test_volumes)?;
    let hn = load_volumes(&a.data, Domain::HighNoise, &split.train_volumes)?;
    let ln = load_volumes(&a.data, Domain::LowNoise, &split.train_volumes)?;
    tracing::info!(hn = hn.len(), ln = ln.len(), epochs = state.config.epochs, "training");
    let mut data = UnpairedIterator::new(&hn, &ln, state.config.seed)?;
    // Skip the shuffles of epochs already trained so a resumed run sees the
    // same data order as an uninterrupted one.
    for _ in 0..state.epoch {
        data.next_epoch_indices();
    }
    let out = a.out.clone();
    train_with(&mut state, &mut data, |c| {
        let path = out.join(format!("ckpt_epoch_{:04}.bin", c.epoch));
        c.save(&path)?;
        c.save(out.join("ckpt_last.bin"))?;
        tracing::info!(path = %path.display(), "checkpoint");
        Ok(())
    })?;
    save_loss_csv(a.out.join("loss.csv"), &state.history)?;
    let (test_hn, test_ln) = if split.test_volumes.is_empty() {
        (hn.clone(), ln.clone())
    } else {
        (
            load_volumes(&a.data, Domain::HighNoise, &split.test_volumes)?,
            load_volumes(&a.data, Domain::LowNoise, &split.test_volumes)?,
        )
    };
    let report = discriminator_score_report(&state.model, &test_hn, &test_ln)?;
    let path = a.out.join("score_report.csv");
    report
        .write_csv(fs::File::create(&path)?)
        .map_err(|e| CliError::Data(e.to_string()))?;
    Ok(())
}

fn is_png(p: &Path) -> bool {
    p.extension().is_some_and(|e| e.eq_ignore_ascii_case("png"))
}

pub fn denoise(a: &DenoiseArgs) -> Result<()> {
    let params = load_params(a.params.as_deref())?;
    let (_, d) = parse_methods(&a.method, &params, a.ckpt.as_deref())?
        .into_iter()
        .next()
        .expect("non-empty");
    let jobs: Vec<(PathBuf, PathBuf)> = if a.input.is_dir() {
        create_dir(&a.out)?;
        let mut files: Vec<PathBuf> = fs::read_dir(&a.input)?
            .filter_map(|e| e.ok().map(|e| e.path()))
            .filter(|p| is_png(p))
            .collect();
        files.sort();
        files
            .into_iter()
            .map(|p| {
                let o = a.out.join(p.file_name().expect("listed file"));
                (p, o)
            })
            .collect()
    } else {
        vec![(a.input.clone(), a.out.clone())]
    };
    for (src, dst) in &jobs {
        let img = load_bscan(src, Domain::HighNoise)?;
        let out = d.apply(&img).map_err(CliError::Runtime)?;
        save_bscan(dst, &out, BitDepth::Sixteen)?;
    }
    tracing::info!(images = jobs.len(), method = %a.method, "denoised");
    Ok(())
}

pub fn evaluate(a: &EvaluateArgs) -> Result<()> {
    let params = load_params(a.params.as_deref())?;
    let methods = parse_methods(&a.methods, &params, a.ckpt.as_deref())?;
    let ids = a.ids.as_ref().map(read_id_list).transpose()?;
    let pairs = load_pairs(&a.pairs, ids.as_deref(), a.reference.domain())?;
    let cfg = EvalConfig {
        subpixel: a.subpixel,
        ..EvalConfig::default()
    };
    if let Some(dir) = &a.save_outputs {
        let ref_dir = dir.join(a.reference.domain().dir_name());
        create_dir(&ref_dir)?;
        for (_, r) in &pairs {
            save_bscan(ref_dir.join(format!("{}.png", file_stem(r.source_id()))), r, BitDepth::Sixteen)?;
        }
    }
    let mut report = MetricReport::default();
    for (name, d) in &methods {
        let out_dir = a.save_outputs.as_ref().map(|p| p.join(name));
        if let Some(p) = &out_dir {
            create_dir(p)?;
        }
        let ev = evaluate_method(
            name,
            &pairs,
            |img| {
                let out = d.apply(img)?;
                if let Some(p) = &out_dir {
                    save_bscan(p.join(format!("{}.png", file_stem(img.source_id()))), &out, BitDepth::Sixteen)
                        .map_err(|e| e.to_string())?;
                }
                Ok::<_, String>(out)
            },
            &cfg,
        )?;
        tracing::info!(method = %name, psnr = ev.row.psnr.mean, cnr = ev.row.cnr.mean, excluded = ev.row.excluded, "evaluated");
        if let Some(dir) = &a.samples_dir {
            create_dir(dir)?;
            let f = fs::File::create(dir.join(format!("{name}.csv")))?;
            hdcg_metrics::report::write_samples_csv(f, name, &ev.samples)?;
        }
        report.rows.push(ev.row);
    }
    if let Some(parent) = a.out.parent().filter(|p| !p.as_os_str().is_empty()) {
        create_dir(parent)?;
    }
    report.save_csv(&a.out)?;
    Ok(())
}

pub fn bench(a: &BenchArgs) -> Result<()> {
    let params = load_params(a.params.as_deref())?;
    let methods = parse_methods(&a.methods, &params, a.ckpt.as_deref())?;
    let mut pairs = load_pairs(&a.pairs, None, Domain::LowNoise)?;
    pairs.truncate(a.limit.max(1));
    let images: Vec<_> = pairs.into_iter().map(|p| p.0).collect();
    let closures: Vec<(String, Box<dyn Fn(&hdcg_core::BScan) -> std::result::Result<hdcg_core::BScan, String>>)> =
        methods
            .into_iter()
            .map(|(n, d): (String, Denoiser)| {
                let f: Box<dyn Fn(&hdcg_core::BScan) -> std::result::Result<hdcg_core::BScan, String>> =
                    Box::new(move |img| d.apply(img));
                (n, f)
            })
            .collect();
    let refs: Vec<hdcg_metrics::runtime::Method<'_>> = closures.iter().map(|(n, f)| (n.as_str(), f.as_ref())).collect();
    let report = benchmark_runtime(&refs, &images, a.repeats, &hdcg_metrics::runtime::cpu_descriptor())?;
    for r in &report.rows {
        tracing::info!(method = %r.method, mean_s = r.mean_s, std_s = r.std_s, "timed");
    }
    report.save_csv(&a.out)?;
    Ok(())
}

pub fn inspect(a: &InspectArgs) -> Result<()> {
    let model = load_model(&a.ckpt)?;
    let img = load_bscan(&a.input, Domain::HighNoise)?;
    let Some(layer) = &a.layer else {
        for name in model.gen_l.spec().layer_names() {
            println!("{name}");
        }
        return Ok(());
    };
    let channels: Vec<usize> = a
        .channels
        .split(',')
        .map(str::trim)
        .filter(|s| !s.is_empty())
        .map(|s| s.parse().map_err(|_| CliError::Config(format!("bad channel index {s:?}"))))
        .collect::<Result<_>>()?;
    let set = hdcg_inspection::extract_feature_maps(&model.gen_l, &img, layer)?;
    create_dir(&a.out)?;
    let stem = file_stem(layer);
    hdcg_inspection::save_feature_grid(a.out.join(format!("{stem}.png")), &img, &set, &channels, a.alpha)?;
    if let Some(c) = a.skeleton_channel {
        if c >= set.n_channels() {
            return Err(CliError::Config(format!("channel {c} out of range for {} channels", set.n_channels())));
        }
        let up = set.upscale(img.height(), img.width());
        let skel = hdcg_inspection::skeletonize_layers(&img, &up.maps[c])?;
        let profile = hdcg_inspection::thickness_profile(&skel, a.scale_um);
        profile.save_csv(a.out.join(format!("{stem}_ch{c}_thickness.csv")))?;
        if let Some(s) = profile.summary_px {
            tracing::info!(mean_px = s.mean, min_px = s.min, max_px = s.max, "thickness");
        }
    }
    Ok(())
}

pub fn rate_serve(a: &RateServeArgs) -> Result<()> {
    let addr: SocketAddr = format!("{}:{}", a.host, a.port)
        .parse()
        .map_err(|e| CliError::Config(format!("bad listen address: {e}")))?;
    let rt = tokio::runtime::Runtime::new().map_err(|e| CliError::Runtime(e.to_string()))?;
    rt.block_on(crate::rating::serve(addr, a.data_dir.clone()))
        .map_err(|e| CliError::Runtime(e.to_string()))
}
