//! Synthetic retina-like phantom with frame-averaged speckle.
//!
//! The clean image is a stack of smoothly curved horizontal bands over a dark
//! background. A noisy acquisition with `N` frames is the pixelwise mean of
//! `N` independent realisations `clean * s_k`, `s_k ~ Exp(1)`, clipped to
//! `[0, 1]` after averaging. The averaged multiplicative factor is therefore
//! `Gamma(N, 1/N)` distributed with variance `1/N`.

use ndarray::Array2;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, Exp1};
use serde::{Deserialize, Serialize};

use crate::bscan::{BScan, Domain};
use crate::error::{DataError, Result};

pub const DEFAULT_FRAMES_HN: usize = 12;
pub const DEFAULT_FRAMES_LN: usize = 60;

const STREAM_GEOMETRY: u64 = 1;
const STREAM_HN: u64 = 2;
const STREAM_LN: u64 = 3;

/// Geometry of the phantom.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PhantomConfig {
    pub height: usize,
    pub width: usize,
    pub n_layers: usize,
    /// Peak deviation of the layer boundaries from a straight line, in pixels.
    pub curvature: f64,
    /// One reflectivity per layer, top to bottom.
    pub reflectivities: Vec<f64>,
    #[serde(default = "default_background")]
    pub background: f64,
    /// Per-sample random vertical offset range, in pixels.
    #[serde(default = "default_jitter")]
    pub jitter: f64,
}

fn default_background() -> f64 {
    0.04
}

fn default_jitter() -> f64 {
    3.0
}

impl PhantomConfig {
    /// A `height x width` phantom with five layers of alternating brightness.
    pub fn with_size(height: usize, width: usize) -> Self {
        PhantomConfig {
            height,
            width,
            n_layers: 5,
            curvature: height as f64 * 0.06,
            reflectivities: vec![0.75, 0.35, 0.55, 0.25, 0.9],
            background: default_background(),
            jitter: default_jitter() * height as f64 / 64.0,
        }
    }

    pub fn validate(&self) -> Result<()> {
        let bad = |m: String| Err(DataError::Config(m));
        if self.height < 32 || self.width < 32 {
            return bad(format!("phantom must be at least 32x32, got {}x{}", self.height, self.width));
        }
        if self.n_layers < 2 {
            return bad(format!("need at least 2 layers, got {}", self.n_layers));
        }
        if self.reflectivities.len() != self.n_layers {
            return bad(format!(
                "{} reflectivities given for {} layers",
                self.reflectivities.len(),
                self.n_layers
            ));
        }
        if self
            .reflectivities
            .iter()
            .chain([&self.background])
            .any(|r| !(0.0..=1.0).contains(r))
        {
            return bad("reflectivities and background must lie in [0, 1]".into());
        }
        if !(self.curvature.is_finite() && self.curvature >= 0.0) {
            return bad(format!("curvature must be finite and >= 0, got {}", self.curvature));
        }
        if !(self.jitter.is_finite() && self.jitter >= 0.0) {
            return bad(format!("jitter must be finite and >= 0, got {}", self.jitter));
        }
        Ok(())
    }
}

/// The phantom config file: geometry plus acquisition settings.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PhantomFile {
    #[serde(flatten)]
    pub geometry: PhantomConfig,
    #[serde(default = "default_hn")]
    pub frames_hn: usize,
    #[serde(default = "default_ln")]
    pub frames_ln: usize,
    #[serde(default)]
    pub seed: u64,
}

fn default_hn() -> usize {
    DEFAULT_FRAMES_HN
}

fn default_ln() -> usize {
    DEFAULT_FRAMES_LN
}

impl PhantomFile {
    pub fn from_json(text: &str) -> Result<Self> {
        let file: PhantomFile =
            serde_json::from_str(text).map_err(|e| DataError::Config(e.to_string()))?;
        file.geometry.validate()?;
        Ok(file)
    }
}

/// Clean / high-noise / low-noise triple of one phantom.
#[derive(Debug, Clone, PartialEq)]
pub struct PhantomSample {
    pub clean: BScan,
    pub hn: BScan,
    pub ln: BScan,
    pub seed: u64,
    pub frames_hn: usize,
    pub frames_ln: usize,
}

pub fn generate_phantom(
    cfg: &PhantomConfig,
    frames_hn: usize,
    frames_ln: usize,
    seed: u64,
) -> Result<PhantomSample> {
    cfg.validate()?;
    if frames_hn == 0 || frames_hn >= frames_ln {
        return Err(DataError::Config(format!(
            "need 0 < frames_hn < frames_ln, got {frames_hn} and {frames_ln}"
        )));
    }
    let clean = clean_image(cfg, &mut stream(seed, STREAM_GEOMETRY));
    let hn = speckle_average(&clean, frames_hn, &mut stream(seed, STREAM_HN));
    let ln = speckle_average(&clean, frames_ln, &mut stream(seed, STREAM_LN));
    let id = format!("phantom-{seed}");
    Ok(PhantomSample {
        clean: BScan::new(clean, Domain::Clean, id.clone())?,
        hn: BScan::from_clipped(hn, Domain::HighNoise, id.clone())?,
        ln: BScan::from_clipped(ln, Domain::LowNoise, id)?,
        seed,
        frames_hn,
        frames_ln,
    })
}

fn stream(seed: u64, id: u64) -> ChaCha8Rng {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    rng.set_stream(id);
    rng
}

/// Mean of `frames` independent exponential-speckle realisations of `clean`,
/// before clipping.
pub fn speckle_average<R: Rng + ?Sized>(clean: &Array2<f64>, frames: usize, rng: &mut R) -> Array2<f64> {
    let inv = 1.0 / frames as f64;
    clean.mapv(|c| {
        let mut acc = 0.0;
        for _ in 0..frames {
            let s: f64 = Exp1.sample(rng);
            acc += s;
        }
        c * acc * inv
    })
}

/// Row position of every layer boundary, per column. `boundaries[k][x]` for
/// `k in 0..=n_layers`; band `k` lies between boundaries `k` and `k + 1`.
pub fn layer_boundaries<R: Rng + ?Sized>(cfg: &PhantomConfig, rng: &mut R) -> Vec<Vec<f64>> {
    let h = cfg.height as f64;
    let w = cfg.width as f64;
    let offset = rng.random_range(-1.0..=1.0) * cfg.jitter;
    let bend = cfg.curvature * rng.random_range(0.6..=1.4);
    let wave_amp = rng.random_range(0.0..=1.0) * (h / 128.0).max(0.5);
    let wave_phase = rng.random_range(0.0..std::f64::consts::TAU);
    let top = 0.3 * h + offset;
    let bottom = 0.72 * h + offset;
    // Uneven layer thicknesses, fixed per sample.
    let weights: Vec<f64> = (0..cfg.n_layers).map(|_| rng.random_range(0.7..1.3)).collect();
    let total: f64 = weights.iter().sum();
    let mut edges = vec![0.0];
    for wgt in &weights {
        edges.push(edges.last().unwrap() + wgt / total);
    }
    edges
        .iter()
        .map(|&frac| {
            (0..cfg.width)
                .map(|x| {
                    let u = 2.0 * x as f64 / (w - 1.0) - 1.0;
                    let shape = bend * (u * u - 0.5)
                        + wave_amp * (std::f64::consts::TAU * x as f64 / w + wave_phase).sin();
                    top + frac * (bottom - top) + shape
                })
                .collect()
        })
        .collect()
}

fn clean_image<R: Rng + ?Sized>(cfg: &PhantomConfig, rng: &mut R) -> Array2<f64> {
    let bounds = layer_boundaries(cfg, rng);
    // Soft edges, roughly one pixel wide.
    let step = |t: f64| 0.5 * (1.0 + (t / 0.75).tanh());
    Array2::from_shape_fn((cfg.height, cfg.width), |(y, x)| {
        let yf = y as f64;
        let mut v = cfg.background;
        for (k, refl) in cfg.reflectivities.iter().enumerate() {
            let inside = step(yf - bounds[k][x]) - step(yf - bounds[k + 1][x]);
            v += (refl - cfg.background) * inside;
        }
        v.clamp(0.0, 1.0)
    })
}
