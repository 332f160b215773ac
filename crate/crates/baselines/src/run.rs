//! Method registry, parameter files and timed dispatch.

use std::fmt;
use std::path::Path;
use std::str::FromStr;
use std::time::{Duration, Instant};

use hdcg_core::{BScan, Domain};
use ndarray::Array2;
use serde::{Deserialize, Serialize};

use crate::bilateral::{bilateral_denoise, BilateralParams};
use crate::bm3d::{bm3d_denoise, Bm3dParams};
use crate::error::{BaselineError, Result};
use crate::median::{median_denoise, MedianParams};
use crate::nlmeans::{nlmeans_denoise, NlMeansParams};
use crate::wavelet::{estimate_noise_sigma, wavelet_denoise, WaveletParams};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Method {
    Median,
    Wavelet,
    Bilateral,
    Nlmeans,
    Bm3d,
}

impl Method {
    pub const ALL: [Method; 5] = [Method::Median, Method::Wavelet, Method::Bilateral, Method::Nlmeans, Method::Bm3d];

    pub fn name(self) -> &'static str {
        match self {
            Method::Median => "median",
            Method::Wavelet => "wavelet",
            Method::Bilateral => "bilateral",
            Method::Nlmeans => "nlmeans",
            Method::Bm3d => "bm3d",
        }
    }
}

impl fmt::Display for Method {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for Method {
    type Err = BaselineError;

    fn from_str(s: &str) -> Result<Self> {
        let key = s.trim().to_ascii_lowercase().replace(['-', '_', ' '], "");
        Method::ALL
            .into_iter()
            .find(|m| m.name() == key)
            .ok_or_else(|| BaselineError::UnknownMethod(s.to_string()))
    }
}

/// Parameters for a single method, tagged by name.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "method", rename_all = "snake_case")]
pub enum DenoiserParams {
    Median(MedianParams),
    Wavelet(WaveletParams),
    Bilateral(BilateralParams),
    Nlmeans(NlMeansParams),
    Bm3d(Bm3dParams),
}

impl DenoiserParams {
    pub fn method(&self) -> Method {
        match self {
            DenoiserParams::Median(_) => Method::Median,
            DenoiserParams::Wavelet(_) => Method::Wavelet,
            DenoiserParams::Bilateral(_) => Method::Bilateral,
            DenoiserParams::Nlmeans(_) => Method::Nlmeans,
            DenoiserParams::Bm3d(_) => Method::Bm3d,
        }
    }

    pub fn apply(&self, img: &Array2<f64>) -> Result<Array2<f64>> {
        let out = match self {
            DenoiserParams::Median(p) => median_denoise(img, p.window)?,
            DenoiserParams::Wavelet(p) => wavelet_denoise(img, p)?,
            DenoiserParams::Bilateral(p) => bilateral_denoise(img, p.sigma_spatial, p.sigma_range)?,
            DenoiserParams::Nlmeans(p) => nlmeans_denoise(img, p.patch, p.search, p.h)?,
            DenoiserParams::Bm3d(p) => {
                let sigma = p.sigma.unwrap_or_else(|| estimate_noise_sigma(img));
                if sigma == 0.0 && p.sigma.is_none() {
                    img.clone()
                } else {
                    bm3d_denoise(img, sigma, p)?
                }
            }
        };
        Ok(out.mapv(|v| v.clamp(0.0, 1.0)))
    }
}

/// The parameter file: one entry per method, keyed by method name. Missing
/// entries take their defaults.
#[derive(Debug, Clone, Copy, PartialEq, Default, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct BaselineParams {
    pub median: MedianParams,
    pub wavelet: WaveletParams,
    pub bilateral: BilateralParams,
    pub nlmeans: NlMeansParams,
    pub bm3d: Bm3dParams,
}

impl BaselineParams {
    pub fn from_json(text: &str) -> Result<Self> {
        serde_json::from_str(text).map_err(|e| BaselineError::ParamFile(e.to_string()))
    }

    pub fn load(path: impl AsRef<Path>) -> Result<Self> {
        Self::from_json(&std::fs::read_to_string(path)?)
    }

    pub fn to_json(&self) -> String {
        serde_json::to_string_pretty(self).expect("parameters serialize")
    }

    pub fn for_method(&self, m: Method) -> DenoiserParams {
        match m {
            Method::Median => DenoiserParams::Median(self.median),
            Method::Wavelet => DenoiserParams::Wavelet(self.wavelet),
            Method::Bilateral => DenoiserParams::Bilateral(self.bilateral),
            Method::Nlmeans => DenoiserParams::Nlmeans(self.nlmeans),
            Method::Bm3d => DenoiserParams::Bm3d(self.bm3d),
        }
    }
}

/// Denoises a b-scan; the result is tagged as generated.
pub fn denoise(params: &DenoiserParams, img: &BScan) -> Result<BScan> {
    let out = params.apply(img.pixels())?;
    Ok(img.replace_pixels(out, Domain::Generated)?)
}

/// Looks up `name`, denoises and times the denoising call alone.
pub fn run_baseline(name: &str, img: &BScan, params: &BaselineParams) -> Result<(BScan, Duration)> {
    let p = params.for_method(name.parse()?);
    let start = Instant::now();
    let out = p.apply(img.pixels())?;
    let elapsed = start.elapsed();
    Ok((img.replace_pixels(out, Domain::Generated)?, elapsed))
}

/// Runs [`run_baseline`] `repeats` times and reports every timing.
pub fn run_baseline_repeated(name: &str, img: &BScan, params: &BaselineParams, repeats: usize) -> Result<(BScan, Vec<Duration>)> {
    if repeats == 0 {
        return Err(BaselineError::Param("repeats must be >= 1".into()));
    }
    let mut times = Vec::with_capacity(repeats);
    let mut last = None;
    for _ in 0..repeats {
        let (out, t) = run_baseline(name, img, params)?;
        times.push(t);
        last = Some(out);
    }
    Ok((last.unwrap(), times))
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn names_round_trip() {
        for m in Method::ALL {
            assert_eq!(m.name().parse::<Method>().unwrap(), m);
        }
        assert_eq!("NL-means".parse::<Method>().unwrap(), Method::Nlmeans);
        assert!(matches!("gauss".parse::<Method>(), Err(BaselineError::UnknownMethod(_))));
    }

    #[test]
    fn parameter_file_round_trip() {
        let p = BaselineParams::default();
        assert_eq!(BaselineParams::from_json(&p.to_json()).unwrap(), p);
        let partial = BaselineParams::from_json(r#"{"median": {"window": 7}}"#).unwrap();
        assert_eq!(partial.median.window, 7);
        assert_eq!(partial.bm3d, Bm3dParams::default());
        assert!(BaselineParams::from_json(r#"{"gauss": {}}"#).is_err());
    }

    #[test]
    fn tagged_params() {
        let d: DenoiserParams = serde_json::from_str(r#"{"method": "median", "window": 3}"#).unwrap();
        assert_eq!(d, DenoiserParams::Median(MedianParams { window: 3 }));
        assert_eq!(d.method(), Method::Median);
    }
}
