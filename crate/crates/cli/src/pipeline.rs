//! Denoiser selection and dataset pairing shared by the commands.

use std::path::Path;
use std::sync::Arc;

use hdcg_baselines::{BaselineParams, DenoiserParams, Method};
use hdcg_core::dataset::{list_slices, list_volumes, load_volume};
use hdcg_core::{pad_to_multiple, BScan, Domain, PadMode};
use hdcg_model::{Checkpoint, CycleGan};

use crate::error::{CliError, Result};

/// Name of the learned denoiser in method lists and reports.
pub const OURS: &str = "ours";
/// Identity "denoiser" giving the noisy-input row.
pub const RAW: &str = "raw";

#[derive(Clone)]
pub enum Denoiser {
    Raw,
    Baseline(DenoiserParams),
    Ours(Arc<CycleGan>),
}

impl Denoiser {
    /// Applies the denoiser; the learned model runs on a reflect-padded
    /// copy when the size is not a multiple of its down-sampling factor.
    pub fn apply(&self, img: &BScan) -> std::result::Result<BScan, String> {
        match self {
            Denoiser::Raw => Ok(img.clone().with_domain(Domain::Generated)),
            Denoiser::Baseline(p) => hdcg_baselines::denoise(p, img).map_err(|e| e.to_string()),
            Denoiser::Ours(model) => {
                let (padded, pad) =
                    pad_to_multiple(img, model.gen_l.spec().divisor(), PadMode::Reflect).map_err(|e| e.to_string())?;
                let out = hdcg_model::denoise(model, &padded).map_err(|e| e.to_string())?;
                pad.crop(&out).map_err(|e| e.to_string())
            }
        }
    }
}

pub fn load_model(ckpt: &Path) -> Result<Arc<CycleGan>> {
    let c = Checkpoint::load(ckpt)?;
    Ok(Arc::new(c.model()?))
}

pub fn load_params(path: Option<&Path>) -> Result<BaselineParams> {
    match path {
        Some(p) => Ok(BaselineParams::load(p)?),
        None => Ok(BaselineParams::default()),
    }
}

/// Parses a comma-separated method list into named denoisers.
pub fn parse_methods(
    list: &str,
    params: &BaselineParams,
    ckpt: Option<&Path>,
) -> Result<Vec<(String, Denoiser)>> {
    let mut model = None;
    let mut out = Vec::new();
    for name in list.split(',').map(str::trim).filter(|s| !s.is_empty()) {
        let d = match name.to_ascii_lowercase().as_str() {
            RAW => Denoiser::Raw,
            OURS => {
                if model.is_none() {
                    let path = ckpt.ok_or_else(|| CliError::Config("method \"ours\" needs --ckpt".into()))?;
                    model = Some(load_model(path)?);
                }
                Denoiser::Ours(model.clone().expect("loaded above"))
            }
            _ => Denoiser::Baseline(params.for_method(name.parse::<Method>()?)),
        };
        let canonical = match &d {
            Denoiser::Raw => RAW.to_string(),
            Denoiser::Ours(_) => OURS.to_string(),
            Denoiser::Baseline(p) => p.method().name().to_string(),
        };
        if out.iter().any(|(n, _)| n == &canonical) {
            return Err(CliError::Config(format!("method {canonical:?} listed twice")));
        }
        out.push((canonical, d));
    }
    if out.is_empty() {
        return Err(CliError::Config("empty method list".into()));
    }
    Ok(out)
}

/// `(hn, reference)` pairs matched by volume and slice index.
pub fn load_pairs(root: &Path, volumes: Option<&[String]>, reference: Domain) -> Result<Vec<(BScan, BScan)>> {
    let all = list_volumes(root, Domain::HighNoise)?;
    let vols: Vec<String> = match volumes {
        Some(v) => v.to_vec(),
        None => all,
    };
    let mut pairs = Vec::new();
    for v in &vols {
        let hn = load_volume(root, Domain::HighNoise, v)?;
        let ref_slices = list_slices(root, reference, v)?;
        let refs = load_volume(root, reference, v)?;
        let hn_slices = list_slices(root, Domain::HighNoise, v)?;
        if hn_slices.iter().map(|s| s.0).ne(ref_slices.iter().map(|s| s.0)) {
            return Err(CliError::Data(format!("volume {v}: hn and {reference} slices differ")));
        }
        pairs.extend(hn.into_iter().zip(refs));
    }
    if pairs.is_empty() {
        return Err(CliError::Data(format!("no image pairs under {}", root.display())));
    }
    Ok(pairs)
}

/// File-name-safe form of a source id (`vol/3` -> `vol_3`).
pub fn file_stem(source_id: &str) -> String {
    source_id
        .chars()
        .map(|c| if c.is_ascii_alphanumeric() || c == '-' || c == '.' { c } else { '_' })
        .collect()
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn method_list_parsing() {
        let p = BaselineParams::default();
        let m = parse_methods("raw, BM3D,non-local-means", &p, None);
        assert!(m.is_err());
        let m = parse_methods("raw, BM3D,nl_means,median", &p, None).unwrap();
        let names: Vec<&str> = m.iter().map(|(n, _)| n.as_str()).collect();
        assert_eq!(names, ["raw", "bm3d", "nlmeans", "median"]);
        assert!(matches!(parse_methods("ours", &p, None), Err(CliError::Config(_))));
        assert!(matches!(parse_methods("raw,raw", &p, None), Err(CliError::Config(_))));
    }

    #[test]
    fn stems() {
        assert_eq!(file_stem("phantom-3/0"), "phantom-3_0");
    }
}
