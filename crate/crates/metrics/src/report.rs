//! Per-method quality reports over a set of HN/reference pairs.

use std::fmt::Display;
use std::io::Write;
use std::path::Path;

use hdcg_core::BScan;
use ndarray::{s, Array2};
use serde::Serialize;

use crate::contrast::{cnr, msr};
use crate::error::{MetricError, Result};
use crate::masks::{extract_masks, MaskConfig};
use crate::quality::{psnr, ssim};
use crate::registration::{apply_shift, register_translation, valid_overlap, Shift};

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct Stat {
    pub mean: f64,
    pub std: f64,
    /// Finite values that entered the statistic.
    pub count: usize,
}

impl Stat {
    /// Population mean and standard deviation over the finite values.
    pub fn of(values: impl IntoIterator<Item = f64>) -> Stat {
        let v: Vec<f64> = values.into_iter().filter(|x| x.is_finite()).collect();
        if v.is_empty() {
            return Stat {
                mean: f64::NAN,
                std: f64::NAN,
                count: 0,
            };
        }
        let n = v.len() as f64;
        let mean = v.iter().sum::<f64>() / n;
        let var = v.iter().map(|x| (x - mean) * (x - mean)).sum::<f64>() / n;
        Stat {
            mean,
            std: var.sqrt(),
            count: v.len(),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, serde::Deserialize)]
#[serde(default)]
pub struct EvalConfig {
    pub masks: MaskConfig,
    /// Refine registration below one pixel before comparing to the reference.
    pub subpixel: bool,
}

impl Default for EvalConfig {
    fn default() -> Self {
        EvalConfig {
            masks: MaskConfig::default(),
            subpixel: false,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct SampleMetrics {
    pub index: usize,
    pub source_id: String,
    pub shift: Shift,
    pub psnr: f64,
    pub ssim: f64,
    pub cnr: Option<f64>,
    pub msr: Option<f64>,
    pub mask_error: Option<String>,
}

impl SampleMetrics {
    pub fn retained(&self) -> bool {
        self.mask_error.is_none()
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct MetricRow {
    pub method: String,
    pub cnr: Stat,
    pub msr: Stat,
    pub psnr: Stat,
    pub ssim: Stat,
    /// Pairs that passed mask extraction.
    pub n: usize,
    /// Pairs dropped because masks could not be extracted.
    pub excluded: usize,
}

impl MetricRow {
    /// Aggregates retained samples. Infinite sentinels are left out of the
    /// affected statistic only.
    pub fn aggregate(method: &str, samples: &[SampleMetrics]) -> Result<MetricRow> {
        let kept: Vec<&SampleMetrics> = samples.iter().filter(|s| s.retained()).collect();
        if kept.is_empty() {
            return Err(MetricError::Report(format!("{method}: mask extraction failed on all {} pairs", samples.len())));
        }
        Ok(MetricRow {
            method: method.to_string(),
            cnr: Stat::of(kept.iter().filter_map(|s| s.cnr)),
            msr: Stat::of(kept.iter().filter_map(|s| s.msr)),
            psnr: Stat::of(kept.iter().map(|s| s.psnr)),
            ssim: Stat::of(kept.iter().map(|s| s.ssim)),
            n: kept.len(),
            excluded: samples.len() - kept.len(),
        })
    }
}

#[derive(Debug, Clone)]
pub struct Evaluation {
    pub row: MetricRow,
    pub samples: Vec<SampleMetrics>,
}

fn crop(img: &Array2<f64>, rows: &std::ops::Range<usize>, cols: &std::ops::Range<usize>) -> Array2<f64> {
    img.slice(s![rows.clone(), cols.clone()]).to_owned()
}

/// Scores one denoised image against its reference.
pub fn score_pair(index: usize, denoised: &BScan, reference: &BScan, cfg: &EvalConfig) -> Result<SampleMetrics> {
    let den = denoised.pixels();
    let reference_px = reference.pixels();
    let shift = register_translation(reference_px, den, cfg.subpixel)?;
    let aligned = apply_shift(den, &shift);
    let (rows, cols) = valid_overlap(den.dim(), &shift);
    let (a, b) = (crop(&aligned, &rows, &cols), crop(reference_px, &rows, &cols));
    let p = psnr(&a, &b)?;
    let q = ssim(&a, &b)?;
    let (c, m, err) = match extract_masks(den, &cfg.masks) {
        Ok(masks) => (
            Some(cnr(den, &masks.signal, &masks.background)?),
            Some(msr(den, &masks.signal)?),
            None,
        ),
        Err(MetricError::MaskExtraction(e)) => (None, None, Some(e)),
        Err(e) => return Err(e),
    };
    Ok(SampleMetrics {
        index,
        source_id: denoised.source_id().to_string(),
        shift,
        psnr: p,
        ssim: q,
        cnr: c,
        msr: m,
        mask_error: err,
    })
}

/// Denoises the HN image of each `(hn, reference)` pair, registers the
/// result to the reference for PSNR/SSIM over the valid overlap, and takes
/// CNR/MSR on masks extracted from the denoised image itself.
pub fn evaluate_method<F, E>(method: &str, pairs: &[(BScan, BScan)], mut denoiser: F, cfg: &EvalConfig) -> Result<Evaluation>
where
    F: FnMut(&BScan) -> std::result::Result<BScan, E>,
    E: Display,
{
    let mut samples = Vec::with_capacity(pairs.len());
    for (i, (hn, reference)) in pairs.iter().enumerate() {
        let den = denoiser(hn).map_err(|e| MetricError::Denoiser(format!("{method} on pair {i}: {e}")))?;
        samples.push(score_pair(i, &den, reference, cfg)?);
    }
    let row = MetricRow::aggregate(method, &samples)?;
    Ok(Evaluation { row, samples })
}

#[derive(Debug, Clone, Default, PartialEq, Serialize)]
pub struct MetricReport {
    pub rows: Vec<MetricRow>,
}

impl MetricReport {
    pub fn write_csv<W: Write>(&self, out: W) -> Result<()> {
        let mut w = csv::Writer::from_writer(out);
        w.write_record([
            "method", "cnr_mean", "cnr_std", "msr_mean", "msr_std", "psnr_mean", "psnr_std", "ssim_mean", "ssim_std", "n", "excluded",
        ])?;
        for r in &self.rows {
            let mut rec = vec![r.method.clone()];
            for s in [r.cnr, r.msr, r.psnr, r.ssim] {
                rec.push(s.mean.to_string());
                rec.push(s.std.to_string());
            }
            rec.push(r.n.to_string());
            rec.push(r.excluded.to_string());
            w.write_record(&rec)?;
        }
        w.flush()?;
        Ok(())
    }

    pub fn save_csv(&self, path: impl AsRef<Path>) -> Result<()> {
        self.write_csv(std::fs::File::create(path)?)
    }

    pub fn row(&self, method: &str) -> Option<&MetricRow> {
        self.rows.iter().find(|r| r.method == method)
    }
}

/// Writes per-sample values, one line per pair.
pub fn write_samples_csv<W: Write>(out: W, method: &str, samples: &[SampleMetrics]) -> Result<()> {
    let mut w = csv::Writer::from_writer(out);
    w.write_record(["method", "index", "source_id", "dy", "dx", "psnr", "ssim", "cnr", "msr", "mask_error"])?;
    let opt = |v: Option<f64>| v.map(|x| x.to_string()).unwrap_or_default();
    for s in samples {
        w.write_record([
            method.to_string(),
            s.index.to_string(),
            s.source_id.clone(),
            s.shift.dy.to_string(),
            s.shift.dx.to_string(),
            s.psnr.to_string(),
            s.ssim.to_string(),
            opt(s.cnr),
            opt(s.msr),
            s.mask_error.clone().unwrap_or_default(),
        ])?;
    }
    w.flush()?;
    Ok(())
}
