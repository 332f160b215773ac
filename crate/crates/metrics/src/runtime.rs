//! Wall-clock benchmarking of denoisers.

use std::io::Write;
use std::path::Path;
use std::time::Instant;

use hdcg_core::BScan;
use serde::Serialize;

use crate::error::{MetricError, Result};

/// A named denoiser under test.
pub type Method<'a> = (&'a str, &'a dyn Fn(&BScan) -> std::result::Result<BScan, String>);

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct RuntimeRow {
    pub method: String,
    pub device: String,
    pub mean_s: f64,
    pub std_s: f64,
    pub n: usize,
    /// Every timed run, in order.
    pub samples_s: Vec<f64>,
}

#[derive(Debug, Clone, Default, PartialEq, Serialize)]
pub struct RuntimeReport {
    pub rows: Vec<RuntimeRow>,
}

impl RuntimeReport {
    pub fn row(&self, method: &str) -> Option<&RuntimeRow> {
        self.rows.iter().find(|r| r.method == method)
    }

    pub fn write_csv<W: Write>(&self, out: W) -> Result<()> {
        let mut w = csv::Writer::from_writer(out);
        w.write_record(["method", "device", "mean_s", "std_s", "n"])?;
        for r in &self.rows {
            w.write_record([r.method.clone(), r.device.clone(), r.mean_s.to_string(), r.std_s.to_string(), r.n.to_string()])?;
        }
        w.flush()?;
        Ok(())
    }

    pub fn save_csv(&self, path: impl AsRef<Path>) -> Result<()> {
        self.write_csv(std::fs::File::create(path)?)
    }
}

/// Times each method over `images x repeats` runs, serially. One untimed
/// warm-up call per method precedes the measurements.
pub fn benchmark_runtime(methods: &[Method<'_>], images: &[BScan], repeats: usize, device: &str) -> Result<RuntimeReport> {
    if repeats == 0 {
        return Err(MetricError::Param("repeats must be at least 1".into()));
    }
    if images.is_empty() {
        return Err(MetricError::Param("no images to benchmark".into()));
    }
    let mut rows = Vec::with_capacity(methods.len());
    for (name, f) in methods {
        f(&images[0]).map_err(|e| MetricError::Denoiser(format!("{name}: {e}")))?;
        let mut samples = Vec::with_capacity(images.len() * repeats);
        for _ in 0..repeats {
            for img in images {
                let t = Instant::now();
                let out = f(img);
                let dt = t.elapsed().as_secs_f64();
                out.map_err(|e| MetricError::Denoiser(format!("{name}: {e}")))?;
                samples.push(dt);
            }
        }
        let n = samples.len() as f64;
        let mean = samples.iter().sum::<f64>() / n;
        let std = (samples.iter().map(|s| (s - mean) * (s - mean)).sum::<f64>() / n).sqrt();
        rows.push(RuntimeRow {
            method: name.to_string(),
            device: device.to_string(),
            mean_s: mean,
            std_s: std,
            n: samples.len(),
            samples_s: samples,
        });
    }
    Ok(RuntimeReport { rows })
}

/// Short description of the host CPU for the device column.
pub fn cpu_descriptor() -> String {
    let threads = std::thread::available_parallelism().map(|n| n.get()).unwrap_or(1);
    format!("cpu ({} {}, {threads} threads)", std::env::consts::ARCH, std::env::consts::OS)
}
