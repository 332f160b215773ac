//! Mask-based contrast measures. Standard deviations are population values.

use ndarray::Array2;

use crate::error::{MetricError, Result};

fn masked_stats(img: &Array2<f64>, mask: &Array2<bool>, which: &'static str) -> Result<(f64, f64)> {
    if img.dim() != mask.dim() {
        return Err(MetricError::Shape(format!("image {:?} vs mask {:?}", img.dim(), mask.dim())));
    }
    let vals: Vec<f64> = img.iter().zip(mask).filter(|(_, &m)| m).map(|(&v, _)| v).collect();
    if vals.is_empty() {
        return Err(MetricError::EmptyMask(which));
    }
    let n = vals.len() as f64;
    let mean = vals.iter().sum::<f64>() / n;
    let var = vals.iter().map(|v| (v - mean) * (v - mean)).sum::<f64>() / n;
    Ok((mean, var))
}

/// Mean over standard deviation in the signal region; `+inf` when flat.
pub fn msr(img: &Array2<f64>, signal: &Array2<bool>) -> Result<f64> {
    let (m, v) = masked_stats(img, signal, "signal")?;
    if v == 0.0 {
        return Ok(f64::INFINITY);
    }
    Ok(m / v.sqrt())
}

/// `(mu_s - mu_b) / sqrt(var_s + var_b)`; `+inf`/`-inf` when both regions
/// are flat but differ, and 0 when they are flat and equal.
pub fn cnr(img: &Array2<f64>, signal: &Array2<bool>, background: &Array2<bool>) -> Result<f64> {
    let (ms, vs) = masked_stats(img, signal, "signal")?;
    let (mb, vb) = masked_stats(img, background, "background")?;
    let d = ms - mb;
    let s = (vs + vb).sqrt();
    if s == 0.0 {
        return Ok(if d == 0.0 { 0.0 } else { d.signum() * f64::INFINITY });
    }
    Ok(d / s)
}
