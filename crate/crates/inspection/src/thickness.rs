//! Per-column retinal thickness from a layer skeleton.

use std::io::Write;
use std::path::Path;

use serde::Serialize;

use crate::error::Result;
use crate::skeleton::LayerSkeleton;

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ThicknessRow {
    pub column_index: usize,
    pub ilm_row: f64,
    pub rpe_row: f64,
    pub thickness_px: f64,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Summary {
    pub mean: f64,
    pub min: f64,
    pub max: f64,
}

impl Summary {
    fn of(v: impl Iterator<Item = f64>) -> Option<Summary> {
        let v: Vec<f64> = v.collect();
        if v.is_empty() {
            return None;
        }
        Some(Summary {
            mean: v.iter().sum::<f64>() / v.len() as f64,
            min: v.iter().copied().fold(f64::INFINITY, f64::min),
            max: v.iter().copied().fold(f64::NEG_INFINITY, f64::max),
        })
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct ThicknessProfile {
    pub rows: Vec<ThicknessRow>,
    pub summary_px: Option<Summary>,
    pub scale_um_per_px: Option<f64>,
    pub summary_um: Option<Summary>,
}

impl ThicknessProfile {
    pub fn write_csv<W: Write>(&self, w: W) -> Result<()> {
        let mut wr = csv::Writer::from_writer(w);
        if self.rows.is_empty() {
            wr.write_record(["column_index", "ilm_row", "rpe_row", "thickness_px"])?;
        }
        for r in &self.rows {
            wr.serialize(r)?;
        }
        wr.flush()?;
        Ok(())
    }

    pub fn save_csv(&self, path: impl AsRef<Path>) -> Result<()> {
        self.write_csv(std::fs::File::create(path)?)
    }
}

/// Columns where both curves are defined, with pixel and (optionally)
/// micrometre summaries.
pub fn thickness_profile(skel: &LayerSkeleton, scale_um_per_px: Option<f64>) -> ThicknessProfile {
    let rows: Vec<ThicknessRow> = skel
        .ilm_curve
        .iter()
        .zip(&skel.rpe_curve)
        .enumerate()
        .filter_map(|(c, (a, b))| {
            let (a, b) = ((*a)?, (*b)?);
            Some(ThicknessRow {
                column_index: c,
                ilm_row: a,
                rpe_row: b,
                thickness_px: b - a,
            })
        })
        .collect();
    let summary_px = Summary::of(rows.iter().map(|r| r.thickness_px));
    let summary_um = scale_um_per_px.and_then(|s| Summary::of(rows.iter().map(|r| r.thickness_px * s)));
    ThicknessProfile {
        rows,
        summary_px,
        scale_um_per_px,
        summary_um,
    }
}
