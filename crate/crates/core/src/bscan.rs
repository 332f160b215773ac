use std::fmt;

use ndarray::Array2;
use serde::{Deserialize, Serialize};

use crate::error::{DataError, Result};

/// Smallest accepted height or width.
pub const MIN_SIDE: usize = 8;

/// Acquisition domain an image belongs to.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Domain {
    HighNoise,
    LowNoise,
    Generated,
    Clean,
}

impl Domain {
    /// Directory name used by the on-disk dataset layout.
    pub fn dir_name(self) -> &'static str {
        match self {
            Domain::HighNoise => "hn",
            Domain::LowNoise => "ln",
            Domain::Generated => "generated",
            Domain::Clean => "clean",
        }
    }
}

impl fmt::Display for Domain {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.dir_name())
    }
}

/// A single grayscale b-scan with intensities in `[0, 1]`.
///
/// The pixel array is `(height, width)` in row-major order. Construction
/// validates the intensity range and the minimum size, so every `BScan` in
/// circulation satisfies both.
#[derive(Debug, Clone, PartialEq)]
pub struct BScan {
    pixels: Array2<f64>,
    domain: Domain,
    source_id: String,
}

impl BScan {
    pub fn new(pixels: Array2<f64>, domain: Domain, source_id: impl Into<String>) -> Result<Self> {
        let (h, w) = pixels.dim();
        if h < MIN_SIDE || w < MIN_SIDE {
            return Err(DataError::InvalidImage(format!(
                "{h}x{w} is smaller than the {MIN_SIDE}x{MIN_SIDE} minimum"
            )));
        }
        if let Some(bad) = pixels.iter().find(|v| !(0.0..=1.0).contains(*v)) {
            return Err(DataError::InvalidImage(format!(
                "pixel value {bad} outside [0, 1]"
            )));
        }
        Ok(BScan {
            pixels,
            domain,
            source_id: source_id.into(),
        })
    }

    /// Builds a b-scan after clamping every value into `[0, 1]`. NaN maps to 0.
    pub fn from_clipped(
        mut pixels: Array2<f64>,
        domain: Domain,
        source_id: impl Into<String>,
    ) -> Result<Self> {
        pixels.mapv_inplace(clip_unit);
        BScan::new(pixels, domain, source_id)
    }

    pub fn filled(height: usize, width: usize, value: f64, domain: Domain) -> Result<Self> {
        BScan::new(Array2::from_elem((height, width), value), domain, "")
    }

    pub fn pixels(&self) -> &Array2<f64> {
        &self.pixels
    }

    pub fn into_pixels(self) -> Array2<f64> {
        self.pixels
    }

    pub fn height(&self) -> usize {
        self.pixels.nrows()
    }

    pub fn width(&self) -> usize {
        self.pixels.ncols()
    }

    pub fn dim(&self) -> (usize, usize) {
        self.pixels.dim()
    }

    pub fn domain(&self) -> Domain {
        self.domain
    }

    pub fn source_id(&self) -> &str {
        &self.source_id
    }

    pub fn with_domain(mut self, domain: Domain) -> Self {
        self.domain = domain;
        self
    }

    pub fn with_source_id(mut self, source_id: impl Into<String>) -> Self {
        self.source_id = source_id.into();
        self
    }

    /// Replaces the pixel data, clipping into range; keeps tags.
    pub fn replace_pixels(&self, pixels: Array2<f64>, domain: Domain) -> Result<Self> {
        BScan::from_clipped(pixels, domain, self.source_id.clone())
    }

    pub fn min_max(&self) -> (f64, f64) {
        self.pixels
            .iter()
            .fold((f64::INFINITY, f64::NEG_INFINITY), |(lo, hi), &v| {
                (lo.min(v), hi.max(v))
            })
    }
}

pub(crate) fn clip_unit(v: f64) -> f64 {
    if v.is_nan() {
        0.0
    } else {
        v.clamp(0.0, 1.0)
    }
}
