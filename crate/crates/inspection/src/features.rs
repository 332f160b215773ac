//! Per-channel activations of a named generator layer.

use hdcg_core::imgops::resize_bilinear;
use hdcg_core::BScan;
use hdcg_model::{Checkpoint, Generator};
use ndarray::{Array2, Axis};

use crate::error::{InspectionError, Result};

#[derive(Debug, Clone, PartialEq)]
pub struct FeatureMapSet {
    pub layer_name: String,
    /// Channel maps scaled to [0, 1] each.
    pub maps: Vec<Array2<f64>>,
    /// Activations as produced by the network.
    pub raw: Vec<Array2<f64>>,
    pub native_height: usize,
    pub native_width: usize,
    pub upscaled: bool,
}

impl FeatureMapSet {
    pub fn n_channels(&self) -> usize {
        self.maps.len()
    }

    /// Current `(height, width)` of every map.
    pub fn dim(&self) -> (usize, usize) {
        self.maps.first().map_or((self.native_height, self.native_width), |m| m.dim())
    }

    /// Bilinearly resizes every map (normalized and raw) to `h x w`.
    pub fn upscale(&self, h: usize, w: usize) -> FeatureMapSet {
        let resize = |v: &Vec<Array2<f64>>| v.iter().map(|m| resize_bilinear(m, h, w)).collect();
        FeatureMapSet {
            layer_name: self.layer_name.clone(),
            maps: resize(&self.maps),
            raw: resize(&self.raw),
            native_height: self.native_height,
            native_width: self.native_width,
            upscaled: (h, w) != (self.native_height, self.native_width),
        }
    }
}

/// Min-max scaling to [0, 1]; a constant map becomes all zeros.
pub fn normalize_unit(map: &Array2<f64>) -> Array2<f64> {
    let (lo, hi) = map.iter().fold((f64::INFINITY, f64::NEG_INFINITY), |(a, b), &v| (a.min(v), b.max(v)));
    if !(hi > lo) {
        return Array2::zeros(map.dim());
    }
    map.mapv(|v| (v - lo) / (hi - lo))
}

pub fn extract_feature_maps(generator: &Generator, img: &BScan, layer: &str) -> Result<FeatureMapSet> {
    let names = generator.spec().layer_names();
    if !names.iter().any(|n| n == layer) {
        return Err(InspectionError::UnknownLayer {
            name: layer.to_string(),
            available: names.join(", "),
        });
    }
    let (h, w) = img.dim();
    generator.spec().check_input(h, w)?;
    let x = img.pixels().clone().into_shape_with_order((1, h, w)).expect("same element count");
    let act = generator
        .trace(&x)
        .into_iter()
        .find(|(n, _)| n == layer)
        .map(|(_, t)| t)
        .expect("traced layers match the spec");
    let raw: Vec<Array2<f64>> = act.axis_iter(Axis(0)).map(|c| c.to_owned()).collect();
    let (_, nh, nw) = act.dim();
    Ok(FeatureMapSet {
        layer_name: layer.to_string(),
        maps: raw.iter().map(normalize_unit).collect(),
        raw,
        native_height: nh,
        native_width: nw,
        upscaled: false,
    })
}

/// Uses the low-noise generator of a checkpoint.
pub fn extract_from_checkpoint(ckpt: &Checkpoint, img: &BScan, layer: &str) -> Result<FeatureMapSet> {
    let model = ckpt.model()?;
    extract_feature_maps(&model.gen_l, img, layer)
}
