//! Feature-map inspection of a trained generator and layer skeletons.

pub mod error;
pub mod features;
pub mod overlay;
pub mod scoring;
pub mod skeleton;
pub mod thickness;

pub use error::{InspectionError, Result};
pub use features::{extract_feature_maps, extract_from_checkpoint, normalize_unit, FeatureMapSet};
pub use overlay::{feature_grid, overlay, save_feature_grid};
pub use scoring::{score_channels, ChannelScore};
pub use skeleton::{skeletonize_array, skeletonize_layers, Curve, LayerSkeleton};
pub use thickness::{thickness_profile, Summary, ThicknessProfile, ThicknessRow};

/// Builds the two-bright-line test image: rows `rows` lit with `half_width`
/// pixels on either side, on a dark background.
pub fn two_line_image(height: usize, width: usize, rows: [usize; 2], half_width: usize) -> ndarray::Array2<f64> {
    ndarray::Array2::from_shape_fn((height, width), |(r, _)| {
        if rows.iter().any(|&c| r.abs_diff(c) <= half_width) {
            0.9
        } else {
            0.05
        }
    })
}
