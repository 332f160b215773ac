//! Ranks the channels of a layer by how well their skeletons follow known
//! inner and outer boundaries (e.g. those of a phantom).

use hdcg_core::BScan;
use serde::Serialize;

use crate::features::FeatureMapSet;
use crate::skeleton::skeletonize_layers;

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ChannelScore {
    pub channel: usize,
    /// Fraction of columns where both curves exist.
    pub coverage: f64,
    /// Mean absolute row error over covered columns, ILM and RPE pooled.
    pub mean_abs_error: f64,
    /// `coverage / (1 + mean_abs_error)`; 0 when no skeleton is found.
    pub score: f64,
}

/// Scores every channel of `set` (up-scaled to the b-scan if needed) and
/// returns them best first. `ilm_truth` / `rpe_truth` give the expected row
/// per column.
pub fn score_channels(img: &BScan, set: &FeatureMapSet, ilm_truth: &[f64], rpe_truth: &[f64]) -> Vec<ChannelScore> {
    let (h, w) = img.dim();
    let set = if set.dim() == (h, w) { set.clone() } else { set.upscale(h, w) };
    let mut scores: Vec<ChannelScore> = set
        .maps
        .iter()
        .enumerate()
        .map(|(channel, map)| {
            let empty = ChannelScore {
                channel,
                coverage: 0.0,
                mean_abs_error: f64::INFINITY,
                score: 0.0,
            };
            let Ok(skel) = skeletonize_layers(img, map) else {
                return empty;
            };
            let mut err = 0.0;
            let mut n = 0usize;
            for c in 0..w.min(ilm_truth.len()).min(rpe_truth.len()) {
                if let (Some(a), Some(b)) = (skel.ilm_curve[c], skel.rpe_curve[c]) {
                    err += (a - ilm_truth[c]).abs() + (b - rpe_truth[c]).abs();
                    n += 1;
                }
            }
            if n == 0 {
                return empty;
            }
            let coverage = n as f64 / w as f64;
            let mean_abs_error = err / (2 * n) as f64;
            ChannelScore {
                channel,
                coverage,
                mean_abs_error,
                score: coverage / (1.0 + mean_abs_error),
            }
        })
        .collect();
    scores.sort_by(|a, b| b.score.total_cmp(&a.score).then(a.channel.cmp(&b.channel)));
    scores
}
