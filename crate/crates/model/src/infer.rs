//! Inference on trained models: denoising and critic score summaries.

use std::io::Write;

use hdcg_core::{BScan, Domain};
use serde::Serialize;

use crate::checkpoint::Checkpoint;
use crate::cyclegan::{CriticMode, CycleGan, Side};
use crate::error::{ModelError, Result};

/// Applies the HN->LN generator once and clips into `[0, 1]`.
pub fn denoise(model: &CycleGan, img: &BScan) -> Result<BScan> {
    let out = model.denoise_raw(img.pixels())?;
    Ok(img.replace_pixels(out, Domain::Generated)?)
}

pub fn denoise_checkpoint(ckpt: &Checkpoint, img: &BScan) -> Result<BScan> {
    denoise(&ckpt.model()?, img)
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ScoreRow {
    pub input_domain: String,
    pub n: usize,
    pub values: Vec<f64>,
}

/// Mean critic outputs on real images of each domain.
///
/// Shared mode: one row per input domain with the mean softmax probability
/// of each class. Vanilla mode: one row per input domain with the mean
/// "real" probability assigned by each of the two binary discriminators.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ScoreReport {
    pub mode: CriticMode,
    pub columns: Vec<String>,
    pub rows: Vec<ScoreRow>,
}

impl ScoreReport {
    pub fn write_csv<W: Write>(&self, out: W) -> Result<()> {
        let mut w = csv::Writer::from_writer(out);
        let mut head = vec!["input_domain".to_string(), "n".to_string()];
        head.extend(self.columns.iter().cloned());
        w.write_record(&head).map_err(|e| ModelError::Io(e.into()))?;
        for r in &self.rows {
            let mut rec = vec![r.input_domain.clone(), r.n.to_string()];
            rec.extend(r.values.iter().map(|v| format!("{v:.6}")));
            w.write_record(&rec).map_err(|e| ModelError::Io(e.into()))?;
        }
        w.flush()?;
        Ok(())
    }
}

pub fn discriminator_score_report(model: &CycleGan, hn_set: &[BScan], ln_set: &[BScan]) -> Result<ScoreReport> {
    let critic = &model.critic;
    let columns: Vec<String> = match critic.mode() {
        CriticMode::SharedDiscriminator => vec!["real_hn".into(), "real_ln".into(), "fake".into()],
        CriticMode::VanillaTwoDiscriminators => vec!["d_hn_real".into(), "d_ln_real".into()],
    };
    let mut rows = Vec::new();
    for (name, set) in [("hn", hn_set), ("ln", ln_set)] {
        let mut sums = vec![0.0; columns.len()];
        for img in set {
            let vals = match critic.mode() {
                CriticMode::SharedDiscriminator => critic.net(Side::High).probs_image(img.pixels())?,
                CriticMode::VanillaTwoDiscriminators => vec![
                    critic.net(Side::High).probs_image(img.pixels())?[0],
                    critic.net(Side::Low).probs_image(img.pixels())?[0],
                ],
            };
            for (s, v) in sums.iter_mut().zip(vals) {
                *s += v;
            }
        }
        let n = set.len();
        let values = sums.into_iter().map(|s| if n == 0 { f64::NAN } else { s / n as f64 }).collect();
        rows.push(ScoreRow {
            input_domain: name.into(),
            n,
            values,
        });
    }
    Ok(ScoreReport {
        mode: critic.mode(),
        columns,
        rows,
    })
}
