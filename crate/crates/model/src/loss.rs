//! Adversarial, cycle-consistency and combined objectives.

use hdcg_core::BScan;
use serde::{Deserialize, Serialize};

use crate::error::{ModelError, Result};

/// Floor applied to probabilities inside the logarithm.
pub const LOG_EPS: f64 = 1e-12;

/// One-hot targets for real-HN, real-LN and fake.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ClassTargets {
    pub t_h: [f64; 3],
    pub t_l: [f64; 3],
    pub t_f: [f64; 3],
}

impl Default for ClassTargets {
    fn default() -> Self {
        ClassTargets {
            t_h: [1.0, 0.0, 0.0],
            t_l: [0.0, 1.0, 0.0],
            t_f: [0.0, 0.0, 1.0],
        }
    }
}

impl ClassTargets {
    pub const REAL_HN: usize = 0;
    pub const REAL_LN: usize = 1;
    pub const FAKE: usize = 2;
}

/// `-sum_j t_j log(max(p_j, eps))`.
pub fn cross_entropy(probs: &[f64], target: &[f64]) -> f64 {
    debug_assert_eq!(probs.len(), target.len());
    -probs
        .iter()
        .zip(target)
        .filter(|(_, &t)| t != 0.0)
        .map(|(&p, &t)| t * p.max(LOG_EPS).ln())
        .sum::<f64>()
}

/// Gradient of [`cross_entropy`] w.r.t. the probabilities.
pub fn cross_entropy_grad(probs: &[f64], target: &[f64]) -> Vec<f64> {
    probs
        .iter()
        .zip(target)
        .map(|(&p, &t)| if t == 0.0 || p <= LOG_EPS { 0.0 } else { -t / p })
        .collect()
}

/// Generated images scored against the real class of their target domain.
pub fn generator_loss(d_fake_h: &[f64], d_fake_l: &[f64], targets: &ClassTargets) -> f64 {
    cross_entropy(d_fake_h, &targets.t_h) + cross_entropy(d_fake_l, &targets.t_l)
}

/// Both generated images against the fake class, real images against their
/// own domain class.
pub fn discriminator_loss(d_fake_h: &[f64], d_fake_l: &[f64], d_real_h: &[f64], d_real_l: &[f64], targets: &ClassTargets) -> f64 {
    cross_entropy(d_fake_h, &targets.t_f)
        + cross_entropy(d_fake_l, &targets.t_f)
        + cross_entropy(d_real_h, &targets.t_h)
        + cross_entropy(d_real_l, &targets.t_l)
}

/// Mean absolute difference between two equally sized arrays.
pub fn mean_abs_diff(a: &[f64], b: &[f64]) -> f64 {
    assert_eq!(a.len(), b.len());
    a.iter().zip(b).map(|(x, y)| (x - y).abs()).sum::<f64>() / a.len() as f64
}

/// `mean|l - l_rec| + mean|h - h_rec|`.
pub fn cycle_loss(l: &BScan, h: &BScan, l_rec: &BScan, h_rec: &BScan) -> Result<f64> {
    if l.dim() != l_rec.dim() || h.dim() != h_rec.dim() {
        return Err(ModelError::Shape(format!(
            "cycle pairs differ in shape: {:?}/{:?} and {:?}/{:?}",
            l.dim(),
            l_rec.dim(),
            h.dim(),
            h_rec.dim()
        )));
    }
    let flat = |b: &BScan| b.pixels().iter().copied().collect::<Vec<_>>();
    Ok(mean_abs_diff(&flat(l), &flat(l_rec)) + mean_abs_diff(&flat(h), &flat(h_rec)))
}

/// Relative weights of the loss terms.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct LossWeights {
    pub gan: f64,
    pub cycle: f64,
}

/// `lambda_gan * (L_G + L_D) + lambda_cycle * L_cycle`.
pub fn total_loss(gen_loss: f64, disc_loss: f64, cyc_loss: f64, weights: LossWeights) -> f64 {
    weights.gan * (gen_loss + disc_loss) + weights.cycle * cyc_loss
}

/// Loss terms of one training step.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct LossComponents {
    pub gen: f64,
    pub disc: f64,
    pub cycle: f64,
    pub total: f64,
}

impl LossComponents {
    pub fn with_total(mut self, w: LossWeights) -> Self {
        self.total = total_loss(self.gen, self.disc, self.cycle, w);
        self
    }

    pub fn is_finite(&self) -> bool {
        self.gen.is_finite() && self.disc.is_finite() && self.cycle.is_finite() && self.total.is_finite()
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use hdcg_core::Domain;

    const U: [f64; 3] = [1.0 / 3.0; 3];

    #[test]
    fn uniform_generator_loss() {
        let t = ClassTargets::default();
        assert!((generator_loss(&U, &U, &t) - 2.0 * 3f64.ln()).abs() < 1e-12);
        assert!((generator_loss(&U, &U, &t) - 2.1972246).abs() < 1e-6);
    }

    #[test]
    fn perfect_and_mixed_generator_loss() {
        let t = ClassTargets::default();
        assert_eq!(generator_loss(&[1.0, 0.0, 0.0], &[0.0, 1.0, 0.0], &t), 0.0);
        assert!((generator_loss(&[1.0, 0.0, 0.0], &U, &t) - 1.0986123).abs() < 1e-6);
    }

    #[test]
    fn discriminator_loss_cases() {
        let t = ClassTargets::default();
        assert!((discriminator_loss(&U, &U, &U, &U, &t) - 4.3944492).abs() < 1e-6);
        let fake = [0.0, 0.0, 1.0];
        assert_eq!(discriminator_loss(&fake, &fake, &[1.0, 0.0, 0.0], &[0.0, 1.0, 0.0], &t), 0.0);
        let v = discriminator_loss(&fake, &fake, &[1.0, 0.0, 0.0], &U, &t);
        assert!((v - 3f64.ln()).abs() < 1e-12);
    }

    #[test]
    fn saturated_probability_is_guarded() {
        let t = ClassTargets::default();
        let v = generator_loss(&[0.0, 0.0, 1.0], &[0.0, 1.0, 0.0], &t);
        assert!(v.is_finite());
        assert!((v + LOG_EPS.ln()).abs() < 1e-9);
    }

    #[test]
    fn total_loss_combination() {
        let w = LossWeights { gan: 1.0, cycle: 10.0 };
        assert!((total_loss(2.1972, 4.3944, 0.1, w) - 7.5916).abs() < 1e-9);
        let w0 = LossWeights { gan: 1.0, cycle: 0.0 };
        assert_eq!(total_loss(1.5, 2.5, 9.0, w0), 4.0);
        assert_eq!(total_loss(0.0, 0.0, 0.0, w), 0.0);
    }

    #[test]
    fn cycle_loss_cases() {
        let c = |v: f64| BScan::filled(8, 8, v, Domain::LowNoise).unwrap();
        assert_eq!(cycle_loss(&c(0.3), &c(0.7), &c(0.3), &c(0.7)).unwrap(), 0.0);
        let v = cycle_loss(&c(0.5), &c(0.2), &c(0.6), &c(0.2)).unwrap();
        assert!((v - 0.1).abs() < 1e-12);
        let swapped = cycle_loss(&c(0.2), &c(0.5), &c(0.2), &c(0.6)).unwrap();
        assert_eq!(v, swapped);
        let big = BScan::filled(8, 16, 0.5, Domain::LowNoise).unwrap();
        assert!(cycle_loss(&c(0.5), &c(0.2), &big, &c(0.2)).is_err());
    }
}
