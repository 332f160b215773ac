//! Adam over a group of parameter sets.

use serde::{Deserialize, Serialize};

use crate::params::{Grads, ParamSet};

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct AdamConfig {
    pub lr: f64,
    pub beta1: f64,
    pub beta2: f64,
    pub eps: f64,
}

impl Default for AdamConfig {
    fn default() -> Self {
        AdamConfig {
            lr: 5e-4,
            beta1: 0.9,
            beta2: 0.999,
            eps: 1e-8,
        }
    }
}

/// First/second moment estimates for a list of parameter sets.
#[derive(Debug, Clone, PartialEq)]
pub struct Adam {
    pub cfg: AdamConfig,
    pub step: u64,
    /// `[set][tensor][element]`
    pub m: Vec<Vec<Vec<f64>>>,
    pub v: Vec<Vec<Vec<f64>>>,
}

impl Adam {
    pub fn new(cfg: AdamConfig, sets: &[&ParamSet]) -> Self {
        let zeros = |ps: &&ParamSet| ps.params.iter().map(|p| vec![0.0; p.data.len()]).collect::<Vec<_>>();
        Adam {
            cfg,
            step: 0,
            m: sets.iter().map(zeros).collect(),
            v: sets.iter().map(zeros).collect(),
        }
    }

    /// One bias-corrected Adam update of every set with its gradients.
    pub fn update(&mut self, sets: &mut [&mut ParamSet], grads: &[&Grads]) {
        assert_eq!(sets.len(), self.m.len(), "optimizer was built for a different set count");
        self.step += 1;
        let AdamConfig { lr, beta1, beta2, eps } = self.cfg;
        let bc1 = 1.0 - beta1.powi(self.step as i32);
        let bc2 = 1.0 - beta2.powi(self.step as i32);
        for (s, (ps, g)) in sets.iter_mut().zip(grads).enumerate() {
            for (t, (param, gt)) in ps.params.iter_mut().zip(&g.0).enumerate() {
                let (m, v) = (&mut self.m[s][t], &mut self.v[s][t]);
                for i in 0..param.data.len() {
                    let gi = gt[i];
                    m[i] = beta1 * m[i] + (1.0 - beta1) * gi;
                    v[i] = beta2 * v[i] + (1.0 - beta2) * gi * gi;
                    let mhat = m[i] / bc1;
                    let vhat = v[i] / bc2;
                    param.data[i] -= lr * mhat / (vhat.sqrt() + eps);
                }
            }
        }
    }
}
