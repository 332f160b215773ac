//! Warm starts: generators as autoencoders, the critic as a domain classifier.

use ndarray::Array2;
use rand::seq::SliceRandom;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::discriminator::Discriminator;
use crate::error::{ModelError, Result};
use crate::generator::Generator;
use crate::layers::{self, Tensor};
use crate::loss::{cross_entropy, cross_entropy_grad};
use crate::optim::{Adam, AdamConfig};
use crate::params::ParamSet;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct PretrainConfig {
    pub epochs: usize,
    pub learning_rate: f64,
    pub seed: u64,
}

impl Default for PretrainConfig {
    fn default() -> Self {
        PretrainConfig {
            epochs: 20,
            learning_rate: 5e-4,
            seed: 0,
        }
    }
}

#[derive(Debug, Clone)]
pub struct PretrainOutcome {
    pub params: ParamSet,
    /// Mean training loss of each epoch.
    pub epoch_losses: Vec<f64>,
}

fn tensor(img: &Array2<f64>) -> Tensor {
    let (h, w) = img.dim();
    img.clone().into_shape_with_order((1, h, w)).unwrap()
}

fn adam(cfg: &PretrainConfig, ps: &ParamSet) -> Adam {
    Adam::new(
        AdamConfig {
            lr: cfg.learning_rate,
            ..AdamConfig::default()
        },
        &[ps],
    )
}

/// Mean absolute reconstruction error of `gen` on `images`.
pub fn reconstruction_mae(gen: &Generator, images: &[&Array2<f64>]) -> Result<f64> {
    let mut total = 0.0;
    for img in images {
        let out = gen.infer_image(img)?;
        total += (&out - *img).mapv(f64::abs).mean().unwrap_or(0.0);
    }
    Ok(total / images.len().max(1) as f64)
}

/// Trains `gen` to reproduce its input under mean absolute error.
pub fn pretrain_generator_autoencoder(gen: &mut Generator, images: &[&Array2<f64>], cfg: &PretrainConfig) -> Result<PretrainOutcome> {
    if images.is_empty() {
        return Err(ModelError::Config("no images to pre-train on".into()));
    }
    for img in images {
        gen.spec().check_input(img.nrows(), img.ncols())?;
    }
    let mut opt = adam(cfg, gen.params());
    let mut rng = ChaCha8Rng::seed_from_u64(cfg.seed);
    let mut order: Vec<usize> = (0..images.len()).collect();
    let mut epoch_losses = Vec::with_capacity(cfg.epochs);
    for _ in 0..cfg.epochs {
        order.shuffle(&mut rng);
        let mut sum = 0.0;
        for &i in &order {
            let x = tensor(images[i]);
            let (y, tape) = gen.forward(&x);
            let n = x.len() as f64;
            let diff = &y - &x;
            sum += diff.mapv(f64::abs).sum() / n;
            let gy = diff.mapv(|d| d.signum() * (d != 0.0) as u8 as f64 / n);
            let mut grads = gen.zero_grads();
            gen.backward(&tape, gy, &mut grads);
            opt.update(&mut [gen.params_mut()], &[&grads]);
        }
        let mean = sum / images.len() as f64;
        if !mean.is_finite() {
            return Err(ModelError::NonFinite {
                step: 0,
                epoch: epoch_losses.len(),
                detail: "autoencoder loss".into(),
            });
        }
        epoch_losses.push(mean);
    }
    Ok(PretrainOutcome {
        params: gen.params().clone(),
        epoch_losses,
    })
}

/// Supervised training of the critic on labelled images.
pub fn train_classifier(disc: &mut Discriminator, examples: &[(&Array2<f64>, usize)], cfg: &PretrainConfig) -> Result<PretrainOutcome> {
    let n_classes = disc.spec().n_classes;
    if examples.is_empty() {
        return Err(ModelError::Config("no labelled examples".into()));
    }
    if let Some((_, c)) = examples.iter().find(|(_, c)| *c >= n_classes) {
        return Err(ModelError::Config(format!("label {c} out of range for {n_classes} classes")));
    }
    let mut opt = adam(cfg, disc.params());
    let mut rng = ChaCha8Rng::seed_from_u64(cfg.seed);
    let mut order: Vec<usize> = (0..examples.len()).collect();
    let mut epoch_losses = Vec::with_capacity(cfg.epochs);
    for _ in 0..cfg.epochs {
        order.shuffle(&mut rng);
        let mut sum = 0.0;
        for &i in &order {
            let (img, label) = examples[i];
            disc.spec().check_input(img.nrows(), img.ncols())?;
            let (p, tape) = disc.forward(&tensor(img));
            let target: Vec<f64> = (0..n_classes).map(|c| (c == label) as u8 as f64).collect();
            sum += cross_entropy(&p, &target);
            let gl = layers::softmax_backward(&p, &cross_entropy_grad(&p, &target));
            let mut grads = disc.zero_grads();
            disc.backward(&tape, &gl, &mut grads, false);
            opt.update(&mut [disc.params_mut()], &[&grads]);
        }
        epoch_losses.push(sum / examples.len() as f64);
    }
    Ok(PretrainOutcome {
        params: disc.params().clone(),
        epoch_losses,
    })
}

/// Real HN images labelled class 0, real LN images class 1; the fake class
/// is not used.
pub fn pretrain_discriminator_classifier(
    disc: &mut Discriminator,
    hn_set: &[&Array2<f64>],
    ln_set: &[&Array2<f64>],
    cfg: &PretrainConfig,
) -> Result<PretrainOutcome> {
    let examples: Vec<(&Array2<f64>, usize)> = hn_set.iter().map(|i| (*i, 0)).chain(ln_set.iter().map(|i| (*i, 1))).collect();
    train_classifier(disc, &examples, cfg)
}

/// Fraction of examples whose arg-max class equals the label.
pub fn classification_accuracy(disc: &Discriminator, examples: &[(&Array2<f64>, usize)]) -> Result<f64> {
    let mut correct = 0usize;
    for (img, label) in examples {
        let p = disc.probs_image(img)?;
        let argmax = p
            .iter()
            .enumerate()
            .max_by(|a, b| a.1.total_cmp(b.1))
            .map(|(i, _)| i)
            .unwrap();
        correct += usize::from(argmax == *label);
    }
    Ok(correct as f64 / examples.len().max(1) as f64)
}
