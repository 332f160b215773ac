//! Alternating generator / critic optimisation.

use std::io::Write;
use std::path::Path;

use hdcg_core::{BScan, UnpairedIterator};
use ndarray::Array2;
use serde::{Deserialize, Serialize};

use crate::checkpoint::Checkpoint;
use crate::cyclegan::{CriticMode, CycleGan, ModelGrads, TermWeights};
use crate::error::{ModelError, Result};
use crate::loss::{LossComponents, LossWeights};
use crate::optim::{Adam, AdamConfig};
use crate::params::{Grads, ParamSet};
use crate::spec::{DiscriminatorSpec, GeneratorSpec};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize, Default)]
#[serde(rename_all = "snake_case")]
pub enum OptimizerKind {
    #[default]
    Adam,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct TrainConfig {
    pub lambda_gan: f64,
    pub lambda_cycle: f64,
    pub learning_rate: f64,
    pub optimizer: OptimizerKind,
    pub epochs: usize,
    pub batch_size: usize,
    pub mode: CriticMode,
    pub seed: u64,
    /// Emit a checkpoint every this many epochs; 0 disables periodic ones.
    pub checkpoint_every: usize,
    pub generator: GeneratorSpec,
    pub discriminator: DiscriminatorSpec,
}

impl Default for TrainConfig {
    fn default() -> Self {
        TrainConfig {
            lambda_gan: 1.0,
            lambda_cycle: 10.0,
            learning_rate: 5e-4,
            optimizer: OptimizerKind::Adam,
            epochs: 245,
            batch_size: 1,
            mode: CriticMode::SharedDiscriminator,
            seed: 0,
            checkpoint_every: 5,
            generator: GeneratorSpec::default(),
            discriminator: DiscriminatorSpec::default(),
        }
    }
}

impl TrainConfig {
    /// Toy networks for desk-scale experiments on 64x64 inputs.
    pub fn toy() -> Self {
        TrainConfig {
            generator: GeneratorSpec::toy(),
            discriminator: DiscriminatorSpec::toy(),
            ..TrainConfig::default()
        }
    }

    pub fn from_json(text: &str) -> Result<Self> {
        let cfg: TrainConfig = serde_json::from_str(text).map_err(|e| ModelError::Config(e.to_string()))?;
        cfg.validate()?;
        Ok(cfg)
    }

    pub fn validate(&self) -> Result<()> {
        if !(self.lambda_gan.is_finite() && self.lambda_gan >= 0.0) {
            return Err(ModelError::Config(format!("lambda_gan must be >= 0, got {}", self.lambda_gan)));
        }
        if !(self.lambda_cycle.is_finite() && self.lambda_cycle >= 0.0) {
            return Err(ModelError::Config(format!("lambda_cycle must be >= 0, got {}", self.lambda_cycle)));
        }
        if !(self.learning_rate.is_finite() && self.learning_rate > 0.0) {
            return Err(ModelError::Config(format!("learning_rate must be > 0, got {}", self.learning_rate)));
        }
        if self.batch_size == 0 {
            return Err(ModelError::Config("batch_size must be >= 1".into()));
        }
        self.generator.validate()?;
        self.discriminator.validate()
    }

    pub fn weights(&self) -> LossWeights {
        LossWeights {
            gan: self.lambda_gan,
            cycle: self.lambda_cycle,
        }
    }

    fn adam(&self) -> AdamConfig {
        AdamConfig {
            lr: self.learning_rate,
            ..AdamConfig::default()
        }
    }
}

/// One row of the loss log.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct LossRecord {
    pub step: usize,
    pub epoch: usize,
    #[serde(rename = "L_G")]
    pub gen: f64,
    #[serde(rename = "L_D")]
    pub disc: f64,
    #[serde(rename = "L_cycle")]
    pub cycle: f64,
    pub total: f64,
}

/// Writes the loss history as CSV: `step,epoch,L_G,L_D,L_cycle,total`.
pub fn write_loss_csv<W: Write>(out: W, history: &[LossRecord]) -> Result<()> {
    let mut w = csv::Writer::from_writer(out);
    for r in history {
        w.serialize(r).map_err(|e| ModelError::Io(e.into()))?;
    }
    w.flush()?;
    Ok(())
}

pub fn save_loss_csv(path: impl AsRef<Path>, history: &[LossRecord]) -> Result<()> {
    write_loss_csv(std::fs::File::create(path)?, history)
}

/// Model plus optimiser state; everything a checkpoint captures.
#[derive(Debug, Clone)]
pub struct TrainState {
    pub config: TrainConfig,
    pub model: CycleGan,
    pub gen_opt: Adam,
    pub critic_opt: Adam,
    /// Completed epochs.
    pub epoch: usize,
    /// Completed optimisation steps.
    pub step: usize,
    pub history: Vec<LossRecord>,
}

impl TrainState {
    pub fn new(config: &TrainConfig) -> Result<Self> {
        config.validate()?;
        let model = CycleGan::new(&config.generator, &config.discriminator, config.mode, config.seed)?;
        let gen_opt = Adam::new(config.adam(), &model.generator_params());
        let critic_opt = Adam::new(config.adam(), &model.critic_params());
        Ok(TrainState {
            config: config.clone(),
            model,
            gen_opt,
            critic_opt,
            epoch: 0,
            step: 0,
            history: Vec::new(),
        })
    }

    /// Replaces the generator weights, e.g. with autoencoder pre-training.
    pub fn init_generators(&mut self, gen_h: Option<&ParamSet>, gen_l: Option<&ParamSet>) -> Result<()> {
        if let Some(p) = gen_h {
            self.model.gen_h.params_mut().load_from(p).map_err(ModelError::Config)?;
        }
        if let Some(p) = gen_l {
            self.model.gen_l.params_mut().load_from(p).map_err(ModelError::Config)?;
        }
        Ok(())
    }

    pub fn init_critic(&mut self, params: &[ParamSet]) -> Result<()> {
        let nets = self.model.critic.networks_mut();
        if nets.len() != params.len() {
            return Err(ModelError::Config(format!("expected {} critic parameter sets", nets.len())));
        }
        for (net, p) in nets.into_iter().zip(params) {
            net.params_mut().load_from(p).map_err(ModelError::Config)?;
        }
        Ok(())
    }

    pub fn checkpoint(&self) -> Checkpoint {
        Checkpoint::from_state(self)
    }
}

fn scale(grads: &mut Grads, s: f64) {
    grads.0.iter_mut().flatten().for_each(|g| *g *= s);
}

/// One alternating update on a batch of `(l, h)` pairs: a generator step on
/// `lambda_gan * L_G + lambda_cycle * L_cycle` with the critic frozen, then a
/// critic step on `lambda_gan * L_D` with the generated images held fixed.
/// Both steps use the same forward pass. Returns the batch-mean losses.
pub fn train_step(state: &mut TrainState, batch: &[(&Array2<f64>, &Array2<f64>)]) -> Result<LossComponents> {
    if batch.is_empty() {
        return Err(ModelError::Config("empty batch".into()));
    }
    let w = state.config.weights();
    let mut acc: Option<ModelGrads> = None;
    let mut sum = LossComponents {
        gen: 0.0,
        disc: 0.0,
        cycle: 0.0,
        total: 0.0,
    };
    for (l, h) in batch {
        let (loss, grads, _) = state.model.forward_backward(l, h, TermWeights::generator_step(w), TermWeights::critic_step(w))?;
        sum.gen += loss.gen;
        sum.disc += loss.disc;
        sum.cycle += loss.cycle;
        match acc.as_mut() {
            None => acc = Some(grads),
            Some(a) => {
                a.gen_h.add_assign(&grads.gen_h);
                a.gen_l.add_assign(&grads.gen_l);
                for (x, y) in a.critic.iter_mut().zip(&grads.critic) {
                    x.add_assign(y);
                }
            }
        }
    }
    let inv = 1.0 / batch.len() as f64;
    let losses = LossComponents {
        gen: sum.gen * inv,
        disc: sum.disc * inv,
        cycle: sum.cycle * inv,
        total: 0.0,
    }
    .with_total(w);
    let mut grads = acc.unwrap();
    let grads_finite = grads
        .gen_h
        .0
        .iter()
        .chain(&grads.gen_l.0)
        .chain(grads.critic.iter().flat_map(|g| &g.0))
        .flatten()
        .all(|g| g.is_finite());
    if !losses.is_finite() || !grads_finite {
        return Err(ModelError::NonFinite {
            step: state.step,
            epoch: state.epoch,
            detail: format!(
                "L_G={} L_D={} L_cycle={} total={} finite_grads={grads_finite}",
                losses.gen, losses.disc, losses.cycle, losses.total
            ),
        });
    }
    scale(&mut grads.gen_h, inv);
    scale(&mut grads.gen_l, inv);
    grads.critic.iter_mut().for_each(|g| scale(g, inv));

    let model = &mut state.model;
    state
        .gen_opt
        .update(&mut [model.gen_h.params_mut(), model.gen_l.params_mut()], &[&grads.gen_h, &grads.gen_l]);
    let critic_grads: Vec<&Grads> = grads.critic.iter().collect();
    let mut critic_sets: Vec<&mut ParamSet> = model.critic.networks_mut().into_iter().map(|d| d.params_mut()).collect();
    state.critic_opt.update(&mut critic_sets, &critic_grads);

    state.step += 1;
    state.history.push(LossRecord {
        step: state.step,
        epoch: state.epoch + 1,
        gen: losses.gen,
        disc: losses.disc,
        cycle: losses.cycle,
        total: losses.total,
    });
    Ok(losses)
}

/// Runs one epoch of the iterator in batches.
pub fn train_epoch(state: &mut TrainState, data: &mut UnpairedIterator<'_>) -> Result<()> {
    let pairs = data.next_epoch();
    let arrays: Vec<(&Array2<f64>, &Array2<f64>)> = pairs.iter().map(|(hn, ln)| (ln.pixels(), hn.pixels())).collect();
    for chunk in arrays.chunks(state.config.batch_size) {
        train_step(state, chunk)?;
    }
    state.epoch += 1;
    Ok(())
}

/// Trains until `config.epochs` epochs are complete, calling `on_checkpoint`
/// for the starting state, every `checkpoint_every` epochs and at the end.
/// Resuming from a restored state continues at its epoch counter.
pub fn train_with<F>(state: &mut TrainState, data: &mut UnpairedIterator<'_>, mut on_checkpoint: F) -> Result<()>
where
    F: FnMut(&Checkpoint) -> Result<()>,
{
    if state.epoch == 0 {
        on_checkpoint(&state.checkpoint())?;
    }
    while state.epoch < state.config.epochs {
        train_epoch(state, data)?;
        let last = state.history.last().copied();
        if let Some(r) = last {
            tracing::info!(epoch = state.epoch, l_g = r.gen, l_d = r.disc, l_cycle = r.cycle, "epoch done");
        }
        let every = state.config.checkpoint_every;
        let periodic = every > 0 && state.epoch % every == 0;
        if periodic || state.epoch == state.config.epochs {
            on_checkpoint(&state.checkpoint())?;
        }
    }
    Ok(())
}

/// Trains from scratch and collects every emitted checkpoint.
pub fn train(hn: &[BScan], ln: &[BScan], config: &TrainConfig) -> Result<Vec<Checkpoint>> {
    let mut state = TrainState::new(config)?;
    let mut data = UnpairedIterator::new(hn, ln, config.seed)?;
    let mut out = Vec::new();
    train_with(&mut state, &mut data, |c| {
        out.push(c.clone());
        Ok(())
    })?;
    Ok(out)
}

/// Mean of the cycle loss per epoch, in epoch order.
pub fn epoch_mean_cycle(history: &[LossRecord]) -> Vec<f64> {
    let mut out: Vec<(f64, usize)> = Vec::new();
    for r in history {
        if out.len() < r.epoch {
            out.resize(r.epoch, (0.0, 0));
        }
        let slot = &mut out[r.epoch - 1];
        slot.0 += r.cycle;
        slot.1 += 1;
    }
    out.into_iter().filter(|(_, n)| *n > 0).map(|(s, n)| s / n as f64).collect()
}
