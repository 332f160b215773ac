//! The full translation model and its joint forward/backward pass.

use ndarray::Array2;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::discriminator::{Discriminator, DiscriminatorTape};
use crate::error::{ModelError, Result};
use crate::generator::Generator;
use crate::layers::{self, Tensor};
use crate::loss::{cross_entropy, cross_entropy_grad, LossComponents, LossWeights};
use crate::params::{Grads, ParamSet};
use crate::spec::{DiscriminatorSpec, GeneratorSpec};

/// Which discriminator arrangement the model trains with.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize, Default)]
#[serde(rename_all = "snake_case")]
pub enum CriticMode {
    /// One three-way classifier: real HN, real LN, fake.
    #[default]
    SharedDiscriminator,
    /// One binary real/fake classifier per domain.
    VanillaTwoDiscriminators,
}

/// Image domain as seen by the critic.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Side {
    High,
    Low,
}

#[derive(Debug, Clone)]
pub enum Critic {
    Shared(Discriminator),
    Vanilla { high: Discriminator, low: Discriminator },
}

impl Critic {
    pub fn new(mode: CriticMode, spec: &DiscriminatorSpec, rng: &mut ChaCha8Rng) -> Result<Self> {
        Ok(match mode {
            CriticMode::SharedDiscriminator => {
                if spec.n_classes != 3 {
                    return Err(ModelError::Config(format!(
                        "the shared discriminator needs 3 classes, spec has {}",
                        spec.n_classes
                    )));
                }
                Critic::Shared(Discriminator::new(spec, rng)?)
            }
            CriticMode::VanillaTwoDiscriminators => {
                let binary = spec.binary();
                let high = Discriminator::new(&binary, rng)?;
                let low = Discriminator::new(&binary, rng)?;
                Critic::Vanilla { high, low }
            }
        })
    }

    pub fn mode(&self) -> CriticMode {
        match self {
            Critic::Shared(_) => CriticMode::SharedDiscriminator,
            Critic::Vanilla { .. } => CriticMode::VanillaTwoDiscriminators,
        }
    }

    pub fn networks(&self) -> Vec<&Discriminator> {
        match self {
            Critic::Shared(d) => vec![d],
            Critic::Vanilla { high, low } => vec![high, low],
        }
    }

    pub fn networks_mut(&mut self) -> Vec<&mut Discriminator> {
        match self {
            Critic::Shared(d) => vec![d],
            Critic::Vanilla { high, low } => vec![high, low],
        }
    }

    /// Network index judging images of `side`.
    pub fn index(&self, side: Side) -> usize {
        match (self, side) {
            (Critic::Shared(_), _) => 0,
            (Critic::Vanilla { .. }, Side::High) => 0,
            (Critic::Vanilla { .. }, Side::Low) => 1,
        }
    }

    pub fn net(&self, side: Side) -> &Discriminator {
        self.networks()[self.index(side)]
    }

    pub fn n_classes(&self) -> usize {
        self.net(Side::High).spec().n_classes
    }

    /// One-hot target for a real image of `side`.
    pub fn real_target(&self, side: Side) -> Vec<f64> {
        let idx = match (self, side) {
            (Critic::Shared(_), Side::High) => 0,
            (Critic::Shared(_), Side::Low) => 1,
            (Critic::Vanilla { .. }, _) => 0,
        };
        one_hot(idx, self.n_classes())
    }

    /// One-hot target for a generated image.
    pub fn fake_target(&self) -> Vec<f64> {
        let n = self.n_classes();
        one_hot(n - 1, n)
    }

    pub fn zero_grads(&self) -> Vec<Grads> {
        self.networks().iter().map(|d| d.zero_grads()).collect()
    }
}

fn one_hot(idx: usize, n: usize) -> Vec<f64> {
    (0..n).map(|i| if i == idx { 1.0 } else { 0.0 }).collect()
}

/// Gradients for every network of the model.
#[derive(Debug, Clone)]
pub struct ModelGrads {
    pub gen_h: Grads,
    pub gen_l: Grads,
    pub critic: Vec<Grads>,
}

/// Images produced by a forward pass, for logging and the critic step.
#[derive(Debug, Clone)]
pub struct Translations {
    pub fake_h: Tensor,
    pub fake_l: Tensor,
    pub rec_l: Tensor,
    pub rec_h: Tensor,
}

/// Weights of the three loss terms in one backward pass.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct TermWeights {
    pub gen: f64,
    pub disc: f64,
    pub cycle: f64,
}

impl TermWeights {
    pub const ZERO: TermWeights = TermWeights { gen: 0.0, disc: 0.0, cycle: 0.0 };

    /// Generator update: adversarial generator term plus cycle term.
    pub fn generator_step(w: LossWeights) -> Self {
        TermWeights { gen: w.gan, disc: 0.0, cycle: w.cycle }
    }

    /// Critic update: discriminator term only.
    pub fn critic_step(w: LossWeights) -> Self {
        TermWeights { gen: 0.0, disc: w.gan, cycle: 0.0 }
    }

    /// The full combined objective.
    pub fn total(w: LossWeights) -> Self {
        TermWeights { gen: w.gan, disc: w.gan, cycle: w.cycle }
    }
}

/// Both generators and the critic.
#[derive(Debug, Clone)]
pub struct CycleGan {
    /// Maps low-noise to high-noise images.
    pub gen_h: Generator,
    /// Maps high-noise to low-noise images (the denoiser).
    pub gen_l: Generator,
    pub critic: Critic,
}

fn to_tensor(img: &Array2<f64>) -> Tensor {
    let (h, w) = img.dim();
    img.clone().into_shape_with_order((1, h, w)).unwrap()
}

impl CycleGan {
    /// Initialises all networks from `seed`; each gets its own RNG stream.
    pub fn new(gen: &GeneratorSpec, disc: &DiscriminatorSpec, mode: CriticMode, seed: u64) -> Result<Self> {
        let stream = |id: u64| {
            let mut r = ChaCha8Rng::seed_from_u64(seed);
            r.set_stream(id);
            r
        };
        Ok(CycleGan {
            gen_h: Generator::new(gen, &mut stream(1))?,
            gen_l: Generator::new(gen, &mut stream(2))?,
            critic: Critic::new(mode, disc, &mut stream(3))?,
        })
    }

    pub fn zero_grads(&self) -> ModelGrads {
        ModelGrads {
            gen_h: self.gen_h.zero_grads(),
            gen_l: self.gen_l.zero_grads(),
            critic: self.critic.zero_grads(),
        }
    }

    pub fn generator_params(&self) -> Vec<&ParamSet> {
        vec![self.gen_h.params(), self.gen_l.params()]
    }

    pub fn critic_params(&self) -> Vec<&ParamSet> {
        self.critic.networks().into_iter().map(|d| d.params()).collect()
    }

    pub fn param_count(&self) -> usize {
        self.generator_params().iter().chain(self.critic_params().iter()).map(|p| p.count()).sum()
    }

    /// Runs both cycles and the critic on one unpaired `(l, h)` pair, and
    /// backpropagates two objectives: `gen_w` drives the generator
    /// gradients, `critic_w` the critic gradients. Either may be zero.
    pub fn forward_backward(
        &self,
        l: &Array2<f64>,
        h: &Array2<f64>,
        gen_w: TermWeights,
        critic_w: TermWeights,
    ) -> Result<(LossComponents, ModelGrads, Translations)> {
        if l.dim() != h.dim() {
            return Err(ModelError::Shape(format!("l is {:?} but h is {:?}", l.dim(), h.dim())));
        }
        let (rows, cols) = l.dim();
        self.gen_l.spec().check_input(rows, cols)?;
        self.critic.net(Side::High).spec().check_input(rows, cols)?;
        let (lt, ht) = (to_tensor(l), to_tensor(h));

        let (fake_h, tape_gh1) = self.gen_h.forward(&lt);
        let (fake_l, tape_gl1) = self.gen_l.forward(&ht);
        let (rec_l, tape_gl2) = self.gen_l.forward(&fake_h);
        let (rec_h, tape_gh2) = self.gen_h.forward(&fake_l);

        let n = (rows * cols) as f64;
        let cycle = layers_mean_abs(&lt, &rec_l) + layers_mean_abs(&ht, &rec_h);

        let critic = &self.critic;
        let (p_fake_h, t_fake_h) = critic.net(Side::High).forward(&fake_h);
        let (p_fake_l, t_fake_l) = critic.net(Side::Low).forward(&fake_l);
        let (p_real_h, t_real_h) = critic.net(Side::High).forward(&ht);
        let (p_real_l, t_real_l) = critic.net(Side::Low).forward(&lt);

        let (real_h, real_l, fake) = (critic.real_target(Side::High), critic.real_target(Side::Low), critic.fake_target());
        let gen = cross_entropy(&p_fake_h, &real_h) + cross_entropy(&p_fake_l, &real_l);
        let disc = cross_entropy(&p_fake_h, &fake)
            + cross_entropy(&p_fake_l, &fake)
            + cross_entropy(&p_real_h, &real_h)
            + cross_entropy(&p_real_l, &real_l);
        let losses = LossComponents {
            gen,
            disc,
            cycle,
            total: f64::NAN,
        };

        let mut grads = self.zero_grads();
        // Gradient w.r.t. logits of a critic output under weights `w`, for an
        // image that is fake (contributes to gen and disc terms) or real.
        let dlogits = |probs: &[f64], w: TermWeights, real_target: &[f64], is_fake: bool| -> Vec<f64> {
            let mut gp = vec![0.0; probs.len()];
            if is_fake {
                let a = cross_entropy_grad(probs, real_target);
                let b = cross_entropy_grad(probs, &fake);
                for i in 0..gp.len() {
                    gp[i] = w.gen * a[i] + w.disc * b[i];
                }
            } else {
                let a = cross_entropy_grad(probs, real_target);
                for i in 0..gp.len() {
                    gp[i] = w.disc * a[i];
                }
            }
            layers::softmax_backward(probs, &gp)
        };

        // Critic parameter gradients.
        let critic_terms: [(&[f64], &DiscriminatorTape, Side, &[f64], bool); 4] = [
            (&p_fake_h, &t_fake_h, Side::High, &real_h, true),
            (&p_fake_l, &t_fake_l, Side::Low, &real_l, true),
            (&p_real_h, &t_real_h, Side::High, &real_h, false),
            (&p_real_l, &t_real_l, Side::Low, &real_l, false),
        ];
        if critic_w != TermWeights::ZERO {
            for (p, tape, side, target, is_fake) in critic_terms {
                let g = dlogits(p, critic_w, target, is_fake);
                let idx = critic.index(side);
                critic.net(side).backward(tape, &g, &mut grads.critic[idx], false);
            }
        }

        if gen_w != TermWeights::ZERO {
            // Scratch buffers absorb critic parameter gradients of this pass.
            let mut scratch = critic.zero_grads();
            let mut adv_input_grad = |p: &[f64], tape: &DiscriminatorTape, side: Side, target: &[f64]| -> Tensor {
                let g = dlogits(p, gen_w, target, true);
                let idx = critic.index(side);
                critic.net(side).backward(tape, &g, &mut scratch[idx], true).unwrap()
            };
            let mut g_fake_h = adv_input_grad(&p_fake_h, &t_fake_h, Side::High, &real_h);
            let mut g_fake_l = adv_input_grad(&p_fake_l, &t_fake_l, Side::Low, &real_l);

            // d/d rec of mean|x - rec| is sign(rec - x) / n.
            let cyc_grad = |x: &Tensor, rec: &Tensor| -> Tensor {
                let mut g = rec - x;
                g.mapv_inplace(|d| gen_w.cycle * sign(d) / n);
                g
            };
            g_fake_h += &self.gen_l.backward(&tape_gl2, cyc_grad(&lt, &rec_l), &mut grads.gen_l);
            g_fake_l += &self.gen_h.backward(&tape_gh2, cyc_grad(&ht, &rec_h), &mut grads.gen_h);
            self.gen_h.backward(&tape_gh1, g_fake_h, &mut grads.gen_h);
            self.gen_l.backward(&tape_gl1, g_fake_l, &mut grads.gen_l);
        }

        Ok((
            losses,
            grads,
            Translations {
                fake_h,
                fake_l,
                rec_l,
                rec_h,
            },
        ))
    }

    /// `G_L` on a single image, unclipped.
    pub fn denoise_raw(&self, img: &Array2<f64>) -> Result<Array2<f64>> {
        self.gen_l.infer_image(img)
    }
}

fn sign(d: f64) -> f64 {
    if d > 0.0 {
        1.0
    } else if d < 0.0 {
        -1.0
    } else {
        0.0
    }
}

fn layers_mean_abs(a: &Tensor, b: &Tensor) -> f64 {
    crate::loss::mean_abs_diff(a.as_slice().unwrap(), b.as_slice().unwrap())
}
