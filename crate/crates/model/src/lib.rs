//! Cycle-consistent translation between high-noise and low-noise b-scans.
//!
//! Two generators (`G_H: LN -> HN`, `G_L: HN -> LN`) share a single
//! three-way discriminator that classifies images as real HN, real LN or
//! generated. Generators use skip concatenations between matching
//! down/up-sampling stages and bilinear resize-convolutions for
//! up-sampling. A two-discriminator variant is kept for comparison.
//!
//! Networks are implemented directly on `ndarray` with hand-written backward
//! passes in `f64`.

pub mod blocks;
pub mod checkpoint;
pub mod cyclegan;
pub mod discriminator;
pub mod error;
pub mod generator;
pub mod infer;
pub mod layers;
pub mod loss;
pub mod optim;
pub mod params;
pub mod pretrain;
pub mod spec;
pub mod train;

pub use checkpoint::Checkpoint;
pub use cyclegan::{CriticMode, CycleGan, Side, TermWeights};
pub use discriminator::Discriminator;
pub use error::{ModelError, Result};
pub use generator::Generator;
pub use infer::{denoise, denoise_checkpoint, discriminator_score_report, ScoreReport};
pub use loss::{cycle_loss, discriminator_loss, generator_loss, total_loss, ClassTargets, LossComponents, LossWeights};
pub use spec::{DiscriminatorSpec, GeneratorSpec, UpsampleMode};
pub use train::{train, train_step, train_with, LossRecord, TrainConfig, TrainState};
