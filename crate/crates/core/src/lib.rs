//! Image containers, I/O, dataset organisation and the synthetic speckle
//! phantom used throughout the denoising pipeline.
//!
//! Every image in the pipeline is a [`BScan`]: a single-channel 2D array of
//! intensities in `[0, 1]`, tagged with the noise domain it belongs to.

pub mod bscan;
pub mod dataset;
pub mod error;
pub mod imgops;
pub mod io;
pub mod padding;
pub mod phantom;
pub mod sampler;
pub mod split;

pub use bscan::{BScan, Domain, MIN_SIDE};
pub use error::{DataError, Result};
pub use io::{load_bscan, save_bscan};
pub use padding::{pad_to_multiple, PadMode, Padding};
pub use phantom::{generate_phantom, PhantomConfig, PhantomSample};
pub use sampler::UnpairedIterator;
pub use split::{split_by_volume, DatasetSplit};
