use ndarray::{s, Array2};
use serde::{Deserialize, Serialize};

use crate::bscan::BScan;
use crate::error::{DataError, Result};
use crate::imgops::reflect_index;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum PadMode {
    #[default]
    Reflect,
    Zero,
}

/// Rows/columns added on each side by [`pad_to_multiple`].
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
pub struct Padding {
    pub top: usize,
    pub bottom: usize,
    pub left: usize,
    pub right: usize,
}

impl Padding {
    pub fn is_empty(&self) -> bool {
        *self == Padding::default()
    }

    /// Removes the padding again.
    pub fn crop(&self, img: &BScan) -> Result<BScan> {
        let (h, w) = img.dim();
        if self.top + self.bottom >= h || self.left + self.right >= w {
            return Err(DataError::InvalidImage(format!(
                "padding {self:?} does not fit a {h}x{w} image"
            )));
        }
        let px = img
            .pixels()
            .slice(s![self.top..h - self.bottom, self.left..w - self.right])
            .to_owned();
        BScan::new(px, img.domain(), img.source_id())
    }
}

/// Pads so both sides become the smallest multiple of `multiple` that is not
/// smaller than the input; the excess is split evenly (extra row/column at
/// the bottom/right).
pub fn pad_to_multiple(img: &BScan, multiple: usize, mode: PadMode) -> Result<(BScan, Padding)> {
    if multiple == 0 {
        return Err(DataError::Config("padding multiple must be >= 1".into()));
    }
    let (h, w) = img.dim();
    let th = h.div_ceil(multiple) * multiple;
    let tw = w.div_ceil(multiple) * multiple;
    let pad = Padding {
        top: (th - h) / 2,
        bottom: (th - h) - (th - h) / 2,
        left: (tw - w) / 2,
        right: (tw - w) - (tw - w) / 2,
    };
    if pad.is_empty() {
        return Ok((img.clone(), pad));
    }
    let src = img.pixels();
    let out = Array2::from_shape_fn((th, tw), |(y, x)| {
        let sy = y as isize - pad.top as isize;
        let sx = x as isize - pad.left as isize;
        match mode {
            PadMode::Reflect => src[[reflect_index(sy, h), reflect_index(sx, w)]],
            PadMode::Zero => {
                if sy < 0 || sx < 0 || sy >= h as isize || sx >= w as isize {
                    0.0
                } else {
                    src[[sy as usize, sx as usize]]
                }
            }
        }
    });
    Ok((BScan::new(out, img.domain(), img.source_id())?, pad))
}
