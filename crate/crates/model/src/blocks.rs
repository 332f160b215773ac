//! Conv / norm / activation units and residual blocks with explicit tapes.

use rand::Rng;

use crate::layers::{self, ConvGeom, NormCache, Tensor};
use crate::params::{Grads, ParamSet};

/// Standard deviation of the initial convolution weights.
pub const INIT_STD: f64 = 0.02;

#[derive(Debug, Clone, Copy, PartialEq)]
pub(crate) enum ConvOp {
    Regular(ConvGeom),
    /// Stride-2 transposed convolution with the given kernel size.
    Transposed(usize),
}

/// `conv -> [instance norm] -> [relu]`, optionally with a bias (only used
/// where no normalisation follows, since the norm would cancel it).
#[derive(Debug, Clone)]
pub(crate) struct ConvUnit {
    pub op: ConvOp,
    pub in_c: usize,
    pub out_c: usize,
    pub weight: usize,
    pub bias: Option<usize>,
    pub norm: bool,
    pub relu: bool,
}

#[derive(Debug, Clone)]
pub(crate) struct UnitTape {
    input: Tensor,
    norm: Option<NormCache>,
    output: Tensor,
}

impl ConvUnit {
    #[allow(clippy::too_many_arguments)]
    pub fn new<R: Rng + ?Sized>(
        ps: &mut ParamSet,
        rng: &mut R,
        name: &str,
        op: ConvOp,
        in_c: usize,
        out_c: usize,
        norm: bool,
        relu: bool,
    ) -> Self {
        let k = match op {
            ConvOp::Regular(g) => g.k,
            ConvOp::Transposed(k) => k,
        };
        let shape = match op {
            ConvOp::Regular(_) => [out_c, in_c, k, k],
            ConvOp::Transposed(_) => [in_c, out_c, k, k],
        };
        let weight = ps.add(format!("{name}.weight"), &shape, INIT_STD, rng);
        let bias = (!norm).then(|| ps.add(format!("{name}.bias"), &[out_c], 0.0, rng));
        ConvUnit {
            op,
            in_c,
            out_c,
            weight,
            bias,
            norm,
            relu,
        }
    }

    pub fn forward(&self, ps: &ParamSet, x: &Tensor, record: bool) -> (Tensor, Option<UnitTape>) {
        debug_assert_eq!(x.dim().0, self.in_c, "channel mismatch");
        let w = ps.get(self.weight);
        let b = self.bias.map(|i| ps.get(i));
        let mut y = match self.op {
            ConvOp::Regular(g) => layers::conv2d_forward(x, w, b, self.out_c, g),
            ConvOp::Transposed(k) => layers::conv_transpose_forward(x, w, b, self.out_c, k),
        };
        let mut norm = None;
        if self.norm {
            let (n, cache) = layers::instance_norm_forward(&y);
            y = n;
            norm = record.then_some(cache);
        }
        if self.relu {
            layers::relu_inplace(&mut y);
        }
        let tape = record.then(|| UnitTape {
            input: x.clone(),
            norm,
            output: y.clone(),
        });
        (y, tape)
    }

    pub fn backward(&self, ps: &ParamSet, tape: &UnitTape, mut gy: Tensor, grads: &mut Grads, need_input_grad: bool) -> Option<Tensor> {
        if self.relu {
            layers::relu_backward(&tape.output, &mut gy);
        }
        if let Some(cache) = &tape.norm {
            gy = layers::instance_norm_backward(cache, &gy);
        }
        if let Some(b) = self.bias {
            for (gb, plane) in grads.slot(b).iter_mut().zip(gy.outer_iter()) {
                *gb += plane.sum();
            }
        }
        let w = ps.get(self.weight);
        match self.op {
            ConvOp::Regular(g) => layers::conv2d_backward(&tape.input, w, &gy, g, grads.slot(self.weight), None, need_input_grad),
            ConvOp::Transposed(k) => Some(layers::conv_transpose_backward(&tape.input, w, &gy, k, grads.slot(self.weight), None)),
        }
    }
}

/// `y = x + f(x)` where `f` is a chain of conv units; the last unit has no
/// activation.
#[derive(Debug, Clone)]
pub(crate) struct ResBlock {
    pub units: Vec<ConvUnit>,
}

pub(crate) type ResTape = Vec<UnitTape>;

impl ResBlock {
    pub fn new<R: Rng + ?Sized>(ps: &mut ParamSet, rng: &mut R, name: &str, channels: usize, k: usize, n_convs: usize) -> Self {
        let units = (1..=n_convs)
            .map(|i| {
                ConvUnit::new(
                    ps,
                    rng,
                    &format!("{name}.conv{i}"),
                    ConvOp::Regular(ConvGeom::same(k)),
                    channels,
                    channels,
                    true,
                    i < n_convs,
                )
            })
            .collect();
        ResBlock { units }
    }

    pub fn forward(&self, ps: &ParamSet, x: &Tensor, record: bool) -> (Tensor, Option<ResTape>) {
        let mut h = x.clone();
        let mut tapes = record.then(Vec::new);
        for u in &self.units {
            let (y, t) = u.forward(ps, &h, record);
            if let (Some(ts), Some(t)) = (tapes.as_mut(), t) {
                ts.push(t);
            }
            h = y;
        }
        h += x;
        (h, tapes)
    }

    pub fn backward(&self, ps: &ParamSet, tape: &ResTape, gy: Tensor, grads: &mut Grads) -> Tensor {
        let mut g = gy.clone();
        for (u, t) in self.units.iter().zip(tape).rev() {
            g = u.backward(ps, t, g, grads, true).expect("input gradient requested");
        }
        g + gy
    }
}
