//! Encoder / residual / decoder generator with skip concatenations.

use ndarray::Array2;
use rand::Rng;

use crate::blocks::{ConvOp, ConvUnit, ResBlock, ResTape, UnitTape};
use crate::error::Result;
use crate::layers::{self, ConvGeom, Tensor};
use crate::params::{Grads, ParamSet};
use crate::spec::{GeneratorSpec, UpsampleMode};

#[derive(Debug, Clone)]
pub struct Generator {
    spec: GeneratorSpec,
    pub(crate) params: ParamSet,
    initial: ConvUnit,
    down: Vec<ConvUnit>,
    res: Vec<ResBlock>,
    up: Vec<ConvUnit>,
    last: ConvUnit,
}

/// Everything the backward pass needs from one forward pass.
#[derive(Debug, Clone)]
pub struct GeneratorTape {
    initial: UnitTape,
    down: Vec<UnitTape>,
    res: Vec<ResTape>,
    /// Tape of the conv unit and the channel count of the main path.
    up: Vec<(UnitTape, usize)>,
    last: UnitTape,
}

impl Generator {
    pub fn new<R: Rng + ?Sized>(spec: &GeneratorSpec, rng: &mut R) -> Result<Self> {
        spec.validate()?;
        let mut ps = ParamSet::default();
        let k = spec.kernel;
        let b = spec.base_channels;
        let initial = ConvUnit::new(&mut ps, rng, "initial", ConvOp::Regular(ConvGeom::same(spec.initial_kernel)), 1, b, true, true);
        let down = (1..=spec.n_downsample)
            .map(|i| {
                ConvUnit::new(
                    &mut ps,
                    rng,
                    &format!("down{i}"),
                    ConvOp::Regular(ConvGeom::down(k)),
                    spec.down_channels(i - 1),
                    spec.down_channels(i),
                    true,
                    true,
                )
            })
            .collect();
        let bottleneck = spec.down_channels(spec.n_downsample);
        let res = (1..=spec.n_resblocks)
            .map(|i| ResBlock::new(&mut ps, rng, &format!("res{i}"), bottleneck, k, spec.convs_per_resblock))
            .collect();
        let up = (1..=spec.n_downsample)
            .map(|j| {
                let op = match spec.upsample_mode {
                    UpsampleMode::ResizeConv => ConvOp::Regular(ConvGeom::same(k)),
                    UpsampleMode::FractionalStride => ConvOp::Transposed(k),
                };
                ConvUnit::new(
                    &mut ps,
                    rng,
                    &format!("up{j}"),
                    op,
                    spec.up_in_channels(j),
                    spec.down_channels(spec.n_downsample - j),
                    true,
                    true,
                )
            })
            .collect();
        // Linear output; clipping happens only at inference.
        let last = ConvUnit::new(&mut ps, rng, "final", ConvOp::Regular(ConvGeom::same(k)), b, 1, false, false);
        Ok(Generator {
            spec: spec.clone(),
            params: ps,
            initial,
            down,
            res,
            up,
            last,
        })
    }

    pub fn spec(&self) -> &GeneratorSpec {
        &self.spec
    }

    pub fn params(&self) -> &ParamSet {
        &self.params
    }

    pub fn params_mut(&mut self) -> &mut ParamSet {
        &mut self.params
    }

    pub fn zero_grads(&self) -> Grads {
        self.params.zero_grads()
    }

    fn run(&self, x: &Tensor, record: bool, mut trace: Option<&mut Vec<(String, Tensor)>>) -> (Tensor, Option<GeneratorTape>) {
        let ps = &self.params;
        let mut log = |name: String, t: &Tensor| {
            if let Some(tr) = trace.as_deref_mut() {
                tr.push((name, t.clone()));
            }
        };
        let (mut a, t_init) = self.initial.forward(ps, x, record);
        log("initial convolution".into(), &a);
        let mut skips = Vec::with_capacity(self.down.len());
        let mut t_down = Vec::new();
        for (i, d) in self.down.iter().enumerate() {
            let (y, t) = d.forward(ps, &a, record);
            t_down.extend(t);
            log(format!("down-sampling {}", i + 1), &y);
            if self.spec.skip_connections {
                skips.push(y.clone());
            }
            a = y;
        }
        let mut t_res = Vec::new();
        for (i, r) in self.res.iter().enumerate() {
            let (y, t) = r.forward(ps, &a, record);
            t_res.extend(t);
            log(format!("residual block {}", i + 1), &y);
            a = y;
        }
        let mut t_up = Vec::new();
        for (j, u) in self.up.iter().enumerate() {
            let main_c = a.dim().0;
            let cat = match skips.pop() {
                Some(skip) => layers::concat_channels(&a, &skip),
                None => a,
            };
            let input = match self.spec.upsample_mode {
                UpsampleMode::ResizeConv => layers::upsample2x_forward(&cat),
                UpsampleMode::FractionalStride => cat,
            };
            let (y, t) = u.forward(ps, &input, record);
            if let Some(t) = t {
                t_up.push((t, main_c));
            }
            log(format!("up-sampling {}", j + 1), &y);
            a = y;
        }
        let (out, t_last) = self.last.forward(ps, &a, record);
        log("final convolution".into(), &out);
        let tape = record.then(|| GeneratorTape {
            initial: t_init.unwrap(),
            down: t_down,
            res: t_res,
            up: t_up,
            last: t_last.unwrap(),
        });
        (out, tape)
    }

    /// Forward pass on a `(1, h, w)` tensor, keeping what backward needs.
    pub fn forward(&self, x: &Tensor) -> (Tensor, GeneratorTape) {
        let (y, t) = self.run(x, true, None);
        (y, t.expect("recorded"))
    }

    /// Forward pass without a tape.
    pub fn infer(&self, x: &Tensor) -> Tensor {
        self.run(x, false, None).0
    }

    /// Forward pass returning the activation of every named layer.
    pub fn trace(&self, x: &Tensor) -> Vec<(String, Tensor)> {
        let mut out = Vec::new();
        self.run(x, false, Some(&mut out));
        out
    }

    pub fn infer_image(&self, img: &Array2<f64>) -> Result<Array2<f64>> {
        let (h, w) = img.dim();
        self.spec.check_input(h, w)?;
        let x = img.clone().into_shape_with_order((1, h, w)).expect("same element count");
        Ok(self.infer(&x).into_shape_with_order((h, w)).expect("single channel output"))
    }

    /// Accumulates parameter gradients into `grads` and returns the gradient
    /// w.r.t. the input.
    pub fn backward(&self, tape: &GeneratorTape, gy: Tensor, grads: &mut Grads) -> Tensor {
        let ps = &self.params;
        let mut g = self.last.backward(ps, &tape.last, gy, grads, true).unwrap();
        let n = self.down.len();
        let mut skip_grads: Vec<Option<Tensor>> = vec![None; n];
        for (j, (u, (t, main_c))) in self.up.iter().zip(&tape.up).enumerate().rev() {
            let gin = u.backward(ps, t, g, grads, true).unwrap();
            let gcat = match self.spec.upsample_mode {
                UpsampleMode::ResizeConv => layers::upsample2x_backward(&gin),
                UpsampleMode::FractionalStride => gin,
            };
            if self.spec.skip_connections {
                let (gmain, gskip) = layers::split_channels(&gcat, *main_c);
                // up stage j (0-based) consumed the output of down stage n-1-j
                skip_grads[n - 1 - j] = Some(gskip);
                g = gmain;
            } else {
                g = gcat;
            }
        }
        for (r, t) in self.res.iter().zip(&tape.res).rev() {
            g = r.backward(ps, t, g, grads);
        }
        for (i, (d, t)) in self.down.iter().zip(&tape.down).enumerate().rev() {
            if let Some(gs) = skip_grads[i].take() {
                g += &gs;
            }
            g = d.backward(ps, t, g, grads, true).unwrap();
        }
        self.initial.backward(ps, &tape.initial, g, grads, true).unwrap()
    }
}
