//! Strided-conv / residual classifier with a pooled softmax head.

use ndarray::Array2;
use rand::Rng;

use crate::blocks::{ConvOp, ConvUnit, ResBlock, ResTape, UnitTape, INIT_STD};
use crate::error::Result;
use crate::layers::{self, ConvGeom, Tensor};
use crate::params::{Grads, ParamSet};
use crate::spec::DiscriminatorSpec;

#[derive(Debug, Clone)]
pub struct Discriminator {
    spec: DiscriminatorSpec,
    pub(crate) params: ParamSet,
    stages: Vec<(ConvUnit, Option<ResBlock>)>,
    head_w: usize,
    head_b: usize,
}

#[derive(Debug, Clone)]
pub struct DiscriminatorTape {
    stages: Vec<(UnitTape, Option<ResTape>)>,
    pooled: Vec<f64>,
    final_hw: (usize, usize),
    pub probs: Vec<f64>,
}

impl Discriminator {
    pub fn new<R: Rng + ?Sized>(spec: &DiscriminatorSpec, rng: &mut R) -> Result<Self> {
        spec.validate()?;
        let mut ps = ParamSet::default();
        let mut in_c = 1;
        let mut stages = Vec::new();
        for i in 1..=spec.n_downsample {
            let c = spec.stage_channels(i);
            let down = ConvUnit::new(&mut ps, rng, &format!("down{i}"), ConvOp::Regular(ConvGeom::down(spec.kernel)), in_c, c, true, true);
            let res = (spec.convs_per_resblock > 0)
                .then(|| ResBlock::new(&mut ps, rng, &format!("res{i}"), c, spec.kernel, spec.convs_per_resblock));
            stages.push((down, res));
            in_c = c;
        }
        let head_w = ps.add("head.weight", &[spec.n_classes, in_c], INIT_STD, rng);
        let head_b = ps.add("head.bias", &[spec.n_classes], 0.0, rng);
        Ok(Discriminator {
            spec: spec.clone(),
            params: ps,
            stages,
            head_w,
            head_b,
        })
    }

    pub fn spec(&self) -> &DiscriminatorSpec {
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

    fn run(&self, x: &Tensor, record: bool, mut trace: Option<&mut Vec<(String, Vec<usize>)>>) -> (Vec<f64>, Vec<f64>, DiscriminatorTape) {
        let ps = &self.params;
        let mut a = x.clone();
        let mut tapes = Vec::new();
        for (i, (down, res)) in self.stages.iter().enumerate() {
            let (y, td) = down.forward(ps, &a, record);
            if let Some(tr) = trace.as_deref_mut() {
                tr.push((format!("down-sampling {}", i + 1), y.shape().to_vec()));
            }
            a = y;
            let mut tr_res = None;
            if let Some(r) = res {
                let (y, t) = r.forward(ps, &a, record);
                if let Some(tr) = trace.as_deref_mut() {
                    tr.push((format!("residual block {}", i + 1), y.shape().to_vec()));
                }
                a = y;
                tr_res = t;
            }
            if let Some(td) = td {
                tapes.push((td, tr_res));
            }
        }
        let (_, fh, fw) = a.dim();
        let pooled = layers::global_avg_pool(&a);
        let logits = layers::linear_forward(&pooled, ps.get(self.head_w), ps.get(self.head_b));
        let probs = layers::softmax(&logits);
        if let Some(tr) = trace {
            tr.push(("average pooling".into(), vec![pooled.len()]));
            tr.push(("logits".into(), vec![logits.len()]));
        }
        let tape = DiscriminatorTape {
            stages: tapes,
            pooled,
            final_hw: (fh, fw),
            probs: probs.clone(),
        };
        (logits, probs, tape)
    }

    /// Class probabilities and the tape for backward.
    pub fn forward(&self, x: &Tensor) -> (Vec<f64>, DiscriminatorTape) {
        let (_, p, t) = self.run(x, true, None);
        (p, t)
    }

    pub fn probs(&self, x: &Tensor) -> Vec<f64> {
        self.run(x, false, None).1
    }

    pub fn probs_image(&self, img: &Array2<f64>) -> Result<Vec<f64>> {
        let (h, w) = img.dim();
        self.spec.check_input(h, w)?;
        Ok(self.probs(&img.clone().into_shape_with_order((1, h, w)).unwrap()))
    }

    pub fn logits(&self, x: &Tensor) -> Vec<f64> {
        self.run(x, false, None).0
    }

    /// Output shape `[c, h, w]` (or `[n]` for vectors) of every named layer.
    pub fn trace_shapes(&self, x: &Tensor) -> Vec<(String, Vec<usize>)> {
        let mut out = Vec::new();
        self.run(x, false, Some(&mut out));
        out
    }

    /// Backward from a gradient w.r.t. the logits. Returns the input gradient
    /// when requested.
    pub fn backward(&self, tape: &DiscriminatorTape, grad_logits: &[f64], grads: &mut Grads, need_input_grad: bool) -> Option<Tensor> {
        let ps = &self.params;
        let (hw, hb) = (self.head_w, self.head_b);
        let mut gw = std::mem::take(&mut grads.0[hw]);
        let gpooled = layers::linear_backward(&tape.pooled, ps.get(hw), grad_logits, &mut gw, grads.slot(hb));
        grads.0[hw] = gw;
        let (fh, fw) = tape.final_hw;
        let mut g = layers::global_avg_pool_backward(&gpooled, fh, fw);
        for (idx, ((down, res), (td, tr))) in self.stages.iter().zip(&tape.stages).enumerate().rev() {
            if let (Some(r), Some(tr)) = (res, tr) {
                g = r.backward(ps, tr, g, grads);
            }
            let need = need_input_grad || idx > 0;
            match down.backward(ps, td, g, grads, need) {
                Some(gx) => g = gx,
                None => return None,
            }
        }
        Some(g)
    }
}
