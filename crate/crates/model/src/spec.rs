//! Declarative network configurations and their per-layer shape tables.

use serde::{Deserialize, Serialize};

use crate::error::{ModelError, Result};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize, Default)]
#[serde(rename_all = "snake_case")]
pub enum Norm {
    #[default]
    Instance,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize, Default)]
#[serde(rename_all = "snake_case")]
pub enum Activation {
    #[default]
    Relu,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize, Default)]
#[serde(rename_all = "snake_case")]
pub enum UpsampleMode {
    /// Bilinear x2 up-scaling followed by a padded convolution.
    #[default]
    ResizeConv,
    /// Transposed convolution with stride 2.
    FractionalStride,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize, Default)]
#[serde(rename_all = "snake_case")]
pub enum Head {
    #[default]
    GlobalAveragePoolThenLinear,
}

/// One row of a layer table.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct LayerShape {
    pub name: String,
    pub kind: &'static str,
    pub properties: String,
    /// `(height, width, channels)`; a pooled vector reports `(1, 1, n)`.
    pub output: (usize, usize, usize),
}

impl LayerShape {
    /// Output size formatted like `64x64x128`, or just `1024` for vectors.
    pub fn output_label(&self) -> String {
        match self.output {
            (1, 1, c) if self.kind == "per channel averaging" || self.kind == "fully connected" => c.to_string(),
            (h, w, c) => format!("{h}x{w}x{c}"),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct GeneratorSpec {
    pub base_channels: usize,
    pub n_downsample: usize,
    pub n_resblocks: usize,
    pub convs_per_resblock: usize,
    pub initial_kernel: usize,
    pub kernel: usize,
    pub norm: Norm,
    pub activation: Activation,
    pub skip_connections: bool,
    pub upsample_mode: UpsampleMode,
}

impl Default for GeneratorSpec {
    fn default() -> Self {
        GeneratorSpec {
            base_channels: 16,
            n_downsample: 3,
            n_resblocks: 6,
            convs_per_resblock: 3,
            initial_kernel: 7,
            kernel: 3,
            norm: Norm::Instance,
            activation: Activation::Relu,
            skip_connections: true,
            upsample_mode: UpsampleMode::ResizeConv,
        }
    }
}

impl GeneratorSpec {
    /// Small configuration used for desk-scale runs on 64x64 inputs.
    pub fn toy() -> Self {
        GeneratorSpec {
            base_channels: 8,
            n_downsample: 2,
            n_resblocks: 2,
            ..GeneratorSpec::default()
        }
    }

    pub fn validate(&self) -> Result<()> {
        let odd = |k: usize| k % 2 == 1 && k >= 1;
        if self.base_channels == 0 {
            return Err(ModelError::Config("generator base_channels must be >= 1".into()));
        }
        if self.convs_per_resblock == 0 && self.n_resblocks > 0 {
            return Err(ModelError::Config("residual blocks need at least one convolution".into()));
        }
        if !odd(self.initial_kernel) || !odd(self.kernel) {
            return Err(ModelError::Config(format!(
                "kernel sizes must be odd, got {} and {}",
                self.initial_kernel, self.kernel
            )));
        }
        if self.n_downsample > 10 {
            return Err(ModelError::Config(format!("n_downsample {} is unreasonably deep", self.n_downsample)));
        }
        Ok(())
    }

    /// Required divisor of input height and width.
    pub fn divisor(&self) -> usize {
        1 << self.n_downsample
    }

    pub fn check_input(&self, h: usize, w: usize) -> Result<()> {
        let d = self.divisor();
        if h % d != 0 || w % d != 0 || h == 0 || w == 0 {
            return Err(ModelError::Shape(format!(
                "generator input {h}x{w} is not divisible by {d} (2^{})",
                self.n_downsample
            )));
        }
        Ok(())
    }

    pub fn down_channels(&self, stage: usize) -> usize {
        self.base_channels << stage
    }

    /// Names of every layer whose activations can be inspected, in order.
    pub fn layer_names(&self) -> Vec<String> {
        self.layer_shapes(self.divisor(), self.divisor())
            .map(|t| t.into_iter().map(|l| l.name).collect())
            .unwrap_or_default()
    }

    pub fn layer_shapes(&self, h: usize, w: usize) -> Result<Vec<LayerShape>> {
        self.validate()?;
        self.check_input(h, w)?;
        let mut rows = Vec::new();
        let b = self.base_channels;
        let k = self.kernel;
        rows.push(LayerShape {
            name: "initial convolution".into(),
            kind: "convolution",
            properties: format!("kernel={0}x{0}x{b}, stride=1", self.initial_kernel),
            output: (h, w, b),
        });
        for i in 1..=self.n_downsample {
            let c = self.down_channels(i);
            rows.push(LayerShape {
                name: format!("down-sampling {i}"),
                kind: "strided convolution",
                properties: format!("kernel={k}x{k}x{c}, stride=2"),
                output: (h >> i, w >> i, c),
            });
        }
        let (bh, bw, bc) = (h >> self.n_downsample, w >> self.n_downsample, self.down_channels(self.n_downsample));
        for i in 1..=self.n_resblocks {
            rows.push(LayerShape {
                name: format!("residual block {i}"),
                kind: "residual block",
                properties: format!("convolutions={}, kernel={k}x{k}x{bc}, stride=1", self.convs_per_resblock),
                output: (bh, bw, bc),
            });
        }
        for j in 1..=self.n_downsample {
            let level = self.n_downsample - j;
            let c = self.down_channels(level);
            let (kind, props) = match self.upsample_mode {
                UpsampleMode::ResizeConv => ("bilinear up-scaling + convolution", format!("kernel={k}x{k}x{c}, scale=2")),
                UpsampleMode::FractionalStride => ("fractional-strided convolution", format!("kernel={k}x{k}x{c}, stride=1/2")),
            };
            rows.push(LayerShape {
                name: format!("up-sampling {j}"),
                kind,
                properties: props,
                output: (h >> level, w >> level, c),
            });
        }
        rows.push(LayerShape {
            name: "final convolution".into(),
            kind: "convolution",
            properties: format!("kernel={k}x{k}x1, stride=1"),
            output: (h, w, 1),
        });
        Ok(rows)
    }

    /// Input channel count of up-sampling stage `j` (1-based).
    pub(crate) fn up_in_channels(&self, j: usize) -> usize {
        let prev = if j == 1 {
            self.down_channels(self.n_downsample)
        } else {
            self.down_channels(self.n_downsample - j + 1)
        };
        let skip = if self.skip_connections {
            self.down_channels(self.n_downsample + 1 - j)
        } else {
            0
        };
        prev + skip
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct DiscriminatorSpec {
    pub base_channels: usize,
    pub n_downsample: usize,
    pub convs_per_resblock: usize,
    pub kernel: usize,
    pub n_classes: usize,
    pub head: Head,
}

impl Default for DiscriminatorSpec {
    fn default() -> Self {
        DiscriminatorSpec {
            base_channels: 16,
            n_downsample: 7,
            convs_per_resblock: 2,
            kernel: 3,
            n_classes: 3,
            head: Head::GlobalAveragePoolThenLinear,
        }
    }
}

impl DiscriminatorSpec {
    pub fn toy() -> Self {
        DiscriminatorSpec {
            base_channels: 8,
            n_downsample: 4,
            ..DiscriminatorSpec::default()
        }
    }

    /// Same topology with a two-class (real, fake) head.
    pub fn binary(&self) -> Self {
        DiscriminatorSpec {
            n_classes: 2,
            ..self.clone()
        }
    }

    pub fn validate(&self) -> Result<()> {
        if self.base_channels == 0 || self.n_downsample == 0 {
            return Err(ModelError::Config("discriminator needs base_channels >= 1 and n_downsample >= 1".into()));
        }
        if self.kernel % 2 == 0 {
            return Err(ModelError::Config(format!("kernel size must be odd, got {}", self.kernel)));
        }
        if self.n_classes < 2 {
            return Err(ModelError::Config(format!("need at least 2 classes, got {}", self.n_classes)));
        }
        if self.n_downsample > 12 {
            return Err(ModelError::Config(format!("n_downsample {} is unreasonably deep", self.n_downsample)));
        }
        Ok(())
    }

    pub fn stage_channels(&self, stage: usize) -> usize {
        self.base_channels << (stage - 1)
    }

    pub fn check_input(&self, h: usize, w: usize) -> Result<()> {
        let min = 1usize << self.n_downsample;
        if h < min || w < min {
            return Err(ModelError::Shape(format!(
                "discriminator input {h}x{w} is smaller than 2^{} = {min}",
                self.n_downsample
            )));
        }
        Ok(())
    }

    pub fn layer_shapes(&self, h: usize, w: usize) -> Result<Vec<LayerShape>> {
        self.validate()?;
        self.check_input(h, w)?;
        let k = self.kernel;
        let mut rows = Vec::new();
        let (mut ch, mut cw) = (h, w);
        for i in 1..=self.n_downsample {
            let c = self.stage_channels(i);
            ch = ch.div_ceil(2);
            cw = cw.div_ceil(2);
            rows.push(LayerShape {
                name: format!("down-sampling {i}"),
                kind: "strided convolution",
                properties: format!("kernel={k}x{k}x{c}, stride=2"),
                output: (ch, cw, c),
            });
            if self.convs_per_resblock > 0 {
                rows.push(LayerShape {
                    name: format!("residual block {i}"),
                    kind: "residual block",
                    properties: format!("convolutions={}, kernel={k}x{k}x{c}, stride=1", self.convs_per_resblock),
                    output: (ch, cw, c),
                });
            }
        }
        let c = self.stage_channels(self.n_downsample);
        rows.push(LayerShape {
            name: "average pooling".into(),
            kind: "per channel averaging",
            properties: String::new(),
            output: (1, 1, c),
        });
        rows.push(LayerShape {
            name: "logits".into(),
            kind: "fully connected",
            properties: String::new(),
            output: (1, 1, self.n_classes),
        });
        Ok(rows)
    }
}
