use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::numerics::ConvSpec;
use crate::signal::N_MELS;
use crate::skeleton::FRAME_DIMS;

pub const ENCODER_DILATIONS: [usize; 10] = [1, 3, 9, 27, 1, 3, 9, 27, 3, 3];
pub const DECODER_DILATIONS: [usize; 6] = [1, 3, 9, 27, 3, 3];
pub const ENCODER_CHANNELS: usize = 256;
pub const DECODER_CHANNELS: usize = 128;
/// Kernel size of every highway block convolution.
pub const BLOCK_KERNEL: usize = 3;

/// Network widths and dilation schedules.
#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct ModelConfig {
    pub skeleton_dim: usize,
    pub mel_bins: usize,
    pub encoder_channels: usize,
    pub decoder_channels: usize,
    pub encoder_dilations: Vec<usize>,
    pub decoder_dilations: Vec<usize>,
    /// 1×1 tanh layers between the decoder blocks and the output layer.
    pub post_layers: usize,
}

impl Default for ModelConfig {
    fn default() -> Self {
        Self {
            skeleton_dim: FRAME_DIMS,
            mel_bins: N_MELS,
            encoder_channels: ENCODER_CHANNELS,
            decoder_channels: DECODER_CHANNELS,
            encoder_dilations: ENCODER_DILATIONS.to_vec(),
            decoder_dilations: DECODER_DILATIONS.to_vec(),
            post_layers: 3,
        }
    }
}

/// Role of a convolution layer inside the network.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum LayerKind {
    Stem,
    Block { dilation: usize },
    Fuse,
    Post,
    Output,
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct LayerSpec {
    pub name: String,
    pub kind: LayerKind,
    pub conv: ConvSpec,
}

impl LayerSpec {
    pub fn weight_name(&self) -> String {
        format!("{}.weight", self.name)
    }

    pub fn bias_name(&self) -> String {
        format!("{}.bias", self.name)
    }
}

pub const SKELETON_ENCODER: &str = "skeleton_encoder";
pub const AUDIO_ENCODER: &str = "audio_encoder";
pub const DECODER: &str = "decoder";

pub(crate) fn stem_name(prefix: &str, i: usize) -> String {
    format!("{prefix}.stem.{i}")
}

pub(crate) fn block_name(prefix: &str, i: usize) -> String {
    format!("{prefix}.block.{i:02}")
}

impl ModelConfig {
    /// Same schedules at smaller widths, for tests and desk-scale runs.
    pub fn with_widths(encoder_channels: usize, decoder_channels: usize) -> Self {
        Self {
            encoder_channels,
            decoder_channels,
            ..Self::default()
        }
    }

    pub fn validate(&self) -> Result<()> {
        if self.skeleton_dim == 0 || self.mel_bins == 0 || self.decoder_channels == 0 {
            return Err(Error::InvalidArgument("model dimensions must be positive".into()));
        }
        if self.encoder_channels != 2 * self.decoder_channels {
            return Err(Error::InvalidArgument(format!(
                "encoder width {} must be twice the decoder width {}",
                self.encoder_channels, self.decoder_channels
            )));
        }
        if self
            .encoder_dilations
            .iter()
            .chain(&self.decoder_dilations)
            .any(|&d| d == 0)
        {
            return Err(Error::InvalidArgument("dilations must be positive".into()));
        }
        Ok(())
    }

    /// Frames of input history visible to one output frame, including the
    /// current one.
    pub fn receptive_field(&self) -> usize {
        let enc: usize = self.encoder_dilations.iter().sum();
        let dec: usize = self.decoder_dilations.iter().sum();
        1 + (BLOCK_KERNEL - 1) * (enc + dec)
    }

    fn encoder_layers(&self, prefix: &str, input_dim: usize) -> Result<Vec<LayerSpec>> {
        let c = self.encoder_channels;
        let mut layers = vec![LayerSpec {
            name: stem_name(prefix, 0),
            kind: LayerKind::Stem,
            conv: ConvSpec::pointwise(input_dim, c)?,
        }];
        for i in 1..3 {
            layers.push(LayerSpec {
                name: stem_name(prefix, i),
                kind: LayerKind::Stem,
                conv: ConvSpec::pointwise(c, c)?,
            });
        }
        for (i, &d) in self.encoder_dilations.iter().enumerate() {
            layers.push(LayerSpec {
                name: block_name(prefix, i),
                kind: LayerKind::Block { dilation: d },
                conv: ConvSpec::new(c, 2 * c, BLOCK_KERNEL, d)?,
            });
        }
        Ok(layers)
    }

    /// Every convolution layer in a fixed order.
    pub fn layers(&self) -> Result<Vec<LayerSpec>> {
        self.validate()?;
        let mut layers = self.encoder_layers(SKELETON_ENCODER, self.skeleton_dim)?;
        layers.extend(self.encoder_layers(AUDIO_ENCODER, self.mel_bins)?);
        let (e, c) = (self.encoder_channels, self.decoder_channels);
        for side in ["fuse_a", "fuse_b"] {
            layers.push(LayerSpec {
                name: format!("{DECODER}.{side}"),
                kind: LayerKind::Fuse,
                conv: ConvSpec::pointwise(e, c)?,
            });
        }
        for (i, &d) in self.decoder_dilations.iter().enumerate() {
            layers.push(LayerSpec {
                name: block_name(DECODER, i),
                kind: LayerKind::Block { dilation: d },
                conv: ConvSpec::new(c, 2 * c, BLOCK_KERNEL, d)?,
            });
        }
        for i in 0..self.post_layers {
            layers.push(LayerSpec {
                name: format!("{DECODER}.post.{i}"),
                kind: LayerKind::Post,
                conv: ConvSpec::pointwise(c, c)?,
            });
        }
        layers.push(LayerSpec {
            name: format!("{DECODER}.out"),
            kind: LayerKind::Output,
            conv: ConvSpec::pointwise(c, self.skeleton_dim)?,
        });
        Ok(layers)
    }
}
