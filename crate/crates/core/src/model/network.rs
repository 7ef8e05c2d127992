//! Forward pass: highway blocks, the two encoders and the fusion decoder.
//!
//! All public entry points build a [`Graph`] so training and inference share
//! one code path.

use super::config::{block_name, stem_name, LayerSpec, AUDIO_ENCODER, DECODER, SKELETON_ENCODER};
use super::params::ModelParams;
use crate::error::{dim_err, Error, Result};
use crate::numerics::{Activation, ConvSpec, Graph, NodeId, Real, Tensor2D};

/// One causal dilated highway convolution block:
/// `out = tanh(H1)·relu(H2) + (1 − tanh(H1))·x` with `[H1; H2]` the causal
/// dilated convolution of `x` (`C → 2C`, kernel 3).
#[derive(Clone, Debug, PartialEq)]
pub struct CdhcBlock<T: Real = f32> {
    pub dilation: usize,
    pub weight: Tensor2D<T>,
    pub bias: Tensor2D<T>,
}

impl<T: Real> CdhcBlock<T> {
    pub fn new(channels: usize, dilation: usize, weight: Tensor2D<T>, bias: Tensor2D<T>) -> Result<Self> {
        let spec = ConvSpec::new(channels, 2 * channels, 3, dilation)?;
        let (wo, wi) = spec.weight_shape();
        weight.ensure_shape(wo, wi, "block weight")?;
        bias.ensure_shape(wo, 1, "block bias")?;
        Ok(Self { dilation, weight, bias })
    }

    pub fn zeros(channels: usize, dilation: usize) -> Result<Self> {
        Self::new(
            channels,
            dilation,
            Tensor2D::zeros(2 * channels, 3 * channels),
            Tensor2D::zeros(2 * channels, 1),
        )
    }

    pub fn channels(&self) -> usize {
        self.weight.channels() / 2
    }

    pub fn spec(&self) -> ConvSpec {
        ConvSpec {
            in_channels: self.channels(),
            out_channels: 2 * self.channels(),
            kernel_size: 3,
            dilation: self.dilation,
        }
    }
}

/// Highway combination on a tape, given the block convolution output.
pub(crate) fn highway<T: Real>(g: &mut Graph<'_, T>, conv: NodeId, input: NodeId, channels: usize) -> Result<NodeId> {
    let h1 = g.slice_channels(conv, 0, channels)?;
    let h2 = g.slice_channels(conv, channels, channels)?;
    let gate = g.activate(h1, Activation::Tanh)?;
    let transform = g.activate(h2, Activation::Relu)?;
    let carried = g.mul(gate, transform)?;
    let keep = g.one_minus(gate)?;
    let passed = g.mul(keep, input)?;
    g.add(carried, passed)
}

/// Scalar form of [`highway`] with identical rounding.
#[inline]
pub(crate) fn highway_scalar<T: Real>(h1: T, h2: T, x: T) -> T {
    let gate = Activation::Tanh.apply(h1);
    let transform = Activation::Relu.apply(h2);
    gate * transform + (T::one() - gate) * x
}

/// Scalar decoder fusion: `σ(H1)·tanh(H2)`.
#[inline]
pub(crate) fn fuse_scalar<T: Real>(h1: T, h2: T) -> T {
    Activation::Sigmoid.apply(h1) * Activation::Tanh.apply(h2)
}

struct Net<'a, 'p, T: Real> {
    params: &'p ModelParams<T>,
    g: &'a mut Graph<'p, T>,
}

impl<'p, T: Real> Net<'_, 'p, T> {
    fn layer(&self, name: &str) -> Result<LayerSpec> {
        self.params
            .layer(name)
            .cloned()
            .ok_or_else(|| Error::InvalidArgument(format!("no layer `{name}`")))
    }

    fn conv(&mut self, name: &str, input: NodeId) -> Result<NodeId> {
        let layer = self.layer(name)?;
        let w = self.g.param(&layer.weight_name(), self.params.weight(&layer)?);
        let b = self.g.param(&layer.bias_name(), self.params.bias(&layer)?);
        self.g.conv(input, w, b, layer.conv)
    }

    fn block(&mut self, name: &str, input: NodeId) -> Result<NodeId> {
        let channels = self.layer(name)?.conv.in_channels;
        let h = self.conv(name, input)?;
        highway(self.g, h, input, channels)
    }

    fn encoder(&mut self, prefix: &str, input: NodeId) -> Result<NodeId> {
        let mut x = input;
        for i in 0..3 {
            x = self.conv(&stem_name(prefix, i), x)?;
        }
        for i in 0..self.params.config().encoder_dilations.len() {
            x = self.block(&block_name(prefix, i), x)?;
        }
        Ok(x)
    }

    fn decoder(&mut self, e_skel: NodeId, e_audio: NodeId) -> Result<NodeId> {
        let c = self.params.config().decoder_channels;
        let a = self.conv(&format!("{DECODER}.fuse_a"), e_skel)?;
        let b = self.conv(&format!("{DECODER}.fuse_b"), e_skel)?;
        let audio_a = self.g.slice_channels(e_audio, 0, c)?;
        let audio_b = self.g.slice_channels(e_audio, c, c)?;
        let h1 = self.g.add(a, audio_a)?;
        let h2 = self.g.add(b, audio_b)?;
        let s = self.g.activate(h1, Activation::Sigmoid)?;
        let t = self.g.activate(h2, Activation::Tanh)?;
        let mut x = self.g.mul(s, t)?;
        for i in 0..self.params.config().decoder_dilations.len() {
            x = self.block(&block_name(DECODER, i), x)?;
        }
        for i in 0..self.params.config().post_layers {
            let y = self.conv(&format!("{DECODER}.post.{i}"), x)?;
            x = self.g.activate(y, Activation::Tanh)?;
        }
        let y = self.conv(&format!("{DECODER}.out"), x)?;
        self.g.activate(y, Activation::Sigmoid)
    }
}

fn check_input<T: Real>(x: &Tensor2D<T>, channels: usize, what: &str) -> Result<()> {
    if x.channels() != channels {
        return Err(dim_err!("{what} needs {channels} channels, got {}", x.channels()));
    }
    Ok(())
}

pub fn encode_skeleton_graph<'p, T: Real>(
    params: &'p ModelParams<T>,
    g: &mut Graph<'p, T>,
    skeleton: NodeId,
) -> Result<NodeId> {
    check_input(g.value(skeleton), params.config().skeleton_dim, "skeleton encoder")?;
    Net { params, g }.encoder(SKELETON_ENCODER, skeleton)
}

pub fn encode_audio_graph<'p, T: Real>(
    params: &'p ModelParams<T>,
    g: &mut Graph<'p, T>,
    mel: NodeId,
) -> Result<NodeId> {
    check_input(g.value(mel), params.config().mel_bins, "audio encoder")?;
    Net { params, g }.encoder(AUDIO_ENCODER, mel)
}

pub fn decode_graph<'p, T: Real>(
    params: &'p ModelParams<T>,
    g: &mut Graph<'p, T>,
    e_skel: NodeId,
    e_audio: NodeId,
) -> Result<NodeId> {
    let c = params.config().encoder_channels;
    check_input(g.value(e_skel), c, "decoder skeleton encoding")?;
    check_input(g.value(e_audio), c, "decoder audio encoding")?;
    if g.value(e_skel).frames() != g.value(e_audio).frames() {
        return Err(dim_err!(
            "encodings have {} and {} frames",
            g.value(e_skel).frames(),
            g.value(e_audio).frames()
        ));
    }
    Net { params, g }.decoder(e_skel, e_audio)
}

/// Records the full model on `g` and returns the prediction node.
pub fn forward_graph<'p, T: Real>(
    params: &'p ModelParams<T>,
    g: &mut Graph<'p, T>,
    skeleton: NodeId,
    mel: NodeId,
) -> Result<NodeId> {
    let (ts, tm) = (g.value(skeleton).frames(), g.value(mel).frames());
    if ts != tm {
        return Err(dim_err!("skeleton has {ts} frames, mel has {tm}"));
    }
    let es = encode_skeleton_graph(params, g, skeleton)?;
    let ea = encode_audio_graph(params, g, mel)?;
    decode_graph(params, g, es, ea)
}

pub fn cdhc_forward<T: Real>(block: &CdhcBlock<T>, input: &Tensor2D<T>) -> Result<Tensor2D<T>> {
    check_input(input, block.channels(), "highway block")?;
    let mut g = Graph::new();
    let x = g.input_ref(input);
    let w = g.param("w", &block.weight);
    let b = g.param("b", &block.bias);
    let h = g.conv(x, w, b, block.spec())?;
    let out = highway(&mut g, h, x, block.channels())?;
    Ok(g.value(out).clone())
}

pub fn encode_skeleton<T: Real>(params: &ModelParams<T>, skeleton: &Tensor2D<T>) -> Result<Tensor2D<T>> {
    let mut g = Graph::new();
    let x = g.input_ref(skeleton);
    let out = encode_skeleton_graph(params, &mut g, x)?;
    Ok(g.value(out).clone())
}

pub fn encode_audio<T: Real>(params: &ModelParams<T>, mel: &Tensor2D<T>) -> Result<Tensor2D<T>> {
    let mut g = Graph::new();
    let x = g.input_ref(mel);
    let out = encode_audio_graph(params, &mut g, x)?;
    Ok(g.value(out).clone())
}

pub fn decode<T: Real>(params: &ModelParams<T>, e_skel: &Tensor2D<T>, e_audio: &Tensor2D<T>) -> Result<Tensor2D<T>> {
    let mut g = Graph::new();
    let s = g.input_ref(e_skel);
    let a = g.input_ref(e_audio);
    let out = decode_graph(params, &mut g, s, a)?;
    Ok(g.value(out).clone())
}

/// Column `t` of the result predicts skeleton frame `t + 1` from frames
/// `0..=t` of both inputs.
pub fn teacher_forced_forward<T: Real>(
    params: &ModelParams<T>,
    skeleton: &Tensor2D<T>,
    mel: &Tensor2D<T>,
) -> Result<Tensor2D<T>> {
    let mut g = Graph::new();
    let s = g.input_ref(skeleton);
    let m = g.input_ref(mel);
    let out = forward_graph(params, &mut g, s, m)?;
    Ok(g.value(out).clone())
}
