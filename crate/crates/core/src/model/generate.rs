//! Autoregressive generation.
//!
//! [`generate`] is the reference loop: at every step it re-runs the whole
//! model on the prefix generated so far. [`StreamingModel`] keeps per-layer
//! histories and evaluates one new column per step; it accumulates in the
//! same order as the full kernels and is bit-identical to the reference.

use super::config::{block_name, stem_name, LayerSpec, AUDIO_ENCODER, DECODER, SKELETON_ENCODER};
use super::network::{fuse_scalar, highway_scalar, teacher_forced_forward};
use super::params::ModelParams;
use crate::error::{dim_err, Error, Result};
use crate::numerics::ops::conv1d_causal_column;
use crate::numerics::{Activation, Real, Tensor2D};

fn check_seed<T: Real>(params: &ModelParams<T>, seed: &[T], mel: &Tensor2D<T>) -> Result<()> {
    let cfg = params.config();
    if seed.len() != cfg.skeleton_dim {
        return Err(dim_err!(
            "seed pose has {} values, want {}",
            seed.len(),
            cfg.skeleton_dim
        ));
    }
    if mel.channels() != cfg.mel_bins {
        return Err(dim_err!("mel has {} bins, want {}", mel.channels(), cfg.mel_bins));
    }
    if seed.iter().any(|v| !v.is_finite()) {
        return Err(Error::NonFinite("seed pose".into()));
    }
    if seed.iter().any(|&v| v < T::zero() || v > T::one()) {
        return Err(Error::InvalidArgument("seed pose must be normalized to [0, 1]".into()));
    }
    Ok(())
}

/// Output of a [`rollout`]: the fed sequence and the one-step predictions.
#[derive(Clone, Debug, PartialEq)]
pub struct Rollout<T: Real = f32> {
    /// `D × T`; column 0 is the seed.
    pub sequence: Tensor2D<T>,
    /// `D × (T − 1)`; column `k` is the prediction for frame `k + 1`.
    pub predictions: Option<Tensor2D<T>>,
}

/// Reference autoregressive loop.
///
/// At step `k ≥ 1` the model runs on the first `k` sequence frames and the
/// first `k` mel frames; its last column is the prediction for frame `k`,
/// and `feed(k, prediction)` decides what is appended as frame `k`.
pub fn rollout<T: Real>(
    params: &ModelParams<T>,
    seed: &[T],
    mel: &Tensor2D<T>,
    mut feed: impl FnMut(usize, Vec<T>) -> Vec<T>,
) -> Result<Rollout<T>> {
    check_seed(params, seed, mel)?;
    let frames = mel.frames();
    let mut sequence = Tensor2D::new(seed.len(), 1, seed.to_vec())?;
    let mut predictions: Vec<Vec<T>> = Vec::with_capacity(frames.saturating_sub(1));
    for k in 1..frames {
        let out = teacher_forced_forward(params, &sequence, &mel.slice_frames(0, k)?)?;
        let pred = out.column(k - 1);
        predictions.push(pred.clone());
        sequence.push_column(&feed(k, pred))?;
    }
    let predictions = if predictions.is_empty() {
        None
    } else {
        Some(Tensor2D::from_columns(&predictions)?)
    };
    Ok(Rollout { sequence, predictions })
}

/// Generates `T = mel.frames()` skeleton frames starting from `seed`,
/// re-running the model on the full prefix at every step.
pub fn generate<T: Real>(params: &ModelParams<T>, seed: &[T], mel: &Tensor2D<T>) -> Result<Tensor2D<T>> {
    Ok(rollout(params, seed, mel, |_, pred| pred)?.sequence)
}

/// Same result as [`generate`], one column per step.
pub fn generate_streaming<T: Real>(params: &ModelParams<T>, seed: &[T], mel: &Tensor2D<T>) -> Result<Tensor2D<T>> {
    check_seed(params, seed, mel)?;
    let mut stream = StreamingModel::new(params)?;
    let mut columns = vec![seed.to_vec()];
    for k in 1..mel.frames() {
        let pred = stream.step(&columns[k - 1], &mel.column(k - 1))?;
        columns.push(pred);
    }
    Tensor2D::from_columns(&columns)
}

struct BlockState<'p, T: Real> {
    layer: &'p LayerSpec,
    weight: &'p Tensor2D<T>,
    bias: &'p Tensor2D<T>,
    history: Vec<Vec<T>>,
}

struct Pointwise<'p, T: Real> {
    layer: &'p LayerSpec,
    weight: &'p Tensor2D<T>,
    bias: &'p Tensor2D<T>,
}

impl<'p, T: Real> Pointwise<'p, T> {
    fn new(params: &'p ModelParams<T>, name: &str) -> Result<Self> {
        let layer = params
            .layer(name)
            .ok_or_else(|| Error::InvalidArgument(format!("no layer `{name}`")))?;
        Ok(Self {
            layer,
            weight: params.weight(layer)?,
            bias: params.bias(layer)?,
        })
    }

    fn apply(&self, x: Vec<T>) -> Result<Vec<T>> {
        conv1d_causal_column(std::slice::from_ref(&x), &self.layer.conv, self.weight, self.bias)
    }
}

impl<'p, T: Real> BlockState<'p, T> {
    fn new(params: &'p ModelParams<T>, name: &str) -> Result<Self> {
        let pw = Pointwise::new(params, name)?;
        Ok(Self {
            layer: pw.layer,
            weight: pw.weight,
            bias: pw.bias,
            history: Vec::new(),
        })
    }

    fn apply(&mut self, x: Vec<T>) -> Result<Vec<T>> {
        self.history.push(x);
        let h = conv1d_causal_column(&self.history, &self.layer.conv, self.weight, self.bias)?;
        let x = self.history.last().expect("just pushed");
        let c = x.len();
        Ok((0..c).map(|i| highway_scalar(h[i], h[c + i], x[i])).collect())
    }
}

struct EncoderState<'p, T: Real> {
    stem: Vec<Pointwise<'p, T>>,
    blocks: Vec<BlockState<'p, T>>,
}

impl<'p, T: Real> EncoderState<'p, T> {
    fn new(params: &'p ModelParams<T>, prefix: &str, n_blocks: usize) -> Result<Self> {
        Ok(Self {
            stem: (0..3)
                .map(|i| Pointwise::new(params, &stem_name(prefix, i)))
                .collect::<Result<_>>()?,
            blocks: (0..n_blocks)
                .map(|i| BlockState::new(params, &block_name(prefix, i)))
                .collect::<Result<_>>()?,
        })
    }

    fn step(&mut self, mut x: Vec<T>) -> Result<Vec<T>> {
        for layer in &self.stem {
            x = layer.apply(x)?;
        }
        for block in &mut self.blocks {
            x = block.apply(x)?;
        }
        Ok(x)
    }
}

/// Incremental evaluator: feed one (skeleton, mel) column per call and get
/// the prediction for the next skeleton frame.
pub struct StreamingModel<'p, T: Real = f32> {
    skeleton: EncoderState<'p, T>,
    audio: EncoderState<'p, T>,
    fuse_a: Pointwise<'p, T>,
    fuse_b: Pointwise<'p, T>,
    blocks: Vec<BlockState<'p, T>>,
    post: Vec<Pointwise<'p, T>>,
    out: Pointwise<'p, T>,
    decoder_channels: usize,
}

impl<'p, T: Real> StreamingModel<'p, T> {
    pub fn new(params: &'p ModelParams<T>) -> Result<Self> {
        let cfg = params.config();
        Ok(Self {
            skeleton: EncoderState::new(params, SKELETON_ENCODER, cfg.encoder_dilations.len())?,
            audio: EncoderState::new(params, AUDIO_ENCODER, cfg.encoder_dilations.len())?,
            fuse_a: Pointwise::new(params, &format!("{DECODER}.fuse_a"))?,
            fuse_b: Pointwise::new(params, &format!("{DECODER}.fuse_b"))?,
            blocks: (0..cfg.decoder_dilations.len())
                .map(|i| BlockState::new(params, &block_name(DECODER, i)))
                .collect::<Result<_>>()?,
            post: (0..cfg.post_layers)
                .map(|i| Pointwise::new(params, &format!("{DECODER}.post.{i}")))
                .collect::<Result<_>>()?,
            out: Pointwise::new(params, &format!("{DECODER}.out"))?,
            decoder_channels: cfg.decoder_channels,
        })
    }

    /// Frames consumed so far.
    pub fn position(&self) -> usize {
        self.blocks.first().map_or(0, |b| b.history.len())
    }

    pub fn step(&mut self, skeleton: &[T], mel: &[T]) -> Result<Vec<T>> {
        if skeleton.len() != self.skeleton.stem[0].layer.conv.in_channels
            || mel.len() != self.audio.stem[0].layer.conv.in_channels
        {
            return Err(dim_err!(
                "streaming step with {} / {} channels",
                skeleton.len(),
                mel.len()
            ));
        }
        if skeleton.iter().chain(mel).any(|v| !v.is_finite()) {
            return Err(Error::NonFinite("streaming input".into()));
        }
        let es = self.skeleton.step(skeleton.to_vec())?;
        let ea = self.audio.step(mel.to_vec())?;
        let c = self.decoder_channels;
        let a = self.fuse_a.apply(es.clone())?;
        let b = self.fuse_b.apply(es)?;
        let mut x: Vec<T> = (0..c).map(|i| fuse_scalar(a[i] + ea[i], b[i] + ea[c + i])).collect();
        for block in &mut self.blocks {
            x = block.apply(x)?;
        }
        for layer in &self.post {
            x = layer.apply(x)?.into_iter().map(|v| Activation::Tanh.apply(v)).collect();
        }
        Ok(self
            .out
            .apply(x)?
            .into_iter()
            .map(|v| Activation::Sigmoid.apply(v))
            .collect())
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::model::ModelConfig;

    fn inputs(frames: usize) -> (Vec<f32>, Tensor2D<f32>) {
        let seed: Vec<f32> = (0..44).map(|i| 0.3 + 0.01 * i as f32).collect();
        let mel = Tensor2D::new(
            80,
            frames,
            (0..80 * frames).map(|i| ((i as f32) * 0.77).sin().abs()).collect(),
        )
        .unwrap();
        (seed, mel)
    }

    #[test]
    fn first_frame_is_seed() {
        let params = ModelParams::<f32>::init(ModelConfig::with_widths(8, 4), 2).unwrap();
        let (seed, mel) = inputs(6);
        let out = generate(&params, &seed, &mel).unwrap();
        assert_eq!(out.shape(), (44, 6));
        assert_eq!(out.column(0), seed);
        for t in 1..6 {
            assert!(out.column(t).iter().all(|&v| v > 0.0 && v < 1.0));
        }
    }

    #[test]
    fn single_frame_is_just_the_seed() {
        let params = ModelParams::<f32>::init(ModelConfig::with_widths(8, 4), 2).unwrap();
        let (seed, mel) = inputs(1);
        assert_eq!(generate(&params, &seed, &mel).unwrap().column(0), seed);
    }

    #[test]
    fn streaming_matches_reference_bitwise() {
        let params = ModelParams::<f32>::init(ModelConfig::with_widths(16, 8), 11).unwrap();
        let (seed, mel) = inputs(40);
        let a = generate(&params, &seed, &mel).unwrap();
        let b = generate_streaming(&params, &seed, &mel).unwrap();
        assert_eq!(a, b);
    }

    #[test]
    fn bad_seed_rejected() {
        let params = ModelParams::<f32>::init(ModelConfig::with_widths(8, 4), 2).unwrap();
        let (_, mel) = inputs(3);
        assert!(generate(&params, &[0.5; 10], &mel).is_err());
        let mut seed = vec![0.5; 44];
        seed[3] = f32::NAN;
        assert!(generate_streaming(&params, &seed, &mel).is_err());
        seed[3] = 1.5;
        assert!(generate(&params, &seed, &mel).is_err());
    }
}
