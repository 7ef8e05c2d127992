//! Aligned clip pairs, window sampling and the on-disk dataset layout.

use std::fs;
use std::path::{Path, PathBuf};

use rand::Rng;

use crate::error::{dim_err, Error, Result};
use crate::numerics::Tensor2D;
use crate::signal::MelSequence;
use crate::skeleton::{NormMeta, SkeletonSequence};

pub const SKELETON_SUFFIX: &str = ".skeleton.l2d";
pub const MEL_SUFFIX: &str = ".mel.l2d";

/// Time-aligned skeleton and mel sequences of one clip.
#[derive(Clone, Debug, PartialEq)]
pub struct ClipPair {
    pub name: String,
    pub skeleton: SkeletonSequence,
    pub mel: MelSequence,
}

impl ClipPair {
    /// Pairs two sequences, dropping at most one trailing frame from the
    /// longer one.
    pub fn new(name: impl Into<String>, skeleton: SkeletonSequence, mel: MelSequence) -> Result<Self> {
        if (skeleton.fps - mel.fps).abs() > 1e-9 {
            return Err(Error::InvalidArgument(format!(
                "skeleton at {} fps, mel at {} fps",
                skeleton.fps, mel.fps
            )));
        }
        let (ts, tm) = (skeleton.len(), mel.frames());
        if ts.abs_diff(tm) > 1 {
            return Err(dim_err!("skeleton has {ts} frames, mel has {tm}"));
        }
        Ok(Self::truncated(name, skeleton, mel))
    }

    /// Pairs two sequences, truncating both to the shorter length.
    pub fn truncated(name: impl Into<String>, mut skeleton: SkeletonSequence, mut mel: MelSequence) -> Self {
        let t = skeleton.len().min(mel.frames());
        if skeleton.len() > t {
            skeleton.frames = skeleton.frames.slice_frames(0, t).expect("t within bounds");
        }
        if mel.frames() > t {
            mel.mel = mel.mel.slice_frames(0, t).expect("t within bounds");
        }
        Self {
            name: name.into(),
            skeleton,
            mel,
        }
    }

    pub fn len(&self) -> usize {
        self.skeleton.len()
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }

    pub fn save(&self, dir: impl AsRef<Path>) -> Result<()> {
        let dir = dir.as_ref();
        self.skeleton
            .save(dir.join(format!("{}{SKELETON_SUFFIX}", self.name)))?;
        self.mel.save(dir.join(format!("{}{MEL_SUFFIX}", self.name)))
    }

    pub fn load(dir: impl AsRef<Path>, name: &str) -> Result<Self> {
        let dir = dir.as_ref();
        let skeleton = SkeletonSequence::load(dir.join(format!("{name}{SKELETON_SUFFIX}")))?;
        let mel = MelSequence::load(dir.join(format!("{name}{MEL_SUFFIX}")))?;
        if skeleton.len() != mel.frames() {
            return Err(dim_err!(
                "clip `{name}`: skeleton has {} frames, mel has {}",
                skeleton.len(),
                mel.frames()
            ));
        }
        Self::new(name, skeleton, mel)
    }
}

/// Loads every clip of a prepared dataset directory, sorted by name.
pub fn load_dataset(dir: impl AsRef<Path>) -> Result<Vec<ClipPair>> {
    let dir = dir.as_ref();
    let entries = fs::read_dir(dir).map_err(|e| Error::io(dir, e))?;
    let mut names = Vec::new();
    for entry in entries {
        let path: PathBuf = entry.map_err(|e| Error::io(dir, e))?.path();
        if let Some(name) = path
            .file_name()
            .and_then(|n| n.to_str())
            .and_then(|n| n.strip_suffix(SKELETON_SUFFIX))
        {
            names.push(name.to_string());
        }
    }
    names.sort();
    if names.is_empty() {
        return Err(Error::InvalidArgument(format!("no clips in {}", dir.display())));
    }
    names.iter().map(|n| ClipPair::load(dir, n)).collect()
}

/// Mean skeleton frame over every frame of every clip.
pub fn mean_pose(pairs: &[ClipPair]) -> Result<Vec<f32>> {
    let first = pairs
        .first()
        .ok_or_else(|| Error::InvalidArgument("empty dataset".into()))?;
    let dim = first.skeleton.frames.channels();
    let mut sum = vec![0.0f64; dim];
    let mut count = 0usize;
    for pair in pairs {
        let f = &pair.skeleton.frames;
        f.ensure_shape(dim, f.frames(), &pair.name)?;
        for (c, s) in sum.iter_mut().enumerate() {
            *s += f.row(c).iter().map(|&v| v as f64).sum::<f64>();
        }
        count += f.frames();
    }
    Ok(sum.into_iter().map(|s| (s / count as f64) as f32).collect())
}

/// Average of the per-clip normalisation ranges.
pub fn corpus_norm_meta(pairs: &[ClipPair]) -> Option<NormMeta> {
    let metas: Vec<NormMeta> = pairs.iter().map(|p| p.skeleton.norm_meta).collect();
    NormMeta::average(&metas)
}

/// One training window.
#[derive(Clone, Debug, PartialEq)]
pub struct Window {
    pub clip: usize,
    pub offset: usize,
    pub skeleton: Tensor2D<f32>,
    pub mel: Tensor2D<f32>,
}

/// Draws `count` (clip, offset) positions: a uniformly random clip among
/// those with at least `window` frames, then a uniform start in
/// `0..=T − window`.
pub fn sample_positions<R: Rng + ?Sized>(
    pairs: &[ClipPair],
    window: usize,
    count: usize,
    rng: &mut R,
) -> Result<Vec<(usize, usize)>> {
    let eligible: Vec<usize> = (0..pairs.len()).filter(|&i| pairs[i].len() >= window).collect();
    if eligible.is_empty() {
        return Err(Error::InvalidArgument(format!("no clip has {window} frames")));
    }
    Ok((0..count)
        .map(|_| {
            let clip = eligible[rng.random_range(0..eligible.len())];
            let offset = rng.random_range(0..=pairs[clip].len() - window);
            (clip, offset)
        })
        .collect())
}

pub fn sample_windows<R: Rng + ?Sized>(
    pairs: &[ClipPair],
    window: usize,
    batch_size: usize,
    rng: &mut R,
) -> Result<Vec<Window>> {
    sample_positions(pairs, window, batch_size, rng)?
        .into_iter()
        .map(|(clip, offset)| {
            let p = &pairs[clip];
            Ok(Window {
                clip,
                offset,
                skeleton: p.skeleton.frames.slice_frames(offset, window)?,
                mel: p.mel.mel.slice_frames(offset, window)?,
            })
        })
        .collect()
}
