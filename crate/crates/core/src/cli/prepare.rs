use std::collections::BTreeSet;
use std::fs;
use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};

use super::{Cli, PrepareArgs};
use crate::error::{Error, Result};
use crate::signal::{mel_spectrogram, read_wav, resample_linear};
use crate::skeleton::{ingest_openpose, read_pose_csv, skeleton_from_detections};
use crate::training::ClipPair;

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ClipEntry {
    pub name: String,
    /// Directory of per-frame keypoint JSON files or a 45-column CSV.
    pub skeleton: PathBuf,
    /// WAV file.
    pub audio: PathBuf,
    /// Overrides the global `--fps`.
    #[serde(default)]
    pub fps: Option<f64>,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ClipManifest {
    /// Base for relative paths; defaults to the manifest's directory.
    #[serde(default)]
    pub root: Option<PathBuf>,
    pub clips: Vec<ClipEntry>,
}

impl ClipManifest {
    pub fn load(path: &Path) -> Result<Self> {
        let text = fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
        let mut manifest: ClipManifest = serde_json::from_str(&text)?;
        let base = path.parent().unwrap_or(Path::new("."));
        manifest.root = Some(match &manifest.root {
            Some(r) => base.join(r),
            None => base.to_path_buf(),
        });
        let mut seen = BTreeSet::new();
        for clip in &manifest.clips {
            if clip.name.is_empty() || clip.name.contains(['/', '\\']) {
                return Err(Error::Format(format!("invalid clip name `{}`", clip.name)));
            }
            if !seen.insert(clip.name.as_str()) {
                return Err(Error::Format(format!("duplicate clip name `{}`", clip.name)));
            }
        }
        Ok(manifest)
    }

    fn resolve(&self, p: &Path) -> PathBuf {
        match &self.root {
            Some(root) => root.join(p),
            None => p.to_path_buf(),
        }
    }
}

struct Prepared {
    skeleton_frames: usize,
    mel_frames: usize,
    kept: usize,
}

fn prepare_clip(cli: &Cli, manifest: &ClipManifest, clip: &ClipEntry, out: &Path) -> Result<Prepared> {
    let fps = clip.fps.unwrap_or(cli.fps);
    let source = manifest.resolve(&clip.skeleton);
    let raw = if source.is_dir() {
        ingest_openpose(&source)?
    } else {
        read_pose_csv(&source)?
    };
    let skeleton = skeleton_from_detections(&raw, fps)?;
    let audio = read_wav(manifest.resolve(&clip.audio))?;
    let audio = resample_linear(&audio, cli.sample_rate)?;
    let mel = mel_spectrogram(&audio, fps)?;
    let (skeleton_frames, mel_frames) = (skeleton.len(), mel.frames());
    let pair = ClipPair::truncated(clip.name.clone(), skeleton, mel);
    pair.save(out)?;
    Ok(Prepared {
        skeleton_frames,
        mel_frames,
        kept: pair.len(),
    })
}

pub(super) fn run(cli: &Cli, args: &PrepareArgs) -> Result<i32> {
    let manifest = ClipManifest::load(&args.manifest)?;
    fs::create_dir_all(&args.out).map_err(|e| Error::io(&args.out, e))?;
    let mut failed = 0;
    for clip in &manifest.clips {
        match prepare_clip(cli, &manifest, clip, &args.out) {
            Ok(p) => {
                println!(
                    "{}: skeleton {} frames, mel {} frames, kept {}",
                    clip.name, p.skeleton_frames, p.mel_frames, p.kept
                );
                if p.skeleton_frames.abs_diff(p.mel_frames) > 1 {
                    eprintln!(
                        "warning: {}: skeleton and audio lengths differ by {} frames",
                        clip.name,
                        p.skeleton_frames.abs_diff(p.mel_frames)
                    );
                }
            }
            Err(e) => {
                failed += 1;
                eprintln!("{}: failed: {e}", clip.name);
            }
        }
    }
    println!(
        "prepared {} of {} clips",
        manifest.clips.len() - failed,
        manifest.clips.len()
    );
    Ok(if failed == 0 { 0 } else { 1 })
}
