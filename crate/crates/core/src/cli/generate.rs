use std::fs;
use std::path::Path;

use super::{Cli, GenerateArgs};
use crate::error::{Error, Result};
use crate::model::{generate, generate_streaming, Checkpoint};
use crate::numerics::io::load_tensor;
use crate::signal::{mel_spectrogram, read_wav, resample_linear};
use crate::skeleton::{frames_from_tensor, write_coordinate_csv, NormMeta, SkeletonSequence};

fn load_seed_pose(path: &Path) -> Result<Vec<f32>> {
    if path.extension().is_some_and(|e| e == "json") {
        let text = fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
        Ok(serde_json::from_str(&text)?)
    } else {
        Ok(load_tensor(path)?.column(0))
    }
}

pub(super) fn run(cli: &Cli, args: &GenerateArgs) -> Result<()> {
    let ckpt = Checkpoint::load(&args.checkpoint)?;
    let audio = resample_linear(&read_wav(&args.audio)?, cli.sample_rate)?;
    let mel = mel_spectrogram(&audio, cli.fps)?;
    let seed = match &args.seed_pose {
        Some(p) => load_seed_pose(p)?,
        None => ckpt.mean_seed_pose.clone(),
    };
    let frames = if args.naive {
        generate(&ckpt.params, &seed, &mel.mel)?
    } else {
        generate_streaming(&ckpt.params, &seed, &mel.mel)?
    };
    let norm_meta = ckpt.norm_meta.unwrap_or(NormMeta {
        x_min: 0.0,
        x_max: 1.0,
        y_min: 0.0,
        y_max: 1.0,
    });
    let seq = SkeletonSequence {
        frames,
        norm_meta,
        fps: cli.fps,
    };
    seq.save(&args.out)?;
    let pixels: Vec<_> = frames_from_tensor(&seq.frames)
        .iter()
        .map(|f| norm_meta.denormalize(f))
        .collect();
    let csv_path = args.out.with_extension("csv");
    write_coordinate_csv(&csv_path, &pixels)?;
    println!(
        "generated {} frames -> {} and {}",
        seq.len(),
        args.out.display(),
        csv_path.display()
    );
    Ok(())
}
