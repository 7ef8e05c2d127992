use std::fs;
use std::path::Path;

use super::{AnalyzeArgs, Cli};
use crate::analysis::{analyze_motion, render_report_svg, BeatGrid};
use crate::error::{Error, Result};
use crate::numerics::io::load_tensor;
use crate::numerics::Tensor2D;
use crate::skeleton::{coordinate_tensor, read_coordinate_csv};

fn load_motion(path: &Path) -> Result<Tensor2D<f32>> {
    if path.extension().is_some_and(|e| e == "csv") {
        coordinate_tensor(&read_coordinate_csv(path)?)
    } else {
        load_tensor(path)
    }
}

fn load_beats(path: &Path) -> Result<Vec<f64>> {
    let text = fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
    text.split(|c: char| c.is_whitespace() || c == ',')
        .filter(|s| !s.is_empty())
        .map(|s| {
            s.parse::<f64>()
                .map_err(|_| Error::Format(format!("{}: bad beat `{s}`", path.display())))
        })
        .collect()
}

pub(super) fn run(cli: &Cli, args: &AnalyzeArgs) -> Result<()> {
    let coords = load_motion(&args.motion)?;
    let grid = match (&args.bpm, &args.beats) {
        (Some(bpm), _) => BeatGrid::from_bpm(*bpm, cli.fps)?,
        (None, Some(p)) => BeatGrid::from_beats(load_beats(p)?)?,
        (None, None) => return Err(Error::InvalidArgument("no beat source".into())),
    };
    let report = analyze_motion(&coords, grid, args.max_lag, args.tolerance)?;
    let text = serde_json::to_string_pretty(&report)?;
    fs::write(&args.out, text + "\n").map_err(|e| Error::io(&args.out, e))?;
    if let Some(plot) = &args.plot {
        fs::write(plot, render_report_svg(&report)).map_err(|e| Error::io(plot, e))?;
    }
    for axis in [&report.x, &report.y] {
        let a = &axis.alignment;
        println!(
            "{:?}: {:?} peak {:?} offset {:?} (beat period {:.3})",
            axis.axis, a.verdict, a.peak_lag, a.offset, report.beat_period
        );
    }
    Ok(())
}
