//! Command-line interface: `prepare`, `train`, `generate`, `analyze` and
//! `render`.

mod analyze;
mod generate;
mod prepare;
mod render;
mod train;

use std::ffi::OsString;
use std::path::PathBuf;

use clap::{ArgGroup, Args, Parser, Subcommand, ValueEnum};

use crate::error::Result;

pub use prepare::{ClipEntry, ClipManifest};
pub use render::render_frame_svg;

#[derive(Debug, Parser)]
#[command(name = "choreo", version, about = "Music-conditioned dance skeleton generation")]
pub struct Cli {
    /// Video frame rate used for skeletons and mel frames.
    #[arg(long, global = true, default_value_t = 30.0)]
    pub fps: f64,
    /// Audio is resampled to this rate before mel extraction.
    #[arg(long, global = true, default_value_t = crate::signal::DEFAULT_SAMPLE_RATE)]
    pub sample_rate: u32,
    /// Seed for parameter initialisation and window sampling.
    #[arg(long, global = true, default_value_t = 0)]
    pub seed: u64,
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Turn a clip manifest into aligned skeleton and mel tensors.
    Prepare(PrepareArgs),
    /// Train a model on a prepared dataset.
    Train(TrainArgs),
    /// Generate a dance for an audio file.
    Generate(GenerateArgs),
    /// Autocorrelation analysis of a motion against the beat.
    Analyze(AnalyzeArgs),
    /// Draw stick figures from a coordinate CSV.
    Render(RenderArgs),
}

#[derive(Debug, Args)]
pub struct PrepareArgs {
    /// Manifest JSON listing the clips.
    #[arg(long)]
    pub manifest: PathBuf,
    /// Output dataset directory.
    #[arg(long)]
    pub out: PathBuf,
}

#[derive(Debug, Args)]
pub struct TrainArgs {
    /// Prepared dataset directory.
    #[arg(long)]
    pub data: PathBuf,
    /// Directory for checkpoints and the loss log.
    #[arg(long)]
    pub out: PathBuf,
    /// Continue from a checkpoint with optimizer state.
    #[arg(long)]
    pub resume: Option<PathBuf>,
    /// Window length in frames [default: 128].
    #[arg(long)]
    pub window: Option<usize>,
    /// Windows per step [default: 8].
    #[arg(long)]
    pub batch: Option<usize>,
    /// Adam learning rate [default: 0.0002].
    #[arg(long)]
    pub lr: Option<f64>,
    /// Weight of the limb-length term [default: 1.0].
    #[arg(long)]
    pub limb_weight: Option<f64>,
    /// Total optimizer steps to reach [default: 1000].
    #[arg(long)]
    pub steps: Option<u64>,
    /// Steps between checkpoints [default: 100].
    #[arg(long)]
    pub checkpoint_interval: Option<u64>,
    /// Encoder width; must be twice the decoder width.
    #[arg(long, default_value_t = crate::model::config::ENCODER_CHANNELS)]
    pub encoder_channels: usize,
    /// Decoder width.
    #[arg(long, default_value_t = crate::model::config::DECODER_CHANNELS)]
    pub decoder_channels: usize,
    /// Print a loss line every N steps.
    #[arg(long, default_value_t = 10)]
    pub log_every: u64,
}

#[derive(Debug, Args)]
pub struct GenerateArgs {
    /// Trained model checkpoint.
    #[arg(long)]
    pub checkpoint: PathBuf,
    /// Input WAV file.
    #[arg(long)]
    pub audio: PathBuf,
    /// Output tensor path; the coordinate CSV and sidecar sit next to it.
    #[arg(long)]
    pub out: PathBuf,
    /// First frame: a JSON array of 44 numbers or an L2D1 tensor (first
    /// column). Defaults to the checkpoint's mean pose.
    #[arg(long)]
    pub seed_pose: Option<PathBuf>,
    /// Re-run the model on the whole prefix at every step.
    #[arg(long)]
    pub naive: bool,
}

#[derive(Debug, Args)]
#[command(group(ArgGroup::new("beat_source").required(true).args(["bpm", "beats"])))]
pub struct AnalyzeArgs {
    /// Motion: an L2D1 skeleton tensor or a 30-column coordinate CSV.
    #[arg(long)]
    pub motion: PathBuf,
    /// Tempo in beats per minute.
    #[arg(long)]
    pub bpm: Option<f64>,
    /// File of beat frame indices, whitespace or comma separated.
    #[arg(long)]
    pub beats: Option<PathBuf>,
    /// Report JSON path.
    #[arg(long)]
    pub out: PathBuf,
    /// Optional SVG plot path.
    #[arg(long)]
    pub plot: Option<PathBuf>,
    /// Largest correlogram lag [default: 4 beat periods].
    #[arg(long)]
    pub max_lag: Option<usize>,
    /// Alignment tolerance in frames.
    #[arg(long, default_value_t = crate::analysis::DEFAULT_TOLERANCE)]
    pub tolerance: f64,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, ValueEnum)]
pub enum RenderFormat {
    Svg,
    Csv,
}

#[derive(Debug, Args)]
pub struct RenderArgs {
    /// 30-column coordinate CSV.
    #[arg(long)]
    pub motion: PathBuf,
    /// Output directory.
    #[arg(long)]
    pub out: PathBuf,
    /// One SVG per frame, or a single segments CSV.
    #[arg(long, value_enum, default_value_t = RenderFormat::Svg)]
    pub format: RenderFormat,
}

/// Process exit code: 0 on success, 1 on failure, 2 on usage errors.
pub fn run<I, T>(args: I) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<OsString> + Clone,
{
    let cli = match Cli::try_parse_from(args) {
        Ok(cli) => cli,
        Err(e) => {
            let _ = e.print();
            return e.exit_code();
        }
    };
    match dispatch(&cli) {
        Ok(code) => code,
        Err(e) => {
            eprintln!("error: {e}");
            1
        }
    }
}

fn dispatch(cli: &Cli) -> Result<i32> {
    match &cli.command {
        Command::Prepare(a) => prepare::run(cli, a),
        Command::Train(a) => train::run(cli, a).map(|()| 0),
        Command::Generate(a) => generate::run(cli, a).map(|()| 0),
        Command::Analyze(a) => analyze::run(cli, a).map(|()| 0),
        Command::Render(a) => render::run(a).map(|()| 0),
    }
}
