//! Motion autocorrelation and its alignment with the musical beat.

pub mod beat;
pub mod motion;
pub mod report;

pub use beat::{beat_alignment, Alignment, BeatGrid, Verdict, DEFAULT_TOLERANCE};
pub use motion::{axis_correlogram, motion_autocorrelation, Axis, AxisCorrelogram, MotionCorrelograms};
pub use report::{analyze_motion, default_max_lag, render_report_svg, AxisReport, MotionAutocorrReport};
