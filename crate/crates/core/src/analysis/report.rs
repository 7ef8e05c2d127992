//! JSON report and SVG plot of the motion-versus-beat analysis.

use std::fmt::Write as _;

use serde::{Deserialize, Serialize};

use super::beat::{beat_alignment, Alignment, BeatGrid};
use super::motion::{axis_correlogram, Axis};
use crate::error::{Error, Result};
use crate::numerics::Tensor2D;
use crate::signal::Correlogram;

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct AxisReport {
    pub axis: Axis,
    /// Absent when every joint is constant on this axis.
    pub correlogram: Option<Vec<f64>>,
    pub peak_lags: Vec<usize>,
    pub joints_used: Vec<usize>,
    pub alignment: Alignment,
    pub error: Option<String>,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct MotionAutocorrReport {
    pub frames: usize,
    pub max_lag: usize,
    pub tolerance: f64,
    pub beat_period: f64,
    pub beat_grid: BeatGrid,
    pub x: AxisReport,
    pub y: AxisReport,
}

/// Default lag range: four beat periods, capped by the clip length.
pub fn default_max_lag(frames: usize, period: f64) -> usize {
    ((4.0 * period).ceil() as usize).max(2).min(frames.saturating_sub(1))
}

fn axis_report(coords: &Tensor2D<f32>, axis: Axis, max_lag: usize, period: f64, tolerance: f64) -> Result<AxisReport> {
    match axis_correlogram(coords, axis, max_lag) {
        Ok(c) => Ok(AxisReport {
            axis,
            alignment: beat_alignment(&c.correlogram, period, tolerance),
            peak_lags: c.correlogram.peak_lags.clone(),
            correlogram: Some(c.correlogram.values),
            joints_used: c.joints_used,
            error: None,
        }),
        Err(Error::Degenerate(msg)) => Ok(AxisReport {
            axis,
            correlogram: None,
            peak_lags: Vec::new(),
            joints_used: Vec::new(),
            alignment: beat_alignment(&Correlogram::from_values(Vec::new()), period, tolerance),
            error: Some(msg),
        }),
        Err(e) => Err(e),
    }
}

/// Builds the report for interleaved joint coordinates (`≥ 30 × T`).
pub fn analyze_motion(
    coords: &Tensor2D<f32>,
    grid: BeatGrid,
    max_lag: Option<usize>,
    tolerance: f64,
) -> Result<MotionAutocorrReport> {
    let period = grid.period();
    let frames = coords.frames();
    let max_lag = max_lag.unwrap_or_else(|| default_max_lag(frames, period));
    if max_lag == 0 || max_lag >= frames {
        return Err(Error::InvalidArgument(format!(
            "max lag {max_lag} needs 1 <= max lag < {frames} frames"
        )));
    }
    Ok(MotionAutocorrReport {
        frames,
        max_lag,
        tolerance,
        beat_period: period,
        x: axis_report(coords, Axis::X, max_lag, period, tolerance)?,
        y: axis_report(coords, Axis::Y, max_lag, period, tolerance)?,
        beat_grid: grid,
    })
}

const PLOT_W: f64 = 640.0;
const PANEL_H: f64 = 200.0;
const MARGIN: f64 = 40.0;

/// Two stacked panels (x above y): correlogram against lag with vertical
/// lines at multiples of the beat period and dots on detected peaks.
pub fn render_report_svg(report: &MotionAutocorrReport) -> String {
    let height = 2.0 * PANEL_H + 3.0 * MARGIN;
    let mut s = String::new();
    let _ = writeln!(
        s,
        r#"<svg xmlns="http://www.w3.org/2000/svg" width="{w}" height="{height}" viewBox="0 0 {w} {height}">"#,
        w = PLOT_W + 2.0 * MARGIN
    );
    let _ = writeln!(s, r#"<rect width="100%" height="100%" fill="white"/>"#);
    let lag_scale = PLOT_W / report.max_lag.max(1) as f64;
    for (k, axis) in [&report.x, &report.y].into_iter().enumerate() {
        let top = MARGIN + k as f64 * (PANEL_H + MARGIN);
        let y_of = |r: f64| top + PANEL_H * (1.0 - r.clamp(-1.0, 1.0)) / 2.0;
        let _ = writeln!(
            s,
            r#"<text x="{MARGIN}" y="{}" font-size="12">{:?} axis ({:?})</text>"#,
            top - 6.0,
            axis.axis,
            axis.alignment.verdict
        );
        let _ = writeln!(
            s,
            r#"<rect x="{MARGIN}" y="{top}" width="{PLOT_W}" height="{PANEL_H}" fill="none" stroke="black"/>"#
        );
        let zero = y_of(0.0);
        let _ = writeln!(
            s,
            r##"<line x1="{MARGIN}" y1="{zero}" x2="{}" y2="{zero}" stroke="#999"/>"##,
            MARGIN + PLOT_W
        );
        let mut beat = report.beat_period;
        while beat <= report.max_lag as f64 {
            let x = MARGIN + beat * lag_scale;
            let _ = writeln!(
                s,
                r#"<line x1="{x:.2}" y1="{top}" x2="{x:.2}" y2="{}" stroke="red" stroke-dasharray="4 3"/>"#,
                top + PANEL_H
            );
            beat += report.beat_period;
        }
        if let Some(values) = &axis.correlogram {
            let points: Vec<String> = values
                .iter()
                .enumerate()
                .map(|(l, &r)| format!("{:.2},{:.2}", MARGIN + l as f64 * lag_scale, y_of(r)))
                .collect();
            let _ = writeln!(
                s,
                r#"<polyline fill="none" stroke="blue" points="{}"/>"#,
                points.join(" ")
            );
            for &p in &axis.peak_lags {
                let _ = writeln!(
                    s,
                    r#"<circle cx="{:.2}" cy="{:.2}" r="3" fill="blue"/>"#,
                    MARGIN + p as f64 * lag_scale,
                    y_of(values[p])
                );
            }
        }
    }
    s.push_str("</svg>\n");
    s
}
