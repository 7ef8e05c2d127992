//! Per-axis motion autocorrelation averaged over joints.

use serde::{Deserialize, Serialize};

use crate::error::{dim_err, Error, Result};
use crate::numerics::Tensor2D;
use crate::signal::{autocorrelate, Correlogram};
use crate::skeleton::{COORD_DIMS, NUM_JOINTS};

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Axis {
    X,
    Y,
}

impl Axis {
    pub fn offset(self) -> usize {
        match self {
            Axis::X => 0,
            Axis::Y => 1,
        }
    }
}

/// Averaged correlogram of one axis.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct AxisCorrelogram {
    pub axis: Axis,
    pub correlogram: Correlogram,
    /// Joints that moved on this axis and entered the average.
    pub joints_used: Vec<usize>,
}

/// Autocorrelates every joint's trajectory on `axis`, averages the
/// correlograms of the joints that move and re-detects peaks.
///
/// `coords` holds interleaved joint coordinates in its first 30 rows, one
/// column per frame.
pub fn axis_correlogram(coords: &Tensor2D<f32>, axis: Axis, max_lag: usize) -> Result<AxisCorrelogram> {
    if coords.channels() < COORD_DIMS {
        return Err(dim_err!("need {COORD_DIMS} coordinate rows, got {}", coords.channels()));
    }
    let mut sum = vec![0.0f64; max_lag + 1];
    let mut joints_used = Vec::new();
    for j in 0..NUM_JOINTS {
        let series: Vec<f64> = coords.row(2 * j + axis.offset()).iter().map(|&v| v as f64).collect();
        match autocorrelate(&series, max_lag) {
            Ok(c) => {
                for (s, v) in sum.iter_mut().zip(&c.values) {
                    *s += v;
                }
                joints_used.push(j);
            }
            Err(Error::Degenerate(_)) => {}
            Err(e) => return Err(e),
        }
    }
    if joints_used.is_empty() {
        return Err(Error::Degenerate(format!(
            "every joint is constant on the {axis:?} axis"
        )));
    }
    let n = joints_used.len() as f64;
    let values = sum.into_iter().map(|s| s / n).collect();
    Ok(AxisCorrelogram {
        axis,
        correlogram: Correlogram::from_values(values),
        joints_used,
    })
}

/// Correlograms for both axes.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct MotionCorrelograms {
    pub x: AxisCorrelogram,
    pub y: AxisCorrelogram,
}

pub fn motion_autocorrelation(coords: &Tensor2D<f32>, max_lag: usize) -> Result<MotionCorrelograms> {
    Ok(MotionCorrelograms {
        x: axis_correlogram(coords, Axis::X, max_lag)?,
        y: axis_correlogram(coords, Axis::Y, max_lag)?,
    })
}
