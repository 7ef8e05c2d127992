use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Minimum correlation for a local maximum to count as a peak.
pub const PEAK_THRESHOLD: f64 = 0.1;

/// Normalised autocorrelation `r[0..=max_lag]` with `r[0] = 1`.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Correlogram {
    pub values: Vec<f64>,
    pub peak_lags: Vec<usize>,
}

impl Correlogram {
    /// Wraps precomputed values and detects peaks.
    pub fn from_values(values: Vec<f64>) -> Self {
        let peak_lags = detect_peaks(&values, PEAK_THRESHOLD);
        Self { values, peak_lags }
    }

    pub fn max_lag(&self) -> usize {
        self.values.len().saturating_sub(1)
    }

    pub fn first_peak(&self) -> Option<usize> {
        self.peak_lags.first().copied()
    }
}

/// Strict interior local maxima above `threshold`, ascending.
pub fn detect_peaks(values: &[f64], threshold: f64) -> Vec<usize> {
    (1..values.len().saturating_sub(1))
        .filter(|&l| values[l] > threshold && values[l] > values[l - 1] && values[l] > values[l + 1])
        .collect()
}

/// Mean-removed autocorrelation normalised by the total variance:
/// `r[l] = Σ_t (x[t] − m)(x[t+l] − m) / Σ_t (x[t] − m)²`.
pub fn autocorrelate(sequence: &[f64], max_lag: usize) -> Result<Correlogram> {
    let n = sequence.len();
    if max_lag == 0 || n <= max_lag {
        return Err(Error::InvalidArgument(format!(
            "need 1 <= max_lag < length, got max_lag {max_lag} for length {n}"
        )));
    }
    if sequence.iter().any(|v| !v.is_finite()) {
        return Err(Error::NonFinite("autocorrelation input".into()));
    }
    let (lo, hi) = sequence
        .iter()
        .fold((f64::INFINITY, f64::NEG_INFINITY), |(lo, hi), &v| {
            (lo.min(v), hi.max(v))
        });
    if lo == hi {
        return Err(Error::Degenerate("constant sequence has no period".into()));
    }
    let mean = sequence.iter().sum::<f64>() / n as f64;
    let centred: Vec<f64> = sequence.iter().map(|v| v - mean).collect();
    let energy: f64 = centred.iter().map(|v| v * v).sum();
    if energy <= 0.0 {
        return Err(Error::Degenerate("zero-variance sequence".into()));
    }
    let values = (0..=max_lag)
        .map(|lag| {
            if lag == 0 {
                return 1.0;
            }
            let s: f64 = centred[..n - lag].iter().zip(&centred[lag..]).map(|(a, b)| a * b).sum();
            s / energy
        })
        .collect();
    Ok(Correlogram::from_values(values))
}
