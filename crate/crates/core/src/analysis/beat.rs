//! Beat grids and correlogram-to-beat alignment.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::signal::Correlogram;

/// Default alignment tolerance in frames.
pub const DEFAULT_TOLERANCE: f64 = 2.0;

/// Beat period in frames, either from a tempo or from beat positions.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "source", rename_all = "lowercase")]
pub enum BeatGrid {
    Bpm { bpm: f64, fps: f64, period: f64 },
    Explicit { beats: Vec<f64>, period: f64 },
}

impl BeatGrid {
    /// Period `60 · fps / bpm` frames.
    pub fn from_bpm(bpm: f64, fps: f64) -> Result<Self> {
        if !(bpm > 0.0 && bpm.is_finite() && fps > 0.0 && fps.is_finite()) {
            return Err(Error::InvalidArgument("bpm and fps must be positive".into()));
        }
        let period = 60.0 * fps / bpm;
        if period <= 1.0 {
            return Err(Error::InvalidArgument(format!(
                "beat period {period} frames is too short"
            )));
        }
        Ok(BeatGrid::Bpm { bpm, fps, period })
    }

    /// Beat frame positions; the period is the median spacing.
    pub fn from_beats(beats: Vec<f64>) -> Result<Self> {
        if beats.len() < 2 {
            return Err(Error::InvalidArgument("need at least two beats".into()));
        }
        if beats.iter().any(|b| !b.is_finite()) || beats.windows(2).any(|w| w[1] <= w[0]) {
            return Err(Error::InvalidArgument(
                "beats must be finite and strictly increasing".into(),
            ));
        }
        let mut diffs: Vec<f64> = beats.windows(2).map(|w| w[1] - w[0]).collect();
        diffs.sort_by(f64::total_cmp);
        let mid = diffs.len() / 2;
        let period = if diffs.len() % 2 == 1 {
            diffs[mid]
        } else {
            0.5 * (diffs[mid - 1] + diffs[mid])
        };
        if period <= 1.0 {
            return Err(Error::InvalidArgument(format!(
                "beat period {period} frames is too short"
            )));
        }
        Ok(BeatGrid::Explicit { beats, period })
    }

    pub fn period(&self) -> f64 {
        match self {
            BeatGrid::Bpm { period, .. } | BeatGrid::Explicit { period, .. } => *period,
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Verdict {
    Matched,
    Unmatched,
    NoPeak,
}

/// Alignment of one correlogram against the beat period.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct Alignment {
    pub verdict: Verdict,
    /// 1 for the first peak, 2 for the second.
    pub peak_index: Option<usize>,
    pub peak_lag: Option<usize>,
    /// 1 if compared with the beat period, 2 with twice the period.
    pub beat_multiple: Option<u32>,
    /// Peak lag minus the compared beat lag, in frames.
    pub offset: Option<f64>,
}

/// Checks whether the first or second peak lies within `tolerance` frames
/// of the beat period or of twice the beat period.
///
/// Without a match the first peak is reported against whichever multiple
/// is closer.
pub fn beat_alignment(correlogram: &Correlogram, period: f64, tolerance: f64) -> Alignment {
    let peaks = &correlogram.peak_lags;
    let Some(&first) = peaks.first() else {
        return Alignment {
            verdict: Verdict::NoPeak,
            peak_index: None,
            peak_lag: None,
            beat_multiple: None,
            offset: None,
        };
    };
    for (idx, &lag) in peaks.iter().take(2).enumerate() {
        for multiple in [1u32, 2] {
            let offset = lag as f64 - multiple as f64 * period;
            if offset.abs() <= tolerance {
                return Alignment {
                    verdict: Verdict::Matched,
                    peak_index: Some(idx + 1),
                    peak_lag: Some(lag),
                    beat_multiple: Some(multiple),
                    offset: Some(offset),
                };
            }
        }
    }
    let (o1, o2) = (first as f64 - period, first as f64 - 2.0 * period);
    let (multiple, offset) = if o1.abs() <= o2.abs() { (1, o1) } else { (2, o2) };
    Alignment {
        verdict: Verdict::Unmatched,
        peak_index: Some(1),
        peak_lag: Some(first),
        beat_multiple: Some(multiple),
        offset: Some(offset),
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn with_peaks(peaks: &[usize]) -> Correlogram {
        Correlogram {
            values: vec![0.0; 128],
            peak_lags: peaks.to_vec(),
        }
    }

    #[test]
    fn bpm_period() {
        assert_eq!(BeatGrid::from_bpm(60.0, 30.0).unwrap().period(), 30.0);
        assert_eq!(BeatGrid::from_bpm(120.0, 30.0).unwrap().period(), 15.0);
        assert!(BeatGrid::from_bpm(0.0, 30.0).is_err());
        assert!(BeatGrid::from_bpm(3600.0, 30.0).is_err());
    }

    #[test]
    fn explicit_beats_median() {
        let g = BeatGrid::from_beats(vec![0.0, 30.0, 61.0, 90.0, 120.0, 200.0]).unwrap();
        assert_eq!(g.period(), 30.0);
        assert!(BeatGrid::from_beats(vec![0.0, 30.0, 30.0]).is_err());
        assert!(BeatGrid::from_beats(vec![5.0]).is_err());
    }

    #[test]
    fn exact_match() {
        let a = beat_alignment(&with_peaks(&[30, 60]), 30.0, 2.0);
        assert_eq!(a.verdict, Verdict::Matched);
        assert_eq!(a.offset, Some(0.0));
        assert_eq!((a.peak_index, a.beat_multiple), (Some(1), Some(1)));
    }

    #[test]
    fn outside_tolerance() {
        let a = beat_alignment(&with_peaks(&[33]), 30.0, 2.0);
        assert_eq!(a.verdict, Verdict::Unmatched);
        assert_eq!(a.offset, Some(3.0));
    }

    #[test]
    fn second_multiple() {
        let a = beat_alignment(&with_peaks(&[60]), 30.0, 2.0);
        assert_eq!(a.verdict, Verdict::Matched);
        assert_eq!((a.beat_multiple, a.offset), (Some(2), Some(0.0)));
    }

    #[test]
    fn second_peak_matches() {
        let a = beat_alignment(&with_peaks(&[14, 31, 45]), 30.0, 2.0);
        assert_eq!(a.verdict, Verdict::Matched);
        assert_eq!((a.peak_index, a.offset), (Some(2), Some(1.0)));
    }

    #[test]
    fn no_peak() {
        let a = beat_alignment(&with_peaks(&[]), 30.0, 2.0);
        assert_eq!(a.verdict, Verdict::NoPeak);
        assert_eq!(a.offset, None);
    }
}
