//! Frame-rate aligned log-mel spectrogram.

use std::fs;
use std::path::Path;

use rustfft::{num_complex::Complex, FftPlanner};
use serde::{Deserialize, Serialize};

use super::audio::AudioClip;
use crate::error::{Error, Result};
use crate::numerics::io::{load_tensor, save_tensor};
use crate::numerics::Tensor2D;

pub const N_FFT: usize = 1024;
pub const N_MELS: usize = 80;
pub const MIN_SAMPLE_RATE: u32 = 2048;

pub fn hz_to_mel(hz: f64) -> f64 {
    2595.0 * (1.0 + hz / 700.0).log10()
}

pub fn mel_to_hz(mel: f64) -> f64 {
    700.0 * (10f64.powf(mel / 2595.0) - 1.0)
}

/// Triangular filters on the mel scale spanning 0 Hz to Nyquist.
#[derive(Clone, Debug)]
pub struct MelFilterbank {
    pub n_fft: usize,
    pub sample_rate: u32,
    /// `n_mels + 2` band edges in Hz; filter `b` rises from edge `b`, peaks
    /// at edge `b + 1` and falls to edge `b + 2`.
    pub edges_hz: Vec<f64>,
    /// `n_mels` rows of `n_fft / 2 + 1` weights.
    pub weights: Vec<Vec<f64>>,
}

impl MelFilterbank {
    pub fn n_mels(&self) -> usize {
        self.weights.len()
    }

    pub fn n_bins(&self) -> usize {
        self.n_fft / 2 + 1
    }

    pub fn center_hz(&self, band: usize) -> f64 {
        self.edges_hz[band + 1]
    }

    pub fn bin_hz(&self, bin: usize) -> f64 {
        bin as f64 * self.sample_rate as f64 / self.n_fft as f64
    }

    /// Continuous triangle response of filter `band` at `hz`.
    pub fn response(&self, band: usize, hz: f64) -> f64 {
        triangle(
            self.edges_hz[band],
            self.edges_hz[band + 1],
            self.edges_hz[band + 2],
            hz,
        )
    }
}

fn triangle(lo: f64, center: f64, hi: f64, f: f64) -> f64 {
    if f <= lo || f >= hi {
        0.0
    } else if f <= center {
        (f - lo) / (center - lo)
    } else {
        (hi - f) / (hi - center)
    }
}

pub fn mel_filterbank(sample_rate: u32, n_fft: usize, n_mels: usize) -> Result<MelFilterbank> {
    if sample_rate == 0 || n_fft < 4 || n_mels == 0 || n_mels >= n_fft / 2 {
        return Err(Error::InvalidArgument(format!(
            "degenerate filterbank: sr={sample_rate} n_fft={n_fft} n_mels={n_mels}"
        )));
    }
    let nyquist = sample_rate as f64 / 2.0;
    let top = hz_to_mel(nyquist);
    let edges_hz: Vec<f64> = (0..n_mels + 2)
        .map(|k| mel_to_hz(top * k as f64 / (n_mels + 1) as f64))
        .collect();
    let n_bins = n_fft / 2 + 1;
    let bin_hz = |k: usize| k as f64 * sample_rate as f64 / n_fft as f64;
    let mut weights = Vec::with_capacity(n_mels);
    for b in 0..n_mels {
        let row: Vec<f64> = (0..n_bins)
            .map(|k| triangle(edges_hz[b], edges_hz[b + 1], edges_hz[b + 2], bin_hz(k)))
            .collect();
        if row.iter().all(|&w| w == 0.0) {
            return Err(Error::Degenerate(format!(
                "mel band {b} ({:.1}..{:.1} Hz) covers no FFT bin",
                edges_hz[b],
                edges_hz[b + 2]
            )));
        }
        weights.push(row);
    }
    Ok(MelFilterbank {
        n_fft,
        sample_rate,
        edges_hz,
        weights,
    })
}

/// `N_MELS × T` mel-spectrogram sampled at the video frame rate.
#[derive(Clone, Debug, PartialEq)]
pub struct MelSequence {
    pub mel: Tensor2D<f32>,
    pub fps: f64,
    pub sample_rate: u32,
}

/// Sidecar written next to a mel tensor.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct MelSidecar {
    pub fps: f64,
    pub sample_rate: u32,
    pub frames: usize,
    pub n_mels: usize,
}

impl MelSequence {
    pub fn frames(&self) -> usize {
        self.mel.frames()
    }

    /// Writes `<stem>.l2d` and `<stem>.json`.
    pub fn save(&self, tensor_path: impl AsRef<Path>) -> Result<()> {
        let tensor_path = tensor_path.as_ref();
        save_tensor(tensor_path, &self.mel)?;
        let side = tensor_path.with_extension("json");
        let meta = MelSidecar {
            fps: self.fps,
            sample_rate: self.sample_rate,
            frames: self.frames(),
            n_mels: self.mel.channels(),
        };
        let text = serde_json::to_string_pretty(&meta)?;
        fs::write(&side, text + "\n").map_err(|e| Error::io(&side, e))
    }

    pub fn load(tensor_path: impl AsRef<Path>) -> Result<Self> {
        let tensor_path = tensor_path.as_ref();
        let mel = load_tensor(tensor_path)?;
        let side = tensor_path.with_extension("json");
        let text = fs::read_to_string(&side).map_err(|e| Error::io(&side, e))?;
        let meta: MelSidecar = serde_json::from_str(&text)?;
        mel.ensure_shape(meta.n_mels, meta.frames, "mel tensor")?;
        if meta.n_mels != N_MELS {
            return Err(Error::Format(format!(
                "mel tensor has {} bins, want {N_MELS}",
                meta.n_mels
            )));
        }
        Ok(Self {
            mel,
            fps: meta.fps,
            sample_rate: meta.sample_rate,
        })
    }
}

/// Number of video frames covered by `n_samples` of audio.
pub fn frame_count(n_samples: usize, sample_rate: u32, fps: f64) -> usize {
    (n_samples as f64 * fps / sample_rate as f64).floor() as usize
}

/// Centre sample of video frame `i`.
pub fn frame_center(i: usize, sample_rate: u32, fps: f64) -> i64 {
    (i as f64 * sample_rate as f64 / fps).round() as i64
}

/// Log-mel spectrogram with one column per video frame.
///
/// Column `i` is the Hann-windowed 1024-sample window centred on
/// [`frame_center`] (zero-padded at the clip boundaries), magnitude
/// spectrum through the filterbank, `ln(1 + E)`, then min-max scaled to
/// `[0, 1]` over the whole clip. A constant result maps to zeros.
pub fn mel_spectrogram(audio: &AudioClip, fps: f64) -> Result<MelSequence> {
    if audio.is_empty() {
        return Err(Error::InvalidArgument("empty audio".into()));
    }
    if !(fps > 0.0 && fps.is_finite()) {
        return Err(Error::InvalidArgument(format!("fps must be positive, got {fps}")));
    }
    if audio.sample_rate < MIN_SAMPLE_RATE {
        return Err(Error::InvalidArgument(format!(
            "sample rate {} below {MIN_SAMPLE_RATE}",
            audio.sample_rate
        )));
    }
    let frames = frame_count(audio.samples.len(), audio.sample_rate, fps);
    if frames == 0 {
        return Err(Error::InvalidArgument(format!(
            "{} samples at {} Hz yield no frames at {fps} fps",
            audio.samples.len(),
            audio.sample_rate
        )));
    }
    let bank = mel_filterbank(audio.sample_rate, N_FFT, N_MELS)?;
    let window: Vec<f64> = (0..N_FFT)
        .map(|n| 0.5 - 0.5 * (2.0 * std::f64::consts::PI * n as f64 / N_FFT as f64).cos())
        .collect();
    let fft = FftPlanner::<f64>::new().plan_fft_forward(N_FFT);
    let mut buf = vec![Complex::new(0.0, 0.0); N_FFT];
    let mut magnitude = vec![0.0f64; bank.n_bins()];
    let half = (N_FFT / 2) as i64;
    let n = audio.samples.len() as i64;

    let mut energies = vec![0.0f64; N_MELS * frames];
    for i in 0..frames {
        let start = frame_center(i, audio.sample_rate, fps) - half;
        for (k, slot) in buf.iter_mut().enumerate() {
            let idx = start + k as i64;
            let s = if (0..n).contains(&idx) {
                audio.samples[idx as usize] as f64
            } else {
                0.0
            };
            *slot = Complex::new(s * window[k], 0.0);
        }
        fft.process(&mut buf);
        for (m, c) in magnitude.iter_mut().zip(&buf) {
            *m = c.norm();
        }
        for (b, row) in bank.weights.iter().enumerate() {
            let e: f64 = row.iter().zip(&magnitude).map(|(w, m)| w * m).sum();
            energies[b * frames + i] = e.ln_1p();
        }
    }

    let (lo, hi) = energies
        .iter()
        .fold((f64::INFINITY, f64::NEG_INFINITY), |(lo, hi), &v| {
            (lo.min(v), hi.max(v))
        });
    let range = hi - lo;
    let data = energies
        .iter()
        .map(|&v| if range > 0.0 { ((v - lo) / range) as f32 } else { 0.0 })
        .collect();
    Ok(MelSequence {
        mel: Tensor2D::new(N_MELS, frames, data)?,
        fps,
        sample_rate: audio.sample_rate,
    })
}
