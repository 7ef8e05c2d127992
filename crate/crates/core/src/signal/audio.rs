use std::path::Path;

use crate::error::{Error, Result};

pub const DEFAULT_SAMPLE_RATE: u32 = 22050;

/// Mono audio in `[-1, 1]`.
#[derive(Clone, Debug, PartialEq)]
pub struct AudioClip {
    pub samples: Vec<f32>,
    pub sample_rate: u32,
}

impl AudioClip {
    pub fn new(samples: Vec<f32>, sample_rate: u32) -> Result<Self> {
        if sample_rate == 0 {
            return Err(Error::InvalidArgument("sample rate must be positive".into()));
        }
        if samples.iter().any(|s| !s.is_finite()) {
            return Err(Error::NonFinite("audio samples".into()));
        }
        Ok(Self { samples, sample_rate })
    }

    pub fn duration_seconds(&self) -> f64 {
        self.samples.len() as f64 / self.sample_rate as f64
    }

    pub fn is_empty(&self) -> bool {
        self.samples.is_empty()
    }
}

/// Reads integer PCM or 32-bit float WAV; multi-channel input is downmixed
/// by averaging.
pub fn read_wav(path: impl AsRef<Path>) -> Result<AudioClip> {
    let reader = hound::WavReader::open(path.as_ref())?;
    let spec = reader.spec();
    let channels = spec.channels as usize;
    let interleaved: Vec<f32> = match spec.sample_format {
        hound::SampleFormat::Float => reader.into_samples::<f32>().collect::<Result<_, _>>()?,
        hound::SampleFormat::Int => {
            let scale = 1.0 / (1u64 << (spec.bits_per_sample - 1)) as f32;
            reader
                .into_samples::<i32>()
                .map(|s| s.map(|v| v as f32 * scale))
                .collect::<Result<_, _>>()?
        }
    };
    let samples = interleaved
        .chunks(channels)
        .map(|frame| frame.iter().sum::<f32>() / channels as f32)
        .collect();
    AudioClip::new(samples, spec.sample_rate)
}

/// Writes 16-bit mono PCM.
pub fn write_wav_pcm16(path: impl AsRef<Path>, clip: &AudioClip) -> Result<()> {
    let spec = hound::WavSpec {
        channels: 1,
        sample_rate: clip.sample_rate,
        bits_per_sample: 16,
        sample_format: hound::SampleFormat::Int,
    };
    let mut writer = hound::WavWriter::create(path.as_ref(), spec)?;
    for &s in &clip.samples {
        writer.write_sample((s.clamp(-1.0, 1.0) * 32767.0).round() as i16)?;
    }
    writer.finalize()?;
    Ok(())
}

/// Linear-interpolation resampling. Output sample `i` sits at source
/// position `i · rate_in / rate_out`; positions past the last sample hold it.
pub fn resample_linear(clip: &AudioClip, target_rate: u32) -> Result<AudioClip> {
    if target_rate == 0 {
        return Err(Error::InvalidArgument("target rate must be positive".into()));
    }
    if target_rate == clip.sample_rate || clip.samples.is_empty() {
        return AudioClip::new(clip.samples.clone(), target_rate);
    }
    let n = clip.samples.len();
    let ratio = clip.sample_rate as f64 / target_rate as f64;
    let out_len = ((n as f64) / ratio).round().max(1.0) as usize;
    let src = &clip.samples;
    let samples = (0..out_len)
        .map(|i| {
            let pos = i as f64 * ratio;
            let k = pos.floor() as usize;
            if k + 1 >= n {
                return src[n - 1];
            }
            let frac = (pos - k as f64) as f32;
            src[k] + (src[k + 1] - src[k]) * frac
        })
        .collect();
    AudioClip::new(samples, target_rate)
}

#[cfg(test)]
mod tests {
    use super::*;
    use rustfft::{num_complex::Complex, FftPlanner};

    #[test]
    fn same_rate_is_identity() {
        let clip = AudioClip::new(vec![0.1, -0.4, 0.9, 0.0], 8000).unwrap();
        assert_eq!(resample_linear(&clip, 8000).unwrap(), clip);
    }

    #[test]
    fn constant_stays_constant() {
        let clip = AudioClip::new(vec![0.25; 1001], 44100).unwrap();
        let out = resample_linear(&clip, 22050).unwrap();
        assert!(out.samples.iter().all(|&s| s == 0.25));
        let up = resample_linear(&clip, 48000).unwrap();
        assert!(up.samples.iter().all(|&s| s == 0.25));
    }

    #[test]
    fn duration_preserved() {
        for &(from, to, n) in &[
            (44100u32, 22050u32, 44100usize),
            (22050, 48000, 12345),
            (16000, 22050, 999),
        ] {
            let clip = AudioClip::new(vec![0.0; n], from).unwrap();
            let out = resample_linear(&clip, to).unwrap();
            assert!((out.duration_seconds() - clip.duration_seconds()).abs() <= 1.0 / to as f64);
        }
    }

    #[test]
    fn tone_keeps_dominant_frequency() {
        let n = 44100;
        let samples: Vec<f32> = (0..n)
            .map(|i| (2.0 * std::f64::consts::PI * 440.0 * i as f64 / 44100.0).sin() as f32 * 0.8)
            .collect();
        let out = resample_linear(&AudioClip::new(samples, 44100).unwrap(), 22050).unwrap();
        // DFT oracle over the full second: bin k is k Hz.
        let mut buf: Vec<Complex<f64>> = out.samples.iter().map(|&s| Complex::new(s as f64, 0.0)).collect();
        let len = buf.len();
        FftPlanner::new().plan_fft_forward(len).process(&mut buf);
        let peak = (1..len / 2)
            .max_by(|&a, &b| buf[a].norm().total_cmp(&buf[b].norm()))
            .unwrap();
        let hz_per_bin = 22050.0 / len as f64;
        assert!(
            (peak as f64 * hz_per_bin - 440.0).abs() <= hz_per_bin,
            "peak bin {peak}"
        );
    }

    #[test]
    fn wav_round_trip_pcm16() {
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("a.wav");
        let clip = AudioClip::new(vec![0.0, 0.5, -0.5, 0.25], 22050).unwrap();
        write_wav_pcm16(&path, &clip).unwrap();
        let back = read_wav(&path).unwrap();
        assert_eq!(back.sample_rate, 22050);
        for (a, b) in back.samples.iter().zip(&clip.samples) {
            assert!((a - b).abs() < 1e-4);
        }
    }

    #[test]
    fn stereo_float_downmix() {
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("s.wav");
        let spec = hound::WavSpec {
            channels: 2,
            sample_rate: 8000,
            bits_per_sample: 32,
            sample_format: hound::SampleFormat::Float,
        };
        let mut w = hound::WavWriter::create(&path, spec).unwrap();
        for &(l, r) in &[(1.0f32, 0.0f32), (0.5, -0.5), (-1.0, -0.5)] {
            w.write_sample(l).unwrap();
            w.write_sample(r).unwrap();
        }
        w.finalize().unwrap();
        let clip = read_wav(&path).unwrap();
        assert_eq!(clip.samples, vec![0.5, 0.0, -0.75]);
    }
}
