//! Audio frontend and autocorrelation utilities.

pub mod audio;
pub mod autocorr;
pub mod mel;

pub use audio::{read_wav, resample_linear, write_wav_pcm16, AudioClip, DEFAULT_SAMPLE_RATE};
pub use autocorr::{autocorrelate, Correlogram, PEAK_THRESHOLD};
pub use mel::{mel_filterbank, mel_spectrogram, MelFilterbank, MelSequence, MelSidecar, N_FFT, N_MELS};
