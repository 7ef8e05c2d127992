//! Synthetic fixtures shared by the integration tests.

#![allow(dead_code)]

use std::f64::consts::PI;

use choreo::signal::{mel_spectrogram, AudioClip, MelSequence};
use choreo::skeleton::{skeleton_from_detections, JointFrame, SkeletonSequence, NUM_JOINTS};
use choreo::training::ClipPair;

pub const FPS: f64 = 30.0;
pub const SAMPLE_RATE: u32 = 22050;

/// Rest pose in pixels, joint order of the topology.
const REST: [(f64, f64); NUM_JOINTS] = [
    (320.0, 80.0),
    (320.0, 130.0),
    (280.0, 135.0),
    (260.0, 190.0),
    (250.0, 240.0),
    (360.0, 135.0),
    (380.0, 190.0),
    (390.0, 240.0),
    (320.0, 210.0),
    (295.0, 260.0),
    (290.0, 330.0),
    (288.0, 400.0),
    (345.0, 260.0),
    (350.0, 330.0),
    (352.0, 400.0),
];

/// Dancer swaying on a circle with period `period` frames: the whole body
/// moves 120 px in y and 80 px in x, the hands add a small wave of their own.
pub fn periodic_joints(frames: usize, period: f64) -> Vec<JointFrame> {
    (0..frames)
        .map(|t| {
            let phase = 2.0 * PI * t as f64 / period;
            let mut c = REST;
            for (j, p) in c.iter_mut().enumerate() {
                p.0 += 80.0 * phase.cos();
                p.1 += 120.0 * phase.sin();
                if j == 4 || j == 7 {
                    p.1 += 15.0 * (phase + 1.0).sin();
                }
            }
            JointFrame::from_coords(&c)
        })
        .collect()
}

pub fn periodic_skeleton(frames: usize, period: f64) -> SkeletonSequence {
    skeleton_from_detections(&periodic_joints(frames, period), FPS).unwrap()
}

/// Decaying 1 kHz clicks, one every `period` video frames, long enough to
/// cover `frames` video frames.
pub fn click_track(frames: usize, period: f64) -> AudioClip {
    let n = ((frames as f64 + 0.5) / FPS * SAMPLE_RATE as f64).ceil() as usize;
    let mut samples = vec![0.0f32; n];
    let spacing = period / FPS * SAMPLE_RATE as f64;
    let burst = (0.02 * SAMPLE_RATE as f64) as usize;
    let mut k = 0;
    loop {
        let start = (k as f64 * spacing).round() as usize;
        if start >= n {
            break;
        }
        for i in 0..burst.min(n - start) {
            let t = i as f64 / SAMPLE_RATE as f64;
            samples[start + i] = (0.8 * (2.0 * PI * 1000.0 * t).sin() * (-t * 200.0).exp()) as f32;
        }
        k += 1;
    }
    AudioClip::new(samples, SAMPLE_RATE).unwrap()
}

pub fn click_mel(frames: usize, period: f64) -> MelSequence {
    mel_spectrogram(&click_track(frames, period), FPS).unwrap()
}

/// The synthetic training pair: periodic dancer plus click track.
pub fn periodic_pair(frames: usize, period: f64) -> ClipPair {
    ClipPair::new(
        "synthetic",
        periodic_skeleton(frames, period),
        click_mel(frames, period),
    )
    .unwrap()
}

/// Writes joints as a 45-column pose CSV with confidence 0.9.
pub fn write_pose_csv(path: &std::path::Path, frames: &[JointFrame]) {
    let mut out = String::new();
    for f in frames {
        let row: Vec<String> = f
            .joints
            .iter()
            .flat_map(|j| [j.x.to_string(), j.y.to_string(), "0.9".to_string()])
            .collect();
        out.push_str(&row.join(","));
        out.push('\n');
    }
    std::fs::write(path, out).unwrap();
}
