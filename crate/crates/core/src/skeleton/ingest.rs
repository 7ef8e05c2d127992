//! Pose ingestion: per-frame keypoint JSON directories and canonical CSV.

use std::fs;
use std::path::{Path, PathBuf};

use serde::Deserialize;

use super::topology::{JOINT_NAMES, NUM_JOINTS};
use crate::error::{Error, Result};

/// Keypoints below this confidence count as unrecognised.
pub const CONFIDENCE_THRESHOLD: f64 = 0.1;

#[derive(Clone, Copy, Debug, Default, PartialEq)]
pub struct Joint2D {
    pub x: f64,
    pub y: f64,
    pub present: bool,
}

impl Joint2D {
    pub fn at(x: f64, y: f64) -> Self {
        Self { x, y, present: true }
    }

    pub const MISSING: Joint2D = Joint2D {
        x: 0.0,
        y: 0.0,
        present: false,
    };
}

/// One frame of the 15-joint skeleton.
#[derive(Clone, Copy, Debug, Default, PartialEq)]
pub struct JointFrame {
    pub joints: [Joint2D; NUM_JOINTS],
}

impl JointFrame {
    pub fn missing() -> Self {
        Self {
            joints: [Joint2D::MISSING; NUM_JOINTS],
        }
    }

    pub fn from_coords(coords: &[(f64, f64); NUM_JOINTS]) -> Self {
        let mut f = Self::missing();
        for (j, &(x, y)) in coords.iter().enumerate() {
            f.joints[j] = Joint2D::at(x, y);
        }
        f
    }

    pub fn coords(&self) -> [(f64, f64); NUM_JOINTS] {
        self.joints.map(|j| (j.x, j.y))
    }

    pub fn all_present(&self) -> bool {
        self.joints.iter().all(|j| j.present)
    }
}

/// Source keypoint layouts of the pose estimator.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum KeypointLayout {
    /// 18-point COCO layout (no mid-hip point).
    Coco18,
    /// 25-point BODY_25 layout.
    Body25,
}

impl KeypointLayout {
    pub fn from_count(n: usize) -> Option<Self> {
        match n {
            18 => Some(Self::Coco18),
            25 => Some(Self::Body25),
            _ => None,
        }
    }

    /// Source index per target joint; `None` for Chest in COCO-18, which is
    /// synthesised from the hips.
    fn source_indices(self) -> [Option<usize>; NUM_JOINTS] {
        // Target order: Head Neck RSho REl RWr LSho LEl LWr Chest RHip RKnee RAnk LHip LKnee LAnk
        match self {
            Self::Coco18 => [
                Some(0),
                Some(1),
                Some(2),
                Some(3),
                Some(4),
                Some(5),
                Some(6),
                Some(7),
                None,
                Some(8),
                Some(9),
                Some(10),
                Some(11),
                Some(12),
                Some(13),
            ],
            Self::Body25 => [
                Some(0),
                Some(1),
                Some(2),
                Some(3),
                Some(4),
                Some(5),
                Some(6),
                Some(7),
                Some(8),
                Some(9),
                Some(10),
                Some(11),
                Some(12),
                Some(13),
                Some(14),
            ],
        }
    }
}

/// Maps a flat `(x, y, confidence)` keypoint array onto the 15 joints.
pub fn map_keypoints(flat: &[f64]) -> Result<JointFrame> {
    if !flat.len().is_multiple_of(3) {
        return Err(Error::Format(format!(
            "keypoint array length {} is not a multiple of 3",
            flat.len()
        )));
    }
    let layout = KeypointLayout::from_count(flat.len() / 3)
        .ok_or_else(|| Error::Format(format!("unsupported keypoint layout with {} points", flat.len() / 3)))?;
    let point = |k: usize| {
        let (x, y, c) = (flat[3 * k], flat[3 * k + 1], flat[3 * k + 2]);
        if c >= CONFIDENCE_THRESHOLD && x.is_finite() && y.is_finite() {
            Joint2D::at(x, y)
        } else {
            Joint2D::MISSING
        }
    };
    let mut frame = JointFrame::missing();
    for (j, src) in layout.source_indices().iter().enumerate() {
        frame.joints[j] = match src {
            Some(k) => point(*k),
            None => {
                // COCO-18 hips: 8 (right), 11 (left)
                let (r, l) = (point(8), point(11));
                if r.present && l.present {
                    Joint2D::at((r.x + l.x) / 2.0, (r.y + l.y) / 2.0)
                } else {
                    Joint2D::MISSING
                }
            }
        };
    }
    Ok(frame)
}

#[derive(Deserialize)]
struct PoseFile {
    #[serde(default)]
    people: Vec<Person>,
}

#[derive(Deserialize)]
struct Person {
    #[serde(default)]
    pose_keypoints_2d: Option<Vec<f64>>,
    #[serde(default)]
    pose_keypoints: Option<Vec<f64>>,
}

/// Parses one keypoint JSON document, taking the first detected person.
pub fn parse_pose_json(text: &str) -> Result<JointFrame> {
    let file: PoseFile = serde_json::from_str(text)?;
    let Some(person) = file.people.first() else {
        return Ok(JointFrame::missing());
    };
    match person.pose_keypoints_2d.as_ref().or(person.pose_keypoints.as_ref()) {
        Some(flat) if !flat.is_empty() => map_keypoints(flat),
        _ => Ok(JointFrame::missing()),
    }
}

/// Reads every `*.json` file in `dir`, ordered by file name.
pub fn ingest_openpose(dir: impl AsRef<Path>) -> Result<Vec<JointFrame>> {
    let dir = dir.as_ref();
    let mut files: Vec<PathBuf> = fs::read_dir(dir)
        .map_err(|e| Error::io(dir, e))?
        .filter_map(|entry| entry.ok().map(|e| e.path()))
        .filter(|p| p.extension().is_some_and(|e| e == "json"))
        .collect();
    files.sort();
    if files.is_empty() {
        return Err(Error::InvalidArgument(format!(
            "{}: no keypoint JSON frames",
            dir.display()
        )));
    }
    files
        .iter()
        .map(|p| {
            let text = fs::read_to_string(p).map_err(|e| Error::io(p, e))?;
            parse_pose_json(&text).map_err(|e| Error::Format(format!("{}: {e}", p.display())))
        })
        .collect()
}

fn parse_numeric_row(record: &csv::StringRecord) -> Option<Vec<f64>> {
    record.iter().map(|f| f.trim().parse::<f64>().ok()).collect()
}

/// Reads a CSV of `T` rows × 45 columns (`x, y, confidence` per joint in
/// topology order). A non-numeric first row is treated as a header.
pub fn read_pose_csv(path: impl AsRef<Path>) -> Result<Vec<JointFrame>> {
    let path = path.as_ref();
    let mut reader = csv::ReaderBuilder::new().has_headers(false).from_path(path)?;
    let mut frames = Vec::new();
    for (row, record) in reader.records().enumerate() {
        let record = record?;
        let Some(values) = parse_numeric_row(&record) else {
            if row == 0 {
                continue;
            }
            return Err(Error::Format(format!("{}: row {row} is not numeric", path.display())));
        };
        if values.len() != 3 * NUM_JOINTS {
            return Err(Error::Format(format!(
                "{}: row {row} has {} columns, want {}",
                path.display(),
                values.len(),
                3 * NUM_JOINTS
            )));
        }
        let mut frame = JointFrame::missing();
        for j in 0..NUM_JOINTS {
            let (x, y, c) = (values[3 * j], values[3 * j + 1], values[3 * j + 2]);
            if c >= CONFIDENCE_THRESHOLD {
                frame.joints[j] = Joint2D::at(x, y);
            }
        }
        frames.push(frame);
    }
    if frames.is_empty() {
        return Err(Error::InvalidArgument(format!("{}: no frames", path.display())));
    }
    Ok(frames)
}

/// Header for 30-column coordinate files.
pub fn coordinate_header() -> Vec<String> {
    JOINT_NAMES
        .iter()
        .flat_map(|n| [format!("{n}_x"), format!("{n}_y")])
        .collect()
}

pub fn write_coordinate_csv(path: impl AsRef<Path>, frames: &[JointFrame]) -> Result<()> {
    let mut w = csv::Writer::from_path(path.as_ref())?;
    w.write_record(coordinate_header())?;
    for f in frames {
        w.write_record(f.joints.iter().flat_map(|j| [j.x.to_string(), j.y.to_string()]))?;
    }
    w.flush().map_err(|e| Error::io(path.as_ref(), e))?;
    Ok(())
}

/// Reads 30-column coordinate rows; a non-numeric first row is a header.
pub fn read_coordinate_csv(path: impl AsRef<Path>) -> Result<Vec<JointFrame>> {
    let path = path.as_ref();
    let mut reader = csv::ReaderBuilder::new()
        .has_headers(false)
        .flexible(true)
        .from_path(path)?;
    let mut frames = Vec::new();
    for (row, record) in reader.records().enumerate() {
        let record = record?;
        let Some(values) = parse_numeric_row(&record) else {
            if row == 0 {
                continue;
            }
            return Err(Error::Format(format!("{}: row {row} is not numeric", path.display())));
        };
        if values.len() != 2 * NUM_JOINTS {
            return Err(Error::Format(format!(
                "{}: row {row} has {} columns, want {}",
                path.display(),
                values.len(),
                2 * NUM_JOINTS
            )));
        }
        let mut coords = [(0.0, 0.0); NUM_JOINTS];
        for (j, c) in coords.iter_mut().enumerate() {
            *c = (values[2 * j], values[2 * j + 1]);
        }
        frames.push(JointFrame::from_coords(&coords));
    }
    Ok(frames)
}
