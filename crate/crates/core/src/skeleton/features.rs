//! Gap filling, per-clip normalisation and the 44-dimensional frame vector.

use std::fs;
use std::path::Path;

use serde::{Deserialize, Serialize};

use super::ingest::{Joint2D, JointFrame};
use super::topology::{COORD_DIMS, FRAME_DIMS, LIMBS, LIMB_SCALE, NUM_JOINTS, NUM_LIMBS, TOPOLOGY_VERSION};
use crate::error::{dim_err, Error, Result};
use crate::numerics::io::{load_tensor, save_tensor};
use crate::numerics::Tensor2D;

/// Fills unrecognised joints by linear interpolation in time between the
/// nearest recognised frames; leading and trailing gaps hold the nearest
/// recognised value.
pub fn interpolate_missing(frames: &[JointFrame]) -> Result<Vec<JointFrame>> {
    if frames.is_empty() {
        return Err(Error::InvalidArgument("no frames".into()));
    }
    let mut out = frames.to_vec();
    for j in 0..NUM_JOINTS {
        let known: Vec<usize> = (0..frames.len()).filter(|&t| frames[t].joints[j].present).collect();
        let (Some(&first), Some(&last)) = (known.first(), known.last()) else {
            return Err(Error::Degenerate(format!(
                "joint {j} is never recognised in {} frames",
                frames.len()
            )));
        };
        let (head, tail) = (frames[first].joints[j], frames[last].joints[j]);
        for f in &mut out[..first] {
            f.joints[j] = Joint2D::at(head.x, head.y);
        }
        for f in &mut out[last + 1..] {
            f.joints[j] = Joint2D::at(tail.x, tail.y);
        }
        for pair in known.windows(2) {
            let (a, b) = (pair[0], pair[1]);
            let (ja, jb) = (frames[a].joints[j], frames[b].joints[j]);
            for (t, f) in out.iter_mut().enumerate().take(b).skip(a + 1) {
                let w = (t - a) as f64 / (b - a) as f64;
                f.joints[j] = Joint2D::at(ja.x + (jb.x - ja.x) * w, ja.y + (jb.y - ja.y) * w);
            }
        }
    }
    Ok(out)
}

/// Per-axis value range used for min-max normalisation.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct NormMeta {
    pub x_min: f64,
    pub x_max: f64,
    pub y_min: f64,
    pub y_max: f64,
}

impl NormMeta {
    pub fn denormalize(&self, frame: &JointFrame) -> JointFrame {
        let mut out = *frame;
        for j in out.joints.iter_mut() {
            j.x = self.x_min + j.x * (self.x_max - self.x_min);
            j.y = self.y_min + j.y * (self.y_max - self.y_min);
        }
        out
    }

    /// Elementwise mean of several ranges.
    pub fn average(metas: &[NormMeta]) -> Option<NormMeta> {
        if metas.is_empty() {
            return None;
        }
        let n = metas.len() as f64;
        let sum = |f: fn(&NormMeta) -> f64| metas.iter().map(f).sum::<f64>() / n;
        Some(NormMeta {
            x_min: sum(|m| m.x_min),
            x_max: sum(|m| m.x_max),
            y_min: sum(|m| m.y_min),
            y_max: sum(|m| m.y_max),
        })
    }
}

/// Min-max scales x and y separately over all joints and frames of a clip.
pub fn minmax_normalize(frames: &[JointFrame]) -> Result<(Vec<JointFrame>, NormMeta)> {
    if frames.is_empty() {
        return Err(Error::InvalidArgument("no frames".into()));
    }
    if frames.iter().any(|f| !f.all_present()) {
        return Err(Error::InvalidArgument(
            "normalisation needs every joint present; interpolate first".into(),
        ));
    }
    let mut meta = NormMeta {
        x_min: f64::INFINITY,
        x_max: f64::NEG_INFINITY,
        y_min: f64::INFINITY,
        y_max: f64::NEG_INFINITY,
    };
    for j in frames.iter().flat_map(|f| f.joints.iter()) {
        meta.x_min = meta.x_min.min(j.x);
        meta.x_max = meta.x_max.max(j.x);
        meta.y_min = meta.y_min.min(j.y);
        meta.y_max = meta.y_max.max(j.y);
    }
    let spans = [meta.x_max - meta.x_min, meta.y_max - meta.y_min];
    if spans
        .iter()
        .any(|s| s.partial_cmp(&0.0) != Some(std::cmp::Ordering::Greater))
    {
        return Err(Error::Degenerate(format!("zero coordinate range: {meta:?}")));
    }
    let (sx, sy) = (meta.x_max - meta.x_min, meta.y_max - meta.y_min);
    let out = frames
        .iter()
        .map(|f| {
            let mut g = *f;
            for j in g.joints.iter_mut() {
                j.x = (j.x - meta.x_min) / sx;
                j.y = (j.y - meta.y_min) / sy;
            }
            g
        })
        .collect();
    Ok((out, meta))
}

/// Euclidean length of each limb, in [`LIMBS`] order.
pub fn limb_lengths(frame: &JointFrame) -> [f64; NUM_LIMBS] {
    LIMBS.map(|(a, b)| {
        let (ja, jb) = (frame.joints[a], frame.joints[b]);
        (ja.x - jb.x).hypot(ja.y - jb.y)
    })
}

/// Normalised skeleton clip: `44 × T` frame vectors plus the range needed
/// to map coordinates back to pixels.
#[derive(Clone, Debug, PartialEq)]
pub struct SkeletonSequence {
    pub frames: Tensor2D<f32>,
    pub norm_meta: NormMeta,
    pub fps: f64,
}

/// Sidecar written next to a skeleton tensor.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct SkeletonSidecar {
    pub topology_version: String,
    pub fps: f64,
    pub frames: usize,
    pub norm_meta: NormMeta,
}

impl SkeletonSequence {
    pub fn len(&self) -> usize {
        self.frames.frames()
    }

    pub fn is_empty(&self) -> bool {
        false
    }

    /// Coordinates of frame `t` (normalised units).
    pub fn joint_frame(&self, t: usize) -> JointFrame {
        frame_from_column(&self.frames.column(t))
    }

    pub fn joint_frames(&self) -> Vec<JointFrame> {
        frames_from_tensor(&self.frames)
    }

    pub fn sidecar(&self) -> SkeletonSidecar {
        SkeletonSidecar {
            topology_version: TOPOLOGY_VERSION.to_string(),
            fps: self.fps,
            frames: self.len(),
            norm_meta: self.norm_meta,
        }
    }

    /// Writes `<stem>.l2d` and `<stem>.json`.
    pub fn save(&self, tensor_path: impl AsRef<Path>) -> Result<()> {
        let tensor_path = tensor_path.as_ref();
        save_tensor(tensor_path, &self.frames)?;
        let side = tensor_path.with_extension("json");
        let text = serde_json::to_string_pretty(&self.sidecar())?;
        fs::write(&side, text + "\n").map_err(|e| Error::io(&side, e))
    }

    pub fn load(tensor_path: impl AsRef<Path>) -> Result<Self> {
        let tensor_path = tensor_path.as_ref();
        let frames = load_tensor(tensor_path)?;
        let side = tensor_path.with_extension("json");
        let text = fs::read_to_string(&side).map_err(|e| Error::io(&side, e))?;
        let meta: SkeletonSidecar = serde_json::from_str(&text)?;
        if meta.topology_version != TOPOLOGY_VERSION {
            return Err(Error::Format(format!(
                "topology `{}` != `{TOPOLOGY_VERSION}`",
                meta.topology_version
            )));
        }
        frames.ensure_shape(FRAME_DIMS, meta.frames, "skeleton tensor")?;
        Ok(Self {
            frames,
            norm_meta: meta.norm_meta,
            fps: meta.fps,
        })
    }
}

/// 44-dim frame vector: 30 interleaved coordinates then the 14 limb
/// lengths scaled by [`LIMB_SCALE`].
pub fn frame_vector(frame: &JointFrame) -> [f64; FRAME_DIMS] {
    let mut v = [0.0; FRAME_DIMS];
    for (j, joint) in frame.joints.iter().enumerate() {
        v[2 * j] = joint.x;
        v[2 * j + 1] = joint.y;
    }
    for (e, len) in limb_lengths(frame).iter().enumerate() {
        v[COORD_DIMS + e] = (len * LIMB_SCALE).min(1.0);
    }
    v
}

/// Packs normalised frames into a [`SkeletonSequence`].
pub fn build_sequence(normalized: &[JointFrame], norm_meta: NormMeta, fps: f64) -> Result<SkeletonSequence> {
    if normalized.is_empty() {
        return Err(Error::InvalidArgument("no frames".into()));
    }
    let columns: Vec<Vec<f32>> = normalized
        .iter()
        .map(|f| frame_vector(f).iter().map(|&v| v as f32).collect())
        .collect();
    Ok(SkeletonSequence {
        frames: Tensor2D::from_columns(&columns)?,
        norm_meta,
        fps,
    })
}

/// Full pipeline from raw detections: interpolate, normalise, pack.
pub fn skeleton_from_detections(raw: &[JointFrame], fps: f64) -> Result<SkeletonSequence> {
    let filled = interpolate_missing(raw)?;
    let (normalized, meta) = minmax_normalize(&filled)?;
    build_sequence(&normalized, meta, fps)
}

/// Reads joint coordinates from the first 30 entries of a frame vector.
pub fn frame_from_column(column: &[f32]) -> JointFrame {
    let mut coords = [(0.0, 0.0); NUM_JOINTS];
    for (j, c) in coords.iter_mut().enumerate() {
        *c = (column[2 * j] as f64, column[2 * j + 1] as f64);
    }
    JointFrame::from_coords(&coords)
}

/// Joint coordinates of every column of a `≥ 30 × T` tensor.
pub fn frames_from_tensor(tensor: &Tensor2D<f32>) -> Vec<JointFrame> {
    (0..tensor.frames())
        .map(|t| frame_from_column(&tensor.column(t)))
        .collect()
}

/// Packs coordinate frames into a `30 × T` tensor.
pub fn coordinate_tensor(frames: &[JointFrame]) -> Result<Tensor2D<f32>> {
    if frames.is_empty() {
        return Err(dim_err!("no frames"));
    }
    let cols: Vec<Vec<f32>> = frames
        .iter()
        .map(|f| f.joints.iter().flat_map(|j| [j.x as f32, j.y as f32]).collect())
        .collect();
    Tensor2D::from_columns(&cols)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::skeleton::topology::joint;

    fn frame_with(value: f64) -> JointFrame {
        JointFrame::from_coords(&[(value, value); NUM_JOINTS])
    }

    #[test]
    fn interpolates_between_neighbours() {
        let mut frames = vec![frame_with(0.0), frame_with(0.0), frame_with(1.0)];
        frames[1].joints[3].present = false;
        let out = interpolate_missing(&frames).unwrap();
        assert_eq!(out[1].joints[3].x, 0.5);
        assert!(out[1].joints[3].present);
    }

    #[test]
    fn boundary_gaps_hold() {
        let mut frames = vec![frame_with(7.0), frame_with(3.0)];
        frames[0].joints[0].present = false;
        let out = interpolate_missing(&frames).unwrap();
        assert_eq!(out[0].joints[0].x, 3.0);
    }

    #[test]
    fn complete_input_is_unchanged() {
        let frames = vec![frame_with(1.0), frame_with(2.0)];
        assert_eq!(interpolate_missing(&frames).unwrap(), frames);
    }

    #[test]
    fn never_seen_joint_is_an_error() {
        let mut frames = vec![frame_with(1.0), frame_with(2.0)];
        for f in frames.iter_mut() {
            f.joints[5].present = false;
        }
        assert!(matches!(interpolate_missing(&frames), Err(Error::Degenerate(_))));
    }

    #[test]
    fn normalise_midpoint() {
        let mut coords = [(2.0, 0.0); NUM_JOINTS];
        coords[1] = (10.0, 1.0);
        coords[2] = (6.0, 0.5);
        let (out, meta) = minmax_normalize(&[JointFrame::from_coords(&coords)]).unwrap();
        assert_eq!(out[0].joints[2].x, 0.5);
        assert_eq!((meta.x_min, meta.x_max), (2.0, 10.0));
    }

    #[test]
    fn unit_range_unchanged() {
        let mut coords = [(0.25, 0.75); NUM_JOINTS];
        coords[0] = (0.0, 0.0);
        coords[1] = (1.0, 1.0);
        let f = JointFrame::from_coords(&coords);
        let (out, _) = minmax_normalize(&[f]).unwrap();
        assert_eq!(out[0], f);
    }

    #[test]
    fn degenerate_axis() {
        let coords = [(1.0, 2.0); NUM_JOINTS];
        let err = minmax_normalize(&[JointFrame::from_coords(&coords)]).unwrap_err();
        assert!(matches!(err, Error::Degenerate(_)));
    }

    #[test]
    fn limb_345_and_coincident() {
        let mut coords = [(0.0, 0.0); NUM_JOINTS];
        coords[joint::NECK] = (3.0, 4.0);
        let l = limb_lengths(&JointFrame::from_coords(&coords));
        assert_eq!(l[0], 5.0);
        assert!(limb_lengths(&frame_with(0.3)).iter().all(|&v| v == 0.0));
    }

    #[test]
    fn diagonal_limb_stores_one() {
        let mut coords = [(0.0, 0.0); NUM_JOINTS];
        coords[joint::HEAD] = (1.0, 1.0);
        let seq = build_sequence(
            &[JointFrame::from_coords(&coords)],
            NormMeta {
                x_min: 0.0,
                x_max: 1.0,
                y_min: 0.0,
                y_max: 1.0,
            },
            30.0,
        )
        .unwrap();
        assert_eq!(seq.frames.shape(), (44, 1));
        assert_eq!(seq.frames.get(COORD_DIMS, 0), 1.0);
    }

    #[test]
    fn sequence_save_load() {
        let dir = tempfile::tempdir().unwrap();
        let frames: Vec<JointFrame> = (0..4)
            .map(|t| {
                let mut c = [(0.0, 0.0); NUM_JOINTS];
                for (j, p) in c.iter_mut().enumerate() {
                    *p = (j as f64 * 3.0 + t as f64, j as f64 * 2.0 - t as f64);
                }
                JointFrame::from_coords(&c)
            })
            .collect();
        let seq = skeleton_from_detections(&frames, 25.0).unwrap();
        let path = dir.path().join("clip.l2d");
        seq.save(&path).unwrap();
        assert_eq!(SkeletonSequence::load(&path).unwrap(), seq);
    }
}
