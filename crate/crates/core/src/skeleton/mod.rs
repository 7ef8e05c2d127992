//! Pose ingestion and the 44-dimensional skeleton feature pipeline.

pub mod features;
pub mod ingest;
pub mod topology;

pub use features::{
    build_sequence, coordinate_tensor, frame_from_column, frames_from_tensor, interpolate_missing, limb_lengths,
    minmax_normalize, skeleton_from_detections, NormMeta, SkeletonSequence, SkeletonSidecar,
};
pub use ingest::{ingest_openpose, read_coordinate_csv, read_pose_csv, write_coordinate_csv, Joint2D, JointFrame};
pub use topology::{validate_topology, COORD_DIMS, FRAME_DIMS, JOINT_NAMES, LIMBS, LIMB_SCALE, NUM_JOINTS, NUM_LIMBS};
