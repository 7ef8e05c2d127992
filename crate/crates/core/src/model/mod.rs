//! The network: highway blocks, encoders, fusion decoder, generation and
//! checkpoints.

pub mod checkpoint;
pub mod config;
pub mod generate;
pub mod network;
pub mod params;

pub use checkpoint::{Checkpoint, CheckpointMeta};
pub use config::{LayerKind, LayerSpec, ModelConfig, DECODER_DILATIONS, ENCODER_DILATIONS};
pub use generate::{generate, generate_streaming, rollout, Rollout, StreamingModel};
pub use network::{
    cdhc_forward, decode, encode_audio, encode_skeleton, forward_graph, teacher_forced_forward, CdhcBlock,
};
pub use params::ModelParams;
