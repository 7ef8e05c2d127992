//! Minimal differentiable numerical core.

pub mod adam;
pub mod graph;
pub mod io;
pub mod ops;
pub mod tensor;

pub use adam::{adam_step, AdamHyper, AdamState};
pub use graph::{Gradients, Graph, NodeId};
pub use ops::{activate, conv1d_causal, l1_loss, pointwise_affine, Activation, ConvSpec};
pub use tensor::{Real, Tensor2D};
