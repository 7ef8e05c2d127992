//! One-frame-ahead L1 objective with the limb-length term.

use serde::{Deserialize, Serialize};

use crate::error::{dim_err, Result};
use crate::numerics::{Graph, NodeId, Real, Tensor2D};
use crate::skeleton::{COORD_DIMS, FRAME_DIMS, LIMBS, LIMB_SCALE, NUM_LIMBS};

/// Loss nodes recorded on a tape.
#[derive(Clone, Copy, Debug)]
pub struct LossNodes {
    pub total: NodeId,
    pub l1: NodeId,
    pub limb: NodeId,
}

/// Scalar loss values.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct LossTerms {
    pub total: f64,
    pub l1: f64,
    pub limb: f64,
}

/// Records the loss of `pred` (column `t` predicts frame `t + 1`) against
/// `target`:
///
/// - `l1`: mean `|pred[:, 0..W−1] − target[:, 1..W]|` over all 44 rows;
/// - `limb`: mean `|limb lengths of pred coordinates / √2 − target length
///   block|` over the same frames;
/// - `total = l1 + λ·limb`.
pub fn loss_graph<T: Real>(g: &mut Graph<'_, T>, pred: NodeId, target: NodeId, limb_weight: T) -> Result<LossNodes> {
    let (p, t) = (g.value(pred), g.value(target));
    if p.shape() != t.shape() {
        return Err(dim_err!("prediction {:?} vs target {:?}", p.shape(), t.shape()));
    }
    if p.channels() != FRAME_DIMS || p.frames() < 2 {
        return Err(dim_err!("loss needs {FRAME_DIMS} × (≥ 2) tensors, got {:?}", p.shape()));
    }
    let n = p.frames() - 1;
    let shifted_pred = g.slice_frames(pred, 0, n)?;
    let shifted_target = g.slice_frames(target, 1, n)?;
    let l1 = g.l1(shifted_pred, shifted_target)?;
    let lengths = g.pair_distances(shifted_pred, &LIMBS, T::from_f64(LIMB_SCALE))?;
    let target_lengths = g.slice_channels(shifted_target, COORD_DIMS, NUM_LIMBS)?;
    let limb = g.l1(lengths, target_lengths)?;
    let weighted = g.scale(limb, limb_weight)?;
    let total = g.add(l1, weighted)?;
    Ok(LossNodes { total, l1, limb })
}

pub(crate) fn read_terms<T: Real>(g: &Graph<'_, T>, nodes: &LossNodes) -> LossTerms {
    LossTerms {
        total: g.value(nodes.total).get(0, 0).as_f64(),
        l1: g.value(nodes.l1).get(0, 0).as_f64(),
        limb: g.value(nodes.limb).get(0, 0).as_f64(),
    }
}

pub fn compute_loss<T: Real>(pred: &Tensor2D<T>, target: &Tensor2D<T>, limb_weight: T) -> Result<LossTerms> {
    let mut g = Graph::new();
    let p = g.input_ref(pred);
    let t = g.input_ref(target);
    let nodes = loss_graph(&mut g, p, t, limb_weight)?;
    Ok(read_terms(&g, &nodes))
}

/// Loss of the predictor that repeats its input frame.
pub fn identity_baseline<T: Real>(skeleton: &Tensor2D<T>, limb_weight: T) -> Result<LossTerms> {
    compute_loss(skeleton, skeleton, limb_weight)
}
