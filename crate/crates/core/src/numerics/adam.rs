use std::collections::BTreeMap;

use serde::{Deserialize, Serialize};

use super::graph::Gradients;
use super::tensor::Tensor2D;
use crate::error::{dim_err, Error, Result};

pub const DEFAULT_LEARNING_RATE: f64 = 2e-4;

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct AdamHyper {
    pub learning_rate: f64,
    pub beta1: f64,
    pub beta2: f64,
    pub epsilon: f64,
}

impl Default for AdamHyper {
    fn default() -> Self {
        Self {
            learning_rate: DEFAULT_LEARNING_RATE,
            beta1: 0.9,
            beta2: 0.999,
            epsilon: 1e-8,
        }
    }
}

/// Bias-corrected Adam moments, one pair per parameter.
#[derive(Clone, Debug, PartialEq)]
pub struct AdamState {
    pub hyper: AdamHyper,
    pub step: u64,
    pub first_moment: BTreeMap<String, Tensor2D<f32>>,
    pub second_moment: BTreeMap<String, Tensor2D<f32>>,
}

impl AdamState {
    pub fn new(hyper: AdamHyper) -> Self {
        Self {
            hyper,
            step: 0,
            first_moment: BTreeMap::new(),
            second_moment: BTreeMap::new(),
        }
    }

    pub fn with_learning_rate(learning_rate: f64) -> Self {
        Self::new(AdamHyper {
            learning_rate,
            ..AdamHyper::default()
        })
    }
}

/// One Adam update over every parameter in `params`.
///
/// Every parameter must have a gradient of the same shape; moments are
/// created lazily on the first step.
pub fn adam_step(
    params: &mut BTreeMap<String, Tensor2D<f32>>,
    grads: &Gradients<f32>,
    state: &mut AdamState,
) -> Result<()> {
    for (name, p) in params.iter() {
        let g = grads.get(name).ok_or_else(|| Error::MissingGradient(name.clone()))?;
        if g.shape() != p.shape() {
            return Err(dim_err!(
                "gradient `{name}` has shape {:?}, parameter {:?}",
                g.shape(),
                p.shape()
            ));
        }
        g.ensure_finite(name)?;
    }

    state.step += 1;
    let h = state.hyper;
    let t = state.step as i32;
    let bc1 = (1.0 - h.beta1.powi(t)) as f32;
    let bc2 = (1.0 - h.beta2.powi(t)) as f32;
    let (b1, b2) = (h.beta1 as f32, h.beta2 as f32);
    let (lr, eps) = (h.learning_rate as f32, h.epsilon as f32);

    for (name, p) in params.iter_mut() {
        let g = grads.get(name).expect("checked above");
        let (c, f) = p.shape();
        let m = state
            .first_moment
            .entry(name.clone())
            .or_insert_with(|| Tensor2D::zeros(c, f));
        let v = state
            .second_moment
            .entry(name.clone())
            .or_insert_with(|| Tensor2D::zeros(c, f));
        for (((pv, &gv), mv), vv) in p
            .data_mut()
            .iter_mut()
            .zip(g.data())
            .zip(m.data_mut())
            .zip(v.data_mut())
        {
            *mv = b1 * *mv + (1.0 - b1) * gv;
            *vv = b2 * *vv + (1.0 - b2) * gv * gv;
            let m_hat = *mv / bc1;
            let v_hat = *vv / bc2;
            *pv -= lr * m_hat / (v_hat.sqrt() + eps);
        }
    }
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;

    fn single(value: f32) -> BTreeMap<String, Tensor2D<f32>> {
        BTreeMap::from([("p".to_string(), Tensor2D::filled(2, 2, value))])
    }

    fn grads(value: f32) -> Gradients<f32> {
        Gradients::new(BTreeMap::from([("p".to_string(), Tensor2D::filled(2, 2, value))]))
    }

    #[test]
    fn first_step_moves_by_learning_rate() {
        let mut params = single(1.0);
        let mut state = AdamState::new(AdamHyper::default());
        adam_step(&mut params, &grads(0.5), &mut state).unwrap();
        assert_eq!(state.step, 1);
        for &v in params["p"].data() {
            assert!((1.0 - v - 2e-4).abs() < 1e-7, "{v}");
        }
    }

    #[test]
    fn zero_gradient_leaves_params() {
        let mut params = single(0.25);
        let mut state = AdamState::new(AdamHyper::default());
        for _ in 0..3 {
            adam_step(&mut params, &grads(0.0), &mut state).unwrap();
        }
        assert_eq!(state.step, 3);
        assert_eq!(params["p"], Tensor2D::filled(2, 2, 0.25));
    }

    #[test]
    fn missing_gradient_is_an_error() {
        let mut params = single(0.0);
        params.insert("q".into(), Tensor2D::zeros(1, 1));
        let mut state = AdamState::new(AdamHyper::default());
        let err = adam_step(&mut params, &grads(1.0), &mut state).unwrap_err();
        assert!(matches!(err, Error::MissingGradient(n) if n == "q"));
        assert_eq!(state.step, 0);
    }

    #[test]
    fn deterministic_trajectories() {
        let run = || {
            let mut params = single(0.3);
            let mut state = AdamState::new(AdamHyper::default());
            let mut traj = Vec::new();
            for k in 0..20 {
                adam_step(&mut params, &grads((k as f32 * 0.7).sin()), &mut state).unwrap();
                traj.push(params["p"].data().to_vec());
            }
            traj
        };
        assert_eq!(run(), run());
    }

    #[test]
    fn second_moment_nonnegative() {
        let mut params = single(0.0);
        let mut state = AdamState::new(AdamHyper::default());
        for k in 0..10 {
            adam_step(&mut params, &grads(if k % 2 == 0 { -3.0 } else { 1.0 }), &mut state).unwrap();
        }
        assert!(state.second_moment["p"].data().iter().all(|&v| v >= 0.0));
    }
}
