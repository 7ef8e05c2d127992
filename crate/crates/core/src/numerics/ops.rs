//! Forward and backward kernels for the op set the network needs.
//!
//! Every kernel fixes its floating-point accumulation order independently of
//! the sequence length, so a prefix of the input always produces a
//! bit-identical prefix of the output.

use serde::{Deserialize, Serialize};

use super::tensor::{Real, Tensor2D};
use crate::error::{dim_err, Error, Result};

/// Shape of a causal 1-D convolution. A bias is always present.
///
/// Weights are stored as a `out_channels × (in_channels · kernel_size)`
/// tensor: element `(o, i·K + j)` is tap `j` from input channel `i`. Tap
/// `K − 1` reads the current frame, tap `j` reads `(K − 1 − j)·dilation`
/// frames back.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct ConvSpec {
    pub in_channels: usize,
    pub out_channels: usize,
    pub kernel_size: usize,
    pub dilation: usize,
}

impl ConvSpec {
    pub fn new(in_channels: usize, out_channels: usize, kernel_size: usize, dilation: usize) -> Result<Self> {
        if in_channels == 0 || out_channels == 0 {
            return Err(Error::InvalidArgument("conv channels must be positive".into()));
        }
        if kernel_size != 1 && kernel_size != 3 {
            return Err(Error::InvalidArgument(format!(
                "kernel size must be 1 or 3, got {kernel_size}"
            )));
        }
        if dilation == 0 || (kernel_size == 1 && dilation != 1) {
            return Err(Error::InvalidArgument(format!(
                "invalid dilation {dilation} for kernel {kernel_size}"
            )));
        }
        Ok(Self {
            in_channels,
            out_channels,
            kernel_size,
            dilation,
        })
    }

    pub fn pointwise(in_channels: usize, out_channels: usize) -> Result<Self> {
        Self::new(in_channels, out_channels, 1, 1)
    }

    /// Left padding needed for causality.
    pub fn padding(&self) -> usize {
        (self.kernel_size - 1) * self.dilation
    }

    #[inline]
    fn tap_shift(&self, tap: usize) -> usize {
        (self.kernel_size - 1 - tap) * self.dilation
    }

    pub fn weight_shape(&self) -> (usize, usize) {
        (self.out_channels, self.in_channels * self.kernel_size)
    }

    /// Glorot-uniform weight bound `√(6 / (fan_in + fan_out))`.
    pub fn glorot_bound(&self) -> f64 {
        let fan_in = self.in_channels * self.kernel_size;
        let fan_out = self.out_channels * self.kernel_size;
        (6.0 / (fan_in + fan_out) as f64).sqrt()
    }

    pub fn bias_shape(&self) -> (usize, usize) {
        (self.out_channels, 1)
    }

    fn check<T: Real>(&self, input: &Tensor2D<T>, weight: &Tensor2D<T>, bias: &Tensor2D<T>) -> Result<()> {
        if input.channels() != self.in_channels {
            return Err(dim_err!(
                "conv expects {} input channels, got {}",
                self.in_channels,
                input.channels()
            ));
        }
        let (wo, wi) = self.weight_shape();
        weight.ensure_shape(wo, wi, "conv weight")?;
        bias.ensure_shape(self.out_channels, 1, "conv bias")?;
        Ok(())
    }
}

/// Causal dilated convolution with implicit left zero-padding.
///
/// `output[o, t] = bias[o] + Σ_j Σ_i w[o, i, j] · input[i, t − shift(j)]`,
/// taps that fall before frame 0 read zeros and are skipped.
pub fn conv1d_causal<T: Real>(
    input: &Tensor2D<T>,
    spec: &ConvSpec,
    weight: &Tensor2D<T>,
    bias: &Tensor2D<T>,
) -> Result<Tensor2D<T>> {
    spec.check(input, weight, bias)?;
    input.ensure_finite("conv input")?;
    let frames = input.frames();
    let k = spec.kernel_size;
    let cin = spec.in_channels;
    let w = weight.data();
    let x = input.data();
    let mut out = Tensor2D::zeros(spec.out_channels, frames);
    for o in 0..spec.out_channels {
        let orow = out.row_mut(o);
        orow.fill(bias.data()[o]);
        for j in 0..k {
            let s = spec.tap_shift(j);
            if s >= frames {
                continue;
            }
            for i in 0..cin {
                let wv = w[(o * cin + i) * k + j];
                let xrow = &x[i * frames..i * frames + frames - s];
                for (y, &xv) in orow[s..].iter_mut().zip(xrow) {
                    *y = *y + wv * xv;
                }
            }
        }
    }
    Ok(out)
}

/// Single output column of [`conv1d_causal`] for the last frame of
/// `history` (frame-major columns). Accumulates in the same order as the
/// full kernel, so results are bit-identical.
pub fn conv1d_causal_column<T: Real>(
    history: &[Vec<T>],
    spec: &ConvSpec,
    weight: &Tensor2D<T>,
    bias: &Tensor2D<T>,
) -> Result<Vec<T>> {
    let Some(t) = history.len().checked_sub(1) else {
        return Err(dim_err!("empty history"));
    };
    let (wo, wi) = spec.weight_shape();
    weight.ensure_shape(wo, wi, "conv weight")?;
    bias.ensure_shape(spec.out_channels, 1, "conv bias")?;
    let k = spec.kernel_size;
    let cin = spec.in_channels;
    let w = weight.data();
    let mut out = Vec::with_capacity(spec.out_channels);
    for o in 0..spec.out_channels {
        let mut acc = bias.data()[o];
        for j in 0..k {
            let s = spec.tap_shift(j);
            if s > t {
                continue;
            }
            let col = &history[t - s];
            if col.len() != cin {
                return Err(dim_err!("history column has {} channels, want {cin}", col.len()));
            }
            for (i, &xv) in col.iter().enumerate() {
                acc = acc + w[(o * cin + i) * k + j] * xv;
            }
        }
        out.push(acc);
    }
    Ok(out)
}

/// Gradients of [`conv1d_causal`] with respect to input, weight and bias.
pub fn conv1d_causal_backward<T: Real>(
    input: &Tensor2D<T>,
    spec: &ConvSpec,
    weight: &Tensor2D<T>,
    grad_out: &Tensor2D<T>,
) -> (Tensor2D<T>, Tensor2D<T>, Tensor2D<T>) {
    let frames = input.frames();
    let k = spec.kernel_size;
    let cin = spec.in_channels;
    let w = weight.data();
    let x = input.data();
    let dy = grad_out.data();
    let mut dx = Tensor2D::zeros(cin, frames);
    let (wo, wi) = spec.weight_shape();
    let mut dw = Tensor2D::zeros(wo, wi);
    let mut db = Tensor2D::zeros(spec.out_channels, 1);

    for o in 0..spec.out_channels {
        let dyrow = &dy[o * frames..(o + 1) * frames];
        db.data_mut()[o] = dyrow.iter().fold(T::zero(), |a, &v| a + v);
        for j in 0..k {
            let s = spec.tap_shift(j);
            if s >= frames {
                continue;
            }
            let dys = &dyrow[s..];
            for i in 0..cin {
                let xrow = &x[i * frames..i * frames + frames - s];
                let g = dys.iter().zip(xrow).fold(T::zero(), |a, (&d, &xv)| a + d * xv);
                dw.data_mut()[(o * cin + i) * k + j] = g;
                let wv = w[(o * cin + i) * k + j];
                let dxrow = &mut dx.row_mut(i)[..frames - s];
                for (d, &g) in dxrow.iter_mut().zip(dys) {
                    *d = *d + wv * g;
                }
            }
        }
    }
    (dx, dw, db)
}

/// Per-frame linear map (a kernel-1 convolution). `weight` is `out × in`.
pub fn pointwise_affine<T: Real>(input: &Tensor2D<T>, weight: &Tensor2D<T>, bias: &Tensor2D<T>) -> Result<Tensor2D<T>> {
    let spec = ConvSpec::pointwise(weight.frames(), weight.channels())?;
    conv1d_causal(input, &spec, weight, bias)
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Activation {
    Tanh,
    Sigmoid,
    Relu,
}

impl Activation {
    #[inline]
    pub fn apply<T: Real>(self, x: T) -> T {
        match self {
            Activation::Tanh => x.tanh(),
            Activation::Sigmoid => T::one() / (T::one() + (-x).exp()),
            Activation::Relu => {
                if x > T::zero() {
                    x
                } else {
                    T::zero()
                }
            }
        }
    }

    /// Derivative given the pre-activation `x` and output `y`. ReLU uses
    /// slope 0 at the origin.
    #[inline]
    pub fn derivative<T: Real>(self, x: T, y: T) -> T {
        match self {
            Activation::Tanh => T::one() - y * y,
            Activation::Sigmoid => y * (T::one() - y),
            Activation::Relu => {
                if x > T::zero() {
                    T::one()
                } else {
                    T::zero()
                }
            }
        }
    }
}

pub fn activate<T: Real>(input: &Tensor2D<T>, kind: Activation) -> Tensor2D<T> {
    input.map(|v| kind.apply(v))
}

/// Sign with `sign(0) = 0`, the L1 subgradient convention.
#[inline]
pub(crate) fn l1_sign<T: Real>(d: T) -> T {
    if d > T::zero() {
        T::one()
    } else if d < T::zero() {
        -T::one()
    } else {
        T::zero()
    }
}

/// Mean absolute difference.
pub fn l1_loss<T: Real>(pred: &Tensor2D<T>, target: &Tensor2D<T>) -> Result<T> {
    if pred.shape() != target.shape() {
        return Err(dim_err!("l1 loss between {:?} and {:?}", pred.shape(), target.shape()));
    }
    let sum = pred
        .data()
        .iter()
        .zip(target.data())
        .fold(T::zero(), |a, (&p, &q)| a + (p - q).abs());
    Ok(sum / T::from_f64(pred.data().len() as f64))
}

/// Euclidean distance per frame between point pairs, times `scale`.
///
/// Point `p` occupies rows `2p` (x) and `2p + 1` (y) of `coords`; rows past
/// the coordinate block are ignored.
pub fn pair_distances<T: Real>(coords: &Tensor2D<T>, pairs: &[(usize, usize)], scale: T) -> Result<Tensor2D<T>> {
    let max_point = pairs.iter().map(|&(a, b)| a.max(b)).max().unwrap_or(0);
    if pairs.is_empty() || 2 * max_point + 1 >= coords.channels() {
        return Err(dim_err!(
            "pair distances need {} coordinate rows, tensor has {}",
            2 * max_point + 2,
            coords.channels()
        ));
    }
    let frames = coords.frames();
    let mut out = Tensor2D::zeros(pairs.len(), frames);
    for (e, &(a, b)) in pairs.iter().enumerate() {
        let (xa, ya) = (coords.row(2 * a), coords.row(2 * a + 1));
        let (xb, yb) = (coords.row(2 * b), coords.row(2 * b + 1));
        let orow = out.row_mut(e);
        for t in 0..frames {
            let dx = xa[t] - xb[t];
            let dy = ya[t] - yb[t];
            orow[t] = (dx * dx + dy * dy).sqrt() * scale;
        }
    }
    Ok(out)
}
