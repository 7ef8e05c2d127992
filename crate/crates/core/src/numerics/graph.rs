//! Reverse-mode differentiation over the op set in [`super::ops`].
//!
//! A [`Graph`] is a tape: every op evaluates eagerly, records its inputs and
//! appends its value. [`Graph::backward`] walks the tape in reverse from a
//! scalar node and returns gradients for every registered parameter.

use std::borrow::Cow;
use std::collections::BTreeMap;

use super::ops::{self, Activation, ConvSpec};
use super::tensor::{Real, Tensor2D};
use crate::error::{dim_err, Error, Result};

#[derive(Clone, Copy, Debug, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub struct NodeId(usize);

#[derive(Debug)]
enum Op<T> {
    Input,
    Param,
    Conv {
        input: NodeId,
        weight: NodeId,
        bias: NodeId,
        spec: ConvSpec,
    },
    Add(NodeId, NodeId),
    Mul(NodeId, NodeId),
    Activate(NodeId, Activation),
    OneMinus(NodeId),
    Scale(NodeId, T),
    SliceChannels(NodeId, usize),
    SliceFrames(NodeId, usize),
    PairDistances {
        coords: NodeId,
        pairs: Vec<(usize, usize)>,
        scale: T,
    },
    L1 {
        pred: NodeId,
        target: NodeId,
    },
}

struct Node<'p, T: Real> {
    value: Cow<'p, Tensor2D<T>>,
    op: Op<T>,
}

/// Gradient of a scalar with respect to each named parameter.
#[derive(Clone, Debug, PartialEq)]
pub struct Gradients<T: Real = f32> {
    grads: BTreeMap<String, Tensor2D<T>>,
}

impl<T: Real> Gradients<T> {
    pub fn new(grads: BTreeMap<String, Tensor2D<T>>) -> Self {
        Self { grads }
    }

    pub fn get(&self, name: &str) -> Option<&Tensor2D<T>> {
        self.grads.get(name)
    }

    pub fn len(&self) -> usize {
        self.grads.len()
    }

    pub fn is_empty(&self) -> bool {
        self.grads.is_empty()
    }

    pub fn iter(&self) -> impl Iterator<Item = (&String, &Tensor2D<T>)> {
        self.grads.iter()
    }

    pub fn names(&self) -> impl Iterator<Item = &String> {
        self.grads.keys()
    }

    /// Elementwise sum; key sets must match.
    pub fn accumulate(&mut self, other: &Gradients<T>) -> Result<()> {
        if self.grads.len() != other.grads.len() {
            return Err(Error::Graph("gradient key sets differ".into()));
        }
        for (name, g) in other.iter() {
            let mine = self
                .grads
                .get_mut(name)
                .ok_or_else(|| Error::MissingGradient(name.clone()))?;
            if mine.shape() != g.shape() {
                return Err(dim_err!("gradient `{name}` shape mismatch"));
            }
            mine.add_assign(g);
        }
        Ok(())
    }

    pub fn scale(&mut self, factor: T) {
        for g in self.grads.values_mut() {
            for v in g.data_mut() {
                *v = *v * factor;
            }
        }
    }

    pub fn into_inner(self) -> BTreeMap<String, Tensor2D<T>> {
        self.grads
    }
}

/// Differentiable computation tape. Parameters are borrowed for `'p`.
pub struct Graph<'p, T: Real = f32> {
    nodes: Vec<Node<'p, T>>,
    params: BTreeMap<String, NodeId>,
}

impl<T: Real> Default for Graph<'_, T> {
    fn default() -> Self {
        Self::new()
    }
}

impl<'p, T: Real> Graph<'p, T> {
    pub fn new() -> Self {
        Self {
            nodes: Vec::new(),
            params: BTreeMap::new(),
        }
    }

    fn push(&mut self, value: Cow<'p, Tensor2D<T>>, op: Op<T>) -> NodeId {
        self.nodes.push(Node { value, op });
        NodeId(self.nodes.len() - 1)
    }

    fn node(&self, id: NodeId) -> Result<&Node<'p, T>> {
        self.nodes
            .get(id.0)
            .ok_or_else(|| Error::Graph(format!("node {} is not on this tape", id.0)))
    }

    pub fn value(&self, id: NodeId) -> &Tensor2D<T> {
        &self.nodes[id.0].value
    }

    pub fn len(&self) -> usize {
        self.nodes.len()
    }

    pub fn is_empty(&self) -> bool {
        self.nodes.is_empty()
    }

    /// Constant input; receives no gradient.
    pub fn input(&mut self, value: Tensor2D<T>) -> NodeId {
        self.push(Cow::Owned(value), Op::Input)
    }

    pub fn input_ref(&mut self, value: &'p Tensor2D<T>) -> NodeId {
        self.push(Cow::Borrowed(value), Op::Input)
    }

    /// Registers a named parameter. Registering the same name twice returns
    /// the existing node.
    pub fn param(&mut self, name: &str, value: &'p Tensor2D<T>) -> NodeId {
        if let Some(&id) = self.params.get(name) {
            return id;
        }
        let id = self.push(Cow::Borrowed(value), Op::Param);
        self.params.insert(name.to_string(), id);
        id
    }

    pub fn conv(&mut self, input: NodeId, weight: NodeId, bias: NodeId, spec: ConvSpec) -> Result<NodeId> {
        let out = ops::conv1d_causal(
            &self.node(input)?.value,
            &spec,
            &self.node(weight)?.value,
            &self.node(bias)?.value,
        )?;
        Ok(self.push(
            Cow::Owned(out),
            Op::Conv {
                input,
                weight,
                bias,
                spec,
            },
        ))
    }

    fn zip_with(&self, a: NodeId, b: NodeId, f: impl Fn(T, T) -> T) -> Result<Tensor2D<T>> {
        let (va, vb) = (&self.node(a)?.value, &self.node(b)?.value);
        if va.shape() != vb.shape() {
            return Err(dim_err!("elementwise op on {:?} and {:?}", va.shape(), vb.shape()));
        }
        let data = va.data().iter().zip(vb.data()).map(|(&x, &y)| f(x, y)).collect();
        Tensor2D::new(va.channels(), va.frames(), data)
    }

    pub fn add(&mut self, a: NodeId, b: NodeId) -> Result<NodeId> {
        let v = self.zip_with(a, b, |x, y| x + y)?;
        Ok(self.push(Cow::Owned(v), Op::Add(a, b)))
    }

    pub fn mul(&mut self, a: NodeId, b: NodeId) -> Result<NodeId> {
        let v = self.zip_with(a, b, |x, y| x * y)?;
        Ok(self.push(Cow::Owned(v), Op::Mul(a, b)))
    }

    pub fn activate(&mut self, a: NodeId, kind: Activation) -> Result<NodeId> {
        let v = ops::activate(&self.node(a)?.value, kind);
        Ok(self.push(Cow::Owned(v), Op::Activate(a, kind)))
    }

    /// `1 − a`.
    pub fn one_minus(&mut self, a: NodeId) -> Result<NodeId> {
        let v = self.node(a)?.value.map(|x| T::one() - x);
        Ok(self.push(Cow::Owned(v), Op::OneMinus(a)))
    }

    pub fn scale(&mut self, a: NodeId, factor: T) -> Result<NodeId> {
        let v = self.node(a)?.value.map(|x| x * factor);
        Ok(self.push(Cow::Owned(v), Op::Scale(a, factor)))
    }

    pub fn slice_channels(&mut self, a: NodeId, start: usize, len: usize) -> Result<NodeId> {
        let v = self.node(a)?.value.slice_channels(start, len)?;
        Ok(self.push(Cow::Owned(v), Op::SliceChannels(a, start)))
    }

    pub fn slice_frames(&mut self, a: NodeId, start: usize, len: usize) -> Result<NodeId> {
        let v = self.node(a)?.value.slice_frames(start, len)?;
        Ok(self.push(Cow::Owned(v), Op::SliceFrames(a, start)))
    }

    /// See [`ops::pair_distances`].
    pub fn pair_distances(&mut self, coords: NodeId, pairs: &[(usize, usize)], scale: T) -> Result<NodeId> {
        let v = ops::pair_distances(&self.node(coords)?.value, pairs, scale)?;
        Ok(self.push(
            Cow::Owned(v),
            Op::PairDistances {
                coords,
                pairs: pairs.to_vec(),
                scale,
            },
        ))
    }

    /// Mean absolute difference as a 1×1 node.
    pub fn l1(&mut self, pred: NodeId, target: NodeId) -> Result<NodeId> {
        let loss = ops::l1_loss(&self.node(pred)?.value, &self.node(target)?.value)?;
        Ok(self.push(Cow::Owned(Tensor2D::filled(1, 1, loss)), Op::L1 { pred, target }))
    }

    /// Gradients of the scalar node `loss` for every registered parameter.
    /// Parameters the loss does not reach get zero gradients.
    pub fn backward(&self, loss: NodeId) -> Result<Gradients<T>> {
        let root = self.node(loss)?;
        if root.value.shape() != (1, 1) {
            return Err(Error::Graph(format!(
                "backward needs a scalar root, got {:?}",
                root.value.shape()
            )));
        }
        let mut grads: Vec<Option<Tensor2D<T>>> = (0..=loss.0).map(|_| None).collect();
        grads[loss.0] = Some(Tensor2D::filled(1, 1, T::one()));

        for idx in (0..=loss.0).rev() {
            let Some(g) = grads[idx].take() else { continue };
            let node = &self.nodes[idx];
            match &node.op {
                Op::Input => {}
                Op::Param => {
                    grads[idx] = Some(g);
                }
                Op::Conv {
                    input,
                    weight,
                    bias,
                    spec,
                } => {
                    let (dx, dw, db) = ops::conv1d_causal_backward(self.value(*input), spec, self.value(*weight), &g);
                    accumulate(&mut grads, *input, dx);
                    accumulate(&mut grads, *weight, dw);
                    accumulate(&mut grads, *bias, db);
                }
                Op::Add(a, b) => {
                    accumulate(&mut grads, *a, g.clone());
                    accumulate(&mut grads, *b, g);
                }
                Op::Mul(a, b) => {
                    let (va, vb) = (self.value(*a), self.value(*b));
                    let ga = zip_map(&g, vb, |d, y| d * y);
                    let gb = zip_map(&g, va, |d, x| d * x);
                    accumulate(&mut grads, *a, ga);
                    accumulate(&mut grads, *b, gb);
                }
                Op::Activate(a, kind) => {
                    let x = self.value(*a);
                    let y = &node.value;
                    let data = g
                        .data()
                        .iter()
                        .zip(x.data().iter().zip(y.data()))
                        .map(|(&d, (&xv, &yv))| d * kind.derivative(xv, yv))
                        .collect();
                    let ga = Tensor2D::new(g.channels(), g.frames(), data)?;
                    accumulate(&mut grads, *a, ga);
                }
                Op::OneMinus(a) => {
                    accumulate(&mut grads, *a, g.map(|d| -d));
                }
                Op::Scale(a, factor) => {
                    let f = *factor;
                    accumulate(&mut grads, *a, g.map(|d| d * f));
                }
                Op::SliceChannels(a, start) => {
                    let src = self.value(*a);
                    let mut ga = Tensor2D::zeros(src.channels(), src.frames());
                    let n = g.data().len();
                    let off = start * src.frames();
                    ga.data_mut()[off..off + n].copy_from_slice(g.data());
                    accumulate(&mut grads, *a, ga);
                }
                Op::SliceFrames(a, start) => {
                    let src = self.value(*a);
                    let mut ga = Tensor2D::zeros(src.channels(), src.frames());
                    for c in 0..src.channels() {
                        ga.row_mut(c)[*start..start + g.frames()].copy_from_slice(g.row(c));
                    }
                    accumulate(&mut grads, *a, ga);
                }
                Op::PairDistances { coords, pairs, scale } => {
                    let src = self.value(*coords);
                    let dist = &node.value;
                    let mut ga = Tensor2D::zeros(src.channels(), src.frames());
                    for (e, &(a, b)) in pairs.iter().enumerate() {
                        for t in 0..src.frames() {
                            let len = dist.get(e, t);
                            if len == T::zero() {
                                continue;
                            }
                            let dx = src.get(2 * a, t) - src.get(2 * b, t);
                            let dy = src.get(2 * a + 1, t) - src.get(2 * b + 1, t);
                            // d(s·r)/dx = s²·dx / (s·r)
                            let k = g.get(e, t) * *scale * *scale / len;
                            let (gx, gy) = (k * dx, k * dy);
                            ga.set(2 * a, t, ga.get(2 * a, t) + gx);
                            ga.set(2 * a + 1, t, ga.get(2 * a + 1, t) + gy);
                            ga.set(2 * b, t, ga.get(2 * b, t) - gx);
                            ga.set(2 * b + 1, t, ga.get(2 * b + 1, t) - gy);
                        }
                    }
                    accumulate(&mut grads, *coords, ga);
                }
                Op::L1 { pred, target } => {
                    let (p, q) = (self.value(*pred), self.value(*target));
                    let scale = g.get(0, 0) / T::from_f64(p.data().len() as f64);
                    let gp = zip_map(p, q, |a, b| ops::l1_sign(a - b) * scale);
                    let gq = gp.map(|v| -v);
                    accumulate(&mut grads, *pred, gp);
                    accumulate(&mut grads, *target, gq);
                }
            }
        }

        let mut out = BTreeMap::new();
        for (name, id) in &self.params {
            let g = match grads.get_mut(id.0).and_then(Option::take) {
                Some(g) => g,
                None => {
                    let v = self.value(*id);
                    Tensor2D::zeros(v.channels(), v.frames())
                }
            };
            out.insert(name.clone(), g);
        }
        Ok(Gradients::new(out))
    }
}

fn zip_map<T: Real>(a: &Tensor2D<T>, b: &Tensor2D<T>, f: impl Fn(T, T) -> T) -> Tensor2D<T> {
    let data = a.data().iter().zip(b.data()).map(|(&x, &y)| f(x, y)).collect();
    Tensor2D::new(a.channels(), a.frames(), data).expect("shapes checked at record time")
}

fn accumulate<T: Real>(grads: &mut [Option<Tensor2D<T>>], id: NodeId, g: Tensor2D<T>) {
    match &mut grads[id.0] {
        Some(existing) => existing.add_assign(&g),
        slot @ None => *slot = Some(g),
    }
}
