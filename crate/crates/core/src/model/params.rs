use std::collections::BTreeMap;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use super::config::{LayerKind, LayerSpec, ModelConfig};
use crate::error::{Error, Result};
use crate::numerics::{Real, Tensor2D};

/// Named parameter tensors of the whole network.
#[derive(Clone, Debug, PartialEq)]
pub struct ModelParams<T: Real = f32> {
    config: ModelConfig,
    layers: Vec<LayerSpec>,
    tensors: BTreeMap<String, Tensor2D<T>>,
}

impl<T: Real> ModelParams<T> {
    /// Glorot-uniform weights, `±√(6 / (fan_in + fan_out))` with
    /// `fan = channels · kernel_size`, and zero biases.
    pub fn init(config: ModelConfig, seed: u64) -> Result<Self> {
        let layers = config.layers()?;
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let mut tensors = BTreeMap::new();
        for layer in &layers {
            let bound = layer.conv.glorot_bound();
            let (wo, wi) = layer.conv.weight_shape();
            let data = (0..wo * wi)
                .map(|_| T::from_f64(rng.random_range(-bound..bound)))
                .collect();
            let w = Tensor2D::new(wo, wi, data)?;
            let b = Tensor2D::zeros(wo, 1);
            tensors.insert(layer.weight_name(), w);
            tensors.insert(layer.bias_name(), b);
        }
        Ok(Self {
            config,
            layers,
            tensors,
        })
    }

    /// Builds parameters from named tensors, checking names and shapes.
    pub fn from_tensors(config: ModelConfig, mut tensors: BTreeMap<String, Tensor2D<T>>) -> Result<Self> {
        let layers = config.layers()?;
        let mut out = BTreeMap::new();
        for layer in &layers {
            let (wo, wi) = layer.conv.weight_shape();
            for (name, (c, f)) in [(layer.weight_name(), (wo, wi)), (layer.bias_name(), (wo, 1))] {
                let t = tensors
                    .remove(&name)
                    .ok_or_else(|| Error::Format(format!("missing parameter `{name}`")))?;
                t.ensure_shape(c, f, &name)?;
                t.ensure_finite(&name)?;
                out.insert(name, t);
            }
        }
        if let Some(extra) = tensors.keys().next() {
            return Err(Error::Format(format!("unexpected parameter `{extra}`")));
        }
        Ok(Self {
            config,
            layers,
            tensors: out,
        })
    }

    pub fn config(&self) -> &ModelConfig {
        &self.config
    }

    pub fn layers(&self) -> &[LayerSpec] {
        &self.layers
    }

    pub fn layer(&self, name: &str) -> Option<&LayerSpec> {
        self.layers.iter().find(|l| l.name == name)
    }

    pub fn tensors(&self) -> &BTreeMap<String, Tensor2D<T>> {
        &self.tensors
    }

    /// Mutable access for optimizers; shapes must not change.
    pub fn tensors_mut(&mut self) -> &mut BTreeMap<String, Tensor2D<T>> {
        &mut self.tensors
    }

    pub fn get(&self, name: &str) -> Result<&Tensor2D<T>> {
        self.tensors
            .get(name)
            .ok_or_else(|| Error::InvalidArgument(format!("no parameter `{name}`")))
    }

    pub fn weight(&self, layer: &LayerSpec) -> Result<&Tensor2D<T>> {
        self.get(&layer.weight_name())
    }

    pub fn bias(&self, layer: &LayerSpec) -> Result<&Tensor2D<T>> {
        self.get(&layer.bias_name())
    }

    pub fn num_parameters(&self) -> usize {
        self.tensors.values().map(|t| t.data().len()).sum()
    }

    pub fn is_finite(&self) -> bool {
        self.tensors.values().all(Tensor2D::is_finite)
    }

    /// Zeroes every highway-block convolution, turning each block into the
    /// identity map.
    pub fn zero_highway_blocks(&mut self) {
        for layer in &self.layers {
            if matches!(layer.kind, LayerKind::Block { .. }) {
                for name in [layer.weight_name(), layer.bias_name()] {
                    if let Some(t) = self.tensors.get_mut(&name) {
                        t.data_mut().fill(T::zero());
                    }
                }
            }
        }
    }

    pub fn cast<U: Real>(&self) -> ModelParams<U> {
        ModelParams {
            config: self.config.clone(),
            layers: self.layers.clone(),
            tensors: self.tensors.iter().map(|(k, v)| (k.clone(), v.cast())).collect(),
        }
    }
}
