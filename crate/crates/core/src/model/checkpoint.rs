//! The `L2DC` checkpoint format.
//!
//! Layout: magic `L2DC`, `u32` LE format version, `u32` LE tensor count, then
//! per tensor a `u32` LE byte length, the UTF-8 name and an embedded `L2D1`
//! tensor. Optimizer moments are stored as `adam.m/<name>` and
//! `adam.v/<name>`. A JSON sidecar next to the file carries the model
//! configuration, training hyperparameters, the corpus `norm_meta`, the mean
//! seed pose and the optimizer step.

use std::collections::BTreeMap;
use std::fs;
use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};

use super::config::ModelConfig;
use super::params::ModelParams;
use crate::error::{Error, Result};
use crate::numerics::io::{read_tensor, write_tensor};
use crate::numerics::{AdamHyper, AdamState, Tensor2D};
use crate::skeleton::NormMeta;

pub const CHECKPOINT_MAGIC: &[u8; 4] = b"L2DC";
pub const CHECKPOINT_VERSION: u32 = 1;

const ADAM_M: &str = "adam.m/";
const ADAM_V: &str = "adam.v/";

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct OptimizerMeta {
    pub step: u64,
    pub hyper: AdamHyper,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct CheckpointMeta {
    pub format_version: u32,
    pub model: ModelConfig,
    /// Free-form training settings, recorded for provenance.
    pub hyperparameters: serde_json::Value,
    pub norm_meta: Option<NormMeta>,
    pub mean_seed_pose: Vec<f32>,
    pub optimizer: Option<OptimizerMeta>,
}

#[derive(Clone, Debug, PartialEq)]
pub struct Checkpoint {
    pub params: ModelParams<f32>,
    pub optimizer: Option<AdamState>,
    pub hyperparameters: serde_json::Value,
    pub norm_meta: Option<NormMeta>,
    pub mean_seed_pose: Vec<f32>,
}

/// Path of the JSON sidecar belonging to a checkpoint file.
pub fn sidecar_path(path: &Path) -> PathBuf {
    path.with_extension("json")
}

fn put_u32(buf: &mut Vec<u8>, v: usize, what: &str) -> Result<()> {
    let v = u32::try_from(v).map_err(|_| Error::Format(format!("{what} {v} exceeds u32")))?;
    buf.extend_from_slice(&v.to_le_bytes());
    Ok(())
}

fn take<'a>(cursor: &mut &'a [u8], n: usize, what: &str) -> Result<&'a [u8]> {
    if cursor.len() < n {
        return Err(Error::Format(format!("truncated checkpoint ({what})")));
    }
    let (head, tail) = cursor.split_at(n);
    *cursor = tail;
    Ok(head)
}

fn take_u32(cursor: &mut &[u8], what: &str) -> Result<usize> {
    let b = take(cursor, 4, what)?;
    Ok(u32::from_le_bytes([b[0], b[1], b[2], b[3]]) as usize)
}

/// Serializes named tensors into the `L2DC` byte layout.
pub fn encode_tensors(tensors: &BTreeMap<String, Tensor2D<f32>>) -> Result<Vec<u8>> {
    let mut buf = Vec::new();
    buf.extend_from_slice(CHECKPOINT_MAGIC);
    buf.extend_from_slice(&CHECKPOINT_VERSION.to_le_bytes());
    put_u32(&mut buf, tensors.len(), "tensor count")?;
    for (name, t) in tensors {
        put_u32(&mut buf, name.len(), "name length")?;
        buf.extend_from_slice(name.as_bytes());
        write_tensor(&mut buf, t).map_err(|e| Error::Format(e.to_string()))?;
    }
    Ok(buf)
}

pub fn decode_tensors(bytes: &[u8]) -> Result<BTreeMap<String, Tensor2D<f32>>> {
    let mut cursor = bytes;
    if take(&mut cursor, 4, "magic")? != CHECKPOINT_MAGIC {
        return Err(Error::Format("bad checkpoint magic".into()));
    }
    let version = take_u32(&mut cursor, "version")?;
    if version != CHECKPOINT_VERSION as usize {
        return Err(Error::Format(format!("unsupported checkpoint version {version}")));
    }
    let count = take_u32(&mut cursor, "tensor count")?;
    let mut out = BTreeMap::new();
    for _ in 0..count {
        let len = take_u32(&mut cursor, "name length")?;
        let name = std::str::from_utf8(take(&mut cursor, len, "name")?)
            .map_err(|e| Error::Format(format!("tensor name: {e}")))?
            .to_string();
        let t = read_tensor(&mut cursor)?;
        if out.insert(name.clone(), t).is_some() {
            return Err(Error::Format(format!("duplicate tensor `{name}`")));
        }
    }
    if !cursor.is_empty() {
        return Err(Error::Format(format!("{} trailing bytes in checkpoint", cursor.len())));
    }
    Ok(out)
}

impl Checkpoint {
    pub fn new(params: ModelParams<f32>) -> Self {
        let dim = params.config().skeleton_dim;
        Self {
            params,
            optimizer: None,
            hyperparameters: serde_json::Value::Null,
            norm_meta: None,
            mean_seed_pose: vec![0.5; dim],
        }
    }

    pub fn meta(&self) -> CheckpointMeta {
        CheckpointMeta {
            format_version: CHECKPOINT_VERSION,
            model: self.params.config().clone(),
            hyperparameters: self.hyperparameters.clone(),
            norm_meta: self.norm_meta,
            mean_seed_pose: self.mean_seed_pose.clone(),
            optimizer: self.optimizer.as_ref().map(|s| OptimizerMeta {
                step: s.step,
                hyper: s.hyper,
            }),
        }
    }

    /// Writes the tensor file and its sidecar.
    pub fn save(&self, path: impl AsRef<Path>) -> Result<()> {
        let path = path.as_ref();
        let mut tensors = self.params.tensors().clone();
        if let Some(opt) = &self.optimizer {
            for (name, m) in &opt.first_moment {
                tensors.insert(format!("{ADAM_M}{name}"), m.clone());
            }
            for (name, v) in &opt.second_moment {
                tensors.insert(format!("{ADAM_V}{name}"), v.clone());
            }
        }
        let bytes = encode_tensors(&tensors)?;
        fs::write(path, bytes).map_err(|e| Error::io(path, e))?;
        let side = sidecar_path(path);
        let text = serde_json::to_string_pretty(&self.meta())?;
        fs::write(&side, text + "\n").map_err(|e| Error::io(&side, e))
    }

    pub fn load(path: impl AsRef<Path>) -> Result<Self> {
        let path = path.as_ref();
        let bytes = fs::read(path).map_err(|e| Error::io(path, e))?;
        let mut tensors = decode_tensors(&bytes)?;
        let side = sidecar_path(path);
        let text = fs::read_to_string(&side).map_err(|e| Error::io(&side, e))?;
        let meta: CheckpointMeta = serde_json::from_str(&text)?;
        if meta.format_version != CHECKPOINT_VERSION {
            return Err(Error::Format(format!(
                "sidecar format version {} != {CHECKPOINT_VERSION}",
                meta.format_version
            )));
        }
        if meta.mean_seed_pose.len() != meta.model.skeleton_dim {
            return Err(Error::Format(format!(
                "mean seed pose has {} values, model wants {}",
                meta.mean_seed_pose.len(),
                meta.model.skeleton_dim
            )));
        }

        let mut first = BTreeMap::new();
        let mut second = BTreeMap::new();
        let names: Vec<String> = tensors.keys().cloned().collect();
        for name in names {
            if let Some(p) = name.strip_prefix(ADAM_M) {
                first.insert(p.to_string(), tensors.remove(&name).expect("listed"));
            } else if let Some(p) = name.strip_prefix(ADAM_V) {
                second.insert(p.to_string(), tensors.remove(&name).expect("listed"));
            }
        }
        let params = ModelParams::from_tensors(meta.model, tensors)?;
        let optimizer = match meta.optimizer {
            Some(o) => {
                for (name, p) in params.tensors() {
                    for (kind, moments) in [("first", &first), ("second", &second)] {
                        if let Some(m) = moments.get(name) {
                            m.ensure_shape(p.channels(), p.frames(), name)?;
                        } else if o.step > 0 {
                            return Err(Error::Format(format!("missing {kind} moment for `{name}`")));
                        }
                    }
                }
                Some(AdamState {
                    hyper: o.hyper,
                    step: o.step,
                    first_moment: first,
                    second_moment: second,
                })
            }
            None if first.is_empty() && second.is_empty() => None,
            None => return Err(Error::Format("optimizer moments without optimizer metadata".into())),
        };
        Ok(Self {
            params,
            optimizer,
            hyperparameters: meta.hyperparameters,
            norm_meta: meta.norm_meta,
            mean_seed_pose: meta.mean_seed_pose,
        })
    }
}
