//! Adam training loop, checkpointing and the loss log.

use std::fs;
use std::ops::ControlFlow;
use std::path::{Path, PathBuf};

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use super::data::{corpus_norm_meta, mean_pose, sample_windows, ClipPair, Window};
use super::loss::{loss_graph, read_terms, LossTerms};
use crate::error::{Error, Result};
use crate::model::{forward_graph, Checkpoint, ModelParams};
use crate::numerics::{adam_step, AdamHyper, AdamState, Gradients, Graph};

pub const LOSS_LOG: &str = "loss.csv";
pub const FINAL_CHECKPOINT: &str = "final.l2dc";

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct TrainingConfig {
    pub window_length: usize,
    pub batch_size: usize,
    pub learning_rate: f64,
    pub limb_loss_weight: f64,
    pub max_steps: u64,
    pub checkpoint_interval: u64,
    pub rng_seed: u64,
}

impl Default for TrainingConfig {
    fn default() -> Self {
        Self {
            window_length: 128,
            batch_size: 8,
            learning_rate: crate::numerics::adam::DEFAULT_LEARNING_RATE,
            limb_loss_weight: 1.0,
            max_steps: 1000,
            checkpoint_interval: 100,
            rng_seed: 0,
        }
    }
}

impl TrainingConfig {
    pub fn validate(&self) -> Result<()> {
        let bad = |msg: &str| Err(Error::InvalidArgument(msg.into()));
        if self.window_length < 2 {
            return bad("window length must be at least 2");
        }
        if self.batch_size == 0 || self.max_steps == 0 || self.checkpoint_interval == 0 {
            return bad("batch size, step count and checkpoint interval must be positive");
        }
        if !(self.learning_rate > 0.0 && self.learning_rate.is_finite()) {
            return bad("learning rate must be positive");
        }
        if !(self.limb_loss_weight >= 0.0 && self.limb_loss_weight.is_finite()) {
            return bad("limb loss weight must be non-negative");
        }
        Ok(())
    }

    pub fn adam_hyper(&self) -> AdamHyper {
        AdamHyper {
            learning_rate: self.learning_rate,
            ..AdamHyper::default()
        }
    }
}

/// One row of the loss log.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct LossRecord {
    pub step: u64,
    pub total: f64,
    pub l1: f64,
    pub limb: f64,
}

impl LossRecord {
    pub fn terms(&self) -> LossTerms {
        LossTerms {
            total: self.total,
            l1: self.l1,
            limb: self.limb,
        }
    }
}

/// Loss and gradients of one window, teacher-forced.
pub fn window_gradients(
    params: &ModelParams<f32>,
    window: &Window,
    limb_weight: f32,
) -> Result<(LossTerms, Gradients<f32>)> {
    let mut g = Graph::new();
    let s = g.input_ref(&window.skeleton);
    let m = g.input_ref(&window.mel);
    let pred = forward_graph(params, &mut g, s, m)?;
    let nodes = loss_graph(&mut g, pred, s, limb_weight)?;
    let terms = read_terms(&g, &nodes);
    if !(terms.total.is_finite() && terms.l1.is_finite() && terms.limb.is_finite()) {
        return Err(Error::NonFinite(format!(
            "loss on clip {} offset {}: {terms:?}",
            window.clip, window.offset
        )));
    }
    Ok((terms, g.backward(nodes.total)?))
}

/// Mean loss over `batch`, one backward pass per window, gradients summed
/// in batch order and divided by the batch size, then one Adam update.
pub fn train_step(
    params: &mut ModelParams<f32>,
    state: &mut AdamState,
    batch: &[Window],
    limb_weight: f64,
) -> Result<LossRecord> {
    if batch.is_empty() {
        return Err(Error::InvalidArgument("empty batch".into()));
    }
    let mut sum: Option<Gradients<f32>> = None;
    let (mut total, mut l1, mut limb) = (0.0, 0.0, 0.0);
    for window in batch {
        let (terms, grads) = window_gradients(params, window, limb_weight as f32)?;
        total += terms.total;
        l1 += terms.l1;
        limb += terms.limb;
        match &mut sum {
            None => sum = Some(grads),
            Some(acc) => acc.accumulate(&grads)?,
        }
    }
    let mut grads = sum.expect("batch is non-empty");
    let n = batch.len() as f64;
    grads.scale(1.0 / n as f32);
    adam_step(params.tensors_mut(), &grads, state)?;
    Ok(LossRecord {
        step: state.step,
        total: total / n,
        l1: l1 / n,
        limb: limb / n,
    })
}

/// Generator for the batch of step `step`; independent of earlier steps so
/// a resumed run draws the same windows.
pub fn step_rng(seed: u64, step: u64) -> ChaCha8Rng {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    rng.set_stream(step);
    rng
}

/// Parameters plus optimizer state.
#[derive(Clone, Debug)]
pub struct Trainer {
    pub params: ModelParams<f32>,
    pub optimizer: AdamState,
    pub config: TrainingConfig,
}

impl Trainer {
    pub fn new(params: ModelParams<f32>, config: TrainingConfig) -> Result<Self> {
        config.validate()?;
        Ok(Self {
            params,
            optimizer: AdamState::new(config.adam_hyper()),
            config,
        })
    }

    /// Continues from a checkpoint that carries optimizer state.
    pub fn resume(checkpoint: Checkpoint, config: TrainingConfig) -> Result<Self> {
        config.validate()?;
        let optimizer = checkpoint
            .optimizer
            .ok_or_else(|| Error::Format("checkpoint has no optimizer state".into()))?;
        Ok(Self {
            params: checkpoint.params,
            optimizer,
            config,
        })
    }

    pub fn step_count(&self) -> u64 {
        self.optimizer.step
    }

    pub fn step(&mut self, pairs: &[ClipPair]) -> Result<LossRecord> {
        let mut rng = step_rng(self.config.rng_seed, self.optimizer.step);
        let batch = sample_windows(pairs, self.config.window_length, self.config.batch_size, &mut rng)?;
        train_step(
            &mut self.params,
            &mut self.optimizer,
            &batch,
            self.config.limb_loss_weight,
        )
    }

    pub fn checkpoint(&self, pairs: &[ClipPair]) -> Result<Checkpoint> {
        Ok(Checkpoint {
            params: self.params.clone(),
            optimizer: Some(self.optimizer.clone()),
            hyperparameters: serde_json::to_value(&self.config)?,
            norm_meta: corpus_norm_meta(pairs),
            mean_seed_pose: mean_pose(pairs)?,
        })
    }
}

pub fn checkpoint_name(step: u64) -> String {
    format!("step-{step:06}.l2dc")
}

pub fn write_loss_log(path: impl AsRef<Path>, records: &[LossRecord]) -> Result<()> {
    let path = path.as_ref();
    let mut w = csv::Writer::from_path(path)?;
    for r in records {
        w.serialize(r)?;
    }
    w.flush().map_err(|e| Error::io(path, e))
}

pub fn read_loss_log(path: impl AsRef<Path>) -> Result<Vec<LossRecord>> {
    let mut r = csv::Reader::from_path(path.as_ref())?;
    r.deserialize().map(|row| row.map_err(Error::from)).collect()
}

/// Result of [`fit`].
#[derive(Clone, Debug)]
pub struct FitOutcome {
    pub trainer: Trainer,
    pub records: Vec<LossRecord>,
    pub final_checkpoint: PathBuf,
}

/// Trains until `config.max_steps`, writing `step-NNNNNN.l2dc` every
/// `checkpoint_interval` steps, `final.l2dc` at the end and `loss.csv`.
///
/// `on_step` sees every record and may stop the run early.
pub fn fit(
    pairs: &[ClipPair],
    mut trainer: Trainer,
    out_dir: impl AsRef<Path>,
    mut on_step: impl FnMut(&LossRecord) -> ControlFlow<()>,
) -> Result<FitOutcome> {
    let out_dir = out_dir.as_ref();
    if pairs.is_empty() {
        return Err(Error::InvalidArgument("empty dataset".into()));
    }
    fs::create_dir_all(out_dir).map_err(|e| Error::io(out_dir, e))?;
    let log_path = out_dir.join(LOSS_LOG);
    let start = trainer.step_count();
    let mut records = if start > 0 && log_path.exists() {
        let mut r = read_loss_log(&log_path)?;
        r.retain(|rec| rec.step <= start);
        r
    } else {
        Vec::new()
    };
    while trainer.step_count() < trainer.config.max_steps {
        let record = trainer.step(pairs)?;
        records.push(record);
        let stop = on_step(&record).is_break();
        if record.step % trainer.config.checkpoint_interval == 0 {
            trainer
                .checkpoint(pairs)?
                .save(out_dir.join(checkpoint_name(record.step)))?;
            write_loss_log(&log_path, &records)?;
        }
        if stop {
            break;
        }
    }
    let final_checkpoint = out_dir.join(FINAL_CHECKPOINT);
    trainer.checkpoint(pairs)?.save(&final_checkpoint)?;
    write_loss_log(&log_path, &records)?;
    Ok(FitOutcome {
        trainer,
        records,
        final_checkpoint,
    })
}
