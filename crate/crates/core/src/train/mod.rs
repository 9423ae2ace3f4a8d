//! Training harness: augmentation, the epoch loop, learning-rate schedule,
//! per-epoch checkpoints and validation monitoring.
//!
//! All randomness is drawn from named streams under `TrainConfig::seed`
//! keyed by epoch and batch, so a run resumed from an epoch checkpoint
//! replays exactly the trajectory of an uninterrupted run.

mod example;
mod log;

use std::path::{Path, PathBuf};
use std::sync::mpsc::sync_channel;

use rand::seq::SliceRandom;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

pub use example::{augment, LabelIndex, TrainingExample, VISUAL_SUBSAMPLE};
pub use log::{format_log_line, parse_log, EpochLog, LOG_HEADER};

use crate::annotate::VideoAnnotation;
use crate::engine::{l2_penalty, multilabel_bce, AdamConfig, AdamState, Checkpoint, LrSchedule, Network, Tensor};
use crate::error::{Error, Result};
use crate::eval::{mean_average_precision, top_n};
use crate::frontend::{LogMelFrame, FRAME_ROWS, MEL_BINS};
use crate::seed;

/// Batch size used for the VGGish-family models at full scale.
pub const FULL_SCALE_BATCH_SIZE: usize = 1024;
pub const DEFAULT_LR0: f64 = 1e-4;
pub const DEFAULT_DECAY: f64 = 0.9;
pub const DEFAULT_L2: f64 = 1.0;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct TrainConfig {
    pub lr0: f64,
    /// Multiplicative learning-rate decay applied after every epoch.
    pub decay: f64,
    pub batch_size: usize,
    pub l2: f64,
    pub epochs: usize,
    pub seed: u64,
    /// Optional cap on the total number of optimizer steps.
    pub max_steps: Option<u64>,
    /// Videos whose shard fold is below this value form the validation set.
    pub validation_folds: u32,
    pub adam: AdamConfig,
}

impl Default for TrainConfig {
    fn default() -> Self {
        TrainConfig {
            lr0: DEFAULT_LR0,
            decay: DEFAULT_DECAY,
            batch_size: 32,
            l2: DEFAULT_L2,
            epochs: 10,
            seed: 0,
            max_steps: None,
            validation_folds: 256,
            adam: AdamConfig::default(),
        }
    }
}

impl TrainConfig {
    pub fn validate(&self) -> Result<()> {
        let bad = |m: &str| Err(Error::InvalidConfig(format!("train.{m}")));
        if !(self.lr0 > 0.0 && self.lr0.is_finite()) {
            return bad("lr0 must be positive");
        }
        if !(self.decay > 0.0 && self.decay <= 1.0) {
            return bad("decay must lie in (0, 1]");
        }
        if self.batch_size < 2 {
            return bad("batch_size must be at least 2 (batchnorm statistics)");
        }
        if !(self.l2 >= 0.0 && self.l2.is_finite()) {
            return bad("l2 must be non-negative");
        }
        if self.epochs == 0 {
            return bad("epochs must be positive");
        }
        if self.validation_folds as usize > crate::annotate::FOLDS {
            return bad("validation_folds exceeds the fold count");
        }
        if self.max_steps == Some(0) {
            return bad("max_steps must be positive when set");
        }
        Ok(())
    }

    pub fn schedule(&self) -> LrSchedule {
        LrSchedule {
            initial: self.lr0,
            decay: self.decay,
        }
    }
}

/// Source of training examples, addressed by index within an epoch.
pub trait Dataset: Sync {
    fn len(&self) -> usize;

    fn is_empty(&self) -> bool {
        self.len() == 0
    }

    /// Draws the example for `index`; `Ok(None)` skips the record.
    fn draw(&self, index: usize, rng: &mut seed::Rng) -> Result<Option<TrainingExample>>;
}

/// Pre-built examples, returned unchanged on every draw.
#[derive(Debug, Clone, Default)]
pub struct FixedSet(pub Vec<TrainingExample>);

impl Dataset for FixedSet {
    fn len(&self) -> usize {
        self.0.len()
    }

    fn draw(&self, index: usize, _rng: &mut seed::Rng) -> Result<Option<TrainingExample>> {
        Ok(Some(self.0[index].clone()))
    }
}

/// Annotated videos with their log-Mel segments; each draw augments.
#[derive(Debug, Clone)]
pub struct VideoSet {
    pub videos: Vec<(VideoAnnotation, Vec<LogMelFrame>)>,
    pub index: LabelIndex,
}

impl Dataset for VideoSet {
    fn len(&self) -> usize {
        self.videos.len()
    }

    fn draw(&self, index: usize, rng: &mut seed::Rng) -> Result<Option<TrainingExample>> {
        let (ann, segs) = &self.videos[index];
        augment(ann, segs, &self.index, rng)
    }
}

/// Loss of one optimizer step.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct StepRecord {
    pub epoch: usize,
    pub batch: usize,
    /// Multi-label cross-entropy of the batch.
    pub loss: f64,
    /// The `λ·Σw²` term added for the update.
    pub l2: f64,
}

#[derive(Debug, Clone, Default, PartialEq)]
pub struct TrainReport {
    pub epochs: Vec<EpochLog>,
    pub steps: Vec<StepRecord>,
    pub skipped: usize,
    pub checkpoints: Vec<PathBuf>,
}

/// Splits a permutation into batches of `size`, folding a final singleton
/// into the previous batch so every batch has batchnorm statistics.
pub fn batches(order: &[usize], size: usize) -> Vec<Vec<usize>> {
    let mut out: Vec<Vec<usize>> = order.chunks(size).map(<[usize]>::to_vec).collect();
    if out.len() > 1 && out.last().is_some_and(|b| b.len() == 1) {
        let last = out.pop().expect("checked non-empty");
        out.last_mut().expect("len > 1").extend(last);
    }
    out
}

/// Epoch permutation of `0..n`.
pub fn epoch_order(seed: u64, epoch: usize, n: usize) -> Vec<usize> {
    let mut order: Vec<usize> = (0..n).collect();
    order.shuffle(&mut seed::rng(seed, &format!("train/shuffle/{epoch}")));
    order
}

/// Stacks examples into an input batch and a dense target matrix.
pub fn collate(examples: &[TrainingExample], width: usize) -> Result<(Tensor<f32>, Tensor<f32>)> {
    let rows: Vec<&[f32]> = examples.iter().map(|e| e.spectrogram.values()).collect();
    let x = Tensor::stack(&rows, &[FRAME_ROWS, MEL_BINS, 1])?;
    let mut y = Vec::with_capacity(examples.len() * width);
    for e in examples {
        if let Some(&bad) = e.target.iter().find(|&&c| c >= width) {
            return Err(Error::InvalidDataset(format!("{}: target column {bad} >= {width}", e.uuid)));
        }
        y.extend(e.dense_target(width));
    }
    Ok((x, Tensor::new(vec![examples.len(), width], y)?))
}

/// Validation Top-1 and mAP computed with inference-mode forwards.
pub fn validate(net: &Network<f32>, examples: &[TrainingExample], batch: usize) -> Result<(f64, Option<f64>)> {
    let end = net.logits_end();
    let width = net.shapes()[end - 1].iter().product::<usize>();
    let mut scores = Vec::with_capacity(examples.len());
    for chunk in examples.chunks(batch.max(1)) {
        let (x, _) = collate(chunk, width)?;
        let z = net.infer_until(&x, end)?;
        scores.extend(z.data().chunks(width).map(|r| r.iter().map(|&v| v as f64).collect::<Vec<_>>()));
    }
    let truths: Vec<Vec<usize>> = examples.iter().map(|e| e.target.clone()).collect();
    let top1 = top_n(&scores, &truths, 1)?;
    let map = match mean_average_precision(&scores, &truths) {
        Ok(v) => Some(v),
        Err(Error::UndefinedMetric(_)) => None,
        Err(e) => return Err(e),
    };
    Ok((top1, map))
}

/// Network, optimizer state and epoch position of a training run.
pub struct Trainer {
    pub net: Network<f32>,
    pub adam: AdamState<f32>,
    pub config: TrainConfig,
    /// Number of completed epochs.
    pub epoch: usize,
    pub best_map: Option<f64>,
    /// Free-form provenance string stored in every checkpoint.
    pub meta: String,
}

impl Trainer {
    pub fn new(net: Network<f32>, config: TrainConfig, meta: String) -> Result<Self> {
        config.validate()?;
        let adam = AdamState::new(net.params().map(|p| &p.value), config.adam);
        Ok(Trainer {
            net,
            adam,
            config,
            epoch: 0,
            best_map: None,
            meta,
        })
    }

    /// Continues from an epoch checkpoint written by [`run_training`].
    pub fn resume(mut net: Network<f32>, ckpt: &Checkpoint, config: TrainConfig, meta: String) -> Result<Self> {
        config.validate()?;
        ckpt.restore(&mut net)?;
        let adam = ckpt
            .adam_state(&net)?
            .ok_or_else(|| Error::CheckpointMismatch("checkpoint carries no optimizer state".into()))?;
        Ok(Trainer {
            net,
            adam,
            config,
            epoch: ckpt.epoch as usize,
            best_map: None,
            meta,
        })
    }

    pub fn steps(&self) -> u64 {
        self.adam.t
    }

    pub fn checkpoint(&self) -> Checkpoint {
        Checkpoint::capture(&self.net, Some(&self.adam), self.epoch as u64, self.meta.clone())
    }

    fn budget_left(&self) -> bool {
        self.config.max_steps.map_or(true, |m| self.adam.t < m)
    }

    /// One optimizer step on `examples`.
    pub fn step(&mut self, examples: &[TrainingExample], lr: f64, batch: usize) -> Result<StepRecord> {
        let epoch = self.epoch;
        let diverged = |detail: String| Error::Diverged { epoch, batch, detail };
        let end = self.net.logits_end();
        let width = self.net.shapes()[end - 1].iter().product::<usize>();
        let (x, y) = collate(examples, width)?;
        self.net.zero_grad();
        let mut rng = seed::rng(self.config.seed, &format!("train/dropout/{epoch}/{batch}"));
        let (z, trace) = self.net.forward_train(&x, end, &mut rng).map_err(|e| match e {
            Error::NonFinite(what) => diverged(format!("non-finite activation in {what}")),
            other => other,
        })?;
        let out = multilabel_bce(&z, &y)?;
        if !out.loss.is_finite() {
            return Err(diverged(format!("loss is {}", out.loss)));
        }
        self.net.backward(trace, out.grad)?;
        let mut weights = Vec::new();
        let mut grads = Vec::new();
        for p in self.net.params_mut().filter(|p| p.decay) {
            weights.push(p.value.clone());
            grads.push(&mut p.grad);
        }
        let wrefs: Vec<&Tensor<f32>> = weights.iter().collect();
        let l2 = l2_penalty(&wrefs, &mut grads, self.config.l2);
        let mut params = Vec::new();
        let mut grads = Vec::new();
        for p in self.net.params_mut() {
            if let Some(v) = p.grad.data().iter().find(|v| !v.is_finite()) {
                return Err(diverged(format!("gradient of {} is {v}", p.name)));
            }
            params.push(&mut p.value);
            grads.push(&p.grad);
        }
        // split borrows: values mutably, grads immutably
        let grads: Vec<Tensor<f32>> = grads.into_iter().cloned().collect();
        let grefs: Vec<&Tensor<f32>> = grads.iter().collect();
        self.adam.step(&mut params, &grefs, lr)?;
        Ok(StepRecord {
            epoch,
            batch,
            loss: out.loss,
            l2,
        })
    }

    /// Runs one epoch: shuffled batches drawn by a producer thread, one
    /// optimizer step per batch, then validation.
    pub fn run_epoch(
        &mut self,
        data: &dyn Dataset,
        validation: &[TrainingExample],
        report: &mut TrainReport,
    ) -> Result<EpochLog> {
        let epoch = self.epoch;
        let lr = self.config.schedule().at_epoch(epoch);
        let seed = self.config.seed;
        let plan = batches(&epoch_order(seed, epoch, data.len()), self.config.batch_size);
        let mut losses = Vec::new();
        let (tx, rx) = sync_channel::<Result<(usize, Vec<TrainingExample>, usize)>>(2);
        std::thread::scope(|s| -> Result<()> {
            s.spawn(move || {
                for (b, idx) in plan.iter().enumerate() {
                    let drawn: Result<Vec<Option<TrainingExample>>> = idx
                        .par_iter()
                        .map(|&i| data.draw(i, &mut seed::rng(seed, &format!("train/augment/{epoch}/{i}"))))
                        .collect();
                    let msg = drawn.map(|d| {
                        let skipped = d.iter().filter(|e| e.is_none()).count();
                        (b, d.into_iter().flatten().collect(), skipped)
                    });
                    if tx.send(msg).is_err() {
                        break;
                    }
                }
            });
            for msg in rx {
                if !self.budget_left() {
                    break;
                }
                let (b, examples, skipped) = msg?;
                report.skipped += skipped;
                if examples.len() < 2 {
                    continue;
                }
                let rec = self.step(&examples, lr, b)?;
                losses.push(rec.loss);
                report.steps.push(rec);
            }
            Ok(())
        })?;
        let (val_top1, val_map) = if validation.is_empty() {
            (None, None)
        } else {
            let (t, m) = validate(&self.net, validation, self.config.batch_size)?;
            (Some(t), m)
        };
        self.epoch += 1;
        let train_loss = if losses.is_empty() {
            f64::NAN
        } else {
            losses.iter().sum::<f64>() / losses.len() as f64
        };
        Ok(EpochLog {
            epoch,
            lr,
            train_loss,
            val_top1,
            val_map,
        })
    }
}

/// Trains until `config.epochs` epochs are complete (or the step budget is
/// spent). With `out`, writes `metrics.tsv`, `epoch_NNN.ckpt` after every
/// epoch and `best.ckpt` whenever validation mAP improves.
pub fn run_training(
    trainer: &mut Trainer,
    data: &dyn Dataset,
    validation: &[TrainingExample],
    out: Option<&Path>,
) -> Result<TrainReport> {
    if data.is_empty() {
        return Err(Error::InvalidDataset("training set is empty".into()));
    }
    let mut report = TrainReport::default();
    let mut log = match out {
        Some(dir) => {
            std::fs::create_dir_all(dir).map_err(|e| Error::io(dir, e))?;
            Some(log::MetricLog::open(&dir.join("metrics.tsv"), trainer.epoch == 0)?)
        }
        None => None,
    };
    while trainer.epoch < trainer.config.epochs && trainer.budget_left() {
        let entry = trainer.run_epoch(data, validation, &mut report)?;
        if let (Some(dir), Some(log)) = (out, log.as_mut()) {
            log.append(&entry)?;
            let ckpt = trainer.checkpoint();
            let path = dir.join(format!("epoch_{:03}.ckpt", entry.epoch));
            ckpt.save(&path)?;
            report.checkpoints.push(path);
            if let Some(m) = entry.val_map {
                if trainer.best_map.map_or(true, |b| m > b) {
                    trainer.best_map = Some(m);
                    ckpt.save(dir.join("best.ckpt"))?;
                }
            }
        }
        report.epochs.push(entry);
    }
    Ok(report)
}
