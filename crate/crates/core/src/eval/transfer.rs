//! Single-dense-layer classifier heads over concatenated embeddings.

use rand::seq::SliceRandom;
use serde::{Deserialize, Serialize};

use super::EmbeddingSequence;
use crate::engine::{
    l2_penalty, multilabel_bce, softmax_cross_entropy, AdamConfig, AdamState, LayerSpec, Network, Tensor,
};
use crate::error::{Error, Result};
use crate::seed;

pub const TRANSFER_LR: f64 = 2e-4;
pub const TRANSFER_BATCH: usize = 128;
pub const TRANSFER_L2: f64 = 1e-6;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct HeadConfig {
    pub lr: f64,
    pub batch_size: usize,
    pub l2: f64,
    pub dropout: f64,
    pub epochs: usize,
    pub seed: u64,
    /// Sigmoid + multi-label cross-entropy instead of softmax.
    pub multi_label: bool,
}

impl Default for HeadConfig {
    fn default() -> Self {
        HeadConfig {
            lr: TRANSFER_LR,
            batch_size: TRANSFER_BATCH,
            l2: TRANSFER_L2,
            dropout: 0.5,
            epochs: 100,
            seed: 0,
            multi_label: false,
        }
    }
}

impl HeadConfig {
    pub fn validate(&self) -> Result<()> {
        let bad = |m: &str| Err(Error::InvalidConfig(format!("head.{m}")));
        if !(self.lr > 0.0 && self.lr.is_finite()) {
            return bad("lr must be positive");
        }
        if self.batch_size == 0 {
            return bad("batch_size must be positive");
        }
        if !(self.l2 >= 0.0 && self.l2.is_finite()) {
            return bad("l2 must be non-negative");
        }
        if !(0.0..1.0).contains(&self.dropout) {
            return bad("dropout must lie in [0, 1)");
        }
        if self.epochs == 0 {
            return bad("epochs must be positive");
        }
        Ok(())
    }
}

/// A trained transfer head.
#[derive(Debug, Clone)]
pub struct TransferHead {
    pub net: Network<f32>,
    pub input_width: usize,
    pub classes: usize,
    pub multi_label: bool,
}

/// Checks that every clip has the same number of seconds and returns the
/// concatenated input width.
pub fn input_width(sequences: &[EmbeddingSequence]) -> Result<usize> {
    let first = sequences
        .first()
        .ok_or_else(|| Error::InvalidDataset("no clips".into()))?;
    let want = first.vectors.len();
    for s in sequences {
        if s.vectors.len() != want {
            return Err(Error::InvalidDataset(format!(
                "ragged clip lengths: {} has {} seconds, {} has {want}",
                s.clip_id,
                s.vectors.len(),
                first.clip_id
            )));
        }
        if let Some(v) = s.vectors.iter().find(|v| v.len() != crate::models::EMBEDDING_WIDTH) {
            return Err(Error::InvalidDataset(format!("{}: embedding of width {}", s.clip_id, v.len())));
        }
    }
    Ok(want * crate::models::EMBEDDING_WIDTH)
}

fn inputs(sequences: &[&EmbeddingSequence], width: usize) -> Result<Tensor<f32>> {
    let data: Vec<f32> = sequences.iter().flat_map(|s| s.concat()).collect();
    Tensor::new(vec![sequences.len(), width], data)
}

pub fn train_transfer_head(
    sequences: &[EmbeddingSequence],
    classes: usize,
    config: &HeadConfig,
) -> Result<TransferHead> {
    config.validate()?;
    let width = input_width(sequences)?;
    for s in sequences {
        if s.labels.is_empty() || s.labels.iter().any(|&l| l >= classes) {
            return Err(Error::InvalidDataset(format!(
                "{}: labels {:?} outside 0..{classes}",
                s.clip_id, s.labels
            )));
        }
        if !config.multi_label && s.labels.len() != 1 {
            return Err(Error::InvalidDataset(format!("{}: single-label benchmark, got {:?}", s.clip_id, s.labels)));
        }
    }
    let layers = [LayerSpec::Dropout { rate: config.dropout }, LayerSpec::Dense { units: classes }];
    let mut net = Network::build(
        &layers,
        &[width],
        Default::default(),
        &mut seed::rng(config.seed, "transfer/init"),
    )?;
    let mut adam = AdamState::new(net.params().map(|p| &p.value), AdamConfig::default());
    let mut order: Vec<usize> = (0..sequences.len()).collect();
    for epoch in 0..config.epochs {
        order.shuffle(&mut seed::rng(config.seed, &format!("transfer/shuffle/{epoch}")));
        for (b, idx) in order.chunks(config.batch_size).enumerate() {
            let batch: Vec<&EmbeddingSequence> = idx.iter().map(|&i| &sequences[i]).collect();
            let x = inputs(&batch, width)?;
            net.zero_grad();
            let mut rng = seed::rng(config.seed, &format!("transfer/dropout/{epoch}/{b}"));
            let (z, trace) = net.forward_train(&x, layers.len(), &mut rng)?;
            let out = if config.multi_label {
                let mut y = vec![0f32; batch.len() * classes];
                for (r, s) in batch.iter().enumerate() {
                    for &l in &s.labels {
                        y[r * classes + l] = 1.0;
                    }
                }
                multilabel_bce(&z, &Tensor::new(vec![batch.len(), classes], y)?)?
            } else {
                let y: Vec<usize> = batch.iter().map(|s| s.labels[0]).collect();
                softmax_cross_entropy(&z, &y)?
            };
            if !out.loss.is_finite() {
                return Err(Error::Diverged {
                    epoch,
                    batch: b,
                    detail: "transfer head loss".into(),
                });
            }
            net.backward(trace, out.grad)?;
            let mut params = Vec::new();
            let mut grads = Vec::new();
            for p in net.params_mut() {
                if p.decay {
                    let w = p.value.clone();
                    l2_penalty(&[&w], &mut [&mut p.grad], config.l2);
                }
                grads.push(p.grad.clone());
                params.push(&mut p.value);
            }
            let grefs: Vec<&Tensor<f32>> = grads.iter().collect();
            adam.step(&mut params, &grefs, config.lr)?;
        }
    }
    Ok(TransferHead {
        net,
        input_width: width,
        classes,
        multi_label: config.multi_label,
    })
}

impl TransferHead {
    /// Class scores per clip: softmax probabilities for single-label heads,
    /// sigmoid probabilities for multi-label heads.
    pub fn predict(&self, sequences: &[EmbeddingSequence]) -> Result<Vec<Vec<f64>>> {
        if sequences.is_empty() {
            return Ok(Vec::new());
        }
        let width = input_width(sequences)?;
        if width != self.input_width {
            return Err(Error::InvalidDataset(format!(
                "head expects {}-wide inputs, clips give {width}",
                self.input_width
            )));
        }
        let refs: Vec<&EmbeddingSequence> = sequences.iter().collect();
        let z = self.net.infer(&inputs(&refs, width)?)?;
        Ok(z
            .data()
            .chunks(self.classes)
            .map(|row| {
                let row: Vec<f64> = row.iter().map(|&v| v as f64).collect();
                if self.multi_label {
                    row.iter().map(|&v| 1.0 / (1.0 + (-v).exp())).collect()
                } else {
                    let mx = row.iter().copied().fold(f64::NEG_INFINITY, f64::max);
                    let e: Vec<f64> = row.iter().map(|&v| (v - mx).exp()).collect();
                    let s: f64 = e.iter().sum();
                    e.iter().map(|v| v / s).collect()
                }
            })
            .collect())
    }

    pub fn parameter_count(&self) -> usize {
        self.net.parameter_count()
    }
}

#[derive(Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
struct HeadMeta {
    kind: String,
    input_width: usize,
    classes: usize,
    multi_label: bool,
    dropout: f64,
}

const HEAD_KIND: &str = "transfer-head";

impl TransferHead {
    pub fn to_checkpoint(&self) -> Result<crate::engine::Checkpoint> {
        let dropout = match self.net.layers()[0] {
            LayerSpec::Dropout { rate } => rate,
            _ => 0.0,
        };
        let meta = serde_json::to_string(&HeadMeta {
            kind: HEAD_KIND.into(),
            input_width: self.input_width,
            classes: self.classes,
            multi_label: self.multi_label,
            dropout,
        })?;
        Ok(crate::engine::Checkpoint::capture(&self.net, None, 0, meta))
    }

    pub fn from_checkpoint(ckpt: &crate::engine::Checkpoint) -> Result<Self> {
        let meta: HeadMeta = serde_json::from_str(&ckpt.meta)
            .map_err(|e| Error::CheckpointMismatch(format!("not a transfer head checkpoint: {e}")))?;
        if meta.kind != HEAD_KIND {
            return Err(Error::CheckpointMismatch(format!("checkpoint kind {:?}", meta.kind)));
        }
        let layers = [LayerSpec::Dropout { rate: meta.dropout }, LayerSpec::Dense { units: meta.classes }];
        let mut net = Network::build(&layers, &[meta.input_width], Default::default(), &mut seed::rng(0, "unused"))?;
        ckpt.restore(&mut net)?;
        Ok(TransferHead {
            net,
            input_width: meta.input_width,
            classes: meta.classes,
            multi_label: meta.multi_label,
        })
    }
}
