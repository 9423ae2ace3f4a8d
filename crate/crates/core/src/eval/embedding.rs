//! Per-second embeddings from a trained network.

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::engine::{Checkpoint, Network, Tensor};
use crate::error::{Error, Result};
use crate::frontend::{FrontendConfig, LogMelExtractor, LogMelFrame, Waveform, FRAME_ROWS, MEL_BINS};
use crate::models::{NetworkSpec, EMBEDDING_WIDTH};

/// Ordered 128-d vectors for one clip, one per complete second.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct EmbeddingSequence {
    pub clip_id: String,
    pub labels: Vec<usize>,
    /// Fold or split tag from the benchmark manifest.
    #[serde(default)]
    pub split: String,
    pub vectors: Vec<Vec<f32>>,
}

impl EmbeddingSequence {
    /// Ordered concatenation of the per-second vectors.
    pub fn concat(&self) -> Vec<f32> {
        self.vectors.concat()
    }
}

/// A realized network together with its spec and frontend.
pub struct EmbeddingModel {
    pub spec: NetworkSpec,
    pub net: Network<f32>,
    pub frontend: LogMelExtractor,
}

impl EmbeddingModel {
    pub fn new(spec: NetworkSpec, net: Network<f32>, frontend: FrontendConfig) -> Result<Self> {
        if net.layers() != &spec.layers[..] {
            return Err(Error::CheckpointMismatch(format!("network does not realize {}", spec.name)));
        }
        Ok(EmbeddingModel {
            spec,
            net,
            frontend: LogMelExtractor::new(frontend)?,
        })
    }

    /// Builds `spec` and loads trained weights, rejecting checkpoints
    /// written for a different variant.
    pub fn from_checkpoint(spec: NetworkSpec, ckpt: &Checkpoint, frontend: FrontendConfig) -> Result<Self> {
        if ckpt.meta != spec.name {
            return Err(Error::CheckpointMismatch(format!(
                "checkpoint was written for {:?}, requested {:?}",
                ckpt.meta, spec.name
            )));
        }
        let mut net = Network::build(
            &spec.layers,
            &spec.input_shape,
            Default::default(),
            &mut crate::seed::rng(0, "embed/placeholder"),
        )?;
        ckpt.restore(&mut net)?;
        Self::new(spec, net, frontend)
    }

    /// Inference-mode embeddings of pre-computed frames.
    pub fn embed_frames(&self, frames: &[LogMelFrame]) -> Result<Vec<Vec<f32>>> {
        if frames.is_empty() {
            return Ok(Vec::new());
        }
        let rows: Vec<&[f32]> = frames.iter().map(|f| f.values()).collect();
        let x = Tensor::stack(&rows, &[FRAME_ROWS, MEL_BINS, 1])?;
        let e = self.net.infer_until(&x, self.spec.embedding_layer + 1)?;
        Ok(e.data().chunks(EMBEDDING_WIDTH).map(<[f32]>::to_vec).collect())
    }
}

pub fn extract_embeddings(
    model: &EmbeddingModel,
    clip: &Waveform,
    clip_id: &str,
    labels: Vec<usize>,
) -> Result<EmbeddingSequence> {
    let frames = model.frontend.clip_frames(clip)?;
    if frames.is_empty() {
        return Err(Error::InvalidInput(format!("{clip_id}: clip shorter than one second")));
    }
    Ok(EmbeddingSequence {
        clip_id: clip_id.to_string(),
        labels,
        split: String::new(),
        vectors: model.embed_frames(&frames)?,
    })
}

/// Embeds clips in parallel; output order follows input order.
pub fn extract_all(
    model: &EmbeddingModel,
    clips: &[(String, Vec<usize>, String, Waveform)],
) -> Result<Vec<EmbeddingSequence>> {
    clips
        .par_iter()
        .map(|(id, labels, split, wave)| {
            let mut s = extract_embeddings(model, wave, id, labels.clone())?;
            s.split = split.clone();
            Ok(s)
        })
        .collect()
}
