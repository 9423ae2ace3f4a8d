//! Training examples, the label-to-head index, and segment/label augmentation.

use std::collections::BTreeMap;

use rand::seq::index::sample;
use rand::Rng;

use crate::annotate::VideoAnnotation;
use crate::error::{Error, Result};
use crate::frontend::LogMelFrame;

/// Visual labels kept per training step.
pub const VISUAL_SUBSAMPLE: usize = 5;

/// One input frame with its sparse multi-hot target (head indices).
#[derive(Debug, Clone, PartialEq)]
pub struct TrainingExample {
    pub spectrogram: LogMelFrame,
    /// Sorted, distinct head indices of the positive labels.
    pub target: Vec<usize>,
    pub uuid: String,
    pub segment: usize,
}

impl TrainingExample {
    /// Dense target row of `width` zeros and ones.
    pub fn dense_target(&self, width: usize) -> Vec<f32> {
        let mut row = vec![0.0; width];
        for &i in &self.target {
            row[i] = 1.0;
        }
        row
    }
}

/// Maps vocabulary label ids to output-head columns, in ascending id order.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct LabelIndex {
    ids: Vec<usize>,
    columns: BTreeMap<usize, usize>,
    width: usize,
}

impl LabelIndex {
    /// Assigns columns to every label used by `annotations`. Fails when the
    /// distinct label count exceeds `width`.
    pub fn from_annotations(annotations: &[VideoAnnotation], width: usize) -> Result<Self> {
        let mut ids: Vec<usize> = annotations.iter().flat_map(|a| a.labels()).collect();
        ids.sort_unstable();
        ids.dedup();
        Self::from_ids(ids, width)
    }

    pub fn from_ids(mut ids: Vec<usize>, width: usize) -> Result<Self> {
        ids.sort_unstable();
        ids.dedup();
        if ids.len() > width {
            return Err(Error::InvalidDataset(format!(
                "{} distinct labels do not fit a head of width {width}",
                ids.len()
            )));
        }
        let columns = ids.iter().enumerate().map(|(c, &id)| (id, c)).collect();
        Ok(LabelIndex { ids, columns, width })
    }

    pub fn width(&self) -> usize {
        self.width
    }

    pub fn used(&self) -> usize {
        self.ids.len()
    }

    pub fn column(&self, id: usize) -> Option<usize> {
        self.columns.get(&id).copied()
    }

    pub fn label(&self, column: usize) -> Option<usize> {
        self.ids.get(column).copied()
    }

    fn columns_of(&self, ids: impl IntoIterator<Item = usize>) -> Result<Vec<usize>> {
        ids.into_iter()
            .map(|id| {
                self.column(id)
                    .ok_or_else(|| Error::InvalidDataset(format!("label {id} has no head column")))
            })
            .collect()
    }
}

/// Draws one training example from a video: a uniformly chosen 1-second
/// segment, five distinct visual labels and every audio label.
///
/// Returns `Ok(None)` when the video has no complete segment, which callers
/// treat as a skipped record.
pub fn augment<R: Rng + ?Sized>(
    annotation: &VideoAnnotation,
    segments: &[LogMelFrame],
    index: &LabelIndex,
    rng: &mut R,
) -> Result<Option<TrainingExample>> {
    if segments.is_empty() {
        return Ok(None);
    }
    if annotation.visual_labels.len() < VISUAL_SUBSAMPLE {
        return Err(Error::InvalidDataset(format!(
            "{}: {} visual labels, need at least {VISUAL_SUBSAMPLE}",
            annotation.uuid,
            annotation.visual_labels.len()
        )));
    }
    let segment = rng.gen_range(0..segments.len());
    let picked = sample(rng, annotation.visual_labels.len(), VISUAL_SUBSAMPLE);
    let visual = picked.into_iter().map(|i| annotation.visual_labels[i]);
    let mut target = index.columns_of(visual.chain(annotation.audio_labels.iter().copied()))?;
    target.sort_unstable();
    target.dedup();
    Ok(Some(TrainingExample {
        spectrogram: segments[segment].clone(),
        target,
        uuid: annotation.uuid.clone(),
        segment,
    }))
}
