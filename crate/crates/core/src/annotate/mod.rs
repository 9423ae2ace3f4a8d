//! Machine annotation of short videos: frame-level visual predictions and
//! segment-level audio predictions are aggregated into one multi-modal label
//! set per video, videos are sharded into 4,096 folds by UUID hash, and
//! per-label statistics are reported over the vocabulary.

mod aggregate;
mod manifest;
mod predictor;
mod shard;
mod stats;
mod vocab;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

pub use aggregate::{aggregate_audio, aggregate_visual, mean_predictions, top_k, MAX_AUDIO_LABELS, VISUAL_LABELS};
pub use manifest::{read_annotations, read_entries, synthetic_entries, write_annotations, write_entries, VideoEntry};
pub use predictor::{ConstantPredictor, Predictor, SyntheticPredictor};
pub use shard::{fnv1a64, shard, FOLDS};
pub use stats::{vocab_stats, LabelCount, VocabStats};
pub use vocab::{LabelEntry, LabelVocabulary, Modality, AUDIO_LABELS, VISUAL_LABELS_TOTAL};

use crate::error::{Error, Result};

/// Frames sampled per second of video.
pub const FRAMES_PER_SECOND: f64 = 3.0;
/// Default audio keep threshold on mean segment probability.
pub const DEFAULT_AUDIO_THRESHOLD: f64 = 0.1;

/// Prediction streams for one video.
#[derive(Debug, Clone, PartialEq)]
pub struct VideoRecord {
    pub uuid: String,
    pub duration: f64,
    /// One probability vector per sampled frame, over the visual vocabulary.
    pub visual_frame_preds: Vec<Vec<f32>>,
    /// One probability vector per 1-second segment, over the audio vocabulary.
    pub audio_segment_preds: Vec<Vec<f32>>,
}

/// Expected sampled-frame count for a clip.
pub fn frame_count(duration: f64) -> usize {
    (duration * FRAMES_PER_SECOND).round() as usize
}

impl VideoRecord {
    pub fn validate(&self) -> Result<()> {
        if !(3.0..=5.0).contains(&self.duration) {
            return Err(Error::InvalidInput(format!(
                "{}: duration {} outside [3, 5] s",
                self.uuid, self.duration
            )));
        }
        let frames = frame_count(self.duration);
        if self.visual_frame_preds.len() != frames {
            return Err(Error::InvalidInput(format!(
                "{}: {} frames for {} s, expected {frames}",
                self.uuid,
                self.visual_frame_preds.len(),
                self.duration
            )));
        }
        if self.audio_segment_preds.is_empty() {
            return Err(Error::InvalidInput(format!("{}: no audio segments", self.uuid)));
        }
        let all = self.visual_frame_preds.iter().chain(&self.audio_segment_preds);
        for v in all {
            if v.iter().any(|p| !(0.0..=1.0).contains(p)) {
                return Err(Error::InvalidInput(format!("{}: probability outside [0, 1]", self.uuid)));
            }
        }
        Ok(())
    }
}

/// Labels assigned to one video. Ids index the combined vocabulary (visual
/// ids first, then audio ids).
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct VideoAnnotation {
    pub uuid: String,
    pub fold: u32,
    pub visual_labels: Vec<usize>,
    pub audio_labels: Vec<usize>,
}

impl VideoAnnotation {
    /// Checks label counts, uniqueness, modality and fold range.
    pub fn validate(&self, vocab: &LabelVocabulary) -> Result<()> {
        let bad = |m: String| Error::DataIntegrity(format!("{}: {m}", self.uuid));
        if self.visual_labels.len() != VISUAL_LABELS {
            return Err(bad(format!("{} visual labels", self.visual_labels.len())));
        }
        if !(1..=MAX_AUDIO_LABELS).contains(&self.audio_labels.len()) {
            return Err(bad(format!("{} audio labels", self.audio_labels.len())));
        }
        if self.fold as usize >= FOLDS {
            return Err(bad(format!("fold {}", self.fold)));
        }
        let mut seen = std::collections::HashSet::new();
        for (ids, want) in [(&self.visual_labels, Modality::Visual), (&self.audio_labels, Modality::Audio)] {
            for &id in ids {
                let entry = vocab.get(id).ok_or_else(|| bad(format!("unknown label id {id}")))?;
                if entry.modality != want {
                    return Err(bad(format!("label {id} is not {want:?}")));
                }
                if !seen.insert(id) {
                    return Err(bad(format!("duplicate label {id}")));
                }
            }
        }
        Ok(())
    }

    pub fn labels(&self) -> impl Iterator<Item = usize> + '_ {
        self.visual_labels.iter().chain(&self.audio_labels).copied()
    }
}

/// Combines the aggregators and the shard function for one record.
pub fn annotate_record(record: &VideoRecord, vocab: &LabelVocabulary, threshold: f64) -> Result<VideoAnnotation> {
    record.validate()?;
    let visual = aggregate_visual(&record.visual_frame_preds)?;
    let audio = aggregate_audio(&record.audio_segment_preds, threshold)?;
    Ok(VideoAnnotation {
        uuid: record.uuid.clone(),
        fold: shard(&record.uuid)?,
        visual_labels: visual.into_iter().map(|i| vocab.visual_id(i)).collect(),
        audio_labels: audio.into_iter().map(|i| vocab.audio_id(i)).collect(),
    })
}

/// Output of [`annotate_corpus`]: annotations in input order plus the
/// records that failed.
#[derive(Debug, Clone, Default)]
pub struct AnnotationRun {
    pub annotations: Vec<VideoAnnotation>,
    pub failures: Vec<(String, String)>,
}

impl AnnotationRun {
    pub fn summary(&self) -> String {
        format!(
            "{} annotated, {} failed{}",
            self.annotations.len(),
            self.failures.len(),
            self.failures
                .iter()
                .map(|(u, e)| format!("\n  {u}: {e}"))
                .collect::<String>()
        )
    }
}

/// Annotates every entry. Records are processed in parallel and merged in
/// input order; a failing record is reported and skipped.
pub fn annotate_corpus<P: Predictor + ?Sized>(
    entries: &[VideoEntry],
    predictor: &P,
    vocab: &LabelVocabulary,
    threshold: f64,
) -> AnnotationRun {
    let results: Vec<Result<VideoAnnotation>> = entries
        .par_iter()
        .map(|e| {
            let rec = predictor.predict(e)?;
            annotate_record(&rec, vocab, threshold)
        })
        .collect();
    let mut run = AnnotationRun::default();
    for (e, r) in entries.iter().zip(results) {
        match r {
            Ok(a) => run.annotations.push(a),
            Err(err) => run.failures.push((e.uuid.clone(), err.to_string())),
        }
    }
    run
}
