use std::io::{BufRead, Write};

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::jsonl::{read_jsonl, write_jsonl};

/// Visual labels in the standard vocabulary.
pub const VISUAL_LABELS_TOTAL: usize = 11_166;
/// Audio labels in the standard vocabulary.
pub const AUDIO_LABELS: usize = 527;

const FORMAT: &str = "mm-vocab";

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Modality {
    Visual,
    Audio,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct LabelEntry {
    pub id: usize,
    pub name: String,
    pub modality: Modality,
}

/// Dense id space: visual labels `0..V`, then audio labels `V..V+A`.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct LabelVocabulary {
    entries: Vec<LabelEntry>,
    visual: usize,
}

impl LabelVocabulary {
    /// Builds from entries, checking dense ids and the visual-then-audio order.
    pub fn new(entries: Vec<LabelEntry>) -> Result<Self> {
        let mut visual = 0;
        for (i, e) in entries.iter().enumerate() {
            if e.id != i {
                return Err(Error::DataIntegrity(format!("vocabulary id {} at position {i}", e.id)));
            }
            match e.modality {
                Modality::Visual if visual == i => visual += 1,
                Modality::Visual => {
                    return Err(Error::DataIntegrity(format!("visual label {i} after audio labels")))
                }
                Modality::Audio => {}
            }
        }
        Ok(LabelVocabulary { entries, visual })
    }

    /// Synthetic names with the given partition sizes.
    pub fn small(visual: usize, audio: usize) -> Self {
        let entries = (0..visual)
            .map(|i| LabelEntry {
                id: i,
                name: format!("visual_{i:05}"),
                modality: Modality::Visual,
            })
            .chain((0..audio).map(|i| LabelEntry {
                id: visual + i,
                name: format!("audio_{i:03}"),
                modality: Modality::Audio,
            }))
            .collect();
        LabelVocabulary { entries, visual }
    }

    /// 11,166 visual + 527 audio = 11,693 labels with placeholder names.
    pub fn standard() -> Self {
        Self::small(VISUAL_LABELS_TOTAL, AUDIO_LABELS)
    }

    pub fn len(&self) -> usize {
        self.entries.len()
    }

    pub fn is_empty(&self) -> bool {
        self.entries.is_empty()
    }

    pub fn visual_count(&self) -> usize {
        self.visual
    }

    pub fn audio_count(&self) -> usize {
        self.entries.len() - self.visual
    }

    pub fn get(&self, id: usize) -> Option<&LabelEntry> {
        self.entries.get(id)
    }

    pub fn entries(&self) -> &[LabelEntry] {
        &self.entries
    }

    /// Global id of the `i`-th visual label.
    pub fn visual_id(&self, i: usize) -> usize {
        i
    }

    /// Global id of the `i`-th audio label.
    pub fn audio_id(&self, i: usize) -> usize {
        self.visual + i
    }

    pub fn write<W: Write>(&self, w: W) -> Result<()> {
        write_jsonl(w, FORMAT, &self.entries)
    }

    pub fn read<R: BufRead>(r: R) -> Result<Self> {
        Self::new(read_jsonl(r, FORMAT)?)
    }
}
