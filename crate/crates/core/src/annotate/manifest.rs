use std::io::{BufRead, Write};

use serde::{Deserialize, Serialize};

use super::VideoAnnotation;
use crate::error::Result;
use crate::jsonl::{read_jsonl, write_jsonl};

const VIDEOS: &str = "mm-videos";
const ANNOTATIONS: &str = "mm-annotations";

/// One line of the input video manifest.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct VideoEntry {
    pub uuid: String,
    /// Media path, relative to whatever root the consumer uses.
    pub path: String,
    /// Seconds.
    pub duration: f64,
}

pub fn read_entries<R: BufRead>(r: R) -> Result<Vec<VideoEntry>> {
    read_jsonl(r, VIDEOS)
}

pub fn write_entries<W: Write>(w: W, entries: &[VideoEntry]) -> Result<()> {
    write_jsonl(w, VIDEOS, entries)
}

/// Field order per line is uuid, fold, visual_labels, audio_labels.
pub fn write_annotations<W: Write>(w: W, annotations: &[VideoAnnotation]) -> Result<()> {
    write_jsonl(w, ANNOTATIONS, annotations)
}

pub fn read_annotations<R: BufRead>(r: R) -> Result<Vec<VideoAnnotation>> {
    read_jsonl(r, ANNOTATIONS)
}


/// `n` seeded video entries with random v4 UUIDs and 3-5 s durations.
pub fn synthetic_entries(n: usize, seed: u64) -> Vec<VideoEntry> {
    use rand::Rng;
    let mut rng = crate::seed::rng(seed, "videos/synthetic");
    (0..n)
        .map(|_| {
            let uuid = uuid::Builder::from_random_bytes(rng.gen()).into_uuid().to_string();
            let tenths: u32 = rng.gen_range(30..=50);
            VideoEntry {
                path: format!("{uuid}.wav"),
                uuid,
                duration: f64::from(tenths) / 10.0,
            }
        })
        .collect()
}
