use rand::Rng;

use super::{frame_count, LabelVocabulary, VideoEntry, VideoRecord};
use crate::error::{Error, Result};
use crate::seed;

/// Source of per-frame visual and per-segment audio probabilities.
pub trait Predictor: Sync {
    fn predict(&self, entry: &VideoEntry) -> Result<VideoRecord>;
}

fn check_duration(entry: &VideoEntry) -> Result<()> {
    if !(3.0..=5.0).contains(&entry.duration) {
        return Err(Error::InvalidInput(format!(
            "{}: duration {} outside [3, 5] s",
            entry.uuid, entry.duration
        )));
    }
    Ok(())
}

/// Cumulative Zipf(1.1) weights over `n` ranks.
fn zipf_cdf(n: usize) -> Vec<f64> {
    let mut acc = 0.0;
    let mut cdf: Vec<f64> = (1..=n)
        .map(|r| {
            acc += (r as f64).powf(-1.1);
            acc
        })
        .collect();
    let total = acc;
    cdf.iter_mut().for_each(|c| *c /= total);
    cdf
}

fn draw_distinct<R: Rng>(cdf: &[f64], k: usize, rng: &mut R) -> Vec<usize> {
    let k = k.min(cdf.len());
    let mut out: Vec<usize> = Vec::with_capacity(k);
    while out.len() < k {
        let u: f64 = rng.gen();
        let i = cdf.partition_point(|&c| c < u).min(cdf.len() - 1);
        if !out.contains(&i) {
            out.push(i);
        }
    }
    out
}

/// Seeded stand-in for the visual and audio teacher networks.
///
/// Each video draws a handful of "present" labels from a Zipf distribution
/// (so label frequencies are heavy-tailed) and emits noisy probabilities
/// that are high for those labels and low elsewhere. Output depends only on
/// the seed and the video's UUID, never on processing order.
#[derive(Debug, Clone)]
pub struct SyntheticPredictor {
    seed: u64,
    visual_cdf: Vec<f64>,
    audio_cdf: Vec<f64>,
}

impl SyntheticPredictor {
    pub fn new(vocab: &LabelVocabulary, seed: u64) -> Self {
        SyntheticPredictor {
            seed,
            visual_cdf: zipf_cdf(vocab.visual_count()),
            audio_cdf: zipf_cdf(vocab.audio_count()),
        }
    }
}

impl Predictor for SyntheticPredictor {
    fn predict(&self, entry: &VideoEntry) -> Result<VideoRecord> {
        check_duration(entry)?;
        let mut rng = seed::rng(self.seed, &format!("predict/{}", entry.uuid));
        let frames = frame_count(entry.duration);
        let segments = entry.duration.floor() as usize;

        let visual_present: Vec<(usize, f32)> = draw_distinct(&self.visual_cdf, 14, &mut rng)
            .into_iter()
            .map(|i| (i, rng.gen_range(0.3..0.95)))
            .collect();
        let n_audio = rng.gen_range(1..=5);
        let audio_present: Vec<(usize, f32)> = draw_distinct(&self.audio_cdf, n_audio, &mut rng)
            .into_iter()
            .map(|i| (i, rng.gen_range(0.15..0.9)))
            .collect();

        let mut emit = |n: usize, len: usize, present: &[(usize, f32)], noise: f32, jitter: f32| {
            (0..n)
                .map(|_| {
                    let mut v: Vec<f32> = (0..len).map(|_| rng.gen_range(0.0..noise)).collect();
                    for &(i, s) in present {
                        v[i] = (s + rng.gen_range(-jitter..jitter)).clamp(0.0, 1.0);
                    }
                    v
                })
                .collect::<Vec<_>>()
        };
        let visual_frame_preds = emit(frames, self.visual_cdf.len(), &visual_present, 0.1, 0.15);
        let audio_segment_preds = emit(segments, self.audio_cdf.len(), &audio_present, 0.06, 0.05);
        Ok(VideoRecord {
            uuid: entry.uuid.clone(),
            duration: entry.duration,
            visual_frame_preds,
            audio_segment_preds,
        })
    }
}

/// Emits the same probability vectors for every frame and segment of every
/// video.
#[derive(Debug, Clone)]
pub struct ConstantPredictor {
    visual: Vec<f32>,
    audio: Vec<f32>,
}

impl ConstantPredictor {
    pub fn new(vocab: &LabelVocabulary, seed: u64) -> Self {
        let mut rng = seed::rng(seed, "constant-predictor");
        ConstantPredictor {
            visual: (0..vocab.visual_count()).map(|_| rng.gen()).collect(),
            audio: (0..vocab.audio_count()).map(|_| rng.gen()).collect(),
        }
    }
}

impl Predictor for ConstantPredictor {
    fn predict(&self, entry: &VideoEntry) -> Result<VideoRecord> {
        check_duration(entry)?;
        Ok(VideoRecord {
            uuid: entry.uuid.clone(),
            duration: entry.duration,
            visual_frame_preds: vec![self.visual.clone(); frame_count(entry.duration)],
            audio_segment_preds: vec![self.audio.clone(); entry.duration.floor() as usize],
        })
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn synthetic_records_are_valid_and_order_free() {
        let vocab = LabelVocabulary::small(200, 40);
        let p = SyntheticPredictor::new(&vocab, 9);
        let e = VideoEntry {
            uuid: "9a1f0c55-3d4e-4b7a-8f00-1234567890ab".into(),
            path: "x".into(),
            duration: 4.6,
        };
        let r = p.predict(&e).unwrap();
        r.validate().unwrap();
        assert_eq!(r.visual_frame_preds.len(), 14);
        assert_eq!(r.audio_segment_preds.len(), 4);
        assert_eq!(p.predict(&e).unwrap(), r);
    }

    #[test]
    fn zipf_is_heavy_headed() {
        let cdf = zipf_cdf(1000);
        assert!((cdf[999] - 1.0).abs() < 1e-12);
        assert!(cdf[9] > 0.3);
    }
}
