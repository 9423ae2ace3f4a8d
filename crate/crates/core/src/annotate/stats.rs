use std::fmt::Write;

use super::{LabelVocabulary, Modality, VideoAnnotation};
use crate::error::{Error, Result};

#[derive(Debug, Clone, PartialEq)]
pub struct LabelCount {
    pub id: usize,
    pub count: u64,
    /// `log2(count)`, absent for unused labels.
    pub log2: Option<f64>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct VocabStats {
    pub per_label: Vec<LabelCount>,
    pub used: usize,
    pub total: usize,
    pub videos: usize,
}

impl VocabStats {
    /// Fraction of vocabulary entries that appear at least once.
    pub fn utilization(&self) -> f64 {
        if self.total == 0 {
            0.0
        } else {
            self.used as f64 / self.total as f64
        }
    }

    pub fn count(&self, id: usize) -> u64 {
        self.per_label[id].count
    }

    /// Fixed-format report: a summary block, then one line per label.
    pub fn report(&self, vocab: &LabelVocabulary) -> String {
        let mut s = String::new();
        writeln!(s, "videos {}", self.videos).unwrap();
        for m in [Modality::Visual, Modality::Audio] {
            let ids: Vec<&LabelCount> = self
                .per_label
                .iter()
                .filter(|c| vocab.get(c.id).map(|e| e.modality) == Some(m))
                .collect();
            let used = ids.iter().filter(|c| c.count > 0).count();
            let max = ids.iter().filter_map(|c| c.log2).fold(f64::NAN, f64::max);
            writeln!(
                s,
                "{:<6} labels {} used {} max_log2 {}",
                format!("{m:?}").to_lowercase(),
                ids.len(),
                used,
                if max.is_nan() { "-".to_string() } else { format!("{max:.3}") }
            )
            .unwrap();
        }
        writeln!(
            s,
            "utilization {}/{} = {:.2}%",
            self.used,
            self.total,
            100.0 * self.utilization()
        )
        .unwrap();
        writeln!(s, "id\tname\tcount\tlog2").unwrap();
        for c in &self.per_label {
            let name = vocab.get(c.id).map(|e| e.name.as_str()).unwrap_or("?");
            let l = c.log2.map(|v| format!("{v:.4}")).unwrap_or_else(|| "-".into());
            writeln!(s, "{}\t{}\t{}\t{}", c.id, name, c.count, l).unwrap();
        }
        s
    }
}

/// Per-label sample counts over a set of annotations.
pub fn vocab_stats(annotations: &[VideoAnnotation], vocab: &LabelVocabulary) -> Result<VocabStats> {
    let mut counts = vec![0u64; vocab.len()];
    for a in annotations {
        for id in a.labels() {
            let slot = counts
                .get_mut(id)
                .ok_or_else(|| Error::DataIntegrity(format!("{}: label id {id} not in vocabulary", a.uuid)))?;
            *slot += 1;
        }
    }
    let used = counts.iter().filter(|&&c| c > 0).count();
    Ok(VocabStats {
        per_label: counts
            .into_iter()
            .enumerate()
            .map(|(id, count)| LabelCount {
                id,
                count,
                log2: (count > 0).then(|| (count as f64).log2()),
            })
            .collect(),
        used,
        total: vocab.len(),
        videos: annotations.len(),
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn empty_set() {
        let v = LabelVocabulary::small(12, 3);
        let s = vocab_stats(&[], &v).unwrap();
        assert!(s.per_label.iter().all(|c| c.count == 0 && c.log2.is_none()));
        assert_eq!(s.utilization(), 0.0);
    }

    #[test]
    fn single_annotation_counts() {
        let v = LabelVocabulary::small(12, 3);
        let a = VideoAnnotation {
            uuid: "u".into(),
            fold: 0,
            visual_labels: vec![2, 4],
            audio_labels: vec![13],
        };
        let s = vocab_stats(&[a.clone(), a], &v).unwrap();
        assert_eq!(s.count(2), 2);
        assert_eq!(s.per_label[4].log2, Some(1.0));
        assert_eq!(s.count(0), 0);
        assert_eq!(s.used, 3);
        assert!(s.report(&v).contains("utilization 3/15 = 20.00%"));
    }

    #[test]
    fn unknown_id_is_integrity_error() {
        let v = LabelVocabulary::small(12, 3);
        let a = VideoAnnotation {
            uuid: "u".into(),
            fold: 0,
            visual_labels: vec![99],
            audio_labels: vec![],
        };
        assert!(matches!(vocab_stats(&[a], &v), Err(Error::DataIntegrity(_))));
    }
}
