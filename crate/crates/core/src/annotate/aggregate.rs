use crate::error::{Error, Result};

/// Visual labels kept per video.
pub const VISUAL_LABELS: usize = 10;
/// Cap on audio labels per video.
pub const MAX_AUDIO_LABELS: usize = 5;

/// Elementwise mean of equally long probability vectors.
pub fn mean_predictions(preds: &[Vec<f32>]) -> Result<Vec<f64>> {
    let first = preds
        .first()
        .ok_or_else(|| Error::InvalidInput("no prediction vectors to average".into()))?;
    let mut acc = vec![0.0f64; first.len()];
    for p in preds {
        if p.len() != acc.len() {
            return Err(Error::InvalidInput(format!(
                "prediction vectors of length {} and {}",
                acc.len(),
                p.len()
            )));
        }
        for (a, &v) in acc.iter_mut().zip(p) {
            *a += v as f64;
        }
    }
    let n = preds.len() as f64;
    acc.iter_mut().for_each(|a| *a /= n);
    Ok(acc)
}

/// Indices of the `k` highest scores, highest first; equal scores go to the
/// lower index.
pub fn top_k(scores: &[f64], k: usize) -> Vec<usize> {
    let mut idx: Vec<usize> = (0..scores.len()).collect();
    let cmp = |a: &usize, b: &usize| scores[*b].total_cmp(&scores[*a]).then(a.cmp(b));
    if k < idx.len() {
        idx.select_nth_unstable_by(k, cmp);
        idx.truncate(k);
    }
    idx.sort_by(cmp);
    idx
}

/// Averages frame predictions and keeps the top 10 (local visual indices).
pub fn aggregate_visual(frame_preds: &[Vec<f32>]) -> Result<Vec<usize>> {
    let mean = mean_predictions(frame_preds)?;
    if mean.len() < VISUAL_LABELS {
        return Err(Error::InvalidConfig(format!(
            "visual vocabulary of {} is smaller than {VISUAL_LABELS}",
            mean.len()
        )));
    }
    Ok(top_k(&mean, VISUAL_LABELS))
}

/// Averages segment predictions, takes the top 5 and keeps those whose mean
/// reaches `threshold`. If none does, keeps the single best label.
pub fn aggregate_audio(segment_preds: &[Vec<f32>], threshold: f64) -> Result<Vec<usize>> {
    let mean = mean_predictions(segment_preds)?;
    let top = top_k(&mean, MAX_AUDIO_LABELS);
    let kept: Vec<usize> = top.iter().copied().filter(|&i| mean[i] >= threshold).collect();
    Ok(if kept.is_empty() { top[..1].to_vec() } else { kept })
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::{Rng, SeedableRng};

    #[test]
    fn single_frame_is_its_own_top10() {
        let f: Vec<f32> = (0..15).map(|i| ((i * 7) % 15) as f32 / 15.0).collect();
        let got = aggregate_visual(&[f.clone()]).unwrap();
        let mut want: Vec<usize> = (0..15).collect();
        want.sort_by(|&a, &b| f[b].total_cmp(&f[a]).then(a.cmp(&b)));
        assert_eq!(got, want[..10]);
    }

    #[test]
    fn symmetric_frames_fall_back_to_id_order() {
        let mut a = vec![0.5f32; 12];
        let mut b = vec![0.5f32; 12];
        // exactly representable so both means are exactly 0.5
        a[0] = 0.75;
        a[1] = 0.25;
        b[0] = 0.25;
        b[1] = 0.75;
        assert_eq!(aggregate_visual(&[a, b]).unwrap(), (0..10).collect::<Vec<_>>());
    }

    #[test]
    fn matches_full_sort_oracle() {
        let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(11);
        for _ in 0..50 {
            let frames: Vec<Vec<f32>> = (0..12)
                .map(|_| (0..20).map(|_| rng.gen::<f32>()).collect())
                .collect();
            let mut mean = vec![0.0f64; 20];
            for f in &frames {
                for j in 0..20 {
                    mean[j] += f[j] as f64 / 12.0;
                }
            }
            let mut order: Vec<usize> = (0..20).collect();
            order.sort_by(|&a, &b| mean[b].partial_cmp(&mean[a]).unwrap().then(a.cmp(&b)));
            assert_eq!(aggregate_visual(&frames).unwrap(), order[..10]);
        }
    }

    #[test]
    fn small_vocabulary_is_rejected() {
        assert!(matches!(aggregate_visual(&[vec![0.1; 9]]), Err(Error::InvalidConfig(_))));
    }

    #[test]
    fn audio_threshold_rules() {
        let mut m = vec![0.05f32; 10];
        m[0] = 0.9;
        m[1] = 0.8;
        assert_eq!(aggregate_audio(&[m], 0.1).unwrap(), vec![0, 1]);

        let mut low = vec![0.01f32; 10];
        low[7] = 0.05;
        assert_eq!(aggregate_audio(&[low], 0.1).unwrap(), vec![7]);

        let mut six = vec![0.0f32; 10];
        for (i, v) in [0.9, 0.8, 0.7, 0.6, 0.5, 0.4].iter().enumerate() {
            six[i + 2] = *v;
        }
        assert_eq!(aggregate_audio(&[six], 0.1).unwrap(), vec![2, 3, 4, 5, 6]);
    }
}
