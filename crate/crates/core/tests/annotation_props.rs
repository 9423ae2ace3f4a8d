//! Label aggregation properties, corpus determinism and shard statistics.

use std::sync::Mutex;

use mmaudio::annotate::*;
use mmaudio::seed;
use proptest::prelude::*;
use rand::Rng;

fn brute_top(scores: &[f64], k: usize) -> Vec<usize> {
    let mut idx: Vec<usize> = (0..scores.len()).collect();
    // full stable sort: higher score first, lower id among equals
    idx.sort_by(|&a, &b| scores[b].partial_cmp(&scores[a]).unwrap().then(a.cmp(&b)));
    idx.truncate(k);
    idx
}

fn means(preds: &[Vec<f32>]) -> Vec<f64> {
    let n = preds.len() as f64;
    (0..preds[0].len())
        .map(|j| preds.iter().map(|p| p[j] as f64).sum::<f64>() / n)
        .collect()
}

fn probs(len: usize) -> impl Strategy<Value = Vec<f32>> {
    // coarse values make ties common
    prop::collection::vec((0u8..=20).prop_map(|v| v as f32 / 20.0), len)
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(200))]

    #[test]
    fn visual_is_top10_of_mean(frames in (1usize..13).prop_flat_map(|n| prop::collection::vec(probs(20), n))) {
        let got = aggregate_visual(&frames).unwrap();
        prop_assert_eq!(got.len(), VISUAL_LABELS);
        prop_assert_eq!(got, brute_top(&means(&frames), 10));
    }

    #[test]
    fn visual_ignores_frame_order(mut frames in prop::collection::vec(probs(15), 2..8), rot in 0usize..8) {
        let a = aggregate_visual(&frames).unwrap();
        let r = rot % frames.len();
        frames.rotate_left(r);
        frames.reverse();
        prop_assert_eq!(a, aggregate_visual(&frames).unwrap());
    }

    #[test]
    fn audio_bounds_and_rule(segs in prop::collection::vec(probs(12), 1..6), threshold in 0.0f64..0.6) {
        let got = aggregate_audio(&segs, threshold).unwrap();
        prop_assert!((1..=MAX_AUDIO_LABELS).contains(&got.len()));
        let m = means(&segs);
        let top5 = brute_top(&m, 5);
        let passing: Vec<usize> = top5.iter().copied().filter(|&i| m[i] >= threshold).collect();
        if passing.is_empty() {
            prop_assert_eq!(got, vec![brute_top(&m, 1)[0]]);
        } else {
            prop_assert_eq!(got, passing);
        }
    }

    #[test]
    fn shard_in_range_and_stable(bytes in any::<[u8; 16]>()) {
        let u = uuid::Builder::from_random_bytes(bytes).into_uuid().to_string();
        let f = shard(&u).unwrap();
        prop_assert!((f as usize) < FOLDS);
        prop_assert_eq!(f, shard(&u.to_uppercase()).unwrap());
    }
}

#[test]
fn aggregate_examples() {
    let mut a = vec![0.5f32; 12];
    let mut b = vec![0.5f32; 12];
    a[0] = 0.75;
    a[1] = 0.25;
    b[0] = 0.25;
    b[1] = 0.75;
    assert_eq!(aggregate_visual(&[a, b]).unwrap(), (0..10).collect::<Vec<_>>());
    let mut m = vec![0.0f32; 8];
    m[0] = 0.9;
    m[1] = 0.8;
    m[2] = 0.05;
    assert_eq!(aggregate_audio(&[m], 0.1).unwrap(), vec![0, 1]);
    let mut six = vec![0.0f32; 8];
    six[..6].copy_from_slice(&[0.9, 0.8, 0.7, 0.6, 0.5, 0.4]);
    assert_eq!(aggregate_audio(&[six], 0.1).unwrap(), vec![0, 1, 2, 3, 4]);
    assert!(aggregate_visual(&[vec![0.5; 9]]).is_err());
    assert!(shard("not-a-uuid").is_err());
}

#[test]
fn synthetic_corpus_is_bounded_and_reproducible() {
    let vocab = LabelVocabulary::standard();
    let entries = synthetic_entries(1000, 11);
    let predictor = SyntheticPredictor::new(&vocab, 5);
    let run = annotate_corpus(&entries, &predictor, &vocab, DEFAULT_AUDIO_THRESHOLD);
    assert!(run.failures.is_empty(), "{:?}", run.failures);
    assert_eq!(run.annotations.len(), 1000);
    for a in &run.annotations {
        a.validate(&vocab).unwrap();
        assert_eq!(a.visual_labels.len(), 10);
        assert!((1..=5).contains(&a.audio_labels.len()));
    }
    let mut first = Vec::new();
    write_annotations(&mut first, &run.annotations).unwrap();
    let again = annotate_corpus(&entries, &predictor, &vocab, DEFAULT_AUDIO_THRESHOLD);
    let mut second = Vec::new();
    write_annotations(&mut second, &again.annotations).unwrap();
    assert_eq!(first, second);
    assert_eq!(read_annotations(&first[..]).unwrap(), run.annotations);
}

#[test]
fn constant_predictor_gives_identical_labels() {
    let vocab = LabelVocabulary::small(30, 12);
    let run = annotate_corpus(&synthetic_entries(20, 3), &ConstantPredictor::new(&vocab, 1), &vocab, 0.1);
    let first = &run.annotations[0];
    assert!(run
        .annotations
        .iter()
        .all(|a| a.visual_labels == first.visual_labels && a.audio_labels == first.audio_labels));
}

/// Emits near-one probabilities for a recorded Zipf draw, so the label
/// tally is known on the generator side.
struct TallyPredictor {
    vocab_v: usize,
    vocab_a: usize,
    tally: Mutex<Vec<u64>>,
}

impl Predictor for TallyPredictor {
    fn predict(&self, e: &VideoEntry) -> mmaudio::Result<VideoRecord> {
        let mut rng = seed::rng(9, &e.uuid);
        let zipf = |rng: &mut seed::Rng, n: usize, k: usize| {
            let mut out = Vec::new();
            while out.len() < k {
                let u: f64 = rng.gen();
                let i = ((u.powf(3.0)) * n as f64) as usize;
                if !out.contains(&i) {
                    out.push(i);
                }
            }
            out
        };
        let vis = zipf(&mut rng, self.vocab_v, 10);
        let k = rng.gen_range(1..=5);
        let aud = zipf(&mut rng, self.vocab_a, k);
        {
            let mut t = self.tally.lock().unwrap();
            for &i in &vis {
                t[i] += 1;
            }
            for &i in &aud {
                t[self.vocab_v + i] += 1;
            }
        }
        let mut v = vec![0.0f32; self.vocab_v];
        vis.iter().for_each(|&i| v[i] = 0.9);
        let mut a = vec![0.0f32; self.vocab_a];
        aud.iter().for_each(|&i| a[i] = 0.9);
        Ok(VideoRecord {
            uuid: e.uuid.clone(),
            duration: e.duration,
            visual_frame_preds: vec![v; frame_count(e.duration)],
            audio_segment_preds: vec![a; e.duration.floor() as usize],
        })
    }
}

#[test]
fn stats_match_generator_tally() {
    let vocab = LabelVocabulary::small(200, 40);
    let p = TallyPredictor { vocab_v: 200, vocab_a: 40, tally: Mutex::new(vec![0; 240]) };
    let run = annotate_corpus(&synthetic_entries(500, 4), &p, &vocab, 0.1);
    assert!(run.failures.is_empty());
    let stats = vocab_stats(&run.annotations, &vocab).unwrap();
    let tally = p.tally.into_inner().unwrap();
    for (id, &want) in tally.iter().enumerate() {
        assert_eq!(stats.count(id), want, "label {id}");
        assert_eq!(stats.per_label[id].log2, (want > 0).then(|| (want as f64).log2()));
    }
    let used = tally.iter().filter(|&&c| c > 0).count();
    assert_eq!(stats.used, used);
    assert!((stats.utilization() - used as f64 / 240.0).abs() < 1e-15);
    let empty = vocab_stats(&[], &vocab).unwrap();
    assert_eq!(empty.utilization(), 0.0);
}

fn random_uuids(n: usize, s: u64) -> Vec<String> {
    let mut rng = seed::rng(s, "uuids");
    (0..n)
        .map(|_| uuid::Builder::from_random_bytes(rng.gen()).into_uuid().to_string())
        .collect()
}

#[test]
fn no_empty_fold_over_1e5() {
    let mut hist = vec![0u32; FOLDS];
    for u in random_uuids(100_000, 1) {
        hist[shard(&u).unwrap() as usize] += 1;
    }
    assert!(hist.iter().all(|&c| c > 0), "empty fold");
}

/// Occupancy over 10^6 UUIDs. The expected count per fold is ~244, so
/// max/min under an ideal uniform hash is ~1.5; the golden values below
/// were recorded from this exact seeded run.
#[test]
fn shard_uniformity_over_1e6() {
    let mut hist = vec![0u32; FOLDS];
    for u in random_uuids(1_000_000, 2) {
        hist[shard(&u).unwrap() as usize] += 1;
    }
    let (max, min) = (*hist.iter().max().unwrap(), *hist.iter().min().unwrap());
    let mean = 1e6 / FOLDS as f64;
    let chi2: f64 = hist.iter().map(|&c| (c as f64 - mean).powi(2) / mean).sum();
    let ratio = max as f64 / min as f64;
    println!("shard occupancy: min {min}, max {max}, ratio {ratio:.4}, chi2 {chi2:.1} (df 4095)");
    // df 4095: mean 4095, sd ~90.5; 5 sd either side
    assert!((3642.0..4548.0).contains(&chi2), "chi2 {chi2}");
    assert!(ratio < 1.8, "ratio {ratio}");
}
