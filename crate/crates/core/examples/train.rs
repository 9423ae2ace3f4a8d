//! Trains the tiny fullconv model on synthetic annotated videos and writes
//! checkpoints plus a metric log.
//!
//! cargo run --release --example train -- [out_dir] [epochs]

use std::path::PathBuf;

use mmaudio::annotate::{annotate_corpus, synthetic_entries, LabelVocabulary, SyntheticPredictor};
use mmaudio::frontend::{FrontendConfig, LogMelExtractor, Waveform};
use mmaudio::models::{build_variant, Variant, VariantOptions};
use mmaudio::seed;
use mmaudio::train::{augment, run_training, LabelIndex, TrainConfig, Trainer, VideoSet, LOG_HEADER, format_log_line};
use rand::Rng;

fn main() -> mmaudio::Result<()> {
    let args: Vec<String> = std::env::args().collect();
    let out = PathBuf::from(args.get(1).map_or("target/example-train", String::as_str));
    let epochs: usize = args.get(2).and_then(|s| s.parse().ok()).unwrap_or(3);

    let vocab = LabelVocabulary::small(40, 12);
    let entries = synthetic_entries(48, 11);
    let run = annotate_corpus(&entries, &SyntheticPredictor::new(&vocab, 11), &vocab, 0.1);
    let index = LabelIndex::from_annotations(&run.annotations, 52)?;

    // each video's audio is a tone whose pitch follows its first audio label
    let extractor = LogMelExtractor::new(FrontendConfig::default())?;
    let mut rng = seed::rng(11, "example/audio");
    let mut videos = Vec::new();
    for (ann, entry) in run.annotations.iter().zip(&entries) {
        let pitch = 150.0 * (1 + ann.audio_labels[0] % 12) as f64;
        let n = (entry.duration * 16_000.0) as usize;
        let samples = (0..n)
            .map(|i| (0.4 * (std::f64::consts::TAU * pitch * i as f64 / 16_000.0).sin()) as f32 + rng.gen_range(-0.02..0.02))
            .collect();
        videos.push((ann.clone(), extractor.clip_frames(&Waveform::mono(samples, 16_000))?));
    }
    let (val, train) = videos.split_at(8);
    let validation = val
        .iter()
        .filter_map(|(a, f)| augment(a, f, &index, &mut seed::rng(11, &format!("val/{}", a.uuid))).transpose())
        .collect::<mmaudio::Result<Vec<_>>>()?;
    let data = VideoSet { videos: train.to_vec(), index };

    let spec = build_variant(Variant::VggishFullconv, VariantOptions { width_divisor: 8, head_width: 52 })?;
    let net = spec.realize::<f32, _>(&mut seed::rng(11, "example/init"))?;
    let config = TrainConfig { epochs, batch_size: 8, seed: 11, ..TrainConfig::default() };
    let mut trainer = Trainer::new(net, config, spec.name.clone())?;
    let report = run_training(&mut trainer, &data, &validation, Some(&out))?;
    println!("{LOG_HEADER}");
    for e in &report.epochs {
        println!("{}", format_log_line(e));
    }
    println!("{} steps, checkpoints in {}", report.steps.len(), out.display());
    Ok(())
}
