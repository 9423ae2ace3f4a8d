//! Extracts per-second embeddings with the tiny fullconv trunk and fits a
//! transfer head on them.
//!
//! cargo run --release --example embed -- [checkpoint]

use mmaudio::engine::Checkpoint;
use mmaudio::eval::{extract_all, top_n, train_transfer_head, Benchmark, EmbeddingModel, HeadConfig};
use mmaudio::frontend::{FrontendConfig, Waveform};
use mmaudio::models::{build_variant, Variant, VariantOptions};
use mmaudio::seed;
use rand::Rng;

fn main() -> mmaudio::Result<()> {
    let spec = build_variant(Variant::VggishFullconv, VariantOptions::tiny())?;
    let model = match std::env::args().nth(1) {
        Some(path) => EmbeddingModel::from_checkpoint(spec, &Checkpoint::load(path)?, FrontendConfig::default())?,
        None => {
            let net = spec.realize::<f32, _>(&mut seed::rng(5, "example/init"))?;
            EmbeddingModel::new(spec, net, FrontendConfig::default())?
        }
    };

    // four classes of 2-second clips: tones at different pitches plus noise
    let mut rng = seed::rng(5, "example/clips");
    let clips: Vec<_> = (0..32)
        .map(|i| {
            let class = i % 4;
            let pitch = 300.0 * (class + 1) as f64;
            let samples = (0..32_000)
                .map(|t| (0.3 * (std::f64::consts::TAU * pitch * t as f64 / 16_000.0).sin()) as f32 + rng.gen_range(-0.05..0.05))
                .collect();
            (format!("clip{i:02}"), vec![class], "train".to_string(), Waveform::mono(samples, 16_000))
        })
        .collect();
    let seqs = extract_all(&model, &clips)?;
    println!("{} clips, {} embeddings of width {} each", seqs.len(), seqs[0].vectors.len(), seqs[0].vectors[0].len());

    let cfg = HeadConfig { epochs: 200, seed: 5, ..Benchmark::Tut2018.head_config() };
    let head = train_transfer_head(&seqs, 4, &cfg)?;
    let scores = head.predict(&seqs)?;
    let truths: Vec<Vec<usize>> = seqs.iter().map(|s| s.labels.clone()).collect();
    println!(
        "transfer head {}x4 ({} parameters), train top-1 {:.3}",
        head.input_width,
        head.parameter_count(),
        top_n(&scores, &truths, 1)?
    );
    Ok(())
}
