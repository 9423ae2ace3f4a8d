//! Overfits the tiny fullconv model on 32 synthetic examples and prints the
//! loss curve.
//!
//! cargo run --release --example overfit -- [batch_size] [steps]

use std::time::Instant;

use mmaudio::frontend::{LogMelFrame, FRAME_ROWS, MEL_BINS};
use mmaudio::models::{build_variant, Variant, VariantOptions};
use mmaudio::seed;
use mmaudio::train::{run_training, FixedSet, TrainConfig, Trainer, TrainingExample};
use rand::seq::index::sample;
use rand::Rng;

fn main() -> mmaudio::Result<()> {
    let args: Vec<String> = std::env::args().collect();
    let batch: usize = args.get(1).and_then(|s| s.parse().ok()).unwrap_or(8);
    let steps: u64 = args.get(2).and_then(|s| s.parse().ok()).unwrap_or(2000);

    let spec = build_variant(Variant::VggishFullconv, VariantOptions::tiny())?;
    let width = spec.head_width();
    let mut rng = seed::rng(7, "overfit/data");
    let examples: Vec<TrainingExample> = (0..32)
        .map(|i| {
            let values = (0..FRAME_ROWS * MEL_BINS).map(|_| rng.gen_range(-4.6..2.0)).collect();
            let k = rng.gen_range(6..=10);
            let mut target = sample(&mut rng, width, k).into_vec();
            target.sort_unstable();
            TrainingExample {
                spectrogram: LogMelFrame::from_values(values, 0.0).unwrap(),
                target,
                uuid: format!("synthetic-{i}"),
                segment: 0,
            }
        })
        .collect();

    let net = spec.realize::<f32, _>(&mut seed::rng(7, "overfit/init"))?;
    let config = TrainConfig {
        lr0: 1e-4,
        decay: 1.0,
        batch_size: batch,
        l2: 0.0,
        epochs: usize::MAX,
        seed: 7,
        max_steps: Some(steps),
        ..TrainConfig::default()
    };
    let mut trainer = Trainer::new(net, config, "overfit".into())?;
    let start = Instant::now();
    let report = run_training(&mut trainer, &FixedSet(examples), &[], None)?;
    for (i, s) in report.steps.iter().enumerate() {
        if (i + 1) % 100 == 0 || i == 0 {
            println!("step {:5}  loss {:.6}", i + 1, s.loss);
        }
    }
    let first_below = report.steps.iter().position(|s| s.loss < 0.01);
    println!(
        "{} steps in {:.1}s, first step below 0.01: {:?}",
        report.steps.len(),
        start.elapsed().as_secs_f64(),
        first_below.map(|i| i + 1)
    );
    Ok(())
}
