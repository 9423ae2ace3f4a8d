//! Turns a WAV file (or a generated chirp) into 100x64 log-Mel frames.
//!
//! cargo run --release --example featurize -- [clip.wav]

use mmaudio::frontend::{read_wav, FrontendConfig, LogMelExtractor, Waveform, FRAME_ROWS, MEL_BINS};

fn chirp(seconds: f64, rate: u32) -> Waveform {
    let n = (seconds * rate as f64) as usize;
    let samples = (0..n)
        .map(|i| {
            let t = i as f64 / rate as f64;
            let f = 200.0 + 1800.0 * t / seconds;
            (0.5 * (std::f64::consts::TAU * f * t).sin()) as f32
        })
        .collect();
    Waveform::mono(samples, rate)
}

fn main() -> mmaudio::Result<()> {
    let wave = match std::env::args().nth(1) {
        Some(path) => read_wav(path)?,
        None => chirp(3.5, 22_050),
    };
    println!(
        "{} samples at {} Hz, {} channel(s)",
        wave.samples.len() / wave.channels as usize,
        wave.sample_rate,
        wave.channels
    );
    let extractor = LogMelExtractor::new(FrontendConfig::default())?;
    let frames = extractor.clip_frames(&wave)?;
    println!("{} frames of {FRAME_ROWS}x{MEL_BINS}", frames.len());
    for (i, f) in frames.iter().enumerate() {
        let v = f.values();
        let row = FRAME_ROWS / 2;
        let mid = &v[row * MEL_BINS..(row + 1) * MEL_BINS];
        let peak = (0..MEL_BINS).max_by(|&a, &b| mid[a].total_cmp(&mid[b])).unwrap();
        let mean = v.iter().sum::<f32>() / v.len() as f32;
        println!("frame {i}: mean log-Mel {mean:.3}, loudest bin at mid-frame {peak}");
    }
    Ok(())
}
