//! Log-Mel frontend against an independent naive-DFT / HTK-filterbank oracle.

use std::f64::consts::PI;

use mmaudio::frontend::*;

fn mel(hz: f64) -> f64 {
    2595.0 * (1.0 + hz / 700.0).log10()
}

/// Triangle weights written out from the HTK definition.
fn oracle_weights() -> Vec<Vec<f64>> {
    let (lo, hi) = (mel(125.0), mel(7500.0));
    let pts: Vec<f64> = (0..66).map(|i| lo + (hi - lo) * i as f64 / 65.0).collect();
    (0..64)
        .map(|m| {
            (0..257)
                .map(|k| {
                    let b = mel(k as f64 * 16000.0 / 512.0);
                    if b <= pts[m] || b >= pts[m + 2] {
                        0.0
                    } else if b <= pts[m + 1] {
                        (b - pts[m]) / (pts[m + 1] - pts[m])
                    } else {
                        (pts[m + 2] - b) / (pts[m + 2] - pts[m + 1])
                    }
                })
                .collect()
        })
        .collect()
}

/// Row `r` of the log-Mel matrix by direct DFT summation.
fn oracle_row(samples: &[f64], r: usize) -> Vec<f64> {
    let w = oracle_weights();
    let start = r as isize * 160 - 120;
    let frame: Vec<f64> = (0..400)
        .map(|n| {
            let i = start + n as isize;
            let s = if (0..samples.len() as isize).contains(&i) { samples[i as usize] } else { 0.0 };
            s * (0.54 - 0.46 * (2.0 * PI * n as f64 / 400.0).cos())
        })
        .collect();
    let mag: Vec<f64> = (0..257)
        .map(|k| {
            let (mut re, mut im) = (0.0, 0.0);
            for (n, x) in frame.iter().enumerate() {
                let a = -2.0 * PI * (k * n) as f64 / 512.0;
                re += x * a.cos();
                im += x * a.sin();
            }
            (re * re + im * im).sqrt()
        })
        .collect();
    w.iter()
        .map(|row| (row.iter().zip(&mag).map(|(a, b)| a * b).sum::<f64>() + 0.01).ln())
        .collect()
}

fn mono(samples: Vec<f32>) -> Waveform {
    Waveform { samples, sample_rate: 16_000, channels: 1 }
}

#[test]
fn sine_1khz_matches_direct_dft() {
    let samples: Vec<f64> = (0..16_000).map(|n| 0.5 * (2.0 * PI * 1000.0 * n as f64 / 16000.0).sin()).collect();
    let wave = mono(samples.iter().map(|&v| v as f32).collect());
    let ext = LogMelExtractor::new(FrontendConfig::default()).unwrap();
    let frame = ext.log_mel(&wave, 0.0).unwrap();
    // the input is f32, so compare against the oracle on the same rounded samples
    let rounded: Vec<f64> = wave.samples.iter().map(|&v| v as f64).collect();
    for r in [0, 1, 50, 98, 99] {
        let want = oracle_row(&rounded, r);
        for (m, w) in want.iter().enumerate() {
            let got = frame.get(r, m) as f64;
            assert!((got - w).abs() < 1e-4 * w.abs().max(1.0), "row {r} mel {m}: {got} vs {w}");
        }
    }
    // the peak sits in a filter whose triangle covers 1 kHz
    let row = frame.row(50);
    let peak = (0..64).max_by(|&a, &b| row[a].total_cmp(&row[b])).unwrap();
    let fb = ext.filterbank();
    assert!(fb.row(peak)[32] > 0.0, "1 kHz is FFT bin 32");
}

#[test]
fn filterbank_matches_oracle_and_partitions_unity() {
    let fb = build_mel_filterbank(512, 64, 125.0, 7500.0, 16_000).unwrap();
    let want = oracle_weights();
    for m in 0..64 {
        for k in 0..257 {
            assert!((fb.row(m)[k] - want[m][k]).abs() < 1e-12, "m {m} k {k}");
        }
        assert!(fb.row(m).iter().any(|&v| v > 0.0), "filter {m} covers at least one bin");
    }
    // between the first and last centers, adjacent triangles sum to one
    for k in 0..257 {
        let hz = fb.bin_hz(k);
        let total: f64 = (0..64).map(|m| fb.row(m)[k]).sum();
        if hz >= fb.center_hz(0) && hz <= fb.center_hz(63) {
            assert!((total - 1.0).abs() < 1e-9, "bin {k} ({hz} Hz) sums to {total}");
        }
        if hz <= 125.0 || hz >= 7500.0 {
            assert_eq!(total, 0.0, "bin {k} ({hz} Hz) outside the band");
        }
    }
}

#[test]
fn every_segment_is_100_by_64() {
    let ext = LogMelExtractor::new(FrontendConfig::default()).unwrap();
    for (rate, channels, secs) in [(16_000, 1u16, 3.5), (44_100, 2, 2.2), (8_000, 1, 1.0), (22_050, 2, 4.99)] {
        let n = (rate as f64 * secs) as usize * channels as usize;
        let samples = (0..n).map(|i| ((i as f64 * 0.37).sin() * 0.3) as f32).collect();
        let wave = Waveform { samples, sample_rate: rate, channels };
        let frames = ext.clip_frames(&wave).unwrap();
        assert_eq!(frames.len(), secs.floor() as usize, "{rate} Hz x{channels} {secs} s");
        for f in &frames {
            assert_eq!(f.values().len(), 100 * 64);
            assert!(f.values().iter().all(|v| v.is_finite()));
        }
    }
}

#[test]
fn silence_is_constant_log_offset() {
    let ext = LogMelExtractor::new(FrontendConfig::default()).unwrap();
    let frame = ext.log_mel(&mono(vec![0.0; 16_000]), 0.0).unwrap();
    let want = (0.01f64).ln() as f32;
    assert!(frame.values().iter().all(|&v| v == want));
}

#[test]
fn record_round_trip() {
    let ext = LogMelExtractor::new(FrontendConfig::default()).unwrap();
    let wave = mono((0..16_000).map(|i| ((i as f32) * 0.01).sin()).collect());
    let frame = ext.log_mel(&wave, 3.0).unwrap();
    let mut buf = Vec::new();
    write_record(&mut buf, &frame).unwrap();
    assert_eq!(&buf[..4], RECORD_MAGIC);
    let back = read_record(&buf[..]).unwrap();
    assert_eq!(back, frame);
}
