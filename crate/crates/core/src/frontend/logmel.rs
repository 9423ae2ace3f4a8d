use std::f64::consts::PI;
use std::fmt;
use std::sync::Arc;

use rustfft::{num_complex::Complex, Fft, FftPlanner};
use serde::{Deserialize, Serialize};

use super::mel::{build_mel_filterbank, MelFilterbank};
use super::waveform::Waveform;
use super::{
    frame_count, FRAME_ROWS, HOP_SAMPLES, MEL_BINS, SAMPLE_RATE, SEGMENT_PAD, SEGMENT_SAMPLES,
    WINDOW_SAMPLES,
};
use crate::error::{Error, Result};

/// Tunable frontend parameters. Window, hop, padding and the 64-bin output
/// are fixed by the frame geometry and not configurable.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct FrontendConfig {
    pub n_fft: usize,
    pub fmin: f64,
    pub fmax: f64,
    /// Added to every mel magnitude before the log.
    pub log_offset: f64,
}

impl Default for FrontendConfig {
    fn default() -> Self {
        FrontendConfig {
            n_fft: 512,
            fmin: 125.0,
            fmax: 7500.0,
            log_offset: 0.01,
        }
    }
}

impl FrontendConfig {
    pub fn validate(&self) -> Result<()> {
        if self.n_fft < WINDOW_SAMPLES {
            return Err(Error::InvalidConfig(format!(
                "frontend.n_fft = {} is shorter than the {WINDOW_SAMPLES}-sample window",
                self.n_fft
            )));
        }
        if !(self.log_offset > 0.0 && self.log_offset.is_finite()) {
            return Err(Error::InvalidConfig(format!(
                "frontend.log_offset = {} must be positive",
                self.log_offset
            )));
        }
        build_mel_filterbank(self.n_fft, MEL_BINS, self.fmin, self.fmax, SAMPLE_RATE).map(|_| ())
    }

    pub fn filterbank(&self) -> Result<MelFilterbank> {
        build_mel_filterbank(self.n_fft, MEL_BINS, self.fmin, self.fmax, SAMPLE_RATE)
    }
}

/// One 100×64 log-Mel spectrogram (rows are 10 ms steps, columns mel bins).
#[derive(Debug, Clone, PartialEq)]
pub struct LogMelFrame {
    values: Vec<f32>,
    /// Seconds from the start of the clip.
    pub source_offset: f64,
}

impl LogMelFrame {
    pub const ROWS: usize = FRAME_ROWS;
    pub const COLS: usize = MEL_BINS;

    pub fn from_values(values: Vec<f32>, source_offset: f64) -> Result<Self> {
        if values.len() != FRAME_ROWS * MEL_BINS {
            return Err(Error::InvalidShape(format!(
                "log-mel frame needs {} values, got {}",
                FRAME_ROWS * MEL_BINS,
                values.len()
            )));
        }
        if values.iter().any(|v| !v.is_finite()) {
            return Err(Error::NonFinite("log-mel frame".into()));
        }
        Ok(LogMelFrame {
            values,
            source_offset,
        })
    }

    pub fn values(&self) -> &[f32] {
        &self.values
    }

    pub fn get(&self, row: usize, col: usize) -> f32 {
        self.values[row * MEL_BINS + col]
    }

    pub fn row(&self, row: usize) -> &[f32] {
        &self.values[row * MEL_BINS..(row + 1) * MEL_BINS]
    }
}

/// Precomputed window, filterbank and FFT plan. Immutable and `Sync`, so
/// one extractor can serve any number of threads.
#[derive(Clone)]
pub struct LogMelExtractor {
    config: FrontendConfig,
    filterbank: MelFilterbank,
    window: Vec<f64>,
    fft: Arc<dyn Fft<f64>>,
}

impl fmt::Debug for LogMelExtractor {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.debug_struct("LogMelExtractor")
            .field("config", &self.config)
            .finish_non_exhaustive()
    }
}

impl LogMelExtractor {
    pub fn new(config: FrontendConfig) -> Result<Self> {
        config.validate()?;
        let filterbank = config.filterbank()?;
        // periodic Hamming
        let window = (0..WINDOW_SAMPLES)
            .map(|n| 0.54 - 0.46 * (2.0 * PI * n as f64 / WINDOW_SAMPLES as f64).cos())
            .collect();
        let fft = FftPlanner::new().plan_fft_forward(config.n_fft);
        Ok(LogMelExtractor {
            config,
            filterbank,
            window,
            fft,
        })
    }

    pub fn config(&self) -> &FrontendConfig {
        &self.config
    }

    pub fn filterbank(&self) -> &MelFilterbank {
        &self.filterbank
    }

    pub fn window(&self) -> &[f64] {
        &self.window
    }

    /// Log-Mel spectrogram of one 16,000-sample, 16 kHz segment.
    pub fn log_mel(&self, segment: &Waveform, source_offset: f64) -> Result<LogMelFrame> {
        if segment.channels != 1
            || segment.sample_rate != SAMPLE_RATE
            || segment.samples.len() != SEGMENT_SAMPLES
        {
            return Err(Error::InvalidInput(format!(
                "log-mel needs {SEGMENT_SAMPLES} mono samples at {SAMPLE_RATE} Hz, got {} ({} ch, {} Hz)",
                segment.samples.len(),
                segment.channels,
                segment.sample_rate
            )));
        }
        let mut padded = vec![0.0f64; SEGMENT_SAMPLES + 2 * SEGMENT_PAD];
        for (p, &s) in padded[SEGMENT_PAD..].iter_mut().zip(&segment.samples) {
            *p = s as f64;
        }
        let rows = frame_count(padded.len(), WINDOW_SAMPLES, HOP_SAMPLES);
        debug_assert_eq!(rows, FRAME_ROWS);

        let n_fft = self.config.n_fft;
        let n_bins = self.filterbank.n_bins;
        let mut buf = vec![Complex::new(0.0, 0.0); n_fft];
        let mut mag = vec![0.0; n_bins];
        let mut mel = vec![0.0; MEL_BINS];
        let mut values = Vec::with_capacity(FRAME_ROWS * MEL_BINS);
        for r in 0..rows {
            let start = r * HOP_SAMPLES;
            for (i, c) in buf.iter_mut().enumerate() {
                *c = if i < WINDOW_SAMPLES {
                    Complex::new(padded[start + i] * self.window[i], 0.0)
                } else {
                    Complex::new(0.0, 0.0)
                };
            }
            self.fft.process(&mut buf);
            for (m, c) in mag.iter_mut().zip(&buf) {
                *m = c.norm();
            }
            self.filterbank.apply(&mag, &mut mel);
            values.extend(mel.iter().map(|&x| (x + self.config.log_offset).ln() as f32));
        }
        LogMelFrame::from_values(values, source_offset)
    }

    /// Standardizes, segments and featurizes a whole clip.
    pub fn clip_frames(&self, wave: &Waveform) -> Result<Vec<LogMelFrame>> {
        let std = super::standardize(wave)?;
        super::segment_1s(&std)?
            .iter()
            .enumerate()
            .map(|(i, s)| self.log_mel(s, i as f64))
            .collect()
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn extractor() -> LogMelExtractor {
        LogMelExtractor::new(FrontendConfig::default()).unwrap()
    }

    fn sine(freq: f64, amp: f64) -> Waveform {
        Waveform::mono(
            (0..SEGMENT_SAMPLES)
                .map(|n| (amp * (2.0 * PI * freq * n as f64 / 16_000.0).sin()) as f32)
                .collect(),
            16_000,
        )
    }

    #[test]
    fn silence_is_log_offset() {
        let f = extractor()
            .log_mel(&Waveform::mono(vec![0.0; 16_000], 16_000), 0.0)
            .unwrap();
        let floor = (0.01f64).ln() as f32;
        assert!(f.values().iter().all(|&v| v == floor));
        assert!((floor as f64 + 4.60517).abs() < 1e-5);
    }

    #[test]
    fn wrong_length_is_rejected() {
        let e = extractor().log_mel(&Waveform::mono(vec![0.0; 15_999], 16_000), 0.0);
        assert!(matches!(e, Err(Error::InvalidInput(_))));
    }

    #[test]
    fn scaling_up_never_lowers_entries() {
        let ex = extractor();
        let a = ex.log_mel(&sine(440.0, 0.1), 0.0).unwrap();
        let b = ex.log_mel(&sine(440.0, 0.3), 0.0).unwrap();
        for (x, y) in a.values().iter().zip(b.values()) {
            assert!(y >= x);
        }
    }

    #[test]
    fn deterministic() {
        let ex = extractor();
        let w = sine(1234.5, 0.4);
        assert_eq!(ex.log_mel(&w, 0.0).unwrap(), ex.log_mel(&w, 0.0).unwrap());
    }

    #[test]
    fn bad_config_is_rejected() {
        let cfg = FrontendConfig {
            log_offset: 0.0,
            ..Default::default()
        };
        assert!(LogMelExtractor::new(cfg).is_err());
        let cfg = FrontendConfig {
            n_fft: 256,
            ..Default::default()
        };
        assert!(LogMelExtractor::new(cfg).is_err());
    }
}
