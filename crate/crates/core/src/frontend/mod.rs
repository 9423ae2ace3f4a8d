//! Audio frontend: WAV decoding, mono/16 kHz standardization, 1-second
//! segmentation and the 100×64 log-Mel spectrogram fed to the CNNs.
//!
//! The frame geometry is fixed: a 25 ms Hamming window (400 samples) with a
//! 10 ms hop (160 samples). Plain valid framing of a 16,000-sample segment
//! yields `(16000 - 400) / 160 + 1 = 98` rows, so every segment is
//! zero-padded by [`SEGMENT_PAD`] samples on both sides, giving
//! `(16240 - 400) / 160 + 1 = 100` rows centred on the segment.

mod logmel;
mod mel;
mod record;
mod wav;
mod waveform;

pub use logmel::{FrontendConfig, LogMelExtractor, LogMelFrame};
pub use mel::{build_mel_filterbank, hz_to_mel, mel_to_hz, MelFilterbank};
pub use record::{read_record, write_record, RECORD_MAGIC, RECORD_VERSION};
pub use wav::{read_wav, write_wav};
pub use waveform::{segment_1s, standardize, Waveform};

/// Target sample rate after standardization.
pub const SAMPLE_RATE: u32 = 16_000;
/// Samples in one 1-second segment.
pub const SEGMENT_SAMPLES: usize = 16_000;
/// Hamming window width (25 ms).
pub const WINDOW_SAMPLES: usize = 400;
/// Hop between frames (10 ms).
pub const HOP_SAMPLES: usize = 160;
/// Zero padding applied to each side of a segment before framing.
pub const SEGMENT_PAD: usize = 120;
/// Rows (time steps) in one log-Mel frame.
pub const FRAME_ROWS: usize = 100;
/// Mel bins in one log-Mel frame.
pub const MEL_BINS: usize = 64;

/// Number of frames produced by valid framing of `len` samples.
pub const fn frame_count(len: usize, window: usize, hop: usize) -> usize {
    if len < window {
        0
    } else {
        (len - window) / hop + 1
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn padding_closes_the_gap_to_100_rows() {
        assert_eq!(frame_count(SEGMENT_SAMPLES, WINDOW_SAMPLES, HOP_SAMPLES), 98);
        assert_eq!(
            frame_count(SEGMENT_SAMPLES + 2 * SEGMENT_PAD, WINDOW_SAMPLES, HOP_SAMPLES),
            FRAME_ROWS
        );
    }
}
