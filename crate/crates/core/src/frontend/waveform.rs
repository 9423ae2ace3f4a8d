use crate::error::{Error, Result};

use super::{SAMPLE_RATE, SEGMENT_SAMPLES};

/// PCM audio with interleaved channels.
#[derive(Debug, Clone, PartialEq)]
pub struct Waveform {
    pub samples: Vec<f32>,
    pub sample_rate: u32,
    pub channels: u16,
}

impl Waveform {
    pub fn mono(samples: Vec<f32>, sample_rate: u32) -> Self {
        Waveform {
            samples,
            sample_rate,
            channels: 1,
        }
    }

    /// Frames per channel.
    pub fn len(&self) -> usize {
        self.samples.len() / self.channels.max(1) as usize
    }

    pub fn is_empty(&self) -> bool {
        self.samples.is_empty()
    }

    pub fn duration_secs(&self) -> f64 {
        self.len() as f64 / self.sample_rate as f64
    }

    fn validate(&self) -> Result<()> {
        if self.samples.is_empty() {
            return Err(Error::InvalidInput("empty sample buffer".into()));
        }
        if self.sample_rate == 0 || self.channels == 0 {
            return Err(Error::InvalidInput(format!(
                "sample rate {} / channels {} must be positive",
                self.sample_rate, self.channels
            )));
        }
        if self.samples.len() % self.channels as usize != 0 {
            return Err(Error::InvalidInput(format!(
                "{} samples do not divide into {} channels",
                self.samples.len(),
                self.channels
            )));
        }
        if let Some(i) = self.samples.iter().position(|s| !s.is_finite()) {
            return Err(Error::InvalidInput(format!("sample {i} is not finite")));
        }
        Ok(())
    }
}

/// Downmixes to mono by channel averaging and resamples to 16 kHz.
///
/// Resampling is plain linear interpolation: output sample `i` reads the
/// input at position `i * in_rate / out_rate`, clamping to the last input
/// sample past the end. Output length is `floor(len * out_rate / in_rate)`
/// (at least one sample). There is no anti-alias filter.
pub fn standardize(wave: &Waveform) -> Result<Waveform> {
    wave.validate()?;
    let ch = wave.channels as usize;
    let mono: Vec<f32> = if ch == 1 {
        wave.samples.clone()
    } else {
        wave.samples
            .chunks_exact(ch)
            .map(|f| (f.iter().map(|&s| s as f64).sum::<f64>() / ch as f64) as f32)
            .collect()
    };
    if wave.sample_rate == SAMPLE_RATE {
        return Ok(Waveform::mono(mono, SAMPLE_RATE));
    }
    Ok(Waveform::mono(
        resample_linear(&mono, wave.sample_rate, SAMPLE_RATE),
        SAMPLE_RATE,
    ))
}

fn resample_linear(input: &[f32], from: u32, to: u32) -> Vec<f32> {
    let n_out = ((input.len() as u64 * to as u64) / from as u64).max(1) as usize;
    let step = from as f64 / to as f64;
    let last = input.len() - 1;
    (0..n_out)
        .map(|i| {
            let pos = i as f64 * step;
            let idx = pos.floor() as usize;
            if idx >= last {
                return input[last];
            }
            let frac = pos - idx as f64;
            (input[idx] as f64 * (1.0 - frac) + input[idx + 1] as f64 * frac) as f32
        })
        .collect()
}

/// Splits a standardized waveform into non-overlapping 1-second segments.
/// A trailing remainder shorter than one second is dropped.
pub fn segment_1s(wave: &Waveform) -> Result<Vec<Waveform>> {
    if wave.channels != 1 || wave.sample_rate != SAMPLE_RATE {
        return Err(Error::InvalidInput(format!(
            "segmenting requires mono {SAMPLE_RATE} Hz audio, got {} ch at {} Hz",
            wave.channels, wave.sample_rate
        )));
    }
    Ok(wave
        .samples
        .chunks_exact(SEGMENT_SAMPLES)
        .map(|c| Waveform::mono(c.to_vec(), SAMPLE_RATE))
        .collect())
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn mono_16k_is_identity() {
        let w = Waveform::mono(vec![0.1, -0.2, 0.3, 0.0], 16_000);
        assert_eq!(standardize(&w).unwrap(), w);
    }

    #[test]
    fn identical_stereo_channels_collapse() {
        let ch: Vec<f32> = (0..100).map(|i| (i as f32 * 0.01).sin()).collect();
        let inter: Vec<f32> = ch.iter().flat_map(|&s| [s, s]).collect();
        let w = Waveform {
            samples: inter,
            sample_rate: 16_000,
            channels: 2,
        };
        assert_eq!(standardize(&w).unwrap().samples, ch);
    }

    #[test]
    fn ramp_8k_to_16k_matches_hand_interpolation() {
        // input times 0, 1, 2 (in 8 kHz ticks); output reads at 0, .5, 1, 1.5, 2, 2.5
        let w = Waveform::mono(vec![0.0, 0.5, 1.0], 8_000);
        let out = standardize(&w).unwrap();
        assert_eq!(out.sample_rate, 16_000);
        assert_eq!(out.samples, vec![0.0, 0.25, 0.5, 0.75, 1.0, 1.0]);
    }

    #[test]
    fn empty_buffer_is_rejected() {
        let w = Waveform::mono(vec![], 16_000);
        assert!(matches!(standardize(&w), Err(Error::InvalidInput(_))));
    }

    #[test]
    fn segment_counts() {
        for (n, expect) in [(64_000, 4), (56_000, 3), (15_999, 0), (16_000, 1)] {
            let w = Waveform::mono(vec![0.0; n], 16_000);
            let segs = segment_1s(&w).unwrap();
            assert_eq!(segs.len(), expect, "{n} samples");
            assert!(segs.iter().all(|s| s.samples.len() == 16_000));
        }
    }

    #[test]
    fn segments_tile_from_zero() {
        let w = Waveform::mono((0..40_000).map(|i| i as f32).collect(), 16_000);
        let segs = segment_1s(&w).unwrap();
        assert_eq!(segs[0].samples[0], 0.0);
        assert_eq!(segs[1].samples[0], 16_000.0);
        assert_eq!(segs[1].samples[15_999], 31_999.0);
    }
}
