use crate::error::{Error, Result};

/// HTK mel scale.
pub fn hz_to_mel(hz: f64) -> f64 {
    2595.0 * (1.0 + hz / 700.0).log10()
}

pub fn mel_to_hz(mel: f64) -> f64 {
    700.0 * (10f64.powf(mel / 2595.0) - 1.0)
}

/// Triangular mel filters over the non-negative FFT bins.
///
/// `weights` is row-major `n_mels × n_bins` with `n_bins = n_fft / 2 + 1`.
#[derive(Debug, Clone, PartialEq)]
pub struct MelFilterbank {
    pub weights: Vec<f64>,
    pub n_mels: usize,
    pub n_bins: usize,
    pub n_fft: usize,
    pub fmin: f64,
    pub fmax: f64,
    pub sample_rate: u32,
}

impl MelFilterbank {
    pub fn row(&self, m: usize) -> &[f64] {
        &self.weights[m * self.n_bins..(m + 1) * self.n_bins]
    }

    /// Centre frequency (Hz) of filter `m`.
    pub fn center_hz(&self, m: usize) -> f64 {
        let (lo, hi) = (hz_to_mel(self.fmin), hz_to_mel(self.fmax));
        let step = (hi - lo) / (self.n_mels + 1) as f64;
        mel_to_hz(lo + step * (m + 1) as f64)
    }

    /// Frequency (Hz) of FFT bin `k`.
    pub fn bin_hz(&self, k: usize) -> f64 {
        k as f64 * self.sample_rate as f64 / self.n_fft as f64
    }

    /// Applies the filterbank to one magnitude spectrum of length `n_bins`.
    pub fn apply(&self, spectrum: &[f64], out: &mut [f64]) {
        debug_assert_eq!(spectrum.len(), self.n_bins);
        for (m, o) in out.iter_mut().enumerate().take(self.n_mels) {
            *o = self
                .row(m)
                .iter()
                .zip(spectrum)
                .map(|(w, s)| w * s)
                .sum();
        }
    }
}

/// Builds `n_mels` triangles with peaks equally spaced in mel between
/// `mel(fmin)` and `mel(fmax)`. Triangles are linear in the mel domain and
/// peak at 1.0 (no area normalization).
pub fn build_mel_filterbank(
    n_fft: usize,
    n_mels: usize,
    fmin: f64,
    fmax: f64,
    sample_rate: u32,
) -> Result<MelFilterbank> {
    let nyquist = sample_rate as f64 / 2.0;
    if !(fmin >= 0.0 && fmin < fmax && fmax <= nyquist) {
        return Err(Error::InvalidConfig(format!(
            "need 0 <= fmin < fmax <= {nyquist}, got fmin={fmin} fmax={fmax}"
        )));
    }
    if n_mels == 0 {
        return Err(Error::InvalidConfig("n_mels must be at least 1".into()));
    }
    if n_fft < 2 {
        return Err(Error::InvalidConfig(format!("n_fft {n_fft} too small")));
    }
    let n_bins = n_fft / 2 + 1;
    let (lo, hi) = (hz_to_mel(fmin), hz_to_mel(fmax));
    let step = (hi - lo) / (n_mels + 1) as f64;
    let edges: Vec<f64> = (0..n_mels + 2).map(|i| lo + step * i as f64).collect();
    let bin_mels: Vec<f64> = (0..n_bins)
        .map(|k| hz_to_mel(k as f64 * sample_rate as f64 / n_fft as f64))
        .collect();

    let mut weights = vec![0.0; n_mels * n_bins];
    for m in 0..n_mels {
        let (left, center, right) = (edges[m], edges[m + 1], edges[m + 2]);
        for (k, &b) in bin_mels.iter().enumerate() {
            let rising = (b - left) / (center - left);
            let falling = (right - b) / (right - center);
            weights[m * n_bins + k] = rising.min(falling).max(0.0);
        }
    }
    Ok(MelFilterbank {
        weights,
        n_mels,
        n_bins,
        n_fft,
        fmin,
        fmax,
        sample_rate,
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    fn default_fb() -> MelFilterbank {
        build_mel_filterbank(512, 64, 125.0, 7500.0, 16_000).unwrap()
    }

    #[test]
    fn mel_roundtrip() {
        for hz in [0.0, 125.0, 1000.0, 7500.0] {
            assert!((mel_to_hz(hz_to_mel(hz)) - hz).abs() < 1e-9);
        }
        // 1000 Hz is ~1000 mel on the HTK scale
        assert!((hz_to_mel(1000.0) - 999.985).abs() < 1e-2);
    }

    #[test]
    fn single_filter_peaks_at_mel_midpoint() {
        let fb = build_mel_filterbank(4096, 1, 125.0, 7500.0, 16_000).unwrap();
        let mid = mel_to_hz((hz_to_mel(125.0) + hz_to_mel(7500.0)) / 2.0);
        assert!((fb.center_hz(0) - mid).abs() < 1e-9);
        let row = fb.row(0);
        let peak = (0..fb.n_bins)
            .max_by(|&a, &b| row[a].total_cmp(&row[b]))
            .unwrap();
        assert!((fb.bin_hz(peak) - mid).abs() <= fb.bin_hz(1));
    }

    #[test]
    fn filters_are_nonnegative_contiguous_single_peaked() {
        let fb = default_fb();
        for m in 0..fb.n_mels {
            let row = fb.row(m);
            assert!(row.iter().all(|&w| w >= 0.0));
            let nz: Vec<usize> = (0..fb.n_bins).filter(|&k| row[k] > 0.0).collect();
            assert!(!nz.is_empty(), "filter {m} is empty");
            assert_eq!(nz.last().unwrap() - nz[0] + 1, nz.len(), "filter {m} not contiguous");
            // rises then falls
            let vals: Vec<f64> = nz.iter().map(|&k| row[k]).collect();
            let top = vals
                .iter()
                .enumerate()
                .max_by(|a, b| a.1.total_cmp(b.1))
                .unwrap()
                .0;
            assert!(vals[..=top].windows(2).all(|w| w[0] <= w[1]));
            assert!(vals[top..].windows(2).all(|w| w[0] >= w[1]));
        }
    }

    #[test]
    fn rejects_bad_frequency_order() {
        assert!(build_mel_filterbank(512, 64, 7500.0, 125.0, 16_000).is_err());
        assert!(build_mel_filterbank(512, 64, 125.0, 9000.0, 16_000).is_err());
        assert!(build_mel_filterbank(512, 0, 125.0, 7500.0, 16_000).is_err());
    }
}
