//! Per-frame spectral features: log energy, zero-crossing rate and eight
//! triangular mel band log energies.

use alloc::vec::Vec;
use core::f64::consts::PI;

use thiserror::Error;

use crate::audio::{frames_for_samples, FRAME_SAMPLES, SAMPLE_RATE};
use crate::fft::Fft;

pub const MEL_BANDS: usize = 8;
/// Feature dimensions per frame.
pub const FEATURE_DIM: usize = 2 + MEL_BANDS;

const ANALYSIS_WINDOW: usize = 400;
const FFT_SIZE: usize = 512;
const LOG_FLOOR: f64 = 1e-10;

#[derive(Debug, Error, Clone, PartialEq, Eq)]
pub enum FeatureError {
    #[error("window of {0} samples is shorter than one 320-sample frame")]
    WindowTooShort(usize),
}

pub type FrameVector = [f32; FEATURE_DIM];

/// One feature vector per frame of a window.
#[derive(Debug, Clone, PartialEq, Default)]
pub struct FrameFeatures(pub Vec<FrameVector>);

impl FrameFeatures {
    pub fn len(&self) -> usize {
        self.0.len()
    }

    pub fn is_empty(&self) -> bool {
        self.0.is_empty()
    }

    pub fn frames(&self) -> &[FrameVector] {
        &self.0
    }
}

fn hz_to_mel(hz: f64) -> f64 {
    2595.0 * libm::log10(1.0 + hz / 700.0)
}

fn mel_to_hz(mel: f64) -> f64 {
    700.0 * (libm::pow(10.0, mel / 2595.0) - 1.0)
}

/// Reusable extractor holding the FFT plan, analysis window and filterbank.
pub struct FeatureExtractor {
    fft: Fft,
    hann: Vec<f64>,
    // (first bin, weights) per band
    filters: Vec<(usize, Vec<f64>)>,
}

impl Default for FeatureExtractor {
    fn default() -> Self {
        Self::new()
    }
}

impl FeatureExtractor {
    pub fn new() -> Self {
        let hann = (0..ANALYSIS_WINDOW)
            .map(|i| 0.5 - 0.5 * libm::cos(2.0 * PI * i as f64 / ANALYSIS_WINDOW as f64))
            .collect();
        Self {
            fft: Fft::new(FFT_SIZE),
            hann,
            filters: mel_filters(),
        }
    }

    /// Features for every whole frame of `window`.
    pub fn extract(&self, window: &[f32]) -> Result<FrameFeatures, FeatureError> {
        if window.len() < FRAME_SAMPLES {
            return Err(FeatureError::WindowTooShort(window.len()));
        }
        let n_frames = frames_for_samples(window.len());
        let mut out = Vec::with_capacity(n_frames);
        let mut buf = alloc::vec![0.0f64; ANALYSIS_WINDOW];
        let mut power = Vec::with_capacity(FFT_SIZE / 2 + 1);
        for f in 0..n_frames {
            let frame = &window[f * FRAME_SAMPLES..(f + 1) * FRAME_SAMPLES];
            let mut v = [0.0f32; FEATURE_DIM];

            let energy = frame.iter().map(|&x| x as f64 * x as f64).sum::<f64>() / FRAME_SAMPLES as f64;
            v[0] = libm::log(energy.max(LOG_FLOOR)) as f32;
            let crossings = frame
                .windows(2)
                .filter(|p| (p[0] >= 0.0) != (p[1] >= 0.0))
                .count();
            v[1] = (crossings as f64 / (FRAME_SAMPLES - 1) as f64) as f32;

            // 400-sample analysis window centred on the frame, zero padded
            // outside the input.
            let center = (f * FRAME_SAMPLES + FRAME_SAMPLES / 2) as isize;
            let start = center - (ANALYSIS_WINDOW / 2) as isize;
            for (i, b) in buf.iter_mut().enumerate() {
                let idx = start + i as isize;
                let x = if idx >= 0 && (idx as usize) < window.len() {
                    window[idx as usize] as f64
                } else {
                    0.0
                };
                *b = x * self.hann[i];
            }
            self.fft.power_spectrum(&buf, &mut power);
            for (band, (first, weights)) in self.filters.iter().enumerate() {
                let e: f64 = weights
                    .iter()
                    .zip(&power[*first..])
                    .map(|(w, p)| w * p)
                    .sum();
                v[2 + band] = libm::log(e.max(LOG_FLOOR)) as f32;
            }
            out.push(v);
        }
        Ok(FrameFeatures(out))
    }
}

fn mel_filters() -> Vec<(usize, Vec<f64>)> {
    let nyquist = SAMPLE_RATE as f64 / 2.0;
    let top = hz_to_mel(nyquist);
    let edges: Vec<f64> = (0..MEL_BANDS + 2)
        .map(|i| mel_to_hz(top * i as f64 / (MEL_BANDS + 1) as f64))
        .collect();
    let bin_hz = SAMPLE_RATE as f64 / FFT_SIZE as f64;
    (0..MEL_BANDS)
        .map(|b| {
            let (lo, mid, hi) = (edges[b], edges[b + 1], edges[b + 2]);
            let bins: Vec<(usize, f64)> = (0..=FFT_SIZE / 2)
                .filter_map(|k| {
                    let f = k as f64 * bin_hz;
                    let w = ((f - lo) / (mid - lo)).min((hi - f) / (hi - mid));
                    (w > 0.0).then_some((k, w))
                })
                .collect();
            let first = bins.first().map_or(0, |&(k, _)| k);
            let mut weights = alloc::vec![0.0; bins.last().map_or(0, |&(k, _)| k + 1 - first)];
            for (k, w) in bins {
                weights[k - first] = w;
            }
            (first, weights)
        })
        .collect()
}

/// Convenience wrapper building a fresh extractor.
pub fn extract_features(window: &[f32]) -> Result<FrameFeatures, FeatureError> {
    FeatureExtractor::new().extract(window)
}

#[cfg(test)]
mod tests {
    use super::*;
    use alloc::vec;

    fn sine(freq: f64, n: usize) -> Vec<f32> {
        (0..n)
            .map(|i| libm::sin(2.0 * PI * freq * i as f64 / SAMPLE_RATE as f64) as f32)
            .collect()
    }

    #[test]
    fn silence_hits_the_log_floor() {
        let feats = extract_features(&vec![0.0; 3200]).unwrap();
        assert_eq!(feats.len(), 10);
        let floor = libm::log(LOG_FLOOR) as f32;
        for v in feats.frames() {
            assert_eq!(v[0], floor);
            assert_eq!(v[1], 0.0);
            assert!(v[2..].iter().all(|&m| m == floor));
        }
    }

    #[test]
    fn zero_crossing_rate_of_1khz_sine() {
        let feats = extract_features(&sine(1000.0, 16000)).unwrap();
        let one_crossing = 1.0 / (FRAME_SAMPLES - 1) as f32;
        for v in feats.frames() {
            assert!((v[1] - 0.125).abs() <= one_crossing + 1e-3, "zcr {}", v[1]);
        }
    }

    #[test]
    fn frame_count_and_short_window() {
        assert_eq!(extract_features(&vec![0.1; 640]).unwrap().len(), 2);
        assert_eq!(extract_features(&vec![0.1; 959]).unwrap().len(), 2);
        assert_eq!(
            extract_features(&vec![0.1; 319]),
            Err(FeatureError::WindowTooShort(319))
        );
    }

    #[test]
    fn log_energy_of_unit_sine_is_log_half() {
        let feats = extract_features(&sine(1000.0, 3200)).unwrap();
        for v in feats.frames() {
            assert!((v[0] - libm::log(0.5) as f32).abs() < 1e-3);
        }
    }

    #[test]
    fn tone_energy_lands_in_the_matching_band() {
        let edges: Vec<f64> = (0..MEL_BANDS + 2)
            .map(|i| mel_to_hz(hz_to_mel(8000.0) * i as f64 / (MEL_BANDS + 1) as f64))
            .collect();
        for band in 0..MEL_BANDS {
            let feats = extract_features(&sine(edges[band + 1], 3200)).unwrap();
            let v = feats.frames()[5];
            let loudest = (0..MEL_BANDS)
                .max_by(|&a, &b| v[2 + a].total_cmp(&v[2 + b]))
                .unwrap();
            assert_eq!(loudest, band, "tone at {} Hz", edges[band + 1]);
        }
    }

    #[test]
    fn filters_cover_every_band() {
        let filters = mel_filters();
        assert_eq!(filters.len(), MEL_BANDS);
        for (first, w) in &filters {
            assert!(!w.is_empty());
            assert!(first + w.len() <= FFT_SIZE / 2 + 1);
            assert!(w.iter().all(|&x| (0.0..=1.0).contains(&x)));
        }
    }

    #[test]
    fn extraction_is_deterministic() {
        let x: Vec<f32> = (0..5000).map(|i| libm::sin(i as f64 * 0.013) as f32 * 0.3).collect();
        let a = extract_features(&x).unwrap();
        let b = FeatureExtractor::new().extract(&x).unwrap();
        assert_eq!(a, b);
        assert!(a.frames().iter().flatten().all(|v| v.is_finite()));
    }
}
