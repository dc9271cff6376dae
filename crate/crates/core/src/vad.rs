//! Energy-based voice activity detection used by the pause-driven baselines.
//!
//! The detector thresholds per-frame log energy at a percentile picked by the
//! aggressiveness level, then smooths raw decisions: a frame is final
//! non-speech only when at least `trigger_ratio` of the window centred on it
//! is raw non-speech.

use alloc::vec::Vec;

use thiserror::Error;

use crate::audio::{frames_for_samples, SAMPLE_RATE};
use crate::track::ProbabilityTrack;

const ENERGY_FLOOR: f64 = 1e-10;
const FRAME_MS: u32 = 20;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum VadError {
    #[error("frame length must be 10, 20 or 30 ms, got {0}")]
    FrameLength(u32),
    #[error("aggressiveness must be 1, 2 or 3, got {0}")]
    Aggressiveness(u8),
    #[error("smoothing window must be at least one frame")]
    SmoothingWindow,
    #[error("trigger ratio must lie in (0, 1], got {0}")]
    TriggerRatio(f64),
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct VadConfig {
    pub frame_ms: u32,
    pub aggressiveness: u8,
    pub smoothing_window: usize,
    pub trigger_ratio: f64,
}

impl Default for VadConfig {
    fn default() -> Self {
        Self {
            frame_ms: 20,
            aggressiveness: 2,
            smoothing_window: 10,
            trigger_ratio: 0.9,
        }
    }
}

impl VadConfig {
    pub fn validate(&self) -> Result<(), VadError> {
        if ![10, 20, 30].contains(&self.frame_ms) {
            return Err(VadError::FrameLength(self.frame_ms));
        }
        if !(1..=3).contains(&self.aggressiveness) {
            return Err(VadError::Aggressiveness(self.aggressiveness));
        }
        if self.smoothing_window == 0 {
            return Err(VadError::SmoothingWindow);
        }
        if !(self.trigger_ratio > 0.0 && self.trigger_ratio <= 1.0) {
            return Err(VadError::TriggerRatio(self.trigger_ratio));
        }
        Ok(())
    }

    /// Log-energy percentile below which a frame is raw non-speech.
    pub fn percentile(&self) -> f64 {
        match self.aggressiveness {
            1 => 20.0,
            2 => 35.0,
            _ => 50.0,
        }
    }

    fn frame_samples(&self) -> usize {
        (SAMPLE_RATE / 1000 * self.frame_ms) as usize
    }
}

/// Speech / non-speech decision per VAD frame.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct SpeechMask {
    speech: Vec<bool>,
    frame_ms: u32,
    /// 20 ms frames of the source audio, so the mask can be mapped back onto
    /// the shared frame grid even when `frame_ms` does not divide evenly.
    total_frames: usize,
}

impl SpeechMask {
    /// A mask over `speech.len() * frame_ms` milliseconds of audio.
    pub fn new(speech: Vec<bool>, frame_ms: u32) -> Self {
        let total_frames = speech.len() * frame_ms as usize / FRAME_MS as usize;
        Self {
            speech,
            frame_ms,
            total_frames,
        }
    }

    pub fn with_total_frames(mut self, total_frames: usize) -> Self {
        self.total_frames = total_frames;
        self
    }

    pub fn speech(&self) -> &[bool] {
        &self.speech
    }

    pub fn frame_ms(&self) -> u32 {
        self.frame_ms
    }

    pub fn total_frames(&self) -> usize {
        self.total_frames
    }

    pub fn len(&self) -> usize {
        self.speech.len()
    }

    pub fn is_empty(&self) -> bool {
        self.speech.is_empty()
    }

    pub fn nonspeech_count(&self) -> usize {
        self.speech.iter().filter(|&&s| !s).count()
    }

    /// The same decisions resampled onto 20 ms frames.
    pub fn to_frame_grid(&self) -> SpeechMask {
        let fm = self.frame_ms as usize;
        let speech = (0..self.total_frames)
            .map(|f| {
                let (lo, hi) = (f * 20, f * 20 + 20);
                let (mut sp, mut non) = (0usize, 0usize);
                let first = lo / fm;
                let last = hi.div_ceil(fm).min(self.speech.len());
                for k in first..last {
                    let overlap = hi.min((k + 1) * fm) - lo.max(k * fm);
                    if self.speech[k] {
                        sp += overlap;
                    } else {
                        non += overlap;
                    }
                }
                // ties resolve to speech
                non <= sp
            })
            .collect();
        SpeechMask {
            speech,
            frame_ms: FRAME_MS,
            total_frames: self.total_frames,
        }
    }
}

/// A maximal run of non-speech frames.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct Pause {
    pub start: usize,
    pub length: usize,
}

impl Pause {
    pub fn end(&self) -> usize {
        self.start + self.length
    }
}

fn log_energy(frame: &[f32]) -> f64 {
    let e = frame.iter().map(|&x| x as f64 * x as f64).sum::<f64>() / frame.len() as f64;
    libm::log(e.max(ENERGY_FLOOR))
}

fn percentile(sorted: &[f64], q: f64) -> f64 {
    let pos = q / 100.0 * (sorted.len() - 1) as f64;
    let lo = libm::floor(pos) as usize;
    let hi = libm::ceil(pos) as usize;
    sorted[lo] + (sorted[hi] - sorted[lo]) * (pos - lo as f64)
}

/// Raw (unsmoothed) decisions: `true` where the frame is non-speech.
pub fn raw_nonspeech(samples: &[f32], config: &VadConfig) -> Vec<bool> {
    let energies: Vec<f64> = samples
        .chunks_exact(config.frame_samples())
        .map(log_energy)
        .collect();
    if energies.is_empty() {
        return Vec::new();
    }
    let mut sorted = energies.clone();
    sorted.sort_by(f64::total_cmp);
    let threshold = percentile(&sorted, config.percentile());
    let floor = libm::log(ENERGY_FLOOR);
    energies.iter().map(|&e| e <= floor || e < threshold).collect()
}

/// Smoothed speech mask of a recording.
pub fn energy_vad(samples: &[f32], config: &VadConfig) -> Result<SpeechMask, VadError> {
    config.validate()?;
    let raw = raw_nonspeech(samples, config);
    let n = raw.len();
    let w = config.smoothing_window;
    let mut prefix = alloc::vec![0usize; n + 1];
    for (i, &r) in raw.iter().enumerate() {
        prefix[i + 1] = prefix[i] + r as usize;
    }
    let speech = (0..n)
        .map(|i| {
            let lo = i.saturating_sub(w / 2);
            let hi = (i + w - w / 2).min(n);
            let non = prefix[hi] - prefix[lo];
            let needed = config.trigger_ratio * (hi - lo) as f64 - 1e-9;
            (non as f64) < needed
        })
        .collect();
    Ok(SpeechMask {
        speech,
        frame_ms: config.frame_ms,
        total_frames: frames_for_samples(samples.len()),
    })
}

/// Maximal non-speech runs of at least `min_pause_frames`, in mask frames.
pub fn find_pauses(mask: &SpeechMask, min_pause_frames: usize) -> Vec<Pause> {
    let mut out = Vec::new();
    let mut run_start = None;
    for (i, &s) in mask.speech.iter().chain(core::iter::once(&true)).enumerate() {
        match (s, run_start) {
            (false, None) => run_start = Some(i),
            (true, Some(start)) => {
                let length = i - start;
                if length >= min_pause_frames.max(1) {
                    out.push(Pause { start, length });
                }
                run_start = None;
            }
            _ => {}
        }
    }
    out
}

/// Speech frames map to 1.0 and non-speech to 0.0 on the 20 ms grid.
pub fn mask_to_prob_track(mask: &SpeechMask) -> ProbabilityTrack {
    ProbabilityTrack::new_unchecked(
        mask.to_frame_grid()
            .speech
            .iter()
            .map(|&s| if s { 1.0 } else { 0.0 })
            .collect(),
    )
}
