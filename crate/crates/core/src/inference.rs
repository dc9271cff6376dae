//! Whole-audio probabilities from two offset passes of non-overlapping
//! rolling windows.

use alloc::vec::Vec;
use core::ops::Range;

use thiserror::Error;

use crate::audio::{frames_for_samples, FRAME_SAMPLES};
use crate::features::FeatureExtractor;
use crate::model::{ModelError, SfcModel};
use crate::track::ProbabilityTrack;

/// Rolling window length used for training and inference (20 s).
pub const DEFAULT_WINDOW_FRAMES: usize = 1000;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum InferenceError<E> {
    #[error("scorer failed on frames {start}..{end}: {source}")]
    Scorer { start: usize, end: usize, source: E },
    #[error("scorer returned {got} probabilities for a {expected}-frame window")]
    WrongLength { expected: usize, got: usize },
    #[error("scorer returned {0}, outside [0, 1]")]
    OutOfRange(f32),
}

/// Anything that maps a raw sample window to one probability per whole frame.
pub trait FrameScorer {
    type Error;

    fn score_window(&self, samples: &[f32]) -> Result<Vec<f32>, Self::Error>;
}

/// An [`SfcModel`] paired with a reusable feature extractor.
pub struct ModelScorer<'a> {
    pub model: &'a SfcModel,
    pub extractor: FeatureExtractor,
}

impl<'a> ModelScorer<'a> {
    pub fn new(model: &'a SfcModel) -> Self {
        Self {
            model,
            extractor: FeatureExtractor::new(),
        }
    }
}

impl FrameScorer for ModelScorer<'_> {
    type Error = ModelError;

    fn score_window(&self, samples: &[f32]) -> Result<Vec<f32>, ModelError> {
        self.model.score_samples(&self.extractor, samples)
    }
}

/// Frame ranges tiled from `offset`; frames before the offset form a
/// shorter leading window.
pub fn tile_windows(total_frames: usize, window_frames: usize, offset: usize) -> Vec<Range<usize>> {
    let window_frames = window_frames.max(1);
    let mut out = Vec::new();
    let lead = offset.min(total_frames);
    if lead > 0 {
        out.push(0..lead);
    }
    let mut start = lead;
    while start < total_frames {
        let end = (start + window_frames).min(total_frames);
        out.push(start..end);
        start = end;
    }
    out
}

/// The two passes: offset 0 and offset `window_frames / 2`.
pub fn rolling_passes(total_frames: usize, window_frames: usize) -> [Vec<Range<usize>>; 2] {
    [
        tile_windows(total_frames, window_frames, 0),
        tile_windows(total_frames, window_frames, window_frames / 2),
    ]
}

/// Averages per-window outputs of both passes frame by frame.
///
/// `scored` pairs each window range with its probabilities; frames covered
/// twice get the arithmetic mean, frames covered once keep their value.
pub fn merge_passes<'a, I>(total_frames: usize, scored: I) -> ProbabilityTrack
where
    I: IntoIterator<Item = (&'a Range<usize>, &'a [f32])>,
{
    let mut sum = alloc::vec![0.0f64; total_frames];
    let mut count = alloc::vec![0u32; total_frames];
    for (range, probs) in scored {
        for (f, &p) in range.clone().zip(probs) {
            sum[f] += p as f64;
            count[f] += 1;
        }
    }
    ProbabilityTrack::new_unchecked(
        sum.iter()
            .zip(&count)
            .map(|(&s, &c)| if c == 0 { 0.0 } else { (s / c as f64) as f32 })
            .collect(),
    )
}

pub(crate) fn check_window<E>(
    range: &Range<usize>,
    probs: &[f32],
) -> Result<(), InferenceError<E>> {
    if probs.len() != range.len() {
        return Err(InferenceError::WrongLength {
            expected: range.len(),
            got: probs.len(),
        });
    }
    if let Some(&p) = probs.iter().find(|p| !(0.0..=1.0).contains(*p)) {
        return Err(InferenceError::OutOfRange(p));
    }
    Ok(())
}

/// Scores one frame range of `samples`, validating the scorer's output.
pub fn score_range<S: FrameScorer>(
    scorer: &S,
    samples: &[f32],
    range: &Range<usize>,
) -> Result<Vec<f32>, InferenceError<S::Error>> {
    let window = &samples[range.start * FRAME_SAMPLES..range.end * FRAME_SAMPLES];
    let probs = scorer
        .score_window(window)
        .map_err(|source| InferenceError::Scorer {
            start: range.start,
            end: range.end,
            source,
        })?;
    check_window(range, &probs)?;
    Ok(probs)
}

/// Sequential two-pass rolling inference over a whole recording.
pub fn rolling_probs<S: FrameScorer>(
    scorer: &S,
    samples: &[f32],
    window_frames: usize,
) -> Result<ProbabilityTrack, InferenceError<S::Error>> {
    let total = frames_for_samples(samples.len());
    let passes = rolling_passes(total, window_frames);
    let mut scored = Vec::new();
    for range in passes.iter().flatten() {
        scored.push((range, score_range(scorer, samples, range)?));
    }
    Ok(merge_passes(
        total,
        scored.iter().map(|(r, p)| (*r, p.as_slice())),
    ))
}
