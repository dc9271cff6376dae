//! Rayon-backed execution. Results are identical to the sequential paths:
//! work is split per window and always reduced in window order.

use rayon::prelude::*;
use shas_core::features::{FeatureExtractor, FrameFeatures};
use shas_core::inference::{
    merge_passes, rolling_passes, score_range, FrameScorer, InferenceError, ModelScorer,
};
use shas_core::audio::frames_for_samples;
use shas_core::model::ModelError;
use shas_core::train::{window_features, window_gradient, Executor, WindowGradient, WindowJob};
use shas_core::{ProbabilityTrack, SfcModel};

/// Environment variable capping worker threads.
pub const THREADS_ENV: &str = "SHAS_SEG_THREADS";

/// Sizes the global pool from `SHAS_SEG_THREADS` when set. Later calls are
/// no-ops.
pub fn init_thread_pool() -> Result<(), String> {
    let Ok(raw) = std::env::var(THREADS_ENV) else {
        return Ok(());
    };
    let n: usize = raw
        .trim()
        .parse()
        .ok()
        .filter(|&n| n > 0)
        .ok_or_else(|| format!("{THREADS_ENV} must be a positive integer, got {raw:?}"))?;
    let _ = rayon::ThreadPoolBuilder::new().num_threads(n).build_global();
    Ok(())
}

/// Two-pass rolling inference with windows scored in parallel.
pub fn par_rolling_probs<S>(
    scorer: &S,
    samples: &[f32],
    window_frames: usize,
) -> Result<ProbabilityTrack, InferenceError<S::Error>>
where
    S: FrameScorer + Sync,
    S::Error: Send,
{
    let total = frames_for_samples(samples.len());
    let passes = rolling_passes(total, window_frames);
    let ranges: Vec<_> = passes.iter().flatten().collect();
    let scored = ranges
        .par_iter()
        .map(|r| score_range(scorer, samples, r))
        .collect::<Result<Vec<_>, _>>()?;
    Ok(merge_passes(
        total,
        ranges.iter().copied().zip(scored.iter().map(Vec::as_slice)),
    ))
}

#[derive(Debug, Clone, Copy, Default)]
pub struct Parallel;

impl Executor for Parallel {
    fn gradients(
        &self,
        model: &SfcModel,
        jobs: &[WindowJob<'_>],
        w_neg: f64,
    ) -> Result<Vec<WindowGradient>, ModelError> {
        jobs.par_iter()
            .map_init(FeatureExtractor::new, |ex, j| window_gradient(model, ex, j, w_neg))
            .collect()
    }

    fn features(&self, windows: &[&[f32]]) -> Result<Vec<FrameFeatures>, ModelError> {
        windows
            .par_iter()
            .map_init(FeatureExtractor::new, |ex, w| window_features(ex, w))
            .collect()
    }

    fn track(
        &self,
        model: &SfcModel,
        samples: &[f32],
        window_frames: usize,
    ) -> Result<ProbabilityTrack, InferenceError<ModelError>> {
        par_rolling_probs(&ModelScorer::new(model), samples, window_frames)
    }
}
