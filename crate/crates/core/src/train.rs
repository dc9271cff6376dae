//! Mini-batch training of the frame classifier with Adam and a cosine
//! learning-rate schedule, plus checkpoint selection on a dev set.
//!
//! Work that may run in parallel (per-window gradients, dev inference) goes
//! through [`Executor`]. Per-window results are always reduced in window
//! order, so any executor that returns the same per-window values yields a
//! bitwise-identical model.

use alloc::string::String;
use alloc::vec::Vec;
use core::f64::consts::PI;

use rand::seq::SliceRandom;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use thiserror::Error;

use crate::audio::{frames_for_samples, normalize_window, FRAME_SAMPLES};
use crate::features::{FeatureError, FeatureExtractor, FrameFeatures};
use crate::inference::{rolling_probs, InferenceError, ModelScorer, DEFAULT_WINDOW_FRAMES};
use crate::labels::{class_weight, sample_training_windows, tile_from_offset, FrameLabels, LabelError, TrainingWindow};
use crate::metrics::{boundary_counts, BoundaryCounts, DEFAULT_TOLERANCE_FRAMES};
use crate::model::{Mlp, ModelError, Normalizer, SfcModel, DEFAULT_CONTEXT_RADIUS, DEFAULT_HIDDEN};
use crate::segment::{pdac, Segment, SegmentError, SegmenterConfig};
use crate::track::ProbabilityTrack;

#[derive(Debug, Error)]
pub enum TrainError {
    #[error(transparent)]
    Label(#[from] LabelError),
    #[error(transparent)]
    Model(#[from] ModelError),
    #[error(transparent)]
    Segment(#[from] SegmentError),
    #[error("invalid training config: {0}")]
    Config(&'static str),
    #[error("training corpus is empty")]
    EmptyCorpus,
    #[error("wave {wav}: {labels} labels for {frames} frames")]
    LabelLength { wav: usize, labels: usize, frames: usize },
    #[error("dev wave {0}: {1}")]
    Dev(usize, String),
    #[error("{0}")]
    Callback(String),
}

#[derive(Debug, Clone, PartialEq)]
pub struct TrainConfig {
    pub seed: u64,
    pub epochs: usize,
    pub learning_rate: f64,
    pub batch_windows: usize,
    pub window_frames: usize,
    pub context_radius: usize,
    pub hidden: usize,
    /// Replaces the corpus-derived `#pos / #neg` weight when set.
    pub w_neg: Option<f64>,
    pub beta1: f64,
    pub beta2: f64,
    pub eps: f64,
    /// Segmenter used for dev-set checkpoint selection.
    pub selection: SegmenterConfig,
    pub tolerance_frames: usize,
}

impl Default for TrainConfig {
    fn default() -> Self {
        Self {
            seed: 0,
            epochs: 8,
            learning_rate: 2.5e-4,
            batch_windows: 14,
            window_frames: DEFAULT_WINDOW_FRAMES,
            context_radius: DEFAULT_CONTEXT_RADIUS,
            hidden: DEFAULT_HIDDEN,
            w_neg: None,
            beta1: 0.9,
            beta2: 0.999,
            eps: 1e-8,
            selection: SegmenterConfig::default(),
            tolerance_frames: DEFAULT_TOLERANCE_FRAMES,
        }
    }
}

impl TrainConfig {
    pub fn validate(&self) -> Result<(), TrainError> {
        let bad = |m| Err(TrainError::Config(m));
        if self.epochs == 0 {
            return bad("epochs must be at least 1");
        }
        if !(self.learning_rate > 0.0 && self.learning_rate.is_finite()) {
            return bad("learning_rate must be positive");
        }
        if self.batch_windows == 0 || self.window_frames == 0 || self.hidden == 0 {
            return bad("batch_windows, window_frames and hidden must be positive");
        }
        if let Some(w) = self.w_neg {
            if !(w > 0.0 && w.is_finite()) {
                return bad("w_neg must be positive");
            }
        }
        if !((0.0..1.0).contains(&self.beta1) && (0.0..1.0).contains(&self.beta2) && self.eps > 0.0) {
            return bad("Adam betas must lie in [0, 1) and eps be positive");
        }
        self.selection.validate()?;
        Ok(())
    }
}

/// A training wave with its per-frame supervision.
#[derive(Debug, Clone, Copy)]
pub struct LabeledWave<'a> {
    pub samples: &'a [f32],
    pub labels: &'a FrameLabels,
}

/// A dev wave with its manual segmentation in frames.
#[derive(Debug, Clone, Copy)]
pub struct DevWave<'a> {
    pub samples: &'a [f32],
    pub reference: &'a [Segment],
}

/// One training window ready for a gradient pass.
#[derive(Debug, Clone, Copy)]
pub struct WindowJob<'a> {
    pub samples: &'a [f32],
    pub labels: &'a [bool],
}

/// Unscaled gradient and summed loss of one window.
#[derive(Debug, Clone)]
pub struct WindowGradient {
    pub grad: Vec<f64>,
    pub loss: f64,
    pub frames: usize,
}

/// Features of a raw window after per-window normalization.
pub fn window_features(extractor: &FeatureExtractor, samples: &[f32]) -> Result<FrameFeatures, ModelError> {
    let normalized =
        normalize_window(samples).map_err(|_| FeatureError::WindowTooShort(samples.len()))?;
    Ok(extractor.extract(&normalized)?)
}

pub fn window_gradient(
    model: &SfcModel,
    extractor: &FeatureExtractor,
    job: &WindowJob<'_>,
    w_neg: f64,
) -> Result<WindowGradient, ModelError> {
    let feats = window_features(extractor, job.samples)?;
    let rows = model.context_rows(&feats)?;
    let mut grad = alloc::vec![0.0; model.mlp().params().len()];
    let loss = model.mlp().accumulate_gradient(&rows, job.labels, w_neg, 1.0, &mut grad);
    Ok(WindowGradient {
        grad,
        loss,
        frames: job.labels.len(),
    })
}

/// Runs the parallelizable parts of training.
pub trait Executor {
    fn gradients(
        &self,
        model: &SfcModel,
        jobs: &[WindowJob<'_>],
        w_neg: f64,
    ) -> Result<Vec<WindowGradient>, ModelError> {
        let extractor = FeatureExtractor::new();
        jobs.iter().map(|j| window_gradient(model, &extractor, j, w_neg)).collect()
    }

    fn features(&self, windows: &[&[f32]]) -> Result<Vec<FrameFeatures>, ModelError> {
        let extractor = FeatureExtractor::new();
        windows.iter().map(|w| window_features(&extractor, w)).collect()
    }

    fn track(
        &self,
        model: &SfcModel,
        samples: &[f32],
        window_frames: usize,
    ) -> Result<ProbabilityTrack, InferenceError<ModelError>> {
        rolling_probs(&ModelScorer::new(model), samples, window_frames)
    }
}

/// Single-threaded executor.
#[derive(Debug, Clone, Copy, Default)]
pub struct Sequential;

impl Executor for Sequential {}

#[derive(Debug, Clone, PartialEq)]
pub struct EpochRecord {
    /// 1-based epoch number.
    pub epoch: usize,
    pub loss: f64,
    pub steps: usize,
    pub dev_f1: Option<f64>,
}

#[derive(Debug, Clone)]
pub struct TrainOutcome {
    pub best: SfcModel,
    pub best_epoch: usize,
    pub w_neg: f64,
    pub log: Vec<EpochRecord>,
}

/// Deterministic stream seed for a (seed, purpose, index) triple.
pub fn derive_seed(seed: u64, stream: u64, index: u64) -> u64 {
    let mut x = seed ^ stream.wrapping_mul(0x9E37_79B9_7F4A_7C15) ^ index.wrapping_mul(0xD1B5_4A32_D192_ED03);
    // splitmix64 finalizer
    x = x.wrapping_add(0x9E37_79B9_7F4A_7C15);
    x = (x ^ (x >> 30)).wrapping_mul(0xBF58_476D_1CE4_E5B9);
    x = (x ^ (x >> 27)).wrapping_mul(0x94D0_49BB_1331_11EB);
    x ^ (x >> 31)
}

const STREAM_INIT: u64 = 1;
const STREAM_WINDOWS: u64 = 2;
const STREAM_SHUFFLE: u64 = 3;

fn window_samples<'a>(wave: &LabeledWave<'a>, w: &TrainingWindow) -> WindowJob<'a> {
    WindowJob {
        samples: &wave.samples[w.start_frame * FRAME_SAMPLES..w.end_frame() * FRAME_SAMPLES],
        labels: &wave.labels.as_slice()[w.start_frame..w.end_frame()],
    }
}

/// Cosine annealing from `base` to zero over `total` steps.
pub fn cosine_lr(base: f64, step: usize, total: usize) -> f64 {
    if total <= 1 {
        return base;
    }
    base * 0.5 * (1.0 + libm::cos(PI * step as f64 / total as f64))
}

struct Adam {
    m: Vec<f64>,
    v: Vec<f64>,
    t: i32,
}

impl Adam {
    fn new(n: usize) -> Self {
        Self {
            m: alloc::vec![0.0; n],
            v: alloc::vec![0.0; n],
            t: 0,
        }
    }

    fn step(&mut self, params: &mut [f64], grad: &[f64], lr: f64, c: &TrainConfig) {
        self.t += 1;
        let bc1 = 1.0 - libm::pow(c.beta1, self.t as f64);
        let bc2 = 1.0 - libm::pow(c.beta2, self.t as f64);
        for i in 0..params.len() {
            self.m[i] = c.beta1 * self.m[i] + (1.0 - c.beta1) * grad[i];
            self.v[i] = c.beta2 * self.v[i] + (1.0 - c.beta2) * grad[i] * grad[i];
            let mh = self.m[i] / bc1;
            let vh = self.v[i] / bc2;
            params[i] -= lr * mh / (libm::sqrt(vh) + c.eps);
        }
    }
}

/// Pooled dev boundary counts of `model` under the selection segmenter.
pub fn dev_counts<E: Executor + ?Sized>(
    model: &SfcModel,
    dev: &[DevWave<'_>],
    config: &TrainConfig,
    exec: &E,
) -> Result<BoundaryCounts, TrainError> {
    let mut total = BoundaryCounts::default();
    for (i, d) in dev.iter().enumerate() {
        let track = exec
            .track(model, d.samples, config.window_frames)
            .map_err(|e| TrainError::Dev(i, alloc::format!("{e}")))?;
        if track.is_empty() {
            continue;
        }
        let hyp = pdac(&track, &config.selection)?;
        let counts = boundary_counts(&hyp, d.reference, config.tolerance_frames)
            .map_err(|e| TrainError::Dev(i, alloc::format!("{e}")))?;
        total.add(counts);
    }
    Ok(total)
}

/// Trains a model and returns the checkpoint with the best dev boundary F1
/// (earliest epoch on ties; the last epoch when `dev` is empty).
///
/// `on_epoch` sees every epoch's record together with its checkpoint, which
/// is the model rounded to checkpoint precision.
pub fn train<E, F>(
    corpus: &[LabeledWave<'_>],
    dev: &[DevWave<'_>],
    config: &TrainConfig,
    exec: &E,
    mut on_epoch: F,
) -> Result<TrainOutcome, TrainError>
where
    E: Executor + ?Sized,
    F: FnMut(&EpochRecord, &SfcModel) -> Result<(), TrainError>,
{
    config.validate()?;
    if corpus.is_empty() {
        return Err(TrainError::EmptyCorpus);
    }
    for (i, w) in corpus.iter().enumerate() {
        let frames = frames_for_samples(w.samples.len());
        if frames != w.labels.len() {
            return Err(TrainError::LabelLength {
                wav: i,
                labels: w.labels.len(),
                frames,
            });
        }
    }
    let corpus_w = class_weight(corpus.iter().map(|w| w.labels))?;
    let w_neg = config.w_neg.unwrap_or(corpus_w);

    // normalizer statistics from the offset-0 tiling
    let tiles: Vec<&[f32]> = corpus
        .iter()
        .enumerate()
        .flat_map(|(i, w)| {
            tile_from_offset(i, w.labels.len(), config.window_frames, 0)
                .into_iter()
                .map(move |t| window_samples(w, &t).samples)
        })
        .collect();
    let normalizer = Normalizer::fit(&exec.features(&tiles)?)?;

    let input = SfcModel::input_dim_for(config.context_radius);
    let mut init_rng = ChaCha8Rng::seed_from_u64(derive_seed(config.seed, STREAM_INIT, 0));
    let mut model = SfcModel::new(config.context_radius, Mlp::init(input, config.hidden, &mut init_rng))
        .with_normalizer(normalizer);

    let plan: Vec<Vec<TrainingWindow>> = (0..config.epochs)
        .map(|epoch| {
            let mut windows: Vec<TrainingWindow> = corpus
                .iter()
                .enumerate()
                .flat_map(|(i, w)| {
                    let mut rng = ChaCha8Rng::seed_from_u64(derive_seed(
                        config.seed,
                        STREAM_WINDOWS,
                        ((epoch as u64) << 32) | i as u64,
                    ));
                    sample_training_windows(i, w.labels.len(), config.window_frames, &mut rng)
                })
                .collect();
            let mut rng = ChaCha8Rng::seed_from_u64(derive_seed(config.seed, STREAM_SHUFFLE, epoch as u64));
            windows.shuffle(&mut rng);
            windows
        })
        .collect();
    let total_steps: usize = plan.iter().map(|w| w.len().div_ceil(config.batch_windows)).sum();

    let mut adam = Adam::new(model.mlp().params().len());
    let mut step = 0;
    let mut log = Vec::with_capacity(config.epochs);
    let mut best: Option<(f64, usize, SfcModel)> = None;
    let mut last = None;
    for (epoch, windows) in plan.iter().enumerate() {
        let (mut loss_sum, mut frame_sum, mut steps) = (0.0, 0usize, 0);
        for batch in windows.chunks(config.batch_windows) {
            let jobs: Vec<WindowJob<'_>> =
                batch.iter().map(|w| window_samples(&corpus[w.wav], w)).collect();
            let results = exec.gradients(&model, &jobs, w_neg)?;
            let frames: usize = results.iter().map(|r| r.frames).sum();
            let mut grad = alloc::vec![0.0; model.mlp().params().len()];
            for r in &results {
                for (g, x) in grad.iter_mut().zip(&r.grad) {
                    *g += x;
                }
                loss_sum += r.loss;
            }
            let scale = 1.0 / frames.max(1) as f64;
            grad.iter_mut().for_each(|g| *g *= scale);
            frame_sum += frames;
            let lr = cosine_lr(config.learning_rate, step, total_steps);
            adam.step(model.mlp_mut().params_mut(), &grad, lr, config);
            step += 1;
            steps += 1;
        }
        let checkpoint = model.quantized();
        let dev_f1 = if dev.is_empty() {
            None
        } else {
            Some(dev_counts(&checkpoint, dev, config, exec)?.metrics(config.tolerance_frames).f1)
        };
        let record = EpochRecord {
            epoch: epoch + 1,
            loss: loss_sum / frame_sum.max(1) as f64,
            steps,
            dev_f1,
        };
        on_epoch(&record, &checkpoint)?;
        if let Some(f1) = dev_f1 {
            if best.as_ref().map_or(true, |(b, _, _)| f1 > *b) {
                best = Some((f1, epoch + 1, checkpoint.clone()));
            }
        }
        last = Some(checkpoint);
        log.push(record);
    }
    let (best_epoch, best) = match best {
        Some((_, e, m)) => (e, m),
        None => (config.epochs, last.expect("at least one epoch")),
    };
    Ok(TrainOutcome {
        best,
        best_epoch,
        w_neg,
        log,
    })
}
