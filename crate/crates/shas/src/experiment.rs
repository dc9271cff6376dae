//! The synthetic end-to-end experiment: train on generated waves, segment
//! held-out waves with pDAC, and compare against a tuned pause-based
//! baseline.

use std::collections::BTreeMap;

use rayon::prelude::*;
use shas_core::labels::build_frame_labels;
use shas_core::metrics::{boundary_counts, BoundaryCounts};
use shas_core::segment::{pause_based, pdac};
use shas_core::train::{train, DevWave, EpochRecord, LabeledWave, TrainConfig, TrainOutcome};
use shas_core::vad::{energy_vad, VadConfig};
use shas_core::inference::ModelScorer;
use shas_core::{FrameLabels, SegmentEntry, SegmenterConfig};

use crate::exec::{par_rolling_probs, Parallel};
use crate::synth::{generate, SynthConfig, SynthWave};

#[derive(Debug, Clone)]
pub struct ExperimentConfig {
    pub synth: SynthConfig,
    pub train_waves: usize,
    pub dev_waves: usize,
    pub train: TrainConfig,
    pub segmenter: SegmenterConfig,
    pub tolerance_frames: usize,
}

impl Default for ExperimentConfig {
    fn default() -> Self {
        let segmenter = SegmenterConfig { max_sec: 8.0, min_sec: 0.2, thr: 0.5 };
        Self {
            synth: SynthConfig { seed: 2024, ..Default::default() },
            train_waves: 32,
            dev_waves: 8,
            train: TrainConfig { seed: 7, learning_rate: 3e-3, selection: segmenter, ..Default::default() },
            segmenter,
            tolerance_frames: 2,
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct PauseSetting {
    pub vad: VadConfig,
    pub min_pause_frames: usize,
}

#[derive(Debug, Clone)]
pub struct ExperimentResult {
    pub log: Vec<EpochRecord>,
    pub best_epoch: usize,
    pub pdac: BoundaryCounts,
    pub baseline: BoundaryCounts,
    pub baseline_setting: PauseSetting,
    pub test_waves: usize,
}

fn labels_of(w: &SynthWave) -> FrameLabels {
    let entries: Vec<SegmentEntry> = w
        .segments
        .iter()
        .map(|s| SegmentEntry::from_frames(w.id.clone(), s.start, s.end))
        .collect();
    build_frame_labels(&entries, w.num_frames()).expect("generated segments are valid")
}

/// Grid searched for the baseline: VAD frame length and aggressiveness as
/// tuned in the reference setup, plus smoothing and minimum pause length so
/// short cues are reachable at all.
pub fn baseline_grid() -> Vec<PauseSetting> {
    let mut out = Vec::new();
    for frame_ms in [10, 20, 30] {
        for aggressiveness in [1, 2, 3] {
            for smoothing_window in [1, 3, 10] {
                for min_pause_frames in [1, 2, 3] {
                    out.push(PauseSetting {
                        vad: VadConfig { frame_ms, aggressiveness, smoothing_window, ..Default::default() },
                        min_pause_frames,
                    });
                }
            }
        }
    }
    out
}

pub fn pause_counts(waves: &[SynthWave], setting: &PauseSetting, tol: usize) -> BoundaryCounts {
    waves
        .par_iter()
        .map(|w| {
            let mask = energy_vad(&w.samples, &setting.vad).expect("valid vad config");
            let hyp = pause_based(&mask, setting.min_pause_frames);
            boundary_counts(&hyp, &w.segments, tol).expect("segmenters emit sorted output")
        })
        .collect::<Vec<_>>()
        .into_iter()
        .fold(BoundaryCounts::default(), |mut a, c| {
            a.add(c);
            a
        })
}

/// Best baseline setting on `waves` (ties keep the earlier grid entry).
pub fn tune_baseline(waves: &[SynthWave], tol: usize) -> PauseSetting {
    let mut best: Option<(f64, PauseSetting)> = None;
    for s in baseline_grid() {
        let f1 = pause_counts(waves, &s, tol).metrics(tol).f1;
        if best.as_ref().map_or(true, |(b, _)| f1 > *b) {
            best = Some((f1, s));
        }
    }
    best.expect("grid is non-empty").1
}

pub fn run_training(cfg: &ExperimentConfig, waves: &[SynthWave]) -> TrainOutcome {
    let (train_w, rest) = waves.split_at(cfg.train_waves);
    let dev_w = &rest[..cfg.dev_waves];
    let labels: Vec<FrameLabels> = train_w.iter().map(labels_of).collect();
    let corpus: Vec<LabeledWave<'_>> = train_w
        .iter()
        .zip(&labels)
        .map(|(w, l)| LabeledWave { samples: &w.samples, labels: l })
        .collect();
    let dev: Vec<DevWave<'_>> = dev_w
        .iter()
        .map(|w| DevWave { samples: &w.samples, reference: &w.segments })
        .collect();
    train(&corpus, &dev, &cfg.train, &Parallel, |_, _| Ok(())).expect("synthetic corpus trains")
}

pub fn run(cfg: &ExperimentConfig) -> ExperimentResult {
    let waves = generate(&cfg.synth);
    let outcome = run_training(cfg, &waves);
    let test = &waves[cfg.train_waves + cfg.dev_waves..];
    let tol = cfg.tolerance_frames;
    let scorer = ModelScorer::new(&outcome.best);
    let mut pdac_total = BoundaryCounts::default();
    for w in test {
        let track = par_rolling_probs(&scorer, &w.samples, cfg.train.window_frames)
            .expect("model scores every window");
        let hyp = pdac(&track, &cfg.segmenter).expect("valid segmenter config");
        pdac_total.add(boundary_counts(&hyp, &w.segments, tol).expect("sorted"));
    }
    let setting = tune_baseline(&waves[..cfg.train_waves], tol);
    ExperimentResult {
        log: outcome.log,
        best_epoch: outcome.best_epoch,
        pdac: pdac_total,
        baseline: pause_counts(test, &setting, tol),
        baseline_setting: setting,
        test_waves: test.len(),
    }
}

/// Per-wave summary used by diagnostics.
pub fn describe(result: &ExperimentResult, tol: usize) -> BTreeMap<&'static str, f64> {
    let p = result.pdac.metrics(tol);
    let b = result.baseline.metrics(tol);
    BTreeMap::from([
        ("pdac_precision", p.precision),
        ("pdac_recall", p.recall),
        ("pdac_f1", p.f1),
        ("baseline_precision", b.precision),
        ("baseline_recall", b.recall),
        ("baseline_f1", b.f1),
    ])
}
