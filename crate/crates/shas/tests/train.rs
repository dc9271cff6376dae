//! Training on pure tones separated by silence should find every gap.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use shas::exec::Parallel;
use shas_core::audio::{FRAMES_PER_SECOND, FRAME_SAMPLES, SAMPLE_RATE};
use shas_core::labels::build_frame_labels;
use shas_core::train::{train, DevWave, LabeledWave, TrainConfig};
use shas_core::{FrameLabels, Segment, SegmentEntry, SegmenterConfig};

struct Wave {
    samples: Vec<f32>,
    segments: Vec<Segment>,
}

// three or four tones of 12-19 s each, so every gap must be cut to stay
// under a 20 s limit
fn tone_wave(rng: &mut ChaCha8Rng) -> Wave {
    let sec = |s: f64| (s * FRAMES_PER_SECOND).round() as usize;
    let mut frames = Vec::new();
    let mut cursor = sec(rng.gen_range(0.3..1.0));
    for _ in 0..rng.gen_range(3..=4) {
        let len = sec(rng.gen_range(12.0..19.0));
        frames.push(Segment::new(cursor, cursor + len));
        cursor += len + sec(rng.gen_range(0.4..1.2));
    }
    let mut samples = vec![0.0f32; cursor * FRAME_SAMPLES];
    for s in &frames {
        let hz = rng.gen_range(200.0..1500.0);
        let amp = rng.gen_range(0.2..0.6);
        for i in s.start * FRAME_SAMPLES..s.end * FRAME_SAMPLES {
            samples[i] = amp * (std::f32::consts::TAU * hz * i as f32 / SAMPLE_RATE as f32).sin();
        }
    }
    Wave { samples, segments: frames }
}

fn labels(w: &Wave) -> FrameLabels {
    let entries: Vec<_> = w.segments.iter().map(|s| SegmentEntry::from_frames("t", s.start, s.end)).collect();
    build_frame_labels(&entries, w.samples.len() / FRAME_SAMPLES).unwrap()
}

#[test]
fn tones_and_silences_reach_high_dev_f1() {
    let mut rng = ChaCha8Rng::seed_from_u64(12);
    let waves: Vec<Wave> = (0..8).map(|_| tone_wave(&mut rng)).collect();
    let (train_w, dev_w) = waves.split_at(6);
    let labels: Vec<_> = train_w.iter().map(labels).collect();
    let corpus: Vec<_> = train_w
        .iter()
        .zip(&labels)
        .map(|(w, l)| LabeledWave { samples: &w.samples, labels: l })
        .collect();
    let dev: Vec<_> = dev_w
        .iter()
        .map(|w| DevWave { samples: &w.samples, reference: &w.segments })
        .collect();
    let cfg = TrainConfig {
        seed: 3,
        epochs: 15,
        learning_rate: 3e-3,
        selection: SegmenterConfig::default(),
        ..Default::default()
    };
    let out = train(&corpus, &dev, &cfg, &Parallel, |_, _| Ok(())).unwrap();
    { use shas_core::inference::{ModelScorer, rolling_probs}; let w = &dev_w[0]; let p = rolling_probs(&ModelScorer::new(&out.best), &w.samples, 1000).unwrap(); let s = &w.segments; eprintln!("w_neg {} in {:?} gap {:?} len {} segs {:?}", out.w_neg, &p[s[0].start+10..s[0].start+15], &p[s[0].end..s[1].start], p.len(), s); }
    let best = out.log[out.best_epoch - 1].dev_f1.unwrap();
    assert!(best >= 0.9, "dev F1 {best} log {:?}", out.log);
}
