//! Synthetic segmentation corpus: band-limited noise "utterances" separated
//! by short boundary cues. Half of the inner cues are silences; the other
//! half only dip the previous utterance to a fraction of its amplitude, so
//! an energy VAD cannot see them.

use std::path::Path;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use shas_core::audio::{encode_wav_pcm16, FRAMES_PER_SECOND, FRAME_SAMPLES, SAMPLE_RATE};
use shas_core::train::derive_seed;
use shas_core::Segment;

use crate::error::RunError;
use crate::io::write_atomic;
use crate::manifest::{segments_to_entries, write_manifest};

const STREAM_SYNTH: u64 = 100;

#[derive(Debug, Clone, PartialEq)]
pub struct SynthConfig {
    pub seed: u64,
    pub waves: usize,
    pub min_wave_sec: f64,
    pub max_wave_sec: f64,
    pub min_chunk_sec: f64,
    pub max_chunk_sec: f64,
    pub cue_sec: f64,
    pub dip_level: f32,
    pub dip_fraction: f64,
    pub noise_floor: f32,
}

impl Default for SynthConfig {
    fn default() -> Self {
        Self {
            seed: 0,
            waves: 60,
            min_wave_sec: 30.0,
            max_wave_sec: 60.0,
            min_chunk_sec: 0.5,
            max_chunk_sec: 6.0,
            cue_sec: 0.06,
            dip_level: 0.2,
            dip_fraction: 0.5,
            noise_floor: 0.002,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Cue {
    Silence,
    Dip,
}

#[derive(Debug, Clone)]
pub struct SynthWave {
    pub id: String,
    pub samples: Vec<f32>,
    /// Reference segmentation in frames.
    pub segments: Vec<Segment>,
    /// Cue after each utterance but the last.
    pub cues: Vec<Cue>,
}

impl SynthWave {
    pub fn num_frames(&self) -> usize {
        self.samples.len() / FRAME_SAMPLES
    }
}

/// RBJ constant-peak band-pass biquad.
struct Bandpass {
    b0: f64,
    b2: f64,
    a1: f64,
    a2: f64,
    x1: f64,
    x2: f64,
    y1: f64,
    y2: f64,
}

impl Bandpass {
    fn new(center_hz: f64, q: f64) -> Self {
        let w0 = 2.0 * std::f64::consts::PI * center_hz / SAMPLE_RATE as f64;
        let alpha = w0.sin() / (2.0 * q);
        let a0 = 1.0 + alpha;
        Self {
            b0: alpha / a0,
            b2: -alpha / a0,
            a1: -2.0 * w0.cos() / a0,
            a2: (1.0 - alpha) / a0,
            x1: 0.0,
            x2: 0.0,
            y1: 0.0,
            y2: 0.0,
        }
    }

    fn tick(&mut self, x: f64) -> f64 {
        let y = self.b0 * x + self.b2 * self.x2 - self.a1 * self.y1 - self.a2 * self.y2;
        self.x2 = self.x1;
        self.x1 = x;
        self.y2 = self.y1;
        self.y1 = y;
        y
    }
}

fn frames(sec: f64) -> usize {
    (sec * FRAMES_PER_SECOND).round() as usize
}

/// An utterance of `len` frames, optionally continued by a dip tail of
/// `tail` frames at `dip_level` of its amplitude.
fn utterance(rng: &mut ChaCha8Rng, len: usize, tail: usize, dip_level: f32) -> Vec<f32> {
    let n = (len + tail) * FRAME_SAMPLES;
    let mut bp = Bandpass::new(rng.gen_range(300.0..2500.0), rng.gen_range(0.7..2.0));
    let raw: Vec<f64> = (0..n).map(|_| bp.tick(rng.gen_range(-1.0..1.0))).collect();
    let body = len * FRAME_SAMPLES;
    let rms = (raw[..body].iter().map(|x| x * x).sum::<f64>() / body as f64).sqrt().max(1e-12);
    let amp = rng.gen_range(0.3..0.9) / 3.0 / rms;
    let phase = rng.gen_range(0.0..std::f64::consts::TAU);
    let rate = 4.0 * std::f64::consts::TAU / SAMPLE_RATE as f64;
    raw.iter()
        .enumerate()
        .map(|(i, &x)| {
            // 4 Hz syllable-like envelope between 0.5 and 1
            let env = 0.75 + 0.25 * (rate * i as f64 + phase).sin();
            let level = if i < body { 1.0 } else { dip_level as f64 };
            (x * amp * env * level) as f32
        })
        .collect()
}

pub fn generate_wave(cfg: &SynthConfig, index: usize) -> SynthWave {
    let mut rng = ChaCha8Rng::seed_from_u64(derive_seed(cfg.seed, STREAM_SYNTH, index as u64));
    let total = frames(rng.gen_range(cfg.min_wave_sec..cfg.max_wave_sec));
    let cue = frames(cfg.cue_sec).max(1);
    let tail_guard = frames(0.2);
    let mut samples = vec![0.0f32; total * FRAME_SAMPLES];
    let mut segments = Vec::new();
    let mut cues = Vec::new();
    let mut cursor = frames(rng.gen_range(0.2..1.0));
    let mut pending: Option<(usize, Cue)> = None;
    loop {
        let len = frames(rng.gen_range(cfg.min_chunk_sec..cfg.max_chunk_sec));
        if cursor + len + tail_guard > total {
            break;
        }
        if let Some((_, c)) = pending.take() {
            cues.push(c);
        }
        let next_cue = if rng.gen_bool(cfg.dip_fraction) { Cue::Dip } else { Cue::Silence };
        let tail = if next_cue == Cue::Dip { cue } else { 0 };
        let sound = utterance(&mut rng, len, tail, cfg.dip_level);
        let at = cursor * FRAME_SAMPLES;
        samples[at..at + sound.len()].copy_from_slice(&sound);
        segments.push(Segment::new(cursor, cursor + len));
        pending = Some((cursor + len, next_cue));
        cursor += len + cue;
    }
    // a dip tail after the final utterance would leak into the trailing
    // silence; clear it
    if let (Some((end, Cue::Dip)), Some(_)) = (pending, segments.last()) {
        samples[end * FRAME_SAMPLES..(end + cue) * FRAME_SAMPLES].fill(0.0);
    }
    for s in samples.iter_mut() {
        *s = (*s + rng.gen_range(-cfg.noise_floor..cfg.noise_floor)).clamp(-1.0, 1.0);
    }
    SynthWave {
        id: format!("synth_{index:03}"),
        samples,
        segments,
        cues,
    }
}

pub fn generate(cfg: &SynthConfig) -> Vec<SynthWave> {
    (0..cfg.waves).map(|i| generate_wave(cfg, i)).collect()
}

/// Named split sizes, in order; the last split takes whatever remains.
pub const DEFAULT_SPLITS: [(&str, usize); 3] = [("train", 32), ("dev", 8), ("test", 20)];

/// Writes `audio/<id>.wav` (16-bit PCM) and one manifest per split under `dir`.
pub fn write_corpus(dir: &Path, waves: &[SynthWave], splits: &[(&str, usize)]) -> Result<(), RunError> {
    let audio = dir.join("audio");
    for w in waves {
        write_atomic(&audio.join(format!("{}.wav", w.id)), &encode_wav_pcm16(&w.samples))?;
    }
    let mut start = 0;
    for (i, (name, n)) in splits.iter().enumerate() {
        let end = if i + 1 == splits.len() { waves.len() } else { (start + n).min(waves.len()) };
        let entries: Vec<_> = waves[start..end]
            .iter()
            .flat_map(|w| segments_to_entries(&w.id, &w.segments))
            .collect();
        write_manifest(&dir.join(format!("{name}.jsonl")), &entries)?;
        start = end;
    }
    Ok(())
}
