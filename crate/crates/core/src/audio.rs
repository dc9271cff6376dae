//! WAV decoding, per-window normalization and the 20 ms frame geometry.

use alloc::vec::Vec;

use thiserror::Error;

/// The only sample rate accepted by the toolkit.
pub const SAMPLE_RATE: u32 = 16_000;

/// Samples per frame; one frame is 20 ms at 16 kHz.
pub const FRAME_SAMPLES: usize = 320;

/// Duration of one frame in seconds.
pub const FRAME_SECONDS: f64 = 0.02;

/// Frames per second. Conversions divide or multiply by this exact integer
/// instead of multiplying by the inexact `0.02`.
pub const FRAMES_PER_SECOND: f64 = 50.0;

const NORM_EPS: f64 = 1e-8;

#[derive(Debug, Error, Clone, PartialEq, Eq)]
pub enum AudioError {
    #[error("corrupt RIFF/WAVE header: {0}")]
    CorruptHeader(&'static str),
    #[error("unsupported encoding (format tag {format_tag}, {bits} bits per sample)")]
    UnsupportedEncoding { format_tag: u16, bits: u16 },
    #[error("unsupported sample rate {0} Hz (expected 16000)")]
    UnsupportedRate(u32),
    #[error("non-finite sample at index {0}")]
    NonFiniteSample(usize),
    #[error("empty window")]
    EmptyWindow,
}

/// Mono 16 kHz audio with amplitudes in `[-1, 1]`.
#[derive(Debug, Clone, PartialEq)]
pub struct AudioWave {
    samples: Vec<f32>,
}

impl AudioWave {
    /// Wraps already-decoded samples, clamping them to `[-1, 1]`.
    pub fn from_samples(mut samples: Vec<f32>) -> Result<Self, AudioError> {
        for (i, s) in samples.iter_mut().enumerate() {
            if !s.is_finite() {
                return Err(AudioError::NonFiniteSample(i));
            }
            *s = s.clamp(-1.0, 1.0);
        }
        Ok(Self { samples })
    }

    pub fn samples(&self) -> &[f32] {
        &self.samples
    }

    pub fn into_samples(self) -> Vec<f32> {
        self.samples
    }

    pub fn sample_rate(&self) -> u32 {
        SAMPLE_RATE
    }

    pub fn len(&self) -> usize {
        self.samples.len()
    }

    pub fn is_empty(&self) -> bool {
        self.samples.is_empty()
    }

    pub fn num_frames(&self) -> usize {
        frames_for_samples(self.samples.len())
    }
}

/// Whole frames in `n_samples`; a trailing partial frame is discarded.
pub const fn frames_for_samples(n_samples: usize) -> usize {
    n_samples / FRAME_SAMPLES
}

pub fn num_frames(wave: &AudioWave) -> usize {
    wave.num_frames()
}

/// Seconds to a frame index, flooring at 20 ms resolution.
pub fn seconds_to_frame(seconds: f64) -> usize {
    // The epsilon absorbs decimal round-off such as 0.06 * 50 = 2.9999...
    let f = libm::floor(seconds * FRAMES_PER_SECOND + 1e-9);
    if f <= 0.0 {
        0
    } else {
        f as usize
    }
}

pub fn frame_to_seconds(frame: usize) -> f64 {
    frame as f64 / FRAMES_PER_SECOND
}

/// Rescales a window to zero mean and unit standard deviation.
///
/// Windows whose standard deviation is below `1e-8` map to all zeros.
pub fn normalize_window(window: &[f32]) -> Result<Vec<f32>, AudioError> {
    if window.is_empty() {
        return Err(AudioError::EmptyWindow);
    }
    let n = window.len() as f64;
    let mean = window.iter().map(|&x| x as f64).sum::<f64>() / n;
    let var = window
        .iter()
        .map(|&x| {
            let d = x as f64 - mean;
            d * d
        })
        .sum::<f64>()
        / n;
    let std = libm::sqrt(var);
    if std < NORM_EPS {
        return Ok(alloc::vec![0.0; window.len()]);
    }
    Ok(window
        .iter()
        .map(|&x| ((x as f64 - mean) / std) as f32)
        .collect())
}

const FORMAT_PCM: u16 = 1;
const FORMAT_IEEE_FLOAT: u16 = 3;
const FORMAT_EXTENSIBLE: u16 = 0xFFFE;

struct FmtChunk {
    format_tag: u16,
    channels: u16,
    sample_rate: u32,
    bits: u16,
}

fn read_u16(b: &[u8], at: usize) -> u16 {
    u16::from_le_bytes([b[at], b[at + 1]])
}

fn read_u32(b: &[u8], at: usize) -> u32 {
    u32::from_le_bytes([b[at], b[at + 1], b[at + 2], b[at + 3]])
}

fn parse_fmt(body: &[u8]) -> Result<FmtChunk, AudioError> {
    if body.len() < 16 {
        return Err(AudioError::CorruptHeader("fmt chunk shorter than 16 bytes"));
    }
    let mut format_tag = read_u16(body, 0);
    let channels = read_u16(body, 2);
    let sample_rate = read_u32(body, 4);
    let bits = read_u16(body, 14);
    if format_tag == FORMAT_EXTENSIBLE {
        // cbSize(2) validBits(2) channelMask(4) then the sub-format GUID,
        // whose first two bytes carry the plain format tag.
        if body.len() < 26 {
            return Err(AudioError::CorruptHeader("truncated WAVE_FORMAT_EXTENSIBLE"));
        }
        format_tag = read_u16(body, 24);
    }
    if channels == 0 {
        return Err(AudioError::CorruptHeader("zero channels"));
    }
    Ok(FmtChunk {
        format_tag,
        channels,
        sample_rate,
        bits,
    })
}

/// Decodes RIFF/WAVE bytes holding PCM16 or float32 audio at 16 kHz.
///
/// Multi-channel input is downmixed by the per-sample channel mean.
pub fn parse_wav(bytes: &[u8]) -> Result<AudioWave, AudioError> {
    if bytes.len() < 12 || &bytes[0..4] != b"RIFF" || &bytes[8..12] != b"WAVE" {
        return Err(AudioError::CorruptHeader("missing RIFF/WAVE signature"));
    }
    let mut fmt = None;
    let mut data = None;
    let mut pos = 12;
    while pos + 8 <= bytes.len() {
        let id = &bytes[pos..pos + 4];
        let size = read_u32(bytes, pos + 4) as usize;
        let body_start = pos + 8;
        let body_end = body_start
            .checked_add(size)
            .ok_or(AudioError::CorruptHeader("chunk size overflow"))?;
        if body_end > bytes.len() {
            // Some writers leave a bogus data size when streaming; accept a
            // short final data chunk but nothing else.
            if id == b"data" {
                data = Some(&bytes[body_start..]);
                break;
            }
            return Err(AudioError::CorruptHeader("chunk extends past end of file"));
        }
        let body = &bytes[body_start..body_end];
        match id {
            b"fmt " => fmt = Some(parse_fmt(body)?),
            b"data" => data = Some(body),
            _ => {}
        }
        pos = body_end + (size & 1);
    }
    let fmt = fmt.ok_or(AudioError::CorruptHeader("missing fmt chunk"))?;
    let data = data.ok_or(AudioError::CorruptHeader("missing data chunk"))?;

    let bytes_per_sample = match (fmt.format_tag, fmt.bits) {
        (FORMAT_PCM, 16) => 2,
        (FORMAT_IEEE_FLOAT, 32) => 4,
        (format_tag, bits) => return Err(AudioError::UnsupportedEncoding { format_tag, bits }),
    };
    if fmt.sample_rate != SAMPLE_RATE {
        return Err(AudioError::UnsupportedRate(fmt.sample_rate));
    }

    let channels = fmt.channels as usize;
    let block = bytes_per_sample * channels;
    let n = data.len() / block;
    let mut samples = Vec::with_capacity(n);
    for frame in data.chunks_exact(block) {
        let mut acc = 0.0f64;
        for ch in frame.chunks_exact(bytes_per_sample) {
            acc += if bytes_per_sample == 2 {
                i16::from_le_bytes([ch[0], ch[1]]) as f64 / 32768.0
            } else {
                f32::from_le_bytes([ch[0], ch[1], ch[2], ch[3]]) as f64
            };
        }
        samples.push((acc / channels as f64) as f32);
    }
    AudioWave::from_samples(samples)
}

fn wav_header(out: &mut Vec<u8>, format_tag: u16, channels: u16, bits: u16, data_len: usize) {
    let block_align = channels * bits / 8;
    out.extend_from_slice(b"RIFF");
    out.extend_from_slice(&((36 + data_len) as u32).to_le_bytes());
    out.extend_from_slice(b"WAVE");
    out.extend_from_slice(b"fmt ");
    out.extend_from_slice(&16u32.to_le_bytes());
    out.extend_from_slice(&format_tag.to_le_bytes());
    out.extend_from_slice(&channels.to_le_bytes());
    out.extend_from_slice(&SAMPLE_RATE.to_le_bytes());
    out.extend_from_slice(&(SAMPLE_RATE * block_align as u32).to_le_bytes());
    out.extend_from_slice(&block_align.to_le_bytes());
    out.extend_from_slice(&bits.to_le_bytes());
    out.extend_from_slice(b"data");
    out.extend_from_slice(&(data_len as u32).to_le_bytes());
}

/// Encodes mono samples as a 16 kHz PCM16 WAV file.
pub fn encode_wav_pcm16(samples: &[f32]) -> Vec<u8> {
    let mut out = Vec::with_capacity(44 + samples.len() * 2);
    wav_header(&mut out, FORMAT_PCM, 1, 16, samples.len() * 2);
    for &s in samples {
        let v = libm::round(s.clamp(-1.0, 1.0) as f64 * 32768.0).clamp(-32768.0, 32767.0) as i16;
        out.extend_from_slice(&v.to_le_bytes());
    }
    out
}

/// Encodes interleaved samples as a 16 kHz float32 WAV file.
pub fn encode_wav_f32(samples: &[f32], channels: u16) -> Vec<u8> {
    let mut out = Vec::with_capacity(44 + samples.len() * 4);
    wav_header(&mut out, FORMAT_IEEE_FLOAT, channels, 32, samples.len() * 4);
    for &s in samples {
        out.extend_from_slice(&s.to_le_bytes());
    }
    out
}
