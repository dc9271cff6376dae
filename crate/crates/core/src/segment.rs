//! Segmentation algorithms over per-frame probabilities or detected pauses.
//!
//! All segments are half-open frame intervals `[start, end)` on the 20 ms
//! grid. Every segmenter returns segments sorted by start and pairwise
//! disjoint. Ties between equal probabilities or equal pause lengths always
//! resolve to the lowest frame index.

use alloc::vec::Vec;

use thiserror::Error;

use crate::audio::FRAMES_PER_SECOND;
use crate::vad::{find_pauses, Pause, SpeechMask};

#[derive(Debug, Error, Clone, PartialEq)]
pub enum SegmentError {
    #[error("cannot segment an empty track")]
    EmptyTrack,
    #[error("invalid segmenter config: {0}")]
    InvalidConfig(&'static str),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub struct Segment {
    pub start: usize,
    pub end: usize,
}

impl Segment {
    pub const fn new(start: usize, end: usize) -> Self {
        Self { start, end }
    }

    pub const fn len(&self) -> usize {
        self.end - self.start
    }

    pub const fn is_empty(&self) -> bool {
        self.end <= self.start
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SegmenterConfig {
    pub max_sec: f64,
    pub min_sec: f64,
    pub thr: f64,
}

impl Default for SegmenterConfig {
    fn default() -> Self {
        Self {
            max_sec: 20.0,
            min_sec: 0.2,
            thr: 0.5,
        }
    }
}

impl SegmenterConfig {
    pub fn validate(&self) -> Result<FrameLimits, SegmentError> {
        if !(self.min_sec > 0.0 && self.min_sec < self.max_sec) {
            return Err(SegmentError::InvalidConfig("require 0 < min_sec < max_sec"));
        }
        if !(0.0..=1.0).contains(&self.thr) {
            return Err(SegmentError::InvalidConfig("thr must lie in [0, 1]"));
        }
        let limits = FrameLimits {
            max_frames: libm::round(self.max_sec * FRAMES_PER_SECOND) as usize,
            min_frames: libm::round(self.min_sec * FRAMES_PER_SECOND) as usize,
            thr: self.thr,
        };
        if limits.max_frames == 0 || limits.min_frames >= limits.max_frames {
            return Err(SegmentError::InvalidConfig(
                "min_sec and max_sec round to incompatible frame counts",
            ));
        }
        Ok(limits)
    }
}

/// A [`SegmenterConfig`] converted to frames.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct FrameLimits {
    pub max_frames: usize,
    pub min_frames: usize,
    pub thr: f64,
}

/// Shrinks `sgm` to its first and last frames with probability above `thr`.
pub fn trim(probs: &[f32], sgm: Segment, thr: f64) -> Option<Segment> {
    let s = &probs[sgm.start..sgm.end];
    let first = s.iter().position(|&p| p as f64 > thr)?;
    let last = s.iter().rposition(|&p| p as f64 > thr)?;
    Some(Segment::new(sgm.start + first, sgm.start + last + 1))
}

/// O(1) trimming after a linear precomputation.
struct Trimmer {
    // first index >= i above thr (n if none)
    next_above: Vec<usize>,
    // 1 + last index < i above thr (0 if none)
    prev_above_end: Vec<usize>,
}

impl Trimmer {
    fn new(probs: &[f32], thr: f64) -> Self {
        let n = probs.len();
        let mut next_above = alloc::vec![n; n + 1];
        for i in (0..n).rev() {
            next_above[i] = if probs[i] as f64 > thr { i } else { next_above[i + 1] };
        }
        let mut prev_above_end = alloc::vec![0; n + 1];
        for i in 0..n {
            prev_above_end[i + 1] = if probs[i] as f64 > thr { i + 1 } else { prev_above_end[i] };
        }
        Self {
            next_above,
            prev_above_end,
        }
    }

    fn trim(&self, start: usize, end: usize) -> Option<Segment> {
        if start >= end {
            return None;
        }
        let first = self.next_above[start];
        if first >= end {
            return None;
        }
        Some(Segment::new(first, self.prev_above_end[end]))
    }
}

fn nonempty(probs: &[f32]) -> Result<(), SegmentError> {
    if probs.is_empty() {
        Err(SegmentError::EmptyTrack)
    } else {
        Ok(())
    }
}

/// Probabilistic divide-and-conquer with segment limits in seconds.
pub fn pdac(probs: &[f32], config: &SegmenterConfig) -> Result<Vec<Segment>, SegmentError> {
    let l = config.validate()?;
    pdac_frames(probs, l.max_frames, l.min_frames, l.thr)
}

/// Probabilistic divide-and-conquer.
///
/// A segment shorter than `max_frames` is emitted after trimming. Longer
/// segments try split frames in ascending probability order; splitting at
/// `k` yields `[start, k)` and `[k + 1, end)`, both trimmed, and the first
/// split whose children are both longer than `min_frames` is taken. When no
/// split qualifies the segment is split at its lowest-probability frame,
/// empty children are dropped and the rest re-enter the procedure.
pub fn pdac_frames(
    probs: &[f32],
    max_frames: usize,
    min_frames: usize,
    thr: f64,
) -> Result<Vec<Segment>, SegmentError> {
    nonempty(probs)?;
    let trimmer = Trimmer::new(probs, thr);
    let mut out = Vec::new();
    let mut stack = alloc::vec![Segment::new(0, probs.len())];
    let mut order: Vec<usize> = Vec::new();
    while let Some(sgm) = stack.pop() {
        if sgm.len() < max_frames {
            out.extend(trimmer.trim(sgm.start, sgm.end));
            continue;
        }
        order.clear();
        order.extend(sgm.start..sgm.end);
        // stable sort keeps ascending index among equal probabilities
        order.sort_by(|&a, &b| probs[a].total_cmp(&probs[b]));
        let split = order.iter().find_map(|&k| {
            let a = trimmer.trim(sgm.start, k)?;
            let b = trimmer.trim(k + 1, sgm.end)?;
            (a.len() > min_frames && b.len() > min_frames).then_some((a, b))
        });
        match split {
            Some((a, b)) => {
                stack.push(b);
                stack.push(a);
            }
            None => {
                let k = order[0];
                stack.extend(trimmer.trim(k + 1, sgm.end));
                stack.extend(trimmer.trim(sgm.start, k));
            }
        }
    }
    out.sort_unstable();
    Ok(out)
}

/// Streaming counterpart of [`pdac`] with limits in seconds.
pub fn pstrm(probs: &[f32], config: &SegmenterConfig) -> Result<Vec<Segment>, SegmentError> {
    let l = config.validate()?;
    pstrm_frames(probs, l.max_frames, l.min_frames, l.thr)
}

/// Left-to-right splitting inside a lookahead of `max_frames`.
///
/// From the cursor, the split is the lowest-probability frame at relative
/// position `[min_frames, max_frames)`; `[cursor, k)` is emitted trimmed and
/// the cursor moves to `k + 1`. A remainder shorter than `max_frames` is
/// emitted trimmed.
pub fn pstrm_frames(
    probs: &[f32],
    max_frames: usize,
    min_frames: usize,
    thr: f64,
) -> Result<Vec<Segment>, SegmentError> {
    nonempty(probs)?;
    if min_frames >= max_frames {
        return Err(SegmentError::InvalidConfig("min_frames must be below max_frames"));
    }
    let n = probs.len();
    let trimmer = Trimmer::new(probs, thr);
    let mut out = Vec::new();
    let mut cursor = 0;
    while cursor < n {
        if n - cursor < max_frames {
            out.extend(trimmer.trim(cursor, n));
            break;
        }
        let lo = cursor + min_frames;
        let hi = cursor + max_frames;
        let mut k = lo;
        for i in lo + 1..hi {
            if probs[i] < probs[k] {
                k = i;
            }
        }
        out.extend(trimmer.trim(cursor, k));
        cursor = k + 1;
    }
    Ok(out)
}

fn longest_pause_within(pauses: &[Pause], lo: usize, hi: usize) -> Option<Pause> {
    pauses
        .iter()
        .filter(|p| p.start >= lo && p.end() <= hi)
        .fold(None, |best: Option<Pause>, &p| match best {
            Some(b) if b.length >= p.length => Some(b),
            _ => Some(p),
        })
}

/// Divide-and-conquer over detected pauses (20 ms frames).
///
/// Segments of at least `max_frames` split on the longest pause lying
/// inside them, excluding the pause frames; without an inner pause they
/// split at the midpoint. No minimum length is enforced.
pub fn dac_on_pauses(
    total_frames: usize,
    pauses: &[Pause],
    max_frames: usize,
) -> Result<Vec<Segment>, SegmentError> {
    if total_frames == 0 {
        return Err(SegmentError::EmptyTrack);
    }
    let mut out = Vec::new();
    let mut stack = alloc::vec![Segment::new(0, total_frames)];
    while let Some(sgm) = stack.pop() {
        if sgm.is_empty() {
            continue;
        }
        if sgm.len() < max_frames || sgm.len() == 1 {
            out.push(sgm);
            continue;
        }
        let (left, right) = match longest_pause_within(pauses, sgm.start, sgm.end) {
            Some(p) => (Segment::new(sgm.start, p.start), Segment::new(p.end(), sgm.end)),
            None => {
                let mid = sgm.start + sgm.len() / 2;
                (Segment::new(sgm.start, mid), Segment::new(mid, sgm.end))
            }
        };
        stack.push(right);
        stack.push(left);
    }
    out.sort_unstable();
    Ok(out)
}

/// Streaming split on the longest pause between `min_frames` and
/// `max_frames` from the cursor; without one the whole `max_frames` stream
/// becomes a segment.
pub fn strm_on_pauses(
    total_frames: usize,
    pauses: &[Pause],
    max_frames: usize,
    min_frames: usize,
) -> Result<Vec<Segment>, SegmentError> {
    if total_frames == 0 {
        return Err(SegmentError::EmptyTrack);
    }
    if max_frames == 0 {
        return Err(SegmentError::InvalidConfig("max_frames must be positive"));
    }
    let mut out = Vec::new();
    let mut cursor = 0;
    while cursor < total_frames {
        if total_frames - cursor <= max_frames {
            out.push(Segment::new(cursor, total_frames));
            break;
        }
        match longest_pause_within(pauses, cursor + min_frames, cursor + max_frames) {
            Some(p) => {
                if p.start > cursor {
                    out.push(Segment::new(cursor, p.start));
                }
                cursor = p.end();
            }
            None => {
                out.push(Segment::new(cursor, cursor + max_frames));
                cursor += max_frames;
            }
        }
    }
    Ok(out)
}

/// Consecutive `max_frames` segments; the remainder is kept at any length.
pub fn length_based(total_frames: usize, max_frames: usize) -> Vec<Segment> {
    let step = max_frames.max(1);
    (0..total_frames)
        .step_by(step)
        .map(|s| Segment::new(s, (s + step).min(total_frames)))
        .collect()
}

/// Speech runs between non-speech pauses of at least `min_pause_frames`
/// (counted on the 20 ms grid); shorter non-speech runs stay inside segments.
pub fn pause_based(mask: &SpeechMask, min_pause_frames: usize) -> Vec<Segment> {
    let grid = mask.to_frame_grid();
    let pauses = find_pauses(&grid, min_pause_frames);
    let mut out = Vec::new();
    let mut cursor = 0;
    for p in pauses.iter().chain(core::iter::once(&Pause {
        start: grid.total_frames(),
        length: 0,
    })) {
        if p.start > cursor {
            out.push(Segment::new(cursor, p.start));
        }
        cursor = p.end();
    }
    out
}

/// Pauses of a mask on the 20 ms grid, for the hybrid segmenters.
pub fn grid_pauses(mask: &SpeechMask, min_pause_frames: usize) -> Vec<Pause> {
    find_pauses(&mask.to_frame_grid(), min_pause_frames)
}

#[cfg(test)]
mod tests {
    use super::*;
    use alloc::vec;

    fn segs(v: &[(usize, usize)]) -> Vec<Segment> {
        v.iter().map(|&(s, e)| Segment::new(s, e)).collect()
    }

    #[test]
    fn trim_examples() {
        let p = [0.1, 0.9, 0.9, 0.2];
        assert_eq!(trim(&p, Segment::new(0, 4), 0.5), Some(Segment::new(1, 3)));
        assert_eq!(trim(&[0.7; 5], Segment::new(1, 4), 0.5), Some(Segment::new(1, 4)));
        assert_eq!(trim(&[0.5, 0.2], Segment::new(0, 2), 0.5), None);
        let t = Trimmer::new(&p, 0.5);
        for s in 0..=4 {
            for e in s..=4 {
                let naive = if s < e { trim(&p, Segment::new(s, e), 0.5) } else { None };
                assert_eq!(t.trim(s, e), naive);
            }
        }
    }

    #[test]
    fn pdac_below_max_only_trims() {
        let p = vec![0.8; 100];
        let cfg = SegmenterConfig { max_sec: 4.0, ..Default::default() };
        assert_eq!(pdac(&p, &cfg).unwrap(), segs(&[(0, 100)]));
    }

    #[test]
    fn pdac_hand_trace() {
        let p = [0.9, 0.8, 0.2, 0.9, 0.9, 0.1, 0.9, 0.8];
        assert_eq!(pdac_frames(&p, 5, 1, 0.5).unwrap(), segs(&[(0, 2), (3, 5), (6, 8)]));
    }

    #[test]
    fn pdac_fallback_recurses_until_below_max() {
        // No split leaves both children above 3 frames; the fallback splits
        // at frame 0, then [1,6) is still max_frames long and splits again
        // at its first (tied) minimum.
        let p = [0.1, 0.9, 0.9, 0.9, 0.9, 0.9];
        assert_eq!(pdac_frames(&p, 5, 3, 0.5).unwrap(), segs(&[(2, 6)]));
    }

    #[test]
    fn pdac_rejects_empty_track() {
        assert_eq!(pdac_frames(&[], 5, 1, 0.5), Err(SegmentError::EmptyTrack));
    }

    #[test]
    fn pstrm_examples() {
        let p = [0.9, 0.9, 0.9, 0.9, 0.2, 0.9, 0.9, 0.9, 0.9, 0.9];
        assert_eq!(pstrm_frames(&p, 8, 2, 0.5).unwrap(), segs(&[(0, 4), (5, 10)]));
        assert_eq!(pstrm_frames(&[0.7; 6], 8, 2, 0.5).unwrap(), segs(&[(0, 6)]));
        // equal probabilities split at relative position min_frames
        assert_eq!(
            pstrm_frames(&[0.7; 20], 8, 3, 0.5).unwrap(),
            segs(&[(0, 3), (4, 7), (8, 11), (12, 15), (16, 20)])
        );
    }

    #[test]
    fn dac_on_pauses_examples() {
        assert_eq!(dac_on_pauses(300, &[], 200).unwrap(), segs(&[(0, 150), (150, 300)]));
        let one = [Pause { start: 100, length: 20 }];
        assert_eq!(dac_on_pauses(300, &one, 200).unwrap(), segs(&[(0, 100), (120, 300)]));
        let two = [Pause { start: 50, length: 5 }, Pause { start: 180, length: 9 }];
        assert_eq!(
            dac_on_pauses(300, &two, 200).unwrap(),
            segs(&[(0, 180), (189, 300)])
        );
        assert_eq!(dac_on_pauses(0, &[], 200), Err(SegmentError::EmptyTrack));
    }

    #[test]
    fn strm_on_pauses_examples() {
        assert_eq!(
            strm_on_pauses(250, &[], 100, 20).unwrap(),
            segs(&[(0, 100), (100, 200), (200, 250)])
        );
        let p = [Pause { start: 60, length: 4 }];
        assert_eq!(
            strm_on_pauses(250, &p, 100, 20).unwrap(),
            segs(&[(0, 60), (64, 164), (164, 250)])
        );
        let early = [Pause { start: 10, length: 4 }];
        assert_eq!(
            strm_on_pauses(250, &early, 100, 20).unwrap(),
            segs(&[(0, 100), (100, 200), (200, 250)])
        );
    }

    #[test]
    fn length_based_examples() {
        assert_eq!(length_based(1000, 400), segs(&[(0, 400), (400, 800), (800, 1000)]));
        assert_eq!(length_based(300, 400), segs(&[(0, 300)]));
        assert_eq!(length_based(800, 400), segs(&[(0, 400), (400, 800)]));
    }

    #[test]
    fn pause_based_examples() {
        let all = SpeechMask::new(vec![true; 200], 20);
        assert_eq!(pause_based(&all, 5), segs(&[(0, 200)]));
        let gap: Vec<bool> = (0..200).map(|f| !(100..150).contains(&f)).collect();
        assert_eq!(pause_based(&SpeechMask::new(gap, 20), 5), segs(&[(0, 100), (150, 200)]));
        assert!(pause_based(&SpeechMask::new(vec![false; 200], 20), 5).is_empty());
        let short_gap: Vec<bool> = (0..50).map(|f| f != 20).collect();
        assert_eq!(pause_based(&SpeechMask::new(short_gap, 20), 2), segs(&[(0, 50)]));
    }

    #[test]
    fn config_to_frames() {
        let l = SegmenterConfig { max_sec: 8.0, min_sec: 0.2, thr: 0.5 }.validate().unwrap();
        assert_eq!((l.max_frames, l.min_frames), (400, 10));
        assert!(SegmenterConfig { max_sec: 1.0, min_sec: 2.0, thr: 0.5 }.validate().is_err());
        assert!(SegmenterConfig { max_sec: 10.0, min_sec: 0.2, thr: 1.5 }.validate().is_err());
    }

    mod props {
        use super::*;
        use proptest::prelude::*;

        fn check_sorted_disjoint(s: &[Segment], n: usize) -> Result<(), TestCaseError> {
            let mut prev = 0;
            for seg in s {
                prop_assert!(seg.start >= prev && seg.start < seg.end && seg.end <= n);
                prev = seg.end;
            }
            Ok(())
        }

        proptest! {
            #[test]
            fn pstrm_segments_fit_the_lookahead(
                p in prop::collection::vec(0.0f32..1.0, 1..400),
                max in 2usize..60, min_frac in 0.0f64..1.0
            ) {
                let min = ((max - 1) as f64 * min_frac) as usize;
                let out = pstrm_frames(&p, max, min, 0.5).unwrap();
                check_sorted_disjoint(&out, p.len())?;
                prop_assert!(out.iter().all(|s| s.len() <= max));
            }

            #[test]
            fn dac_terminates_and_respects_max(
                n in 1usize..2000, max in 2usize..300,
                raw in prop::collection::vec((0usize..2000, 1usize..40), 0..20)
            ) {
                let mut bits = vec![true; n];
                for (s, l) in raw {
                    for f in s..(s + l).min(n) {
                        bits[f] = false;
                    }
                }
                let pauses = find_pauses(&SpeechMask::new(bits, 20), 1);
                let out = dac_on_pauses(n, &pauses, max).unwrap();
                check_sorted_disjoint(&out, n)?;
                prop_assert!(out.iter().all(|s| s.len() < max));
                let strm = strm_on_pauses(n, &pauses, max, max / 3).unwrap();
                check_sorted_disjoint(&strm, n)?;
                prop_assert!(strm.iter().all(|s| s.len() <= max));
            }

            #[test]
            fn length_based_tiles_everything(n in 1usize..5000, max in 1usize..700) {
                let out = length_based(n, max);
                check_sorted_disjoint(&out, n)?;
                prop_assert_eq!(out.iter().map(Segment::len).sum::<usize>(), n);
                prop_assert!(out[..out.len() - 1].iter().all(|s| s.len() == max));
            }

            #[test]
            fn pause_based_is_complement_of_pauses(
                bits in prop::collection::vec(any::<bool>(), 1..300), min in 1usize..4
            ) {
                let mask = SpeechMask::new(bits.clone(), 20);
                let out = pause_based(&mask, min);
                check_sorted_disjoint(&out, bits.len())?;
                let covered: usize = out.iter().map(Segment::len).sum();
                let paused: usize = find_pauses(&mask, min).iter().map(|p| p.length).sum();
                prop_assert_eq!(covered + paused, bits.len());
            }
        }
    }
}
