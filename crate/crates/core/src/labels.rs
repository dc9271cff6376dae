//! Frame supervision derived from manual segmentations, and the randomized
//! training windows drawn from each wave every epoch.

use alloc::string::String;
use alloc::vec::Vec;

use rand::Rng;
use thiserror::Error;

use crate::audio::{frame_to_seconds, seconds_to_frame};

#[derive(Debug, Error, Clone, PartialEq)]
pub enum LabelError {
    #[error("segment at {offset}s (+{duration}s) lies outside the {total_frames}-frame audio")]
    OutOfRangeSegment {
        offset: f64,
        duration: f64,
        total_frames: usize,
    },
    #[error("segment at {offset}s overlaps the previous segment")]
    OverlappingSegments { offset: f64 },
    #[error("segment at {offset}s has a non-positive duration or negative offset")]
    InvalidEntry { offset: f64 },
    #[error("corpus has {positive} positive and {negative} negative frames; both classes are required")]
    DegenerateCorpus { positive: usize, negative: usize },
}

/// One manually segmented utterance.
#[derive(Debug, Clone, PartialEq)]
pub struct SegmentEntry {
    pub wav: String,
    pub offset: f64,
    pub duration: f64,
}

impl SegmentEntry {
    pub fn new(wav: impl Into<String>, offset: f64, duration: f64) -> Self {
        Self {
            wav: wav.into(),
            offset,
            duration,
        }
    }

    /// Half-open frame range `[floor(offset/0.02), floor((offset+duration)/0.02))`.
    pub fn frame_range(&self) -> (usize, usize) {
        (
            seconds_to_frame(self.offset),
            seconds_to_frame(self.offset + self.duration),
        )
    }

    /// Entry covering frames `[start, end)` exactly.
    pub fn from_frames(wav: impl Into<String>, start: usize, end: usize) -> Self {
        Self::new(
            wav,
            frame_to_seconds(start),
            frame_to_seconds(end) - frame_to_seconds(start),
        )
    }
}

/// Per-frame binary supervision; `true` marks a frame inside a segment.
#[derive(Debug, Clone, PartialEq, Eq, Default)]
pub struct FrameLabels(Vec<bool>);

impl FrameLabels {
    pub fn new(labels: Vec<bool>) -> Self {
        Self(labels)
    }

    pub fn as_slice(&self) -> &[bool] {
        &self.0
    }

    pub fn len(&self) -> usize {
        self.0.len()
    }

    pub fn is_empty(&self) -> bool {
        self.0.is_empty()
    }

    pub fn positives(&self) -> usize {
        self.0.iter().filter(|&&l| l).count()
    }
}

/// Labels frames of a single wave from its manual segments.
///
/// `entries` must all belong to the same wave; they are sorted by offset
/// here. Where one segment's end frame is the next segment's start frame,
/// that frame is forced negative so the split stays visible.
pub fn build_frame_labels(
    entries: &[SegmentEntry],
    total_frames: usize,
) -> Result<FrameLabels, LabelError> {
    let mut sorted: Vec<&SegmentEntry> = entries.iter().collect();
    sorted.sort_by(|a, b| a.offset.total_cmp(&b.offset));

    let mut labels = alloc::vec![false; total_frames];
    let mut forced = Vec::new();
    let mut prev_end: Option<usize> = None;
    for e in sorted {
        if !(e.offset >= 0.0) || !(e.duration > 0.0) {
            return Err(LabelError::InvalidEntry { offset: e.offset });
        }
        let (start, end) = e.frame_range();
        if end > total_frames {
            return Err(LabelError::OutOfRangeSegment {
                offset: e.offset,
                duration: e.duration,
                total_frames,
            });
        }
        if let Some(pe) = prev_end {
            if start < pe {
                return Err(LabelError::OverlappingSegments { offset: e.offset });
            }
            if start == pe && start < end {
                forced.push(start);
            }
        }
        labels[start..end].iter_mut().for_each(|l| *l = true);
        prev_end = Some(end);
    }
    for f in forced {
        labels[f] = false;
    }
    Ok(FrameLabels(labels))
}

/// A contiguous frame window of one wave used as a training example.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct TrainingWindow {
    /// Index of the wave in the training corpus.
    pub wav: usize,
    pub start_frame: usize,
    pub length_frames: usize,
}

impl TrainingWindow {
    pub fn end_frame(&self) -> usize {
        self.start_frame + self.length_frames
    }
}

/// Edge windows shorter than this fraction of `window_frames` are dropped.
pub const EDGE_KEEP_FRACTION: f64 = 0.1;

/// Tiles a wave into windows from a random start offset.
///
/// The offset is drawn uniformly from `[0, window_frames)`. Leading and
/// trailing partial windows are kept when at least 10% of `window_frames`.
pub fn sample_training_windows<R: Rng + ?Sized>(
    wav: usize,
    total_frames: usize,
    window_frames: usize,
    rng: &mut R,
) -> Vec<TrainingWindow> {
    assert!(window_frames >= 1, "window_frames must be at least 1");
    let offset = rng.gen_range(0..window_frames);
    tile_from_offset(wav, total_frames, window_frames, offset)
}

/// Deterministic tiling used by [`sample_training_windows`] once the
/// offset is drawn.
pub fn tile_from_offset(
    wav: usize,
    total_frames: usize,
    window_frames: usize,
    offset: usize,
) -> Vec<TrainingWindow> {
    let keep = |len: usize| len >= 1 && len as f64 >= EDGE_KEEP_FRACTION * window_frames as f64;
    let window = |start: usize, end: usize| TrainingWindow {
        wav,
        start_frame: start,
        length_frames: end - start,
    };
    let mut out = Vec::new();
    let lead_end = offset.min(total_frames);
    if keep(lead_end) {
        out.push(window(0, lead_end));
    }
    let mut start = offset;
    while start < total_frames {
        let end = (start + window_frames).min(total_frames);
        if end - start == window_frames || keep(end - start) {
            out.push(window(start, end));
        }
        start = end;
    }
    out
}

/// Weight for negative frames: `#positive / #negative` over the corpus.
pub fn class_weight<'a, I>(tracks: I) -> Result<f64, LabelError>
where
    I: IntoIterator<Item = &'a FrameLabels>,
{
    let (mut positive, mut total) = (0usize, 0usize);
    for t in tracks {
        positive += t.positives();
        total += t.len();
    }
    let negative = total - positive;
    if positive == 0 || negative == 0 {
        return Err(LabelError::DegenerateCorpus { positive, negative });
    }
    Ok(positive as f64 / negative as f64)
}

#[cfg(test)]
mod tests {
    use super::*;
    use alloc::vec;
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;

    fn spans(ws: &[TrainingWindow]) -> Vec<(usize, usize)> {
        ws.iter().map(|w| (w.start_frame, w.end_frame())).collect()
    }

    #[test]
    fn empty_manifest_is_all_negative() {
        let labels = build_frame_labels(&[], 10).unwrap();
        assert_eq!(labels.as_slice(), &[false; 10]);
    }

    #[test]
    fn single_segment_labels() {
        let labels = build_frame_labels(&[SegmentEntry::new("a", 0.0, 0.1)], 10).unwrap();
        let expected: Vec<bool> = (0..10).map(|f| f < 5).collect();
        assert_eq!(labels.as_slice(), expected.as_slice());
    }

    #[test]
    fn coinciding_boundary_is_forced_negative() {
        let entries = [SegmentEntry::new("a", 0.1, 0.1), SegmentEntry::new("a", 0.0, 0.1)];
        let labels = build_frame_labels(&entries, 10).unwrap();
        let expected: Vec<bool> = (0..10).map(|f| f != 5).collect();
        assert_eq!(labels.as_slice(), expected.as_slice());
    }

    #[test]
    fn label_errors() {
        assert!(matches!(
            build_frame_labels(&[SegmentEntry::new("a", 0.1, 0.2)], 10),
            Err(LabelError::OutOfRangeSegment { .. })
        ));
        assert!(matches!(
            build_frame_labels(
                &[SegmentEntry::new("a", 0.0, 0.1), SegmentEntry::new("a", 0.08, 0.04)],
                10
            ),
            Err(LabelError::OverlappingSegments { .. })
        ));
        assert!(matches!(
            build_frame_labels(&[SegmentEntry::new("a", 0.0, 0.0)], 10),
            Err(LabelError::InvalidEntry { .. })
        ));
    }

    #[test]
    fn exact_fit_window() {
        assert_eq!(spans(&tile_from_offset(0, 1000, 1000, 0)), vec![(0, 1000)]);
    }

    #[test]
    fn tiling_with_offset_keeps_long_edges() {
        assert_eq!(
            spans(&tile_from_offset(0, 2500, 1000, 300)),
            vec![(0, 300), (300, 1300), (1300, 2300), (2300, 2500)]
        );
    }

    #[test]
    fn tiling_drops_short_edges() {
        assert_eq!(
            spans(&tile_from_offset(0, 2050, 1000, 99)),
            vec![(99, 1099), (1099, 2050)]
        );
        assert_eq!(
            spans(&tile_from_offset(0, 2150, 1000, 100)),
            vec![(0, 100), (100, 1100), (1100, 2100)]
        );
        assert!(tile_from_offset(0, 50, 1000, 300).is_empty());
    }

    #[test]
    fn different_seeds_usually_draw_different_offsets() {
        let draw = |seed: u64| {
            let mut rng = ChaCha8Rng::seed_from_u64(seed);
            sample_training_windows(0, 5000, 1000, &mut rng)[0].end_frame()
        };
        let same = (0..200).filter(|&s| draw(2 * s) == draw(2 * s + 1)).count();
        // expected 0.2 collisions at 1/1000
        assert!(same <= 2, "{same} collisions");
        assert_eq!(draw(11), draw(11));
    }

    #[test]
    fn class_weight_examples() {
        let track = |pos: usize, neg: usize| {
            FrameLabels::new((0..pos + neg).map(|i| i < pos).collect())
        };
        assert_eq!(class_weight([&track(900, 100)]).unwrap(), 9.0);
        assert_eq!(class_weight([&track(300, 100), &track(0, 200)]).unwrap(), 1.0);
        assert_eq!(
            class_weight([&track(10, 0)]),
            Err(LabelError::DegenerateCorpus { positive: 10, negative: 0 })
        );
    }

    mod props {
        use super::*;
        use proptest::prelude::*;

        proptest! {
            #[test]
            fn windows_partition_up_to_short_edges(
                total in 0usize..20_000, window in 1usize..3000, seed in any::<u64>()
            ) {
                let mut rng = ChaCha8Rng::seed_from_u64(seed);
                let ws = sample_training_windows(3, total, window, &mut rng);
                let min_keep = (EDGE_KEEP_FRACTION * window as f64).ceil().max(1.0) as usize;
                let mut cursor = 0;
                for (i, w) in ws.iter().enumerate() {
                    prop_assert_eq!(w.wav, 3);
                    prop_assert!(w.length_frames >= 1 && w.length_frames <= window);
                    prop_assert!(w.end_frame() <= total);
                    if i == 0 {
                        prop_assert!(w.start_frame < min_keep);
                    } else {
                        prop_assert_eq!(w.start_frame, cursor);
                    }
                    cursor = w.end_frame();
                }
                if !ws.is_empty() {
                    prop_assert!(total - cursor < min_keep);
                } else {
                    prop_assert!(total < 2 * min_keep || total < window);
                }
            }

            #[test]
            fn forced_negatives_only_at_shared_boundaries(
                lens in prop::collection::vec((0usize..4, 1usize..30), 1..12)
            ) {
                let mut entries = Vec::new();
                let mut frame = 0;
                for (gap, len) in &lens {
                    frame += gap;
                    entries.push(SegmentEntry::from_frames("w", frame, frame + len));
                    frame += len;
                }
                let labels = build_frame_labels(&entries, frame + 5).unwrap();
                prop_assert_eq!(labels.len(), frame + 5);
                for (i, e) in entries.iter().enumerate() {
                    let (s, end) = e.frame_range();
                    for f in s..end {
                        let shared = i > 0 && entries[i - 1].frame_range().1 == s && f == s;
                        prop_assert_eq!(labels.as_slice()[f], !shared);
                    }
                }
            }
        }
    }
}
