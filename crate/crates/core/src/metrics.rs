//! Boundary precision/recall/F1 and descriptive segment statistics.

use alloc::vec::Vec;

use thiserror::Error;

use crate::audio::FRAMES_PER_SECOND;
use crate::segment::Segment;

/// Default boundary tolerance (±40 ms).
pub const DEFAULT_TOLERANCE_FRAMES: usize = 2;

#[derive(Debug, Error, Clone, PartialEq, Eq)]
pub enum MetricsError {
    #[error("segments must be sorted, non-empty and disjoint (violation at index {0})")]
    UnsortedInput(usize),
}

/// Raw matching counts; sums across waves give corpus-level scores.
#[derive(Debug, Clone, Copy, Default, PartialEq, Eq)]
pub struct BoundaryCounts {
    pub matched: usize,
    pub hyp: usize,
    pub reference: usize,
}

impl BoundaryCounts {
    pub fn add(&mut self, other: BoundaryCounts) {
        self.matched += other.matched;
        self.hyp += other.hyp;
        self.reference += other.reference;
    }

    pub fn metrics(&self, tolerance_frames: usize) -> BoundaryMetrics {
        let ratio = |num: usize, den: usize, empty: f64| {
            if den == 0 {
                empty
            } else {
                num as f64 / den as f64
            }
        };
        // nothing to find and nothing proposed counts as perfect
        let both_empty = self.hyp == 0 && self.reference == 0;
        let empty = if both_empty { 1.0 } else { 0.0 };
        let precision = ratio(self.matched, self.hyp, empty);
        let recall = ratio(self.matched, self.reference, empty);
        let f1 = if precision + recall == 0.0 {
            0.0
        } else {
            2.0 * precision * recall / (precision + recall)
        };
        BoundaryMetrics {
            precision,
            recall,
            f1,
            tolerance_frames,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct BoundaryMetrics {
    pub precision: f64,
    pub recall: f64,
    pub f1: f64,
    pub tolerance_frames: usize,
}

fn check_sorted(segments: &[Segment]) -> Result<(), MetricsError> {
    let mut prev_end = 0;
    for (i, s) in segments.iter().enumerate() {
        if s.start >= s.end || s.start < prev_end {
            return Err(MetricsError::UnsortedInput(i));
        }
        prev_end = s.end;
    }
    Ok(())
}

/// Sorted, deduplicated start and end frames.
pub fn boundaries(segments: &[Segment]) -> Vec<usize> {
    let mut b: Vec<usize> = segments.iter().flat_map(|s| [s.start, s.end]).collect();
    b.sort_unstable();
    b.dedup();
    b
}

/// One-to-one matches between two sorted boundary sets within `tol`.
///
/// Hypothesis boundaries are processed left to right, each taking the
/// earliest unmatched reference boundary within tolerance. On sorted sets
/// with an interval tolerance this yields a maximum matching, so the count
/// does not depend on which side is called the hypothesis.
pub fn match_boundaries(hyp: &[usize], reference: &[usize], tol: usize) -> usize {
    let mut j = 0;
    let mut matched = 0;
    for &h in hyp {
        while j < reference.len() && reference[j] + tol < h {
            j += 1;
        }
        if j < reference.len() && reference[j] <= h + tol {
            matched += 1;
            j += 1;
        }
    }
    matched
}

pub fn boundary_counts(
    hyp: &[Segment],
    reference: &[Segment],
    tol: usize,
) -> Result<BoundaryCounts, MetricsError> {
    check_sorted(hyp)?;
    check_sorted(reference)?;
    let (h, r) = (boundaries(hyp), boundaries(reference));
    Ok(BoundaryCounts {
        matched: match_boundaries(&h, &r, tol),
        hyp: h.len(),
        reference: r.len(),
    })
}

pub fn boundary_prf(
    hyp: &[Segment],
    reference: &[Segment],
    tol: usize,
) -> Result<BoundaryMetrics, MetricsError> {
    Ok(boundary_counts(hyp, reference, tol)?.metrics(tol))
}

#[derive(Debug, Clone, Copy, PartialEq, Default)]
pub struct SegmentStats {
    pub count: usize,
    pub mean_sec: f64,
    pub median_sec: f64,
    pub max_sec: f64,
    pub coverage: f64,
    pub frac_at_max: f64,
}

pub fn segment_stats(segments: &[Segment], total_frames: usize, max_sec: f64) -> SegmentStats {
    if segments.is_empty() {
        return SegmentStats::default();
    }
    let mut lens: Vec<usize> = segments.iter().map(Segment::len).collect();
    lens.sort_unstable();
    let n = lens.len();
    let sec = |f: usize| f as f64 / FRAMES_PER_SECOND;
    let covered: usize = lens.iter().sum();
    let median = if n % 2 == 1 {
        sec(lens[n / 2])
    } else {
        (sec(lens[n / 2 - 1]) + sec(lens[n / 2])) / 2.0
    };
    let at_max = lens.iter().filter(|&&l| sec(l) >= max_sec - 1e-9).count();
    SegmentStats {
        count: n,
        mean_sec: sec(covered) / n as f64,
        median_sec: median,
        max_sec: sec(lens[n - 1]),
        coverage: if total_frames == 0 {
            0.0
        } else {
            (covered as f64 / total_frames as f64).min(1.0)
        },
        frac_at_max: at_max as f64 / n as f64,
    }
}
