//! Cross-method comparison reports in JSON and aligned text.

use std::collections::BTreeMap;
use std::fmt::Write as _;

use serde::Serialize;
use shas_core::metrics::{boundary_counts, segment_stats, BoundaryCounts, SegmentStats};
use shas_core::Segment;

/// Segments per wav id.
pub type Segmentation = BTreeMap<String, Vec<Segment>>;

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct StatsRow {
    pub count: usize,
    pub mean_sec: f64,
    pub median_sec: f64,
    pub max_sec: f64,
    pub coverage: f64,
    pub frac_at_max: f64,
}

impl From<SegmentStats> for StatsRow {
    fn from(s: SegmentStats) -> Self {
        Self {
            count: s.count,
            mean_sec: s.mean_sec,
            median_sec: s.median_sec,
            max_sec: s.max_sec,
            coverage: s.coverage,
            frac_at_max: s.frac_at_max,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ReportRow {
    pub method: String,
    pub precision: f64,
    pub recall: f64,
    pub f1: f64,
    pub stats: StatsRow,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct Report {
    pub tolerance_frames: usize,
    pub rows: Vec<ReportRow>,
}

/// Pooled boundary counts of one method over the reference waves. Waves
/// missing from `hyp` count as having no segments.
pub fn corpus_counts(
    hyp: &Segmentation,
    reference: &Segmentation,
    tol: usize,
) -> Result<BoundaryCounts, String> {
    if let Some(extra) = hyp.keys().find(|k| !reference.contains_key(*k)) {
        return Err(format!("no reference segmentation for wav `{extra}`"));
    }
    let mut total = BoundaryCounts::default();
    for (wav, r) in reference {
        let h = hyp.get(wav).map_or(&[][..], Vec::as_slice);
        let c = boundary_counts(h, r, tol).map_err(|e| format!("wav `{wav}`: {e}"))?;
        total.add(c);
    }
    Ok(total)
}

/// Compares methods against `reference`. `totals` gives frame counts per
/// wave for coverage.
pub fn compare_methods(
    reference: &Segmentation,
    totals: &BTreeMap<String, usize>,
    methods: &[(String, Segmentation)],
    tol: usize,
    max_sec: f64,
) -> Result<Report, String> {
    let mut rows = Vec::with_capacity(methods.len());
    for (name, hyp) in methods {
        let m = corpus_counts(hyp, reference, tol)?.metrics(tol);
        // concatenate waves on one timeline so stats pool over all segments
        let mut all = Vec::new();
        let mut base = 0;
        for (wav, total) in totals {
            for s in hyp.get(wav).into_iter().flatten() {
                all.push(Segment::new(base + s.start, base + s.end));
            }
            base += total;
        }
        rows.push(ReportRow {
            method: name.clone(),
            precision: m.precision,
            recall: m.recall,
            f1: m.f1,
            stats: segment_stats(&all, base, max_sec).into(),
        });
    }
    Ok(Report {
        tolerance_frames: tol,
        rows,
    })
}

impl Report {
    pub fn to_json(&self) -> String {
        let mut s = serde_json::to_string_pretty(self).expect("report serializes");
        s.push('\n');
        s
    }

    pub fn to_text(&self) -> String {
        let width = self.rows.iter().map(|r| r.method.len()).max().unwrap_or(0).max(6);
        let mut out = String::new();
        let _ = writeln!(
            out,
            "{:<width$}  {:>9}  {:>6}  {:>6}  {:>5}  {:>8}  {:>8}  {:>8}  {:>8}",
            "method", "precision", "recall", "f1", "segs", "mean_s", "median_s", "coverage", "at_max"
        );
        for r in &self.rows {
            let _ = writeln!(
                out,
                "{:<width$}  {:>9.4}  {:>6.4}  {:>6.4}  {:>5}  {:>8.2}  {:>8.2}  {:>8.4}  {:>8.4}",
                r.method,
                r.precision,
                r.recall,
                r.f1,
                r.stats.count,
                r.stats.mean_sec,
                r.stats.median_sec,
                r.stats.coverage,
                r.stats.frac_at_max
            );
        }
        let _ = writeln!(out, "tolerance: ±{} frames", self.tolerance_frames);
        out
    }
}
