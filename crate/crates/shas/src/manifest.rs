//! Segment manifests: JSON Lines of `{"wav", "offset", "duration"}`.

use std::collections::BTreeMap;
use std::path::Path;

use serde::{Deserialize, Serialize};
use shas_core::{Segment, SegmentEntry};

use crate::error::RunError;
use crate::io::{read_bytes, write_atomic};

#[derive(Debug, Clone, Serialize, Deserialize)]
struct Line {
    wav: String,
    offset: f64,
    duration: f64,
}

/// Entries grouped per wave, each group sorted by offset.
pub type Manifest = BTreeMap<String, Vec<SegmentEntry>>;

pub fn parse_manifest(text: &str) -> Result<Manifest, String> {
    let mut out: Manifest = BTreeMap::new();
    for (i, raw) in text.lines().enumerate() {
        if raw.trim().is_empty() {
            continue;
        }
        let line: Line = serde_json::from_str(raw).map_err(|e| format!("line {}: {e}", i + 1))?;
        if !(line.offset.is_finite() && line.duration.is_finite()) {
            return Err(format!("line {}: non-finite offset or duration", i + 1));
        }
        out.entry(line.wav.clone())
            .or_default()
            .push(SegmentEntry::new(line.wav, line.offset, line.duration));
    }
    for entries in out.values_mut() {
        entries.sort_by(|a, b| a.offset.total_cmp(&b.offset));
    }
    Ok(out)
}

pub fn read_manifest(path: &Path) -> Result<Manifest, RunError> {
    let bytes = read_bytes(path)?;
    let text = String::from_utf8(bytes).map_err(|e| RunError::data(path, e))?;
    parse_manifest(&text).map_err(|e| RunError::data(path, e))
}

pub fn render_manifest<'a>(entries: impl IntoIterator<Item = &'a SegmentEntry>) -> String {
    let mut out = String::new();
    for e in entries {
        let line = Line {
            wav: e.wav.clone(),
            offset: e.offset,
            duration: e.duration,
        };
        out.push_str(&serde_json::to_string(&line).expect("plain struct serializes"));
        out.push('\n');
    }
    out
}

pub fn write_manifest<'a>(
    path: &Path,
    entries: impl IntoIterator<Item = &'a SegmentEntry>,
) -> Result<(), RunError> {
    write_atomic(path, render_manifest(entries).as_bytes())
}

pub fn segments_to_entries(wav: &str, segments: &[Segment]) -> Vec<SegmentEntry> {
    segments
        .iter()
        .map(|s| SegmentEntry::from_frames(wav, s.start, s.end))
        .collect()
}

/// Frame segments of a wave's entries; entries shorter than a frame vanish.
pub fn entries_to_segments(entries: &[SegmentEntry]) -> Vec<Segment> {
    let mut out: Vec<Segment> = entries
        .iter()
        .map(|e| {
            let (s, t) = e.frame_range();
            Segment::new(s, t)
        })
        .filter(|s| !s.is_empty())
        .collect();
    out.sort();
    out
}
