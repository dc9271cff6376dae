//! Filesystem access: WAV loading, atomic writes and the binary formats.

use std::fs;
use std::io::Write;
use std::path::{Path, PathBuf};

use shas_core::audio::{parse_wav, AudioWave};
use shas_core::formats::{decode_checkpoint, decode_sfcp, encode_checkpoint, encode_sfcp};
use shas_core::{ProbabilityTrack, SfcModel};

use crate::error::RunError;

pub fn read_bytes(path: &Path) -> Result<Vec<u8>, RunError> {
    fs::read(path).map_err(|e| RunError::data(path, e))
}

/// Writes via a sibling temp file and a rename, so readers never observe a
/// partial file.
pub fn write_atomic(path: &Path, bytes: &[u8]) -> Result<(), RunError> {
    let dir = path.parent().filter(|p| !p.as_os_str().is_empty()).unwrap_or(Path::new("."));
    fs::create_dir_all(dir).map_err(|e| RunError::data(dir, e))?;
    let mut tmp = tempfile::NamedTempFile::new_in(dir).map_err(|e| RunError::data(dir, e))?;
    tmp.write_all(bytes).map_err(|e| RunError::data(path, e))?;
    tmp.persist(path).map_err(|e| RunError::data(path, e.error))?;
    Ok(())
}

pub fn load_wav(path: &Path) -> Result<AudioWave, RunError> {
    parse_wav(&read_bytes(path)?).map_err(|e| RunError::data(path, e))
}

pub fn read_sfcp(path: &Path) -> Result<ProbabilityTrack, RunError> {
    decode_sfcp(&read_bytes(path)?).map_err(|e| RunError::data(path, e))
}

pub fn write_sfcp(path: &Path, track: &[f32]) -> Result<(), RunError> {
    write_atomic(path, &encode_sfcp(track))
}

pub fn read_checkpoint(path: &Path) -> Result<SfcModel, RunError> {
    decode_checkpoint(&read_bytes(path)?).map_err(|e| RunError::data(path, e))
}

pub fn write_checkpoint(path: &Path, model: &SfcModel) -> Result<(), RunError> {
    let bytes = encode_checkpoint(model).map_err(|e| RunError::data(path, e))?;
    write_atomic(path, &bytes)
}

/// Files in `dir` with extension `ext`, keyed by file stem and sorted.
pub fn list_by_extension(dir: &Path, ext: &str) -> Result<Vec<(String, PathBuf)>, RunError> {
    let mut out = Vec::new();
    for entry in fs::read_dir(dir).map_err(|e| RunError::data(dir, e))? {
        let path = entry.map_err(|e| RunError::data(dir, e))?.path();
        if path.is_file() && path.extension().is_some_and(|x| x.eq_ignore_ascii_case(ext)) {
            if let Some(stem) = path.file_stem().and_then(|s| s.to_str()) {
                out.push((stem.to_owned(), path.clone()));
            }
        }
    }
    out.sort();
    Ok(out)
}

pub fn wav_path(audio_dir: &Path, wav: &str) -> PathBuf {
    audio_dir.join(format!("{wav}.wav"))
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn atomic_write_replaces_contents() {
        let dir = tempfile::tempdir().unwrap();
        let p = dir.path().join("sub").join("x.bin");
        write_atomic(&p, b"one").unwrap();
        write_atomic(&p, b"two").unwrap();
        assert_eq!(fs::read(&p).unwrap(), b"two");
        assert_eq!(fs::read_dir(p.parent().unwrap()).unwrap().count(), 1);
    }

    #[test]
    fn listing_is_sorted_and_filtered() {
        let dir = tempfile::tempdir().unwrap();
        for name in ["b.wav", "a.WAV", "c.txt"] {
            fs::write(dir.path().join(name), b"").unwrap();
        }
        let ids: Vec<String> = list_by_extension(dir.path(), "wav")
            .unwrap()
            .into_iter()
            .map(|(id, _)| id)
            .collect();
        assert_eq!(ids, ["a", "b"]);
    }
}
