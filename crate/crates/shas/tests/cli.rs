use std::path::{Path, PathBuf};
use std::process::{Command, Output};

use shas::synth::{generate, write_corpus, SynthConfig};
use shas_core::audio::{encode_wav_pcm16, SAMPLE_RATE};
use shas_core::formats::encode_sfcp;

fn shas(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_shas")).args(args).output().unwrap()
}

fn s(p: &Path) -> &str {
    p.to_str().unwrap()
}

fn lines(p: &Path) -> Vec<serde_json::Value> {
    std::fs::read_to_string(p)
        .unwrap()
        .lines()
        .map(|l| serde_json::from_str(l).unwrap())
        .collect()
}

fn loud_wav(dir: &Path, name: &str, seconds: usize) -> PathBuf {
    let samples: Vec<f32> = (0..seconds * SAMPLE_RATE as usize)
        .map(|i| 0.5 * (i as f32 * 0.3).sin())
        .collect();
    let p = dir.join(format!("{name}.wav"));
    std::fs::write(&p, encode_wav_pcm16(&samples)).unwrap();
    p
}

#[test]
fn length_method_chunks_twenty_seconds() {
    let dir = tempfile::tempdir().unwrap();
    let audio = dir.path().join("audio");
    std::fs::create_dir(&audio).unwrap();
    loud_wav(&audio, "a", 20);
    let hyp = dir.path().join("hyp.jsonl");
    let out = shas(&["segment", "--method", "length", "--max-sec", "8", "--audio-dir", s(&audio), "--hyp-manifest", s(&hyp)]);
    assert!(out.status.success(), "{}", String::from_utf8_lossy(&out.stderr));
    let got: Vec<(f64, f64)> = lines(&hyp)
        .iter()
        .map(|v| (v["offset"].as_f64().unwrap(), v["duration"].as_f64().unwrap()))
        .collect();
    assert_eq!(got, vec![(0.0, 8.0), (8.0, 8.0), (16.0, 4.0)]);
}

#[test]
fn pdac_on_a_fixture_track() {
    let dir = tempfile::tempdir().unwrap();
    let sfcp = dir.path().join("sfcp");
    std::fs::create_dir(&sfcp).unwrap();
    let p = [0.9f32, 0.8, 0.2, 0.9, 0.9, 0.1, 0.9, 0.8];
    std::fs::write(sfcp.join("w.sfcp"), encode_sfcp(&p)).unwrap();
    let hyp = dir.path().join("hyp.jsonl");
    // 5 frames = 0.1 s, 1 frame = 0.02 s
    let out = shas(&["segment", "--method", "pdac", "--max-sec", "0.1", "--min-sec", "0.02", "--sfcp-dir", s(&sfcp), "--hyp-manifest", s(&hyp)]);
    assert!(out.status.success(), "{}", String::from_utf8_lossy(&out.stderr));
    let got: Vec<(f64, f64)> = lines(&hyp)
        .iter()
        .map(|v| (v["offset"].as_f64().unwrap(), v["duration"].as_f64().unwrap()))
        .collect();
    let expected = [(0.0, 0.04), (0.06, 0.04), (0.12, 0.04)];
    assert_eq!(got.len(), 3);
    for (g, e) in got.iter().zip(expected) {
        assert!((g.0 - e.0).abs() < 1e-9 && (g.1 - e.1).abs() < 1e-9, "{got:?}");
    }
}

#[test]
fn pause_method_on_continuous_speech_is_one_segment() {
    let dir = tempfile::tempdir().unwrap();
    let audio = dir.path().join("audio");
    std::fs::create_dir(&audio).unwrap();
    loud_wav(&audio, "a", 5);
    let hyp = dir.path().join("hyp.jsonl");
    let out = shas(&["segment", "--method", "pause", "--audio-dir", s(&audio), "--hyp-manifest", s(&hyp)]);
    assert!(out.status.success(), "{}", String::from_utf8_lossy(&out.stderr));
    assert_eq!(lines(&hyp).len(), 1);
}

#[test]
fn missing_manifest_is_a_data_error() {
    let dir = tempfile::tempdir().unwrap();
    let missing = dir.path().join("nope.jsonl");
    let out = shas(&["train", "--train-manifest", s(&missing), "--audio-dir", s(dir.path()), "--checkpoint-dir", s(&dir.path().join("c"))]);
    assert_eq!(out.status.code(), Some(3));
    assert!(String::from_utf8_lossy(&out.stderr).contains("nope.jsonl"));
}

#[test]
fn corrupted_checkpoint_is_a_data_error() {
    let dir = tempfile::tempdir().unwrap();
    let audio = dir.path().join("audio");
    std::fs::create_dir(&audio).unwrap();
    loud_wav(&audio, "a", 1);
    let ckpt = dir.path().join("bad.sfcm");
    std::fs::write(&ckpt, b"SFCM\x01\x00garbage").unwrap();
    let out = shas(&["probs", "--checkpoint", s(&ckpt), "--audio-dir", s(&audio), "--sfcp-dir", s(&dir.path().join("p"))]);
    assert_eq!(out.status.code(), Some(3), "{}", String::from_utf8_lossy(&out.stderr));
}

#[test]
fn empty_input_directory_writes_nothing() {
    let dir = tempfile::tempdir().unwrap();
    let audio = dir.path().join("audio");
    std::fs::create_dir(&audio).unwrap();
    let hyp = dir.path().join("hyp.jsonl");
    let out = shas(&["segment", "--method", "length", "--audio-dir", s(&audio), "--hyp-manifest", s(&hyp)]);
    assert!(out.status.success());
    assert_eq!(std::fs::read_to_string(&hyp).unwrap(), "");
}

#[test]
fn one_epoch_leaves_one_checkpoint() {
    let dir = tempfile::tempdir().unwrap();
    let corpus = dir.path().join("corpus");
    let cfg = SynthConfig { seed: 1, waves: 2, min_wave_sec: 20.0, max_wave_sec: 22.0, ..Default::default() };
    write_corpus(&corpus, &generate(&cfg), &[("train", 1), ("dev", 1)]).unwrap();
    let ckpt = dir.path().join("ckpt");
    let out = shas(&[
        "train", "--epochs", "1",
        "--train-manifest", s(&corpus.join("train.jsonl")),
        "--dev-manifest", s(&corpus.join("dev.jsonl")),
        "--audio-dir", s(&corpus.join("audio")),
        "--checkpoint-dir", s(&ckpt),
    ]);
    assert!(out.status.success(), "{}", String::from_utf8_lossy(&out.stderr));
    let n = std::fs::read_dir(&ckpt)
        .unwrap()
        .filter(|e| e.as_ref().unwrap().path().extension().is_some_and(|x| x == "sfcm"))
        .count();
    assert_eq!(n, 1);
    let log: serde_json::Value = serde_json::from_str(&std::fs::read_to_string(ckpt.join("train_log.json")).unwrap()).unwrap();
    assert_eq!(log["best_checkpoint"], "epoch_01.sfcm");
}

#[test]
fn eval_of_a_manifest_against_itself() {
    let dir = tempfile::tempdir().unwrap();
    let m = dir.path().join("ref.jsonl");
    std::fs::write(
        &m,
        "{\"wav\":\"a\",\"offset\":0.5,\"duration\":2.0}\n{\"wav\":\"a\",\"offset\":3.0,\"duration\":1.5}\n{\"wav\":\"b\",\"offset\":0.0,\"duration\":4.0}\n",
    )
    .unwrap();
    let mut reports = Vec::new();
    for run in ["r1.json", "r2.json"] {
        let report = dir.path().join(run);
        let out = shas(&["eval", "--ref-manifest", s(&m), "--hyp-manifest", s(&m), "--report", s(&report)]);
        assert!(out.status.success(), "{}", String::from_utf8_lossy(&out.stderr));
        reports.push(std::fs::read(&report).unwrap());
    }
    assert_eq!(reports[0], reports[1]);
    let v: serde_json::Value = serde_json::from_slice(&reports[0]).unwrap();
    assert_eq!(v["rows"][0]["f1"].as_f64(), Some(1.0));
}

#[test]
fn eval_without_reference_is_a_data_error() {
    let dir = tempfile::tempdir().unwrap();
    let hyp = dir.path().join("hyp.jsonl");
    std::fs::write(&hyp, "").unwrap();
    let out = shas(&["eval", "--ref-manifest", s(&dir.path().join("ref.jsonl")), "--hyp-manifest", s(&hyp), "--report", s(&dir.path().join("r.json"))]);
    assert_eq!(out.status.code(), Some(3));
    assert!(String::from_utf8_lossy(&out.stderr).contains("ref.jsonl"));
}

#[test]
fn unknown_config_key_is_a_config_error() {
    let dir = tempfile::tempdir().unwrap();
    let c = dir.path().join("c.json");
    std::fs::write(&c, r#"{"max_sec": 10, "maxsec": 3}"#).unwrap();
    let out = shas(&["show-config", "--config", s(&c)]);
    assert_eq!(out.status.code(), Some(2));
}

#[test]
fn missing_config_file_is_written_with_defaults() {
    let dir = tempfile::tempdir().unwrap();
    let c = dir.path().join("c.json");
    let out = shas(&["show-config", "--config", s(&c)]);
    assert!(out.status.success());
    let v: serde_json::Value = serde_json::from_str(&std::fs::read_to_string(&c).unwrap()).unwrap();
    assert_eq!(v["max_sec"].as_f64(), Some(20.0));
}
