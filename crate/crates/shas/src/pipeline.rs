//! The subcommands, as library functions over a [`RunConfig`].

use std::collections::BTreeMap;
use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};
use shas_core::labels::build_frame_labels;
use shas_core::segment::{
    dac_on_pauses, grid_pauses, length_based, pause_based, pdac_frames, pstrm_frames,
    strm_on_pauses,
};
use shas_core::train::{train, DevWave, LabeledWave, TrainError};
use shas_core::vad::energy_vad;
use shas_core::inference::ModelScorer;
use shas_core::{AudioWave, FrameLabels, Segment, SegmentEntry};

use crate::config::{Method, RunConfig};
use crate::error::RunError;
use crate::exec::{par_rolling_probs, Parallel};
use crate::io::{
    list_by_extension, load_wav, read_checkpoint, read_sfcp, wav_path, write_atomic,
    write_checkpoint, write_sfcp,
};
use crate::manifest::{entries_to_segments, read_manifest, segments_to_entries, write_manifest, Manifest};
use crate::report::{compare_methods, Report, Segmentation};

pub const TRAIN_LOG: &str = "train_log.json";
pub const EFFECTIVE_CONFIG: &str = "effective_config.json";

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EpochLog {
    pub epoch: usize,
    pub loss: f64,
    pub steps: usize,
    pub dev_f1: Option<f64>,
    pub checkpoint: String,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TrainLog {
    pub w_neg: f64,
    pub best_epoch: usize,
    pub best_checkpoint: String,
    pub epochs: Vec<EpochLog>,
}

pub fn checkpoint_name(epoch: usize) -> String {
    format!("epoch_{epoch:02}.sfcm")
}

fn require_exists(path: &Path, what: &str) -> Result<(), RunError> {
    if path.exists() {
        Ok(())
    } else {
        Err(RunError::Data(format!("{what} not found: {}", path.display())))
    }
}

fn load_manifest_waves(
    audio_dir: &Path,
    manifest: &Manifest,
) -> Result<Vec<(String, AudioWave)>, RunError> {
    manifest
        .keys()
        .map(|wav| Ok((wav.clone(), load_wav(&wav_path(audio_dir, wav))?)))
        .collect()
}

pub fn cmd_train(cfg: &RunConfig) -> Result<TrainLog, RunError> {
    let tcfg = cfg.train()?;
    let audio_dir = cfg.require(&cfg.audio_dir, "audio_dir")?;
    let manifest_path = cfg.require(&cfg.train_manifest, "train_manifest")?;
    let out_dir = cfg.require(&cfg.checkpoint_dir, "checkpoint_dir")?;
    require_exists(manifest_path, "train manifest")?;
    require_exists(audio_dir, "audio directory")?;

    let manifest = read_manifest(manifest_path)?;
    let waves = load_manifest_waves(audio_dir, &manifest)?;
    let labels: Vec<FrameLabels> = waves
        .iter()
        .map(|(id, w)| {
            build_frame_labels(&manifest[id], w.num_frames())
                .map_err(|e| RunError::data(manifest_path, format!("wav `{id}`: {e}")))
        })
        .collect::<Result<_, _>>()?;
    let corpus: Vec<LabeledWave<'_>> = waves
        .iter()
        .zip(&labels)
        .map(|((_, w), l)| LabeledWave { samples: w.samples(), labels: l })
        .collect();

    let (dev_waves, dev_refs) = match &cfg.dev_manifest {
        Some(p) => {
            require_exists(p, "dev manifest")?;
            let m = read_manifest(p)?;
            let refs: Vec<Vec<Segment>> = m.values().map(|e| entries_to_segments(e)).collect();
            (load_manifest_waves(audio_dir, &m)?, refs)
        }
        None => (Vec::new(), Vec::new()),
    };
    let dev: Vec<DevWave<'_>> = dev_waves
        .iter()
        .zip(&dev_refs)
        .map(|((_, w), r)| DevWave { samples: w.samples(), reference: r })
        .collect();

    std::fs::create_dir_all(out_dir).map_err(|e| RunError::data(out_dir, e))?;
    write_atomic(&out_dir.join(EFFECTIVE_CONFIG), cfg.to_json().as_bytes())?;
    let outcome = train(&corpus, &dev, &tcfg, &Parallel, |record, model| {
        write_checkpoint(&out_dir.join(checkpoint_name(record.epoch)), model)
            .map_err(|e| TrainError::Callback(e.to_string()))
    })
    .map_err(|e| match e {
        TrainError::Config(_) | TrainError::Segment(_) => RunError::config(e),
        other => RunError::data(manifest_path, other),
    })?;

    let log = TrainLog {
        w_neg: outcome.w_neg,
        best_epoch: outcome.best_epoch,
        best_checkpoint: checkpoint_name(outcome.best_epoch),
        epochs: outcome
            .log
            .iter()
            .map(|r| EpochLog {
                epoch: r.epoch,
                loss: r.loss,
                steps: r.steps,
                dev_f1: r.dev_f1,
                checkpoint: checkpoint_name(r.epoch),
            })
            .collect(),
    };
    let mut json = serde_json::to_string_pretty(&log).expect("log serializes");
    json.push('\n');
    write_atomic(&out_dir.join(TRAIN_LOG), json.as_bytes())?;
    Ok(log)
}

/// The explicit `checkpoint`, or the best one recorded in the training log.
pub fn resolve_checkpoint(cfg: &RunConfig) -> Result<PathBuf, RunError> {
    if let Some(p) = &cfg.checkpoint {
        return Ok(p.clone());
    }
    let dir = cfg.require(&cfg.checkpoint_dir, "checkpoint or checkpoint_dir")?;
    let log_path = dir.join(TRAIN_LOG);
    let text = std::fs::read_to_string(&log_path).map_err(|e| RunError::data(&log_path, e))?;
    let log: TrainLog = serde_json::from_str(&text).map_err(|e| RunError::data(&log_path, e))?;
    Ok(dir.join(log.best_checkpoint))
}

/// Writes one SFCP file per wav in `audio_dir`; returns the wav ids.
pub fn cmd_probs(cfg: &RunConfig) -> Result<Vec<String>, RunError> {
    let audio_dir = cfg.require(&cfg.audio_dir, "audio_dir")?;
    let sfcp_dir = cfg.require(&cfg.sfcp_dir, "sfcp_dir")?;
    if cfg.window_frames == 0 {
        return Err(RunError::config("window_frames must be positive"));
    }
    let ckpt = resolve_checkpoint(cfg)?;
    let model = read_checkpoint(&ckpt)?;
    let scorer = ModelScorer::new(&model);
    let mut done = Vec::new();
    for (id, path) in list_by_extension(audio_dir, "wav")? {
        let wave = load_wav(&path)?;
        let track = par_rolling_probs(&scorer, wave.samples(), cfg.window_frames)
            .map_err(|e| RunError::data(&path, e))?;
        write_sfcp(&sfcp_dir.join(format!("{id}.sfcp")), &track)?;
        done.push(id);
    }
    Ok(done)
}

/// Segments every input of the configured method; returns segments per wav.
pub fn segment_all(cfg: &RunConfig) -> Result<Segmentation, RunError> {
    let limits = cfg.frame_limits()?;
    let mut out = BTreeMap::new();
    if cfg.method.uses_probabilities() {
        let sfcp_dir = cfg.require(&cfg.sfcp_dir, "sfcp_dir")?;
        for (id, path) in list_by_extension(sfcp_dir, "sfcp")? {
            let track = read_sfcp(&path)?;
            if let Some(dir) = &cfg.audio_dir {
                let wp = wav_path(dir, &id);
                if wp.exists() {
                    let frames = load_wav(&wp)?.num_frames();
                    if frames != track.len() {
                        return Err(RunError::data(
                            &path,
                            format!("{} probabilities but {} has {frames} frames", track.len(), wp.display()),
                        ));
                    }
                }
            }
            let segs = if track.is_empty() {
                Ok(Vec::new())
            } else if cfg.method == Method::Pdac {
                pdac_frames(&track, limits.max_frames, limits.min_frames, limits.thr)
            } else {
                pstrm_frames(&track, limits.max_frames, limits.min_frames, limits.thr)
            }
            .map_err(|e| RunError::data(&path, e))?;
            out.insert(id, segs);
        }
        return Ok(out);
    }
    let audio_dir = cfg.require(&cfg.audio_dir, "audio_dir")?;
    let vad = cfg.vad()?;
    for (id, path) in list_by_extension(audio_dir, "wav")? {
        let wave = load_wav(&path)?;
        let total = wave.num_frames();
        let segs = if total == 0 {
            Vec::new()
        } else {
            match cfg.method {
                Method::Length => length_based(total, limits.max_frames),
                method => {
                    let mask = energy_vad(wave.samples(), &vad).map_err(|e| RunError::data(&path, e))?;
                    match method {
                        Method::Pause => pause_based(&mask, cfg.min_pause_frames),
                        Method::Dac => dac_on_pauses(total, &grid_pauses(&mask, cfg.min_pause_frames), limits.max_frames)
                            .map_err(|e| RunError::data(&path, e))?,
                        _ => strm_on_pauses(
                            total,
                            &grid_pauses(&mask, cfg.min_pause_frames),
                            limits.max_frames,
                            limits.min_frames,
                        )
                        .map_err(|e| RunError::data(&path, e))?,
                    }
                }
            }
        };
        out.insert(id, segs);
    }
    Ok(out)
}

pub fn cmd_segment(cfg: &RunConfig) -> Result<usize, RunError> {
    let hyp = cfg.require(&cfg.hyp_manifest, "hyp_manifest")?;
    let segs = segment_all(cfg)?;
    let entries: Vec<SegmentEntry> = segs
        .iter()
        .flat_map(|(id, s)| segments_to_entries(id, s))
        .collect();
    write_manifest(hyp, &entries)?;
    Ok(entries.len())
}

fn to_segmentation(m: &Manifest) -> Segmentation {
    m.iter().map(|(k, v)| (k.clone(), entries_to_segments(v))).collect()
}

/// Scores `hyp_manifest` against `ref_manifest` and writes the report as
/// JSON to `report` and as aligned text next to it (`.txt`).
pub fn cmd_eval(cfg: &RunConfig) -> Result<Report, RunError> {
    let hyp_path = cfg.require(&cfg.hyp_manifest, "hyp_manifest")?;
    let ref_path = cfg.require(&cfg.ref_manifest, "ref_manifest")?;
    let report_path = cfg.require(&cfg.report, "report")?;
    require_exists(ref_path, "reference manifest")?;
    require_exists(hyp_path, "hypothesis manifest")?;
    let reference = to_segmentation(&read_manifest(ref_path)?);
    let hyp = to_segmentation(&read_manifest(hyp_path)?);
    let mut totals = BTreeMap::new();
    for (id, segs) in &reference {
        let from_audio = match &cfg.audio_dir {
            Some(dir) => Some(load_wav(&wav_path(dir, id))?.num_frames()),
            None => None,
        };
        let last = |s: Option<&Vec<Segment>>| s.and_then(|v| v.last()).map_or(0, |x| x.end);
        totals.insert(
            id.clone(),
            from_audio.unwrap_or_else(|| last(Some(segs)).max(last(hyp.get(id)))),
        );
    }
    let name = hyp_path
        .file_stem()
        .and_then(|s| s.to_str())
        .unwrap_or("hyp")
        .to_owned();
    let report = compare_methods(&reference, &totals, &[(name, hyp)], cfg.tolerance_frames, cfg.max_sec)
        .map_err(|e| RunError::data(hyp_path, e))?;
    write_atomic(report_path, report.to_json().as_bytes())?;
    write_atomic(&report_path.with_extension("txt"), report.to_text().as_bytes())?;
    Ok(report)
}

/// Writes each wav's speech mask as a JSON array of 0/1.
pub fn cmd_vad_mask(cfg: &RunConfig) -> Result<Vec<String>, RunError> {
    let audio_dir = cfg.require(&cfg.audio_dir, "audio_dir")?;
    let mask_dir = cfg.require(&cfg.mask_dir, "mask_dir")?;
    let vad = cfg.vad()?;
    let mut done = Vec::new();
    for (id, path) in list_by_extension(audio_dir, "wav")? {
        let wave = load_wav(&path)?;
        let mask = energy_vad(wave.samples(), &vad).map_err(|e| RunError::data(&path, e))?;
        let bits: Vec<u8> = mask.speech().iter().map(|&s| s as u8).collect();
        let json = serde_json::to_string(&bits).expect("bits serialize");
        write_atomic(&mask_dir.join(format!("{id}.json")), json.as_bytes())?;
        done.push(id);
    }
    Ok(done)
}
