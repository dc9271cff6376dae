//! Flat JSON run configuration. Precedence: built-in defaults, then the
//! config file, then command-line flags.

use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};
use shas_core::metrics::DEFAULT_TOLERANCE_FRAMES;
use shas_core::segment::FrameLimits;
use shas_core::train::TrainConfig;
use shas_core::vad::VadConfig;
use shas_core::SegmenterConfig;

use crate::error::RunError;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize, clap::ValueEnum)]
#[serde(rename_all = "lowercase")]
pub enum Method {
    Pdac,
    Pstrm,
    Dac,
    Strm,
    Length,
    Pause,
}

impl Method {
    pub fn name(self) -> &'static str {
        match self {
            Self::Pdac => "pdac",
            Self::Pstrm => "pstrm",
            Self::Dac => "dac",
            Self::Strm => "strm",
            Self::Length => "length",
            Self::Pause => "pause",
        }
    }

    pub fn uses_probabilities(self) -> bool {
        matches!(self, Self::Pdac | Self::Pstrm)
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct RunConfig {
    pub seed: u64,

    pub audio_dir: Option<PathBuf>,
    pub train_manifest: Option<PathBuf>,
    pub dev_manifest: Option<PathBuf>,
    pub ref_manifest: Option<PathBuf>,
    pub hyp_manifest: Option<PathBuf>,
    pub checkpoint_dir: Option<PathBuf>,
    /// Model used by `probs`; defaults to `<checkpoint_dir>/best.sfcm`.
    pub checkpoint: Option<PathBuf>,
    pub sfcp_dir: Option<PathBuf>,
    pub mask_dir: Option<PathBuf>,
    pub report: Option<PathBuf>,

    pub method: Method,
    pub max_sec: f64,
    pub min_sec: f64,
    pub thr: f64,

    pub epochs: usize,
    pub learning_rate: f64,
    pub batch_windows: usize,
    pub window_frames: usize,
    pub context_radius: usize,
    pub hidden: usize,
    pub w_neg: Option<f64>,
    pub tolerance_frames: usize,

    pub frame_ms: u32,
    pub aggressiveness: u8,
    pub smoothing_window: usize,
    pub trigger_ratio: f64,
    pub min_pause_frames: usize,
}

impl Default for RunConfig {
    fn default() -> Self {
        let seg = SegmenterConfig::default();
        let train = TrainConfig::default();
        let vad = VadConfig::default();
        Self {
            seed: 0,
            audio_dir: None,
            train_manifest: None,
            dev_manifest: None,
            ref_manifest: None,
            hyp_manifest: None,
            checkpoint_dir: None,
            checkpoint: None,
            sfcp_dir: None,
            mask_dir: None,
            report: None,
            method: Method::Pdac,
            max_sec: seg.max_sec,
            min_sec: seg.min_sec,
            thr: seg.thr,
            epochs: train.epochs,
            learning_rate: train.learning_rate,
            batch_windows: train.batch_windows,
            window_frames: train.window_frames,
            context_radius: train.context_radius,
            hidden: train.hidden,
            w_neg: None,
            tolerance_frames: DEFAULT_TOLERANCE_FRAMES,
            frame_ms: vad.frame_ms,
            aggressiveness: vad.aggressiveness,
            smoothing_window: vad.smoothing_window,
            trigger_ratio: vad.trigger_ratio,
            min_pause_frames: 1,
        }
    }
}

impl RunConfig {
    pub fn from_json(text: &str) -> Result<Self, RunError> {
        serde_json::from_str(text).map_err(RunError::config)
    }

    pub fn to_json(&self) -> String {
        let mut s = serde_json::to_string_pretty(self).expect("config serializes");
        s.push('\n');
        s
    }

    /// Loads `path`, or writes the current defaults there when it does not
    /// exist yet.
    pub fn load_or_dump(path: &Path) -> Result<Self, RunError> {
        if path.exists() {
            let text = std::fs::read_to_string(path)
                .map_err(|e| RunError::config(format!("{}: {e}", path.display())))?;
            Self::from_json(&text)
                .map_err(|e| RunError::config(format!("{}: {e}", path.display())))
        } else {
            let cfg = Self::default();
            crate::io::write_atomic(path, cfg.to_json().as_bytes())?;
            Ok(cfg)
        }
    }

    pub fn segmenter(&self) -> SegmenterConfig {
        SegmenterConfig {
            max_sec: self.max_sec,
            min_sec: self.min_sec,
            thr: self.thr,
        }
    }

    pub fn frame_limits(&self) -> Result<FrameLimits, RunError> {
        self.segmenter().validate().map_err(RunError::config)
    }

    pub fn vad(&self) -> Result<VadConfig, RunError> {
        let v = VadConfig {
            frame_ms: self.frame_ms,
            aggressiveness: self.aggressiveness,
            smoothing_window: self.smoothing_window,
            trigger_ratio: self.trigger_ratio,
        };
        v.validate().map_err(RunError::config)?;
        Ok(v)
    }

    pub fn train(&self) -> Result<TrainConfig, RunError> {
        let t = TrainConfig {
            seed: self.seed,
            epochs: self.epochs,
            learning_rate: self.learning_rate,
            batch_windows: self.batch_windows,
            window_frames: self.window_frames,
            context_radius: self.context_radius,
            hidden: self.hidden,
            w_neg: self.w_neg,
            selection: self.segmenter(),
            tolerance_frames: self.tolerance_frames,
            ..TrainConfig::default()
        };
        t.validate().map_err(RunError::config)?;
        Ok(t)
    }

    /// A required path setting, or a config error naming the key.
    pub fn require<'a>(&self, value: &'a Option<PathBuf>, key: &str) -> Result<&'a Path, RunError> {
        value
            .as_deref()
            .ok_or_else(|| RunError::config(format!("`{key}` is required for this command")))
    }
}
