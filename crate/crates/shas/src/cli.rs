//! Command-line surface. Every config key has a matching flag; flags
//! override the config file, which overrides built-in defaults.

use std::path::PathBuf;

use clap::{Args, Parser, Subcommand};

use crate::config::{Method, RunConfig};
use crate::error::RunError;
use crate::pipeline;
use crate::synth::{generate, write_corpus, SynthConfig, DEFAULT_SPLITS};

#[derive(Debug, Parser)]
#[command(name = "shas", version, about = "Supervised hybrid audio segmentation")]
pub struct Cli {
    #[command(subcommand)]
    pub command: Command,

    /// Flat JSON config; written with defaults if it does not exist.
    #[arg(long, global = true)]
    pub config: Option<PathBuf>,

    #[command(flatten)]
    pub overrides: Overrides,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Train the frame classifier; writes per-epoch checkpoints and a log.
    Train,
    /// Write an SFCP probability file for every wav in the audio directory.
    Probs,
    /// Segment with the configured method into a manifest.
    Segment,
    /// Score a hypothesis manifest against a reference manifest.
    Eval,
    /// Write energy-VAD speech masks as JSON arrays.
    VadMask,
    /// Generate the synthetic corpus (audio/ plus train/dev/test manifests).
    Synth {
        #[arg(long)]
        out: PathBuf,
        #[arg(long, default_value_t = 60)]
        waves: usize,
    },
    /// Print the effective config as JSON.
    ShowConfig,
}

macro_rules! overrides {
    ($($(#[$m:meta])* $field:ident : $ty:ty),* $(,)?) => {
        #[derive(Debug, Default, Args)]
        pub struct Overrides {
            $($(#[$m])* #[arg(long, global = true)] pub $field: Option<$ty>,)*
        }

        impl Overrides {
            pub fn apply(&self, cfg: &mut RunConfig) {
                $(if let Some(v) = &self.$field {
                    cfg.$field = overrides!(@wrap $field, v.clone());
                })*
            }
        }
    };
    (@wrap w_neg, $v:expr) => { Some($v) };
    (@wrap audio_dir, $v:expr) => { Some($v) };
    (@wrap train_manifest, $v:expr) => { Some($v) };
    (@wrap dev_manifest, $v:expr) => { Some($v) };
    (@wrap ref_manifest, $v:expr) => { Some($v) };
    (@wrap hyp_manifest, $v:expr) => { Some($v) };
    (@wrap checkpoint_dir, $v:expr) => { Some($v) };
    (@wrap checkpoint, $v:expr) => { Some($v) };
    (@wrap sfcp_dir, $v:expr) => { Some($v) };
    (@wrap mask_dir, $v:expr) => { Some($v) };
    (@wrap report, $v:expr) => { Some($v) };
    (@wrap $f:ident, $v:expr) => { $v };
}

overrides! {
    seed: u64,
    audio_dir: PathBuf,
    train_manifest: PathBuf,
    dev_manifest: PathBuf,
    ref_manifest: PathBuf,
    hyp_manifest: PathBuf,
    checkpoint_dir: PathBuf,
    checkpoint: PathBuf,
    sfcp_dir: PathBuf,
    mask_dir: PathBuf,
    report: PathBuf,
    method: Method,
    max_sec: f64,
    min_sec: f64,
    thr: f64,
    epochs: usize,
    learning_rate: f64,
    batch_windows: usize,
    window_frames: usize,
    context_radius: usize,
    hidden: usize,
    w_neg: f64,
    tolerance_frames: usize,
    frame_ms: u32,
    aggressiveness: u8,
    smoothing_window: usize,
    trigger_ratio: f64,
    min_pause_frames: usize,
}

impl Cli {
    pub fn effective_config(&self) -> Result<RunConfig, RunError> {
        let mut cfg = match &self.config {
            Some(p) => RunConfig::load_or_dump(p)?,
            None => RunConfig::default(),
        };
        self.overrides.apply(&mut cfg);
        Ok(cfg)
    }

    /// Runs the command and returns a one-line summary.
    pub fn run(&self) -> Result<String, RunError> {
        crate::exec::init_thread_pool().map_err(RunError::config)?;
        let cfg = self.effective_config()?;
        Ok(match &self.command {
            Command::Train => {
                let log = pipeline::cmd_train(&cfg)?;
                format!("trained {} epochs; best epoch {}", log.epochs.len(), log.best_epoch)
            }
            Command::Probs => format!("wrote {} SFCP files", pipeline::cmd_probs(&cfg)?.len()),
            Command::Segment => format!(
                "wrote {} segments ({})",
                pipeline::cmd_segment(&cfg)?,
                cfg.method.name()
            ),
            Command::Eval => {
                let r = pipeline::cmd_eval(&cfg)?;
                r.to_text().trim_end().to_owned()
            }
            Command::VadMask => format!("wrote {} masks", pipeline::cmd_vad_mask(&cfg)?.len()),
            Command::Synth { out, waves } => {
                let synth = SynthConfig { seed: cfg.seed, waves: *waves, ..Default::default() };
                write_corpus(out, &generate(&synth), &DEFAULT_SPLITS)?;
                format!("wrote {waves} synthetic waves to {}", out.display())
            }
            Command::ShowConfig => cfg.to_json().trim_end().to_owned(),
        })
    }
}
