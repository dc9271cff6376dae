//! Core algorithms for supervised hybrid audio segmentation.
//!
//! Everything in this crate is pure computation over in-memory buffers and
//! builds without `std` (an allocator is required). File access, manifests,
//! reports and the command line live in the companion `shas` crate.
//!
//! The pipeline is:
//!
//! 1. [`audio`] decodes RIFF/WAVE bytes into a 16 kHz mono [`AudioWave`] and
//!    fixes the 20 ms frame geometry.
//! 2. [`labels`] turns a manual segmentation into per-frame supervision.
//! 3. [`features`] and [`model`] implement the segmentation frame classifier,
//!    trained by [`train`].
//! 4. [`inference`] produces a whole-audio [`ProbabilityTrack`].
//! 5. [`segment`] splits the track (or a VAD mask from [`vad`]) into segments.
//! 6. [`metrics`] scores segmentations against a reference.

#![cfg_attr(not(feature = "std"), no_std)]

extern crate alloc;

pub mod audio;
pub mod features;
pub mod formats;
pub mod inference;
pub mod labels;
pub mod metrics;
pub mod model;
pub mod segment;
pub mod track;
pub mod train;
pub mod vad;

mod fft;

pub use audio::{AudioWave, FRAME_SAMPLES, SAMPLE_RATE};
pub use labels::{FrameLabels, SegmentEntry};
pub use model::SfcModel;
pub use segment::{Segment, SegmenterConfig};
pub use track::ProbabilityTrack;
