//! File formats, manifests, reports and the command line for supervised
//! hybrid audio segmentation. The algorithms live in [`shas_core`].

pub mod cli;
pub mod config;
pub mod error;
pub mod exec;
pub mod experiment;
pub mod io;
pub mod manifest;
pub mod pipeline;
pub mod report;
pub mod synth;

pub use config::{Method, RunConfig};
pub use error::RunError;
