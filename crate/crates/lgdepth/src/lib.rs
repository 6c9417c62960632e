//! File formats, manifests, reports and the `lgdepth` command line built on
//! top of `lgdepth-core`.

pub mod adversarial;
pub mod cli;
pub mod commands;
pub mod config;
pub mod dataset;
pub mod error;
pub mod formats;
pub mod jsonl;
pub mod manifest;
pub mod report;
pub mod stats;

pub use error::{Error, Result};
