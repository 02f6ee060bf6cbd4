//! Training harness for multi-chip ensemble VQCs: dataset loading, TOML
//! configuration, the Adam training loop, experiment orchestration,
//! checkpoints and CSV/JSON-lines outputs. Simulation lives in
//! [`mcvqc_core`].

pub mod checkpoint;
pub mod config;
pub mod data;
pub mod error;
pub mod experiment;
pub mod output;
pub mod train;

pub use error::{Error, Result};
pub use mcvqc_core as core;
