//! Experiment plumbing behind the `deepmc` binary: config resolution, model
//! checkpoints, and the preset experiment drivers. Kept as a library so the
//! integration suite can drive experiments without shelling out.

pub mod checkpoint;
pub mod config;
pub mod experiment;
