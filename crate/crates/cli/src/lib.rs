//! Orchestration layer: configs, the simulation driver, run directories,
//! and plotting. The binary in `main.rs` is a thin argument parser over
//! these modules.

pub mod config;
pub mod plots;
pub mod runner;
