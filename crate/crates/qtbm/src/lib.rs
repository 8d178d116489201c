//! Configuration files, CSV output and the command implementations behind
//! the `qtbm` binary.

pub mod commands;
pub mod config;
pub mod output;

pub use qtbm_core;
