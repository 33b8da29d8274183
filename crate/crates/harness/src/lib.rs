//! Experiment harness around `bred-core`: the `bred` CLI, error sweeps over
//! synthetic data, the windowed protocol for streams with changing action
//! pools, and SVG plotting.

pub mod cli;
pub mod config;
pub mod error;
pub mod plot;
pub mod sweep;
pub mod window;

pub use error::{HarnessError, Result};
