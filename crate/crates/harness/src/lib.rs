//! Experiment harness for the OOK-FMCW distance-bounding simulator:
//! flat-file configuration, seeded Monte-Carlo runners, and byte-stable
//! CSV/waveform outputs. The CLI in `main.rs` is a thin shell over
//! [`experiments`].

pub mod capture;
pub mod config;
pub mod experiments;
pub mod results;

pub use config::Config;
pub use experiments::RunOptions;
pub use results::{ResultRow, ResultTable};
