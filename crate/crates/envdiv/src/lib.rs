//! Experiment runner for `envdiv-core`: TOML configs, archive and sample
//! file formats, reports, sweeps and SVG heatmaps. The `envdiv` binary is a
//! thin command-line layer over these modules.

pub mod config;
pub mod error;
pub mod heatmap;
pub mod io;
pub mod parallel;
pub mod report;
pub mod runner;
pub mod sample;
pub mod sweep;

pub use config::{AnyDomain, DomainConfig, Experiment, SweepAxis};
pub use error::{CliError, Result};
