//! Core engine for semi-supervised environment design.
//!
//! A grid archive of level genotypes is evolved in two stages so that the
//! measured features of the generated levels cover a target region fitted
//! from a handful of downstream feature samples. The crate is `no_std` and
//! only needs an allocator; file formats, the CLI and reporting live in the
//! `envdiv` companion crate.
#![no_std]

extern crate alloc;

pub mod archive;
pub mod domain;
pub mod emitters;
mod error;
pub mod objectives;
pub mod pipeline;
pub mod stats;
pub mod target;

pub use archive::{Dimension, GridArchive, InsertOutcome, SampleMask, Solution};
pub use domain::{Domain, FeatureInfo, FeatureKind, Genotype, GenotypeSpace};
pub use error::{Error, Result};
pub use pipeline::{Pipeline, RunConfig, RunOutput};
pub use target::{CellPrior, FeatureSamples, FittedFeature, TargetModel};
