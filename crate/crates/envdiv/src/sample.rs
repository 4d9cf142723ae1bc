//! Level draws from a finished archive.

use envdiv_core::pipeline::draw_level;
use envdiv_core::{CellPrior, Domain, Genotype, GridArchive};
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::Serialize;

use crate::error::{CliError, Result};

/// A drawn level with its full feature vector.
#[derive(Debug, Clone, Serialize)]
pub struct LevelRecord<L> {
    pub cell: usize,
    /// Every feature the domain measures, keyed by name.
    pub features: serde_json::Map<String, serde_json::Value>,
    pub genotype: Genotype,
    pub level: L,
}

/// `n` prior-weighted draws, regenerating each elite's level.
pub fn draw_levels<D: Domain>(
    domain: &D,
    archive: &GridArchive,
    prior: &CellPrior,
    n: usize,
    seed: u64,
) -> Result<Vec<LevelRecord<D::Level>>> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    (0..n)
        .map(|_| {
            let (solution, level) = draw_level(domain, archive, prior, &mut rng)?;
            let cell = archive
                .cell_index(&solution.features)
                .map(|i| archive.flat_index(&i))
                .map_err(CliError::from)?;
            let features = domain
                .feature_names()
                .into_iter()
                .zip(domain.features(&level))
                .map(|(k, v)| (k.to_string(), serde_json::json!(v)))
                .collect();
            Ok(LevelRecord { cell, features, genotype: solution.genotype, level })
        })
        .collect()
}
