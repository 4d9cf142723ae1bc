//! Candidate generators: per-gene mutation for discrete genotypes and a
//! CMA-ES improvement emitter for continuous ones.

pub mod cmaes;
pub mod es;
pub mod mutation;

pub use cmaes::CmaEs;
pub use es::{improvement_order, EsEmitter};
pub use mutation::mutate;

#[derive(Debug, Clone, Copy, PartialEq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
#[cfg_attr(feature = "serde", serde(default))]
pub struct EmitterConfig {
    pub count: usize,
    /// Candidates per emitter per iteration.
    pub batch: usize,
    /// Per-gene mutation probability for discrete genotypes.
    pub mutation_rate: f64,
    /// Initial step size of ES emitters.
    pub sigma: f64,
}

impl Default for EmitterConfig {
    fn default() -> Self {
        EmitterConfig { count: 5, batch: 8, mutation_rate: 0.1, sigma: 0.1 }
    }
}

impl EmitterConfig {
    /// Candidates per QD iteration.
    pub fn batch_size(&self) -> usize {
        self.count * self.batch
    }
}
