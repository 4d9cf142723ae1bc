use envdiv_core::pipeline::{evaluate_finite, Evaluator};
use envdiv_core::{Domain, Genotype};
use rayon::prelude::*;

/// Evaluates a batch across the rayon thread pool. Results keep the order
/// of the input, so runs stay reproducible for a fixed seed.
#[derive(Debug, Clone, Copy, Default)]
pub struct Parallel;

impl<D: Domain + Sync> Evaluator<D> for Parallel {
    fn evaluate(&self, domain: &D, genotypes: &[Genotype]) -> Vec<Option<Vec<f64>>> {
        genotypes.par_iter().map(|g| evaluate_finite(domain, g)).collect()
    }
}
