//! Run diagnostics: coverage over time, occupancy, per-feature archive
//! marginals against the fitted targets, and evaluation accounting.

use std::fmt::Write as _;
use std::path::Path;

use envdiv_core::archive::PriorSampler;
use envdiv_core::pipeline::{BatchStats, Checkpoint, RunReport};
use envdiv_core::target::build_cell_prior;
use envdiv_core::{CellPrior, GridArchive, TargetModel};
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::error::{CliError, Result};

/// Prior-weighted draws used for the weighted marginals.
pub const MARGINAL_DRAWS: usize = 10_000;

/// One archive dimension's marginal against its target fit.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Marginal {
    pub feature: String,
    pub family: String,
    pub target_mean: f64,
    /// Mean over elites, one per occupied cell.
    pub archive_mean: f64,
    pub archive_ks: f64,
    /// Mean over prior-weighted draws.
    pub weighted_mean: f64,
    pub weighted_ks: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Report {
    pub occupied: usize,
    pub cells: usize,
    pub coverage: f64,
    pub coverage_series: Vec<Checkpoint>,
    pub marginals: Vec<Marginal>,
    pub initial: BatchStats,
    pub stage1: BatchStats,
    pub stage2: BatchStats,
    pub evaluations: u64,
    pub reset_steps: u64,
    pub es_restarts: usize,
    /// Absent in deterministic mode so that reports compare bit-exactly.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub wall_clock_secs: Option<f64>,
}

/// Cell prior of `archive` from the target fits of its dimensions.
pub fn archive_prior(archive: &GridArchive, model: &TargetModel) -> Result<CellPrior> {
    let fits = archive
        .dimensions()
        .iter()
        .map(|d| model.require(&d.name))
        .collect::<envdiv_core::Result<Vec<_>>>()?;
    Ok(build_cell_prior(&fits, archive)?)
}

/// Feature vectors of `n` prior-weighted draws from the archive.
pub fn weighted_draws(archive: &GridArchive, prior: &CellPrior, n: usize, seed: u64) -> Result<Vec<Vec<f64>>> {
    let sampler = PriorSampler::new(archive, prior)?;
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    (0..n)
        .map(|_| Ok(sampler.sample(archive, &mut rng)?.features.clone()))
        .collect()
}

fn mean(v: &[f64]) -> f64 {
    if v.is_empty() {
        f64::NAN
    } else {
        v.iter().sum::<f64>() / v.len() as f64
    }
}

/// Marginals of every archive dimension that has a target fit. Empty
/// archives yield NaN statistics.
pub fn marginals(archive: &GridArchive, model: &TargetModel, seed: u64) -> Result<Vec<Marginal>> {
    let draws = if archive.is_empty() {
        Vec::new()
    } else {
        weighted_draws(archive, &archive_prior(archive, model)?, MARGINAL_DRAWS, seed)?
    };
    let mut out = Vec::new();
    for (j, dim) in archive.dimensions().iter().enumerate() {
        let Some(fit) = model.get(&dim.name) else { continue };
        let elites: Vec<f64> = archive.iter().map(|(_, s)| s.features[j]).collect();
        let weighted: Vec<f64> = draws.iter().map(|f| f[j]).collect();
        let ks = |v: &[f64]| if v.is_empty() { f64::NAN } else { fit.ks_distance(v) };
        out.push(Marginal {
            feature: dim.name.clone(),
            family: format!("{:?}", fit.family()),
            target_mean: fit.distribution.mean(),
            archive_mean: mean(&elites),
            archive_ks: ks(&elites),
            weighted_mean: mean(&weighted),
            weighted_ks: ks(&weighted),
        });
    }
    Ok(out)
}

impl Report {
    /// Report over a final archive. `run` carries the accounting of the run
    /// that produced it, when known.
    pub fn build(archive: &GridArchive, model: Option<&TargetModel>, run: Option<&RunReport>, seed: u64) -> Result<Self> {
        let run = run.cloned().unwrap_or_default();
        Ok(Report {
            occupied: archive.len(),
            cells: archive.num_cells(),
            coverage: archive.coverage(),
            coverage_series: run.checkpoints,
            marginals: match model {
                Some(m) => marginals(archive, m, seed)?,
                None => Vec::new(),
            },
            initial: run.initial,
            stage1: run.stage1,
            stage2: run.stage2,
            evaluations: run.evaluations,
            reset_steps: run.reset_steps,
            es_restarts: run.es_restarts,
            wall_clock_secs: None,
        })
    }

    pub fn invalid(&self) -> u64 {
        self.initial.invalid + self.stage1.invalid + self.stage2.invalid
    }

    /// Every batch total is conserved and the stage totals add up to the
    /// reported evaluation count.
    pub fn is_consistent(&self) -> bool {
        let stages = [self.initial, self.stage1, self.stage2];
        stages.iter().all(BatchStats::is_conserved)
            && stages.iter().map(|s| s.candidates).sum::<u64>() == self.evaluations
            && self.stage1.candidates + self.stage2.candidates == self.reset_steps
    }

    pub fn to_text(&self) -> String {
        let mut s = String::new();
        let _ = writeln!(s, "occupied cells   {} / {} ({:.2}%)", self.occupied, self.cells, 100.0 * self.coverage);
        let _ = writeln!(s, "evaluations      {} (reset steps {})", self.evaluations, self.reset_steps);
        let _ = writeln!(s, "invalid levels   {}", self.invalid());
        if self.es_restarts > 0 {
            let _ = writeln!(s, "ES restarts      {}", self.es_restarts);
        }
        if let Some(t) = self.wall_clock_secs {
            let _ = writeln!(s, "wall clock       {t:.1} s");
        }
        let _ = writeln!(s, "\n{:<8} {:>10} {:>10} {:>10} {:>10} {:>10}", "phase", "candidates", "new", "replaced", "rejected", "invalid");
        for (name, b) in [("initial", self.initial), ("stage 1", self.stage1), ("stage 2", self.stage2)] {
            let _ = writeln!(
                s,
                "{name:<8} {:>10} {:>10} {:>10} {:>10} {:>10}",
                b.candidates, b.new_cells, b.replaced, b.rejected, b.invalid
            );
        }
        if !self.marginals.is_empty() {
            let _ = writeln!(
                s,
                "\n{:<24} {:<16} {:>10} {:>10} {:>8} {:>10} {:>8}",
                "feature", "family", "target", "archive", "KS", "weighted", "KS"
            );
            for m in &self.marginals {
                let _ = writeln!(
                    s,
                    "{:<24} {:<16} {:>10.4} {:>10.4} {:>8.4} {:>10.4} {:>8.4}",
                    m.feature, m.family, m.target_mean, m.archive_mean, m.archive_ks, m.weighted_mean, m.weighted_ks
                );
            }
        }
        if let Some(last) = self.coverage_series.last() {
            let _ = writeln!(
                s,
                "\ncoverage series: {} checkpoints, last {:?} iteration {} at {:.4}",
                self.coverage_series.len(),
                last.stage,
                last.iteration,
                last.target_coverage
            );
        }
        s
    }

    pub fn write_coverage_csv(&self, path: &Path) -> Result<()> {
        write_rows(path, &self.coverage_series)
    }

    pub fn write_marginals_csv(&self, path: &Path) -> Result<()> {
        write_rows(path, &self.marginals)
    }
}

pub(crate) fn write_rows<T: Serialize>(path: &Path, rows: &[T]) -> Result<()> {
    let mut w = csv::Writer::from_path(path).map_err(|e| CliError::format(path, e))?;
    for r in rows {
        w.serialize(r).map_err(|e| CliError::format(path, e))?;
    }
    w.flush().map_err(|e| CliError::io(path, e))
}

#[cfg(test)]
mod tests {
    use super::*;
    use envdiv_core::domain::GridNav;
    use envdiv_core::pipeline::{Sequential, Stage};
    use envdiv_core::{Pipeline, RunConfig};

    fn small_run() -> (envdiv_core::RunOutput, RunConfig) {
        let env = GridNav::new(11, 8).unwrap();
        let cfg = RunConfig { stage2_iters: 300, initial_population: 100, snapshot_interval: 20, ..RunConfig::gridnav(11) };
        (Pipeline::new(&env, cfg.clone()).unwrap().run(&Sequential, &mut ()).unwrap(), cfg)
    }

    #[test]
    fn totals_match_pipeline_accounting() {
        let (out, cfg) = small_run();
        let r = Report::build(&out.archive, Some(&out.model), Some(&out.report), 0).unwrap();
        assert!(r.is_consistent());
        assert_eq!(r.evaluations, cfg.total_evaluations());
        assert_eq!(r.marginals.len(), 2);
        assert!(r.to_text().contains("occupied cells"));
    }

    #[test]
    fn stage2_coverage_never_drops() {
        let (out, _) = small_run();
        let stage2: Vec<f64> = out
            .report
            .checkpoints
            .iter()
            .filter(|c| c.stage == Stage::Two)
            .map(|c| c.target_coverage)
            .collect();
        assert!(stage2.len() > 5);
        assert!(stage2.iter().all(|c| (0.0..=1.0).contains(c)));
        assert!(stage2.windows(2).all(|w| w[1] >= w[0]));
    }

    #[test]
    fn empty_archive_reports_nan_marginals() {
        let (out, _) = small_run();
        let empty = GridArchive::new(out.archive.dimensions().to_vec()).unwrap();
        let r = Report::build(&empty, Some(&out.model), None, 0).unwrap();
        assert_eq!(r.occupied, 0);
        assert!(r.marginals.iter().all(|m| m.weighted_ks.is_nan()));
    }
}
