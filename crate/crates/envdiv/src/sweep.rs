//! Ablation grids: one run per value of a single setting.

use std::fmt::Write as _;

use rayon::prelude::*;
use serde::Serialize;

use crate::config::{value_label, Experiment, SweepAxis};
use crate::error::Result;
use crate::report::write_rows;
use crate::runner::{self, Finished, RunOptions};

/// One line of the combined sweep table.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct SweepRow {
    pub axis: String,
    pub value: String,
    pub seed: u64,
    pub occupied: usize,
    pub cells: usize,
    pub coverage: f64,
    pub evaluations: u64,
    pub invalid: u64,
    /// Largest prior-weighted marginal KS distance over the archive features.
    pub max_weighted_ks: f64,
    pub wall_clock_secs: Option<f64>,
}

/// Resolves the per-value experiments. Run `i` gets seed `base + i` unless
/// the axis is the seed itself.
pub fn expand(base: &Experiment, axis: &SweepAxis) -> Result<Vec<Experiment>> {
    axis.values
        .iter()
        .enumerate()
        .map(|(i, v)| {
            let mut exp = base.with_setting(&axis.key, v)?;
            if axis.key != "seed" {
                exp.run.seed = base.run.seed.wrapping_add(i as u64);
            }
            Ok(exp)
        })
        .collect()
}

/// Runs every value of the axis in parallel. With an output directory,
/// each run writes into `<out>/<axis>=<value>/` and the combined table goes
/// to `<out>/sweep.csv` and `<out>/sweep.txt`.
pub fn run_sweep(base: &Experiment, axis: &SweepAxis, opts: &RunOptions) -> Result<(Vec<SweepRow>, Vec<Finished>)> {
    let experiments = expand(base, axis)?;
    let finished = experiments
        .par_iter()
        .zip(&axis.values)
        .map(|(exp, v)| {
            let out = opts.out.as_ref().map(|d| d.join(format!("{}={}", axis.key, value_label(v))));
            runner::run(exp, &RunOptions { out, deterministic: opts.deterministic })
        })
        .collect::<Result<Vec<_>>>()?;
    let rows: Vec<SweepRow> = finished
        .iter()
        .zip(&axis.values)
        .map(|(f, v)| SweepRow {
            axis: axis.key.clone(),
            value: value_label(v),
            seed: f.experiment.run.seed,
            occupied: f.report.occupied,
            cells: f.report.cells,
            coverage: f.report.coverage,
            evaluations: f.report.evaluations,
            invalid: f.report.invalid(),
            max_weighted_ks: f.report.marginals.iter().map(|m| m.weighted_ks).fold(f64::NAN, f64::max),
            wall_clock_secs: f.report.wall_clock_secs,
        })
        .collect();
    if let Some(dir) = &opts.out {
        write_rows(&dir.join("sweep.csv"), &rows)?;
        crate::io::write_text(&dir.join("sweep.txt"), &table(&rows))?;
    }
    Ok((rows, finished))
}

pub fn table(rows: &[SweepRow]) -> String {
    let mut s = String::new();
    let _ = writeln!(
        s,
        "{:<24} {:>6} {:>9} {:>9} {:>9} {:>12} {:>8} {:>8}",
        "value", "seed", "occupied", "cells", "coverage", "evaluations", "invalid", "max KS"
    );
    for r in rows {
        let _ = writeln!(
            s,
            "{:<24} {:>6} {:>9} {:>9} {:>9.4} {:>12} {:>8} {:>8.4}",
            format!("{}={}", r.axis, r.value),
            r.seed,
            r.occupied,
            r.cells,
            r.coverage,
            r.evaluations,
            r.invalid,
            r.max_weighted_ks
        );
    }
    s
}
