//! Executes one experiment and writes its outputs.
//!
//! An output directory receives:
//!
//! | file | contents |
//! |------|----------|
//! | `archive.jsonl` | final stage-2 archive |
//! | `run.json` | resolved experiment, fitted model and run accounting |
//! | `fit.json` | fitted target model alone |
//! | `report.txt`, `report.json` | human and machine readable [`Report`] |
//! | `coverage.csv`, `marginals.csv` | report tables |
//! | `snapshots/stage{1,2}_{iter}.jsonl` | archive every `snapshot_interval` iterations |

use std::path::{Path, PathBuf};
use std::time::Instant;

use envdiv_core::pipeline::{IterationEvent, Observer, Sequential, Stage};
use envdiv_core::{Domain, GridArchive, Pipeline, RunOutput};

use crate::config::{AnyDomain, Experiment};
use crate::error::{CliError, Result};
use crate::io::{self, ArchiveHeader, RunMeta};
use crate::parallel::Parallel;
use crate::report::Report;
use crate::with_domain;

#[derive(Debug, Clone, Default)]
pub struct RunOptions {
    pub out: Option<PathBuf>,
    /// Omit wall-clock timings so that repeated runs produce identical files.
    pub deterministic: bool,
}

/// Result of one experiment.
#[derive(Debug, Clone)]
pub struct Finished {
    pub experiment: Experiment,
    pub output: RunOutput,
    pub report: Report,
}

/// Writes archive snapshots at every checkpoint.
struct Snapshots {
    dir: PathBuf,
    error: Option<CliError>,
}

impl Snapshots {
    fn write(&mut self, stage: Stage, iteration: u64, archive: &GridArchive, target: &[(f64, f64)], mask: Option<Vec<(f64, f64)>>) {
        if self.error.is_some() {
            return;
        }
        let tag = match stage {
            Stage::One => 1,
            Stage::Two => 2,
        };
        let path = self.dir.join(format!("stage{tag}_{iteration:07}.jsonl"));
        let header = ArchiveHeader { stage, iteration, dimensions: archive.dimensions().to_vec(), target: target.to_vec(), mask };
        if let Err(e) = io::write_archive(&path, &header, archive) {
            self.error = Some(e);
        }
    }
}

impl Observer for Snapshots {
    fn on_iteration(&mut self, ev: &IterationEvent<'_>) {
        if ev.checkpoint.is_some() {
            self.write(ev.stage, ev.iteration, ev.archive, ev.target, ev.mask.map(|m| m.bounds.clone()));
        }
    }
}

fn run_domain<D>(domain: &D, exp: &Experiment, snapshots: Option<&mut Snapshots>, parallel: bool) -> Result<RunOutput>
where
    D: Domain + Sync,
{
    let pipeline = match &exp.samples {
        Some(path) => Pipeline::with_samples(domain, exp.run.clone(), &io::read_samples(path)?)?,
        None => Pipeline::new(domain, exp.run.clone())?,
    };
    let output = match (snapshots, parallel) {
        (Some(obs), true) => pipeline.run(&Parallel, obs)?,
        (Some(obs), false) => pipeline.run(&Sequential, obs)?,
        (None, true) => pipeline.run(&Parallel, &mut ())?,
        (None, false) => pipeline.run(&Sequential, &mut ())?,
    };
    Ok(output)
}

/// Runs `exp` and, when an output directory is given, writes every output
/// file into it.
pub fn run(exp: &Experiment, opts: &RunOptions) -> Result<Finished> {
    let domain = exp.domain.build()?;
    let mut snapshots = match &opts.out {
        Some(dir) if exp.run.snapshot_interval > 0 => {
            let dir = dir.join("snapshots");
            io::create_dir(&dir)?;
            Some(Snapshots { dir, error: None })
        }
        Some(dir) => {
            io::create_dir(dir)?;
            None
        }
        None => None,
    };
    // Level generation dominates only for race tracks; the other domains
    // evaluate faster than a thread hand-off.
    let parallel = matches!(domain, AnyDomain::Racing(_));
    let start = Instant::now();
    log::info!("running {} for {} + {} iterations (seed {})", exp.domain.name(), exp.run.stage1_iters, exp.run.stage2_iters, exp.run.seed);
    let output = with_domain!(&domain, d => run_domain(d, exp, snapshots.as_mut(), parallel))?;
    let elapsed = start.elapsed().as_secs_f64();
    if let Some(e) = snapshots.and_then(|s| s.error) {
        return Err(e);
    }
    let mut report = Report::build(&output.archive, Some(&output.model), Some(&output.report), exp.run.seed)?;
    if !opts.deterministic {
        report.wall_clock_secs = Some(elapsed);
    }
    let finished = Finished { experiment: exp.clone(), output, report };
    if let Some(dir) = &opts.out {
        write_outputs(dir, &finished)?;
    }
    Ok(finished)
}

pub fn write_outputs(dir: &Path, f: &Finished) -> Result<()> {
    io::create_dir(dir)?;
    let archive = &f.output.archive;
    let header = ArchiveHeader {
        stage: Stage::Two,
        iteration: f.experiment.run.stage2_iters,
        dimensions: archive.dimensions().to_vec(),
        target: archive.bounds(),
        mask: None,
    };
    io::write_archive(&dir.join("archive.jsonl"), &header, archive)?;
    let meta = RunMeta { experiment: f.experiment.clone(), model: f.output.model.clone(), report: f.output.report.clone() };
    io::write_json(&dir.join("run.json"), &meta)?;
    io::write_json(&dir.join("fit.json"), &f.output.model)?;
    io::write_json(&dir.join("report.json"), &f.report)?;
    io::write_text(&dir.join("report.txt"), &f.report.to_text())?;
    f.report.write_coverage_csv(&dir.join("coverage.csv"))?;
    f.report.write_marginals_csv(&dir.join("marginals.csv"))
}
