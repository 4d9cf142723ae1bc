use std::io::Write as _;
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Parser, Subcommand, ValueEnum};
use envdiv::config::{DomainConfig, Experiment, SweepAxis};
use envdiv::error::{CliError, Result};
use envdiv::heatmap::{self, Coloring, Overlays};
use envdiv::io::{self, RunMeta};
use envdiv::report::{archive_prior, Report};
use envdiv::runner::{self, RunOptions};
use envdiv::{sample, sweep, with_domain, AnyDomain};
use envdiv_core::target::SelectionRule;
use envdiv_core::{Domain, FeatureKind, TargetModel};
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

#[derive(Parser)]
#[command(name = "envdiv", version, about = "Two-stage quality-diversity level generation matched to downstream feature samples")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Clone, Copy, ValueEnum)]
enum Preset {
    Gridnav,
    Alchemy,
    Racing,
    RacingMisspecified,
}

impl Preset {
    fn domain(self) -> DomainConfig {
        match self {
            Preset::Gridnav => DomainConfig::gridnav(),
            Preset::Alchemy => DomainConfig::alchemy(),
            Preset::Racing => DomainConfig::racing(),
            Preset::RacingMisspecified => match DomainConfig::racing() {
                DomainConfig::Racing { control_points, k, samples_per_segment, std_threshold, significant_turn, .. } => {
                    DomainConfig::Racing { control_points, k, samples_per_segment, std_threshold, significant_turn, misspecified: true }
                }
                other => other,
            },
        }
    }
}

#[derive(Clone, Copy, ValueEnum)]
enum Selection {
    Likelihood,
    Statistic,
}

#[derive(clap::Args)]
struct ExperimentArgs {
    /// TOML experiment file.
    #[arg(long, conflicts_with = "domain")]
    config: Option<PathBuf>,
    /// Use a domain's preset settings instead of a config file.
    #[arg(long)]
    domain: Option<Preset>,
}

impl ExperimentArgs {
    fn load(&self) -> Result<Experiment> {
        match (&self.config, self.domain) {
            (Some(path), _) => Experiment::from_path(path),
            (None, Some(p)) => Ok(Experiment::preset(p.domain())),
            (None, None) => Err(CliError::config("pass --config <path> or --domain <name>")),
        }
    }
}

#[derive(Subcommand)]
enum Command {
    /// Fit per-feature target distributions to a sample CSV.
    Fit {
        samples: PathBuf,
        /// Treat these columns as lattice-valued; by default a column is
        /// discrete when every value is an integer.
        #[arg(long, value_delimiter = ',', conflicts_with = "domain")]
        discrete: Option<Vec<String>>,
        /// Take feature kinds from this domain.
        #[arg(long)]
        domain: Option<Preset>,
        #[arg(long, value_enum, default_value = "likelihood")]
        selection: Selection,
        /// Write the fitted model as JSON.
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Draw downstream feature samples from a domain's structured distribution.
    TargetSamples {
        #[command(flatten)]
        experiment: ExperimentArgs,
        #[arg(short, long, default_value_t = 100)]
        n: usize,
        #[arg(long, default_value_t = 0)]
        seed: u64,
        /// CSV destination; standard output when absent.
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Run the two-stage search.
    Run {
        #[command(flatten)]
        experiment: ExperimentArgs,
        /// Overrides the config's seed.
        #[arg(long)]
        seed: Option<u64>,
        /// Leave wall-clock timings out of every output.
        #[arg(long)]
        deterministic: bool,
        #[arg(long)]
        out: Option<PathBuf>,
        /// Run one experiment per value, e.g. `p_me=0.02,0.05,0.1`.
        #[arg(long)]
        sweep: Option<String>,
        /// Downstream feature samples (CSV); overrides the config.
        #[arg(long)]
        samples: Option<PathBuf>,
    },
    /// Draw levels from a finished run, weighted by the target prior.
    Sample {
        /// Output directory of `envdiv run`.
        run: PathBuf,
        #[arg(short, long, default_value_t = 10)]
        n: usize,
        #[arg(long, default_value_t = 0)]
        seed: u64,
        /// JSON-lines destination; standard output when absent.
        #[arg(long)]
        out: Option<PathBuf>,
        /// Also render each race track as SVG into this directory.
        #[arg(long)]
        svg_dir: Option<PathBuf>,
    },
    /// Coverage, accounting and marginal tables for an archive.
    Report {
        archive: PathBuf,
        /// `run.json` of the run; defaults to the one next to the archive.
        #[arg(long)]
        meta: Option<PathBuf>,
        #[arg(long, default_value_t = 0)]
        seed: u64,
        /// Directory for report.json and the CSV tables.
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// SVG heatmap of two archive dimensions.
    Heatmap {
        archive: PathBuf,
        #[arg(long)]
        x: String,
        #[arg(long)]
        y: String,
        #[arg(long, value_enum, default_value = "objective")]
        color: Coloring,
        /// SVG destination; standard output when absent.
        #[arg(long)]
        out: Option<PathBuf>,
    },
}

fn emit(out: Option<&Path>, text: &str) -> Result<()> {
    match out {
        Some(path) => io::write_text(path, text),
        None => std::io::stdout()
            .write_all(text.as_bytes())
            .map_err(|e| CliError::io("<stdout>", e)),
    }
}

fn fit(samples: &Path, discrete: Option<&[String]>, selection: Selection, out: Option<&Path>) -> Result<()> {
    let data = io::read_samples(samples)?;
    let kind_of = |name: &str| {
        let is_discrete = match discrete {
            Some(list) => list.iter().any(|d| d == name),
            None => {
                let j = data.index_of(name).expect("column of its own sample set");
                data.column(j).iter().all(|v| v.fract() == 0.0)
            }
        };
        if is_discrete {
            FeatureKind::Discrete
        } else {
            FeatureKind::Continuous
        }
    };
    let rule = match selection {
        Selection::Likelihood => SelectionRule::Likelihood,
        Selection::Statistic => SelectionRule::Statistic,
    };
    let model = TargetModel::fit(&data, kind_of, rule)?;
    println!("{} samples", model.samples);
    println!("{:<24} {:<10} {:<16} {:>12} {:>12} {:>10} {:>10}", "feature", "kind", "family", "lower", "upper", "statistic", "p-value");
    for f in &model.fits {
        println!(
            "{:<24} {:<10} {:<16} {:>12.5} {:>12.5} {:>10.4} {:>10.4}",
            f.name,
            format!("{:?}", f.kind),
            format!("{:?}", f.family()),
            f.lower,
            f.upper,
            f.statistic,
            f.p_value
        );
    }
    if let Some(path) = out {
        io::write_json(path, &model)?;
    }
    Ok(())
}

fn target_samples(exp: &Experiment, n: usize, seed: u64, out: Option<&Path>) -> Result<()> {
    let domain = exp.domain.build()?;
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let samples = with_domain!(&domain, d => d.sample_target(n, &mut rng))?;
    match out {
        Some(path) => io::write_samples(path, &samples),
        None => {
            let mut w = csv::Writer::from_writer(std::io::stdout());
            let fail = |e: csv::Error| CliError::format("<stdout>", e);
            w.write_record(samples.names()).map_err(fail)?;
            for row in samples.rows() {
                w.write_record(row.iter().map(|v| v.to_string())).map_err(fail)?;
            }
            w.flush().map_err(|e| CliError::io("<stdout>", e))
        }
    }
}

fn run(mut exp: Experiment, seed: Option<u64>, samples: Option<PathBuf>, sweep_spec: Option<&str>, opts: RunOptions) -> Result<()> {
    if let Some(seed) = seed {
        exp.run.seed = seed;
    }
    if samples.is_some() {
        exp.samples = samples;
    }
    match sweep_spec {
        Some(spec) => {
            let axis = SweepAxis::parse(spec)?;
            let (rows, _) = sweep::run_sweep(&exp, &axis, &opts)?;
            print!("{}", sweep::table(&rows));
        }
        None => {
            let finished = runner::run(&exp, &opts)?;
            print!("{}", finished.report.to_text());
        }
    }
    Ok(())
}

fn sample_levels(run_dir: &Path, n: usize, seed: u64, out: Option<&Path>, svg_dir: Option<&Path>) -> Result<()> {
    let meta: RunMeta = io::read_json(&run_dir.join("run.json"))?;
    let (_, archive) = io::read_archive(&run_dir.join("archive.jsonl"))?;
    let prior = archive_prior(&archive, &meta.model)?;
    let domain = meta.experiment.domain.build()?;
    let mut lines = String::new();
    with_domain!(&domain, d => {
        for record in sample::draw_levels(d, &archive, &prior, n, seed)? {
            lines.push_str(&serde_json::to_string(&record).map_err(|e| CliError::format("<levels>", e))?);
            lines.push('\n');
        }
    });
    if let Some(dir) = svg_dir {
        let AnyDomain::Racing(racing) = &domain else {
            return Err(CliError::config("--svg-dir only applies to racing runs"));
        };
        io::create_dir(dir)?;
        for (i, record) in sample::draw_levels(racing, &archive, &prior, n, seed)?.iter().enumerate() {
            io::write_text(&dir.join(format!("track_{i:04}.svg")), &heatmap::track_svg(&record.level))?;
        }
    }
    emit(out, &lines)
}

fn report(archive_path: &Path, meta: Option<PathBuf>, seed: u64, out: Option<&Path>) -> Result<()> {
    let (_, archive) = io::read_archive(archive_path)?;
    let meta_path = meta.or_else(|| {
        let sibling = archive_path.with_file_name("run.json");
        sibling.is_file().then_some(sibling)
    });
    let meta: Option<RunMeta> = meta_path.as_deref().map(io::read_json).transpose()?;
    let report = Report::build(&archive, meta.as_ref().map(|m| &m.model), meta.as_ref().map(|m| &m.report), seed)?;
    print!("{}", report.to_text());
    if let Some(dir) = out {
        io::create_dir(dir)?;
        io::write_json(&dir.join("report.json"), &report)?;
        report.write_coverage_csv(&dir.join("coverage.csv"))?;
        report.write_marginals_csv(&dir.join("marginals.csv"))?;
    }
    Ok(())
}

fn draw_heatmap(archive_path: &Path, x: &str, y: &str, color: Coloring, out: Option<&Path>) -> Result<()> {
    let (header, archive) = io::read_archive(archive_path)?;
    let overlays = Overlays { target: Some(&header.target), mask: header.mask.as_deref() };
    emit(out, &heatmap::heatmap(&archive, x, y, color, &overlays)?)
}

fn dispatch(cli: Cli) -> Result<()> {
    match cli.command {
        Command::Fit { samples, discrete, domain, selection, out } => {
            let discrete = match domain {
                Some(p) => {
                    let d = p.domain().build()?;
                    let info = with_domain!(&d, d => d.feature_info().to_vec());
                    Some(info.iter().filter(|f| f.kind == FeatureKind::Discrete).map(|f| f.name.to_string()).collect())
                }
                None => discrete,
            };
            fit(&samples, discrete.as_deref(), selection, out.as_deref())
        }
        Command::TargetSamples { experiment, n, seed, out } => target_samples(&experiment.load()?, n, seed, out.as_deref()),
        Command::Run { experiment, seed, deterministic, out, sweep, samples } => {
            run(experiment.load()?, seed, samples, sweep.as_deref(), RunOptions { out, deterministic })
        }
        Command::Sample { run, n, seed, out, svg_dir } => sample_levels(&run, n, seed, out.as_deref(), svg_dir.as_deref()),
        Command::Report { archive, meta, seed, out } => report(&archive, meta, seed, out.as_deref()),
        Command::Heatmap { archive, x, y, color, out } => draw_heatmap(&archive, &x, &y, color, out.as_deref()),
    }
}

fn main() -> ExitCode {
    env_logger::Builder::from_env(env_logger::Env::default().default_filter_or("warn")).init();
    match dispatch(Cli::parse()) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(e.exit_code())
        }
    }
}
