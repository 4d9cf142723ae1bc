//! Two-stage search: discover the target region with an annealed sample
//! mask, then rebound the archive to the target region and fill it.

use alloc::string::String;
use alloc::vec::Vec;

use rand::{RngCore, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::archive::{Dimension, GridArchive, InsertOutcome, PriorSampler, SampleMask, Solution};
use crate::domain::{Domain, FeatureKind, Genotype, GenotypeSpace};
use crate::emitters::{mutate, EmitterConfig, EsEmitter};
use crate::error::config_err;
use crate::objectives::{ObjectiveConfig, Objectives};
use crate::target::{build_cell_prior, stage1_bounds, CellPrior, FeatureSamples, SelectionRule, TargetModel};
use crate::{Error, Result};

/// One archive axis: a domain feature, its bin count, and optional fixed
/// bounds overriding the fitted target interval.
#[derive(Debug, Clone, PartialEq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
pub struct DimSpec {
    pub feature: String,
    pub bins: usize,
    #[cfg_attr(feature = "serde", serde(default))]
    pub bounds: Option<(f64, f64)>,
}

impl DimSpec {
    pub fn new(feature: &str, bins: usize) -> Self {
        DimSpec { feature: feature.into(), bins, bounds: None }
    }

    pub fn with_bounds(feature: &str, bins: usize, lower: f64, upper: f64) -> Self {
        DimSpec { feature: feature.into(), bins, bounds: Some((lower, upper)) }
    }
}

#[derive(Debug, Clone, PartialEq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
pub struct RunConfig {
    pub stage1_iters: u64,
    pub stage2_iters: u64,
    pub initial_population: usize,
    pub emitters: EmitterConfig,
    pub objectives: ObjectiveConfig,
    pub stage1_dims: Vec<DimSpec>,
    pub stage2_dims: Vec<DimSpec>,
    /// Anneal the sample mask during stage 1.
    pub mask: bool,
    /// Occupied cells a proposed mask must hold to be adopted.
    pub mask_min_solutions: usize,
    /// Downstream samples drawn from the domain when none are supplied.
    pub target_samples: usize,
    pub selection: SelectionRule,
    /// Draw stage-2 parents from the cell prior instead of uniformly.
    pub stage2_prior_parents: bool,
    pub seed: u64,
    /// Iterations between checkpoints; 0 disables them.
    pub snapshot_interval: u64,
}

impl RunConfig {
    fn base() -> Self {
        RunConfig {
            stage1_iters: 0,
            stage2_iters: 1,
            initial_population: 1000,
            emitters: EmitterConfig::default(),
            objectives: ObjectiveConfig::default(),
            stage1_dims: Vec::new(),
            stage2_dims: Vec::new(),
            mask: false,
            mask_min_solutions: 0,
            target_samples: 100,
            selection: SelectionRule::default(),
            stage2_prior_parents: false,
            seed: 0,
            snapshot_interval: 1000,
        }
    }

    /// Single-stage goal search over a `grid` x `grid` board.
    pub fn gridnav(grid: u32) -> Self {
        let g = grid as f64;
        let dims = alloc::vec![DimSpec::with_bounds("XPosition", grid as usize, 0.0, g), DimSpec::with_bounds("YPosition", grid as usize, 0.0, g)];
        RunConfig {
            stage2_iters: 100_000,
            stage1_dims: dims.iter().map(|d| DimSpec::new(&d.feature, d.bins)).collect(),
            stage2_dims: dims,
            ..Self::base()
        }
    }

    /// Masked two-stage search over stone latent diversity and distance to
    /// the optimum, with first-stone parity added in stage 2.
    pub fn alchemy() -> Self {
        RunConfig {
            stage1_iters: 80_000,
            stage2_iters: 30_000,
            emitters: EmitterConfig { count: 5, batch: 5, mutation_rate: 0.02, sigma: 0.1 },
            stage1_dims: alloc::vec![
                DimSpec::new("LatentStateDiversity", 100),
                DimSpec::new("ManhattanToOptimal", 300),
                DimSpec::new("ParityFirstStone", 1),
            ],
            stage2_dims: alloc::vec![
                DimSpec::new("LatentStateDiversity", 150),
                DimSpec::new("ManhattanToOptimal", 150),
                DimSpec::with_bounds("ParityFirstStone", 5, 0.0, 4.0),
            ],
            mask: true,
            mask_min_solutions: 40,
            ..Self::base()
        }
    }

    /// ES search over total angle change and horizontal center of mass,
    /// aligned on the vertical statistics with a random tie-breaker.
    pub fn racing() -> Self {
        let dims = alloc::vec![DimSpec::new("TotalAngleChanges", 500), DimSpec::new("CenterOfMassX", 500)];
        RunConfig {
            stage1_iters: 50_000,
            stage2_iters: 200_000,
            initial_population: 2000,
            emitters: EmitterConfig { count: 5, batch: 8, mutation_rate: 0.1, sigma: 0.1 },
            objectives: ObjectiveConfig {
                newest: false,
                alignment: true,
                random: true,
                alignment_features: alloc::vec!["CenterOfMassY".into(), "VarianceY".into()],
                ..ObjectiveConfig::default()
            },
            stage1_dims: dims.clone(),
            stage2_dims: dims,
            mask_min_solutions: 1000,
            ..Self::base()
        }
    }

    /// The weaker racing archive: angle change against area-to-length ratio
    /// with a diversity objective on the vertical center of mass.
    pub fn racing_misspecified() -> Self {
        let dims = alloc::vec![DimSpec::new("TotalAngleChanges", 500), DimSpec::new("AreaToLengthRatio", 500)];
        RunConfig {
            objectives: ObjectiveConfig {
                newest: false,
                diversity: true,
                random: true,
                diversity_features: alloc::vec!["CenterOfMassY".into()],
                ..ObjectiveConfig::default()
            },
            stage1_dims: dims.clone(),
            stage2_dims: dims,
            ..Self::racing()
        }
    }

    pub fn batch_size(&self) -> usize {
        self.emitters.batch_size()
    }

    /// Candidate evaluations of a full run, initial population included.
    pub fn total_evaluations(&self) -> u64 {
        self.initial_population as u64 + self.reset_steps()
    }

    /// QD iterations times batch size, initial population excluded.
    pub fn reset_steps(&self) -> u64 {
        (self.stage1_iters + self.stage2_iters) * self.batch_size() as u64
    }

    pub fn validate(&self) -> Result<()> {
        if self.stage2_iters == 0 {
            return Err(config_err("stage2_iters must be at least 1"));
        }
        if self.initial_population == 0 {
            return Err(config_err("initial_population must be at least 1"));
        }
        if self.emitters.count == 0 || self.emitters.batch == 0 {
            return Err(config_err("emitter count and batch must be positive"));
        }
        if !(self.emitters.mutation_rate > 0.0 && self.emitters.mutation_rate <= 1.0) {
            return Err(config_err("mutation_rate must lie in (0, 1]"));
        }
        if !(self.emitters.sigma > 0.0) {
            return Err(config_err("ES sigma must be positive"));
        }
        if self.stage1_dims.is_empty() || self.stage2_dims.is_empty() {
            return Err(config_err("both stages need at least one archive dimension"));
        }
        if self.target_samples < 2 {
            return Err(config_err("target_samples must be at least 2"));
        }
        self.objectives.validate()
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
#[cfg_attr(feature = "serde", serde(rename_all = "snake_case"))]
pub enum Stage {
    One,
    Two,
}

/// Insertion outcomes of one batch. The four counts sum to `candidates`.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
pub struct BatchStats {
    pub candidates: u64,
    pub new_cells: u64,
    pub replaced: u64,
    pub rejected: u64,
    pub invalid: u64,
}

impl BatchStats {
    fn record(&mut self, outcome: Option<InsertOutcome>) {
        self.candidates += 1;
        match outcome {
            Some(InsertOutcome::NewCell) => self.new_cells += 1,
            Some(InsertOutcome::Replaced { .. }) => self.replaced += 1,
            Some(InsertOutcome::RejectedWorse { .. }) => self.rejected += 1,
            None => self.invalid += 1,
        }
    }

    pub fn add(&mut self, other: &BatchStats) {
        self.candidates += other.candidates;
        self.new_cells += other.new_cells;
        self.replaced += other.replaced;
        self.rejected += other.rejected;
        self.invalid += other.invalid;
    }

    pub fn is_conserved(&self) -> bool {
        self.new_cells + self.replaced + self.rejected + self.invalid == self.candidates
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
pub struct Checkpoint {
    pub stage: Stage,
    /// Iteration within the stage.
    pub iteration: u64,
    pub occupied: usize,
    /// Stage 1: occupied share of the cells whose centers lie in the target
    /// region. Stage 2: occupied share of the whole archive.
    pub target_coverage: f64,
}

#[derive(Debug, Clone, PartialEq, Default)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
pub struct RunReport {
    pub initial: BatchStats,
    pub stage1: BatchStats,
    pub stage2: BatchStats,
    /// All candidate evaluations, initial population included.
    pub evaluations: u64,
    /// QD iterations times batch size.
    pub reset_steps: u64,
    pub stage2_initial_occupancy: usize,
    pub checkpoints: Vec<Checkpoint>,
    pub es_restarts: usize,
    pub final_coverage: f64,
    pub final_mask: Option<Vec<(f64, f64)>>,
}

#[derive(Debug, Clone)]
pub struct RunOutput {
    pub archive: GridArchive,
    pub prior: CellPrior,
    pub model: TargetModel,
    pub report: RunReport,
}

/// Maps candidate genotypes to full feature vectors; `None` marks invalid
/// levels. Implementations must preserve order.
pub trait Evaluator<D: Domain> {
    fn evaluate(&self, domain: &D, genotypes: &[Genotype]) -> Vec<Option<Vec<f64>>>;
}

/// Evaluates candidates one after another on the calling thread.
#[derive(Debug, Clone, Copy, Default)]
pub struct Sequential;

impl<D: Domain> Evaluator<D> for Sequential {
    fn evaluate(&self, domain: &D, genotypes: &[Genotype]) -> Vec<Option<Vec<f64>>> {
        genotypes.iter().map(|g| evaluate_finite(domain, g)).collect()
    }
}

/// Features of a genotype, treating non-finite values as an invalid level.
pub fn evaluate_finite<D: Domain>(domain: &D, genotype: &Genotype) -> Option<Vec<f64>> {
    domain.evaluate(genotype).filter(|f| f.iter().all(|v| v.is_finite()))
}

/// Progress callback, invoked after every QD iteration.
pub trait Observer {
    fn on_iteration(&mut self, _event: &IterationEvent<'_>) {}
    fn on_stage_end(&mut self, _stage: Stage, _archive: &GridArchive) {}
}

impl Observer for () {}

pub struct IterationEvent<'a> {
    pub stage: Stage,
    pub iteration: u64,
    pub archive: &'a GridArchive,
    pub mask: Option<&'a SampleMask>,
    /// Target region in the archive's feature space.
    pub target: &'a [(f64, f64)],
    pub stats: &'a BatchStats,
    pub checkpoint: Option<&'a Checkpoint>,
}

enum Emitters {
    Mutation,
    Es(Vec<EsEmitter>),
}

/// One run of the two-stage search over a domain.
pub struct Pipeline<'d, D: Domain> {
    domain: &'d D,
    cfg: RunConfig,
    rng: ChaCha8Rng,
    model: TargetModel,
    objectives: Objectives,
    space: GenotypeSpace,
    emitters: Emitters,
    s1_idx: Vec<usize>,
    s2_idx: Vec<usize>,
    /// Target interval of every stage-1 dimension.
    s1_target: Vec<(f64, f64)>,
    archive: GridArchive,
    stage: Stage,
    mask: Option<SampleMask>,
    full_bounds: Vec<(f64, f64)>,
    target_cells: usize,
    iteration: u64,
    report: RunReport,
}

fn resolve<D: Domain>(domain: &D, dims: &[DimSpec]) -> Result<Vec<usize>> {
    dims.iter()
        .map(|d| {
            domain
                .feature_index(&d.feature)
                .ok_or_else(|| config_err(alloc::format!("domain {} has no feature {}", domain.name(), d.feature)))
        })
        .collect()
}

fn project(features: &[f64], idx: &[usize]) -> Vec<f64> {
    idx.iter().map(|&i| features[i]).collect()
}

impl<'d, D: Domain> Pipeline<'d, D> {
    /// Draws `cfg.target_samples` downstream samples from the domain and
    /// fits the target model to them.
    pub fn new(domain: &'d D, cfg: RunConfig) -> Result<Self> {
        cfg.validate()?;
        let mut rng = ChaCha8Rng::seed_from_u64(cfg.seed);
        let samples = domain.sample_target(cfg.target_samples, &mut rng)?;
        Self::build(domain, cfg, &samples, rng)
    }

    /// Fits the target model to externally supplied samples.
    pub fn with_samples(domain: &'d D, cfg: RunConfig, samples: &FeatureSamples) -> Result<Self> {
        cfg.validate()?;
        let rng = ChaCha8Rng::seed_from_u64(cfg.seed);
        Self::build(domain, cfg, samples, rng)
    }

    fn build(domain: &'d D, cfg: RunConfig, samples: &FeatureSamples, rng: ChaCha8Rng) -> Result<Self> {
        let kind_of = |name: &str| {
            domain
                .feature_info()
                .iter()
                .find(|f| f.name == name)
                .map_or(FeatureKind::Continuous, |f| f.kind)
        };
        let model = TargetModel::fit(samples, kind_of, cfg.selection)?;
        let s1_idx = resolve(domain, &cfg.stage1_dims)?;
        let s2_idx = resolve(domain, &cfg.stage2_dims)?;
        for d in cfg.stage1_dims.iter().chain(&cfg.stage2_dims) {
            if d.bounds.is_none() {
                model.require(&d.feature)?;
            }
        }
        let s1_target = cfg
            .stage1_dims
            .iter()
            .map(|d| {
                let in_s2 = cfg.stage2_dims.iter().find(|s| s.feature == d.feature);
                match in_s2.and_then(|s| s.bounds) {
                    Some(b) => Ok(b),
                    None => model.require(&d.feature).map(|f| (f.lower, f.upper)),
                }
            })
            .collect::<Result<Vec<_>>>()?;
        let objectives = Objectives::new(cfg.objectives.clone(), |n| domain.feature_index(n), &model)?;
        let space = domain.genotype_space();
        let emitters = match &space {
            GenotypeSpace::Discrete(_) => Emitters::Mutation,
            GenotypeSpace::Continuous { dim, lower, upper } => Emitters::Es(
                (0..cfg.emitters.count)
                    .map(|_| EsEmitter::new(*dim, *lower, *upper, cfg.emitters.sigma, cfg.emitters.batch))
                    .collect(),
            ),
        };
        // Placeholder until the initial population fixes the stage-1 bounds.
        let archive = GridArchive::new(alloc::vec![Dimension::new("_", 0.0, 1.0, 1)])?;
        Ok(Pipeline {
            domain,
            cfg,
            rng,
            model,
            objectives,
            space,
            emitters,
            s1_idx,
            s2_idx,
            s1_target,
            archive,
            stage: Stage::One,
            mask: None,
            full_bounds: Vec::new(),
            target_cells: 0,
            iteration: 0,
            report: RunReport::default(),
        })
    }

    pub fn config(&self) -> &RunConfig {
        &self.cfg
    }

    pub fn model(&self) -> &TargetModel {
        &self.model
    }

    pub fn archive(&self) -> &GridArchive {
        &self.archive
    }

    pub fn mask(&self) -> Option<&SampleMask> {
        self.mask.as_ref()
    }

    pub fn stage(&self) -> Stage {
        self.stage
    }

    pub fn report(&self) -> &RunReport {
        &self.report
    }

    /// Target interval of each stage-1 dimension.
    pub fn stage1_target(&self) -> &[(f64, f64)] {
        &self.s1_target
    }

    /// Evaluates `n_0` random genotypes and seeds the stage-1 archive with
    /// bounds spanning both the valid ones and the target region.
    pub fn init_population<E: Evaluator<D>>(&mut self, eval: &E) -> Result<()> {
        let n0 = self.cfg.initial_population;
        let genotypes: Vec<Genotype> = (0..n0).map(|_| self.domain.random_genotype(&mut self.rng)).collect();
        let features = eval.evaluate(self.domain, &genotypes);
        let valid: Vec<Vec<f64>> = features.iter().flatten().map(|f| project(f, &self.s1_idx)).collect();
        if valid.is_empty() {
            return Err(Error::NoValidLevels(n0));
        }
        let padded = stage1_bounds(&valid, &self.s1_target);
        let dims = self
            .cfg
            .stage1_dims
            .iter()
            .zip(padded)
            .map(|(d, (lo, hi))| {
                let (lo, hi) = d.bounds.unwrap_or((lo, hi));
                Dimension::new(d.feature.clone(), lo, hi, d.bins)
            })
            .collect();
        self.archive = GridArchive::new(dims)?;
        self.full_bounds = self.archive.bounds();
        if self.cfg.mask {
            self.mask = Some(SampleMask::full(&self.archive));
        }
        let target_mask = SampleMask { bounds: self.s1_target.clone() };
        self.target_cells = self
            .archive
            .dimensions()
            .iter()
            .zip(&target_mask.bounds)
            .map(|(d, &(lo, hi))| (0..d.bins).filter(|&b| (lo..=hi).contains(&d.center(b))).count())
            .product();
        self.report.initial = self.insert_batch(0, genotypes, features, Stage::One).0;
        self.report.evaluations = n0 as u64;
        Ok(())
    }

    /// Draws references, scores and inserts a batch in order.
    fn insert_batch(
        &mut self,
        iter: u64,
        genotypes: Vec<Genotype>,
        features: Vec<Option<Vec<f64>>>,
        stage: Stage,
    ) -> (BatchStats, Vec<Option<InsertOutcome>>) {
        let refs = self.diversity_refs();
        let draws = self.objectives.draw_batch(&refs, &mut self.rng);
        let views: Vec<Option<&[f64]>> = features.iter().map(|f| f.as_deref()).collect();
        let objectives = self.objectives.score(iter, &views, &draws, &mut self.rng);
        let idx = if stage == Stage::One { &self.s1_idx } else { &self.s2_idx };
        let mut stats = BatchStats::default();
        let mut outcomes = Vec::with_capacity(genotypes.len());
        for ((genotype, f), objective) in genotypes.into_iter().zip(features).zip(objectives) {
            let outcome = f.and_then(|f| {
                let s = Solution { genotype, features: project(&f, idx), objective, birth_iter: iter };
                self.archive.insert(s).ok()
            });
            stats.record(outcome);
            outcomes.push(outcome);
        }
        (stats, outcomes)
    }

    fn diversity_refs(&mut self) -> Vec<Vec<f64>> {
        let m = self.objectives.refs_needed();
        if m == 0 || self.archive.is_empty() {
            return Vec::new();
        }
        let picked: Vec<Genotype> = match self.archive.sample_uniform_masked(None, m, &mut self.rng) {
            Ok(s) => s.into_iter().map(|s| s.genotype.clone()).collect(),
            Err(_) => return Vec::new(),
        };
        picked.iter().filter_map(|g| evaluate_finite(self.domain, g)).collect()
    }

    fn propose(&mut self, sampler: Option<&PriorSampler>) -> Result<Vec<Genotype>> {
        let b = self.cfg.batch_size();
        match &mut self.emitters {
            Emitters::Mutation => {
                let GenotypeSpace::Discrete(alpha) = &self.space else {
                    return Err(config_err("mutation emitters need a discrete genotype space"));
                };
                let parents: Vec<Genotype> = match sampler {
                    Some(s) => (0..b)
                        .map(|_| s.sample(&self.archive, &mut self.rng).map(|p| p.genotype.clone()))
                        .collect::<Result<_>>()?,
                    None => self
                        .archive
                        .sample_uniform_masked(self.mask.as_ref(), b, &mut self.rng)?
                        .into_iter()
                        .map(|p| p.genotype.clone())
                        .collect(),
                };
                let rate = self.cfg.emitters.mutation_rate;
                Ok(parents
                    .iter()
                    .map(|p| Genotype::Discrete(mutate(p.as_discrete().unwrap_or(&[]), alpha, rate, &mut self.rng)))
                    .collect())
            }
            Emitters::Es(list) => {
                let mut out = Vec::with_capacity(b);
                for em in list.iter_mut() {
                    out.extend(em.ask(&self.archive, &mut self.rng)?);
                }
                Ok(out)
            }
        }
    }

    /// One batch: propose, evaluate, score, insert, and update ES emitters.
    pub fn qd_update<E: Evaluator<D>>(&mut self, eval: &E, sampler: Option<&PriorSampler>) -> Result<BatchStats> {
        if self.archive.is_empty() {
            return Err(Error::EmptyArchive);
        }
        self.iteration += 1;
        let genotypes = self.propose(sampler)?;
        let features = eval.evaluate(self.domain, &genotypes);
        let (stats, outcomes) = self.insert_batch(self.iteration, genotypes, features, self.stage);
        if let Emitters::Es(list) = &mut self.emitters {
            for (em, chunk) in list.iter_mut().zip(outcomes.chunks(self.cfg.emitters.batch)) {
                em.tell(chunk);
            }
        }
        self.report.evaluations += stats.candidates;
        Ok(stats)
    }

    /// Moves the mask to the linear interpolation between the full stage-1
    /// bounds and the target region at `progress`, if that box already
    /// holds enough occupied cells.
    pub fn update_sample_mask(&mut self, progress: f64) -> bool {
        if self.mask.is_none() {
            return false;
        }
        let proposed = SampleMask::lerp(&self.full_bounds, &self.s1_target, progress);
        if self.archive.count_in_mask(&proposed) >= self.cfg.mask_min_solutions {
            self.mask = Some(proposed);
            true
        } else {
            false
        }
    }

    /// Occupied share of the stage-1 cells centered in the target region.
    pub fn stage1_target_coverage(&self) -> f64 {
        if self.target_cells == 0 {
            return 0.0;
        }
        let target = SampleMask { bounds: self.s1_target.clone() };
        self.archive.count_in_mask(&target) as f64 / self.target_cells as f64
    }

    fn target_coverage(&self) -> f64 {
        match self.stage {
            Stage::One => self.stage1_target_coverage(),
            Stage::Two => self.archive.coverage(),
        }
    }

    fn checkpoint(&mut self, iteration: u64, last: bool) -> Option<Checkpoint> {
        let every = self.cfg.snapshot_interval;
        if !(last || (every > 0 && iteration % every == 0)) {
            return None;
        }
        let cp = Checkpoint {
            stage: self.stage,
            iteration,
            occupied: self.archive.len(),
            target_coverage: self.target_coverage(),
        };
        if self.report.checkpoints.last() != Some(&cp) {
            self.report.checkpoints.push(cp);
        }
        Some(cp)
    }

    /// Rebuilds the archive over the stage-2 dimensions, keeping only
    /// solutions whose recomputed features fall inside the target region.
    pub fn rebound(&mut self) -> Result<()> {
        let dims = self
            .cfg
            .stage2_dims
            .iter()
            .map(|d| {
                let (lo, hi) = match d.bounds {
                    Some(b) => b,
                    None => self.model.require(&d.feature).map(|f| (f.lower, f.upper))?,
                };
                Ok(Dimension::new(d.feature.clone(), lo, hi, d.bins))
            })
            .collect::<Result<Vec<_>>>()?;
        let (domain, idx) = (self.domain, &self.s2_idx);
        let next = self
            .archive
            .rebound(dims, |s| evaluate_finite(domain, &s.genotype).map(|f| project(&f, idx)))?;
        if next.is_empty() {
            return Err(Error::EmptyStage2);
        }
        self.report.stage2_initial_occupancy = next.len();
        self.archive = next;
        self.stage = Stage::Two;
        self.report.final_mask = self.mask.take().map(|m| m.bounds);
        Ok(())
    }

    /// Cell prior over the current archive from the stage-2 feature fits.
    pub fn cell_prior(&self) -> Result<CellPrior> {
        let fits = self
            .cfg
            .stage2_dims
            .iter()
            .map(|d| self.model.require(&d.feature))
            .collect::<Result<Vec<_>>>()?;
        build_cell_prior(&fits, &self.archive)
    }

    pub fn run_stage1<E: Evaluator<D>, O: Observer>(&mut self, eval: &E, observer: &mut O) -> Result<()> {
        let n = self.cfg.stage1_iters;
        for it in 1..=n {
            let stats = self.qd_update(eval, None)?;
            self.report.stage1.add(&stats);
            if self.cfg.mask {
                self.update_sample_mask(it as f64 / n as f64);
            }
            let cp = self.checkpoint(it, it == n);
            observer.on_iteration(&IterationEvent {
                stage: Stage::One,
                iteration: it,
                archive: &self.archive,
                mask: self.mask.as_ref(),
                target: &self.s1_target,
                stats: &stats,
                checkpoint: cp.as_ref(),
            });
        }
        observer.on_stage_end(Stage::One, &self.archive);
        Ok(())
    }

    pub fn run_stage2<E: Evaluator<D>, O: Observer>(&mut self, eval: &E, observer: &mut O) -> Result<()> {
        let n = self.cfg.stage2_iters;
        let prior = if self.cfg.stage2_prior_parents { Some(self.cell_prior()?) } else { None };
        let bounds = self.archive.bounds();
        for it in 1..=n {
            let sampler = match &prior {
                Some(p) => Some(PriorSampler::new(&self.archive, p)?),
                None => None,
            };
            let stats = self.qd_update(eval, sampler.as_ref())?;
            self.report.stage2.add(&stats);
            let cp = self.checkpoint(it, it == n);
            observer.on_iteration(&IterationEvent {
                stage: Stage::Two,
                iteration: it,
                archive: &self.archive,
                mask: None,
                target: &bounds,
                stats: &stats,
                checkpoint: cp.as_ref(),
            });
        }
        observer.on_stage_end(Stage::Two, &self.archive);
        Ok(())
    }

    /// Runs both stages and builds the final cell prior.
    pub fn run<E: Evaluator<D>, O: Observer>(mut self, eval: &E, observer: &mut O) -> Result<RunOutput> {
        self.init_population(eval)?;
        self.run_stage1(eval, observer)?;
        self.rebound()?;
        self.run_stage2(eval, observer)?;
        let prior = self.cell_prior()?;
        self.report.reset_steps = self.cfg.reset_steps();
        self.report.final_coverage = self.archive.coverage();
        if let Emitters::Es(list) = &self.emitters {
            self.report.es_restarts = list.iter().map(|e| e.restarts()).sum();
        }
        Ok(RunOutput { archive: self.archive, prior, model: self.model, report: self.report })
    }
}

/// Draws an elite with probability proportional to the cell prior and
/// regenerates its level.
pub fn draw_level<D: Domain, R: RngCore + ?Sized>(
    domain: &D,
    archive: &GridArchive,
    prior: &CellPrior,
    rng: &mut R,
) -> Result<(Solution, D::Level)> {
    let s = archive.sample_prior_weighted(prior, rng)?;
    let level = domain
        .generate(&s.genotype)
        .map_err(|_| config_err("archived genotype no longer generates a valid level"))?;
    Ok((s.clone(), level))
}
