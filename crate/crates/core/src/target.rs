//! Per-feature target distributions fitted from downstream feature samples,
//! the target region they imply, and the cell prior used for level sampling.

use alloc::string::{String, ToString};
use alloc::vec;
use alloc::vec::Vec;

use rand::{Rng, RngCore};
use rand_distr::{Distribution as _, Normal};

use crate::archive::GridArchive;
use crate::domain::FeatureKind;
use crate::stats;
use crate::{Error, Result};

/// Half-width of the Normal target interval, in standard deviations.
pub const NORMAL_BOUND_SIGMAS: f64 = 3.0;
/// Relative padding applied on each side of the stage-1 bounds.
pub const STAGE1_PADDING: f64 = 0.02;
/// Lattices with more points than this are fitted as continuous.
const MAX_LATTICE_POINTS: usize = 10_000;

/// Downstream feature samples: `n` rows over `k` named features.
#[derive(Debug, Clone, PartialEq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
pub struct FeatureSamples {
    names: Vec<String>,
    rows: Vec<Vec<f64>>,
}

impl FeatureSamples {
    pub fn new<S: ToString>(names: Vec<S>, rows: Vec<Vec<f64>>) -> Result<Self> {
        let names: Vec<String> = names.into_iter().map(|s| s.to_string()).collect();
        for (i, row) in rows.iter().enumerate() {
            if row.len() != names.len() {
                return Err(Error::Samples(alloc::format!(
                    "row {i} has {} values for {} features",
                    row.len(),
                    names.len()
                )));
            }
            if let Some(v) = row.iter().find(|v| !v.is_finite()) {
                return Err(Error::Samples(alloc::format!("row {i} holds non-finite value {v}")));
            }
        }
        Ok(FeatureSamples { names, rows })
    }

    pub fn names(&self) -> &[String] {
        &self.names
    }

    pub fn rows(&self) -> &[Vec<f64>] {
        &self.rows
    }

    pub fn len(&self) -> usize {
        self.rows.len()
    }

    pub fn is_empty(&self) -> bool {
        self.rows.is_empty()
    }

    pub fn index_of(&self, name: &str) -> Option<usize> {
        self.names.iter().position(|n| n == name)
    }

    pub fn column(&self, j: usize) -> Vec<f64> {
        self.rows.iter().map(|r| r[j]).collect()
    }

    /// The first `n` rows.
    pub fn truncated(&self, n: usize) -> FeatureSamples {
        FeatureSamples { names: self.names.clone(), rows: self.rows.iter().take(n).cloned().collect() }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
#[cfg_attr(feature = "serde", serde(rename_all = "snake_case"))]
pub enum Family {
    Normal,
    Uniform,
    DiscreteUniform,
}

/// A fitted parametric distribution.
#[derive(Debug, Clone, Copy, PartialEq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
#[cfg_attr(feature = "serde", serde(tag = "family", rename_all = "snake_case"))]
pub enum Distribution {
    Normal { mean: f64, std: f64 },
    Uniform { low: f64, high: f64 },
    /// Equal mass on `first, first + step, ..., last`.
    DiscreteUniform { first: f64, last: f64, step: f64 },
}

impl Distribution {
    pub fn family(&self) -> Family {
        match self {
            Distribution::Normal { .. } => Family::Normal,
            Distribution::Uniform { .. } => Family::Uniform,
            Distribution::DiscreteUniform { .. } => Family::DiscreteUniform,
        }
    }

    fn lattice_count(first: f64, last: f64, step: f64) -> usize {
        libm::round((last - first) / step) as usize + 1
    }

    /// Right-continuous CDF.
    pub fn cdf(&self, x: f64) -> f64 {
        match *self {
            Distribution::Normal { mean, std } => stats::normal_cdf(x, mean, std),
            Distribution::Uniform { low, high } => ((x - low) / (high - low)).clamp(0.0, 1.0),
            Distribution::DiscreteUniform { first, last, step } => {
                let n = Self::lattice_count(first, last, step);
                if x < first - 1e-9 * step {
                    return 0.0;
                }
                let below = libm::floor((x - first) / step + 1e-9) as usize + 1;
                below.min(n) as f64 / n as f64
            }
        }
    }

    /// Probability of the half-open interval `[lo, hi)`.
    pub fn mass(&self, lo: f64, hi: f64) -> f64 {
        match *self {
            Distribution::DiscreteUniform { first, last, step } => {
                let n = Self::lattice_count(first, last, step) as f64;
                // Index of the first lattice point at or above x.
                let first_at = |x: f64| libm::ceil((x - first) / step - 1e-9).clamp(0.0, n);
                ((first_at(hi) - first_at(lo)) / n).max(0.0)
            }
            _ => (self.cdf(hi) - self.cdf(lo)).max(0.0),
        }
    }

    pub fn sample<R: RngCore + ?Sized>(&self, rng: &mut R) -> f64 {
        match *self {
            Distribution::Normal { mean, std } => match Normal::new(mean, std) {
                Ok(n) => n.sample(rng),
                Err(_) => mean,
            },
            Distribution::Uniform { low, high } => rng.random_range(low..high),
            Distribution::DiscreteUniform { first, last, step } => {
                let n = Self::lattice_count(first, last, step);
                first + step * rng.random_range(0..n) as f64
            }
        }
    }

    pub fn mean(&self) -> f64 {
        match *self {
            Distribution::Normal { mean, .. } => mean,
            Distribution::Uniform { low, high } => 0.5 * (low + high),
            Distribution::DiscreteUniform { first, last, .. } => 0.5 * (first + last),
        }
    }
}

/// Goodness-of-fit of one candidate family.
#[derive(Debug, Clone, Copy, PartialEq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
pub struct CandidateFit {
    pub distribution: Distribution,
    /// KS distance (continuous) or chi-squared statistic (discrete).
    pub statistic: f64,
    pub p_value: f64,
    pub log_likelihood: f64,
}

/// How the winning family is chosen among the candidates.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
#[cfg_attr(feature = "serde", serde(rename_all = "snake_case"))]
pub enum SelectionRule {
    /// Highest log-likelihood; both families have two parameters.
    #[default]
    Likelihood,
    /// Smallest goodness-of-fit statistic.
    Statistic,
}

#[derive(Debug, Clone, PartialEq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
pub struct FittedFeature {
    pub name: String,
    pub kind: FeatureKind,
    pub distribution: Distribution,
    pub statistic: f64,
    pub p_value: f64,
    /// Target interval `[lower, upper]`.
    pub lower: f64,
    pub upper: f64,
    /// Spacing of the value lattice for discrete features.
    pub lattice: Option<f64>,
    pub candidates: Vec<CandidateFit>,
}

impl FittedFeature {
    pub fn family(&self) -> Family {
        self.distribution.family()
    }

    pub fn range(&self) -> f64 {
        self.upper - self.lower
    }

    /// CDF of the target as seen by measurements: discrete features fold
    /// the fitted density onto their value lattice.
    pub fn target_cdf(&self, x: f64) -> f64 {
        match (self.lattice, self.distribution) {
            (Some(h), Distribution::Normal { .. }) => {
                let anchor = self.lattice_anchor();
                let snapped = anchor + libm::floor((x - anchor) / h + 1e-9) * h;
                self.distribution.cdf(snapped + 0.5 * h)
            }
            _ => self.distribution.cdf(x),
        }
    }

    fn lattice_anchor(&self) -> f64 {
        match self.distribution {
            Distribution::DiscreteUniform { first, .. } => first,
            _ => self.candidates.iter().find_map(|c| match c.distribution {
                Distribution::DiscreteUniform { first, .. } => Some(first),
                _ => None,
            })
            .unwrap_or(0.0),
        }
    }

    /// Kolmogorov-Smirnov distance between `values` and the target.
    pub fn ks_distance(&self, values: &[f64]) -> f64 {
        let mut sorted = values.to_vec();
        sorted.sort_unstable_by(f64::total_cmp);
        match self.lattice {
            Some(h) => {
                let anchor = self.lattice_anchor();
                let lo = self.lower.min(sorted.first().copied().unwrap_or(self.lower));
                let hi = self.upper.max(sorted.last().copied().unwrap_or(self.upper));
                let start = libm::floor((lo - anchor) / h) as i64 - 1;
                let end = libm::ceil((hi - anchor) / h) as i64 + 1;
                let support: Vec<f64> = if (end - start) as usize <= MAX_LATTICE_POINTS {
                    (start..=end).map(|i| anchor + i as f64 * h).collect()
                } else {
                    Vec::new()
                };
                // Values a few ulps off a lattice point must compare equal to it.
                for v in sorted.iter_mut() {
                    let r = (*v - anchor) / h;
                    if (r - libm::round(r)).abs() < 1e-6 {
                        *v = anchor + libm::round(r) * h;
                    }
                }
                stats::ks_statistic_steps(&sorted, &support, |x| self.target_cdf(x))
            }
            None => stats::ks_statistic_sorted(&sorted, |x| self.target_cdf(x)),
        }
    }

    pub fn sample<R: RngCore + ?Sized>(&self, rng: &mut R) -> f64 {
        self.distribution.sample(rng)
    }
}

fn validate(samples: &[f64]) -> Result<()> {
    if samples.len() < 2 {
        return Err(Error::Samples(alloc::format!("need at least 2 samples, got {}", samples.len())));
    }
    if samples.iter().any(|v| !v.is_finite()) {
        return Err(Error::Samples("non-finite sample value".into()));
    }
    Ok(())
}

/// Smallest spacing between distinct values, if the values sit on a lattice.
fn detect_lattice(sorted: &[f64]) -> Option<f64> {
    let span = sorted[sorted.len() - 1] - sorted[0];
    let tol = 1e-9 * (1.0 + span.abs());
    let mut distinct: Vec<f64> = Vec::new();
    for &v in sorted {
        if distinct.last().is_none_or(|&l| v - l > tol) {
            distinct.push(v);
        }
    }
    let step = distinct.windows(2).map(|w| w[1] - w[0]).fold(f64::INFINITY, f64::min);
    if !step.is_finite() || step <= 0.0 {
        return None;
    }
    let on_lattice = distinct.iter().all(|v| {
        let r = (v - distinct[0]) / step;
        (r - libm::round(r)).abs() < 1e-6
    });
    let points = libm::round(span / step) as usize + 1;
    (on_lattice && points <= MAX_LATTICE_POINTS).then_some(step)
}

/// Fits Normal and Uniform (continuous) or discretized Normal and
/// DiscreteUniform (discrete) candidates and keeps the better one.
pub fn fit_feature(name: &str, samples: &[f64], kind: FeatureKind, rule: SelectionRule) -> Result<FittedFeature> {
    validate(samples)?;
    let n = samples.len();
    let mut sorted = samples.to_vec();
    sorted.sort_unstable_by(f64::total_cmp);
    let (min, max) = (sorted[0], sorted[n - 1]);

    if max - min <= 1e-12 * (1.0 + min.abs()) {
        let v = min;
        return Ok(FittedFeature {
            name: name.into(),
            kind,
            distribution: Distribution::DiscreteUniform { first: v, last: v, step: 1.0 },
            statistic: 0.0,
            p_value: 1.0,
            lower: v - 0.5,
            upper: v + 0.5,
            lattice: Some(1.0),
            candidates: Vec::new(),
        });
    }

    let mean = stats::mean(samples);
    let std = stats::sample_std(samples);
    let lattice = match kind {
        FeatureKind::Discrete => detect_lattice(&sorted),
        FeatureKind::Continuous => None,
    };

    let candidates = match lattice {
        None => {
            let gap = (max - min) / (n - 1) as f64;
            let (low, high) = (min - 0.5 * gap, max + 0.5 * gap);
            let normal = Distribution::Normal { mean, std };
            let uniform = Distribution::Uniform { low, high };
            let ks = |d: &Distribution| stats::ks_statistic_sorted(&sorted, |x| d.cdf(x));
            let (kn, ku) = (ks(&normal), ks(&uniform));
            vec![
                CandidateFit {
                    distribution: normal,
                    statistic: kn,
                    p_value: stats::ks_p_value(kn, n),
                    log_likelihood: samples.iter().map(|&x| stats::normal_ln_pdf(x, mean, std)).sum(),
                },
                CandidateFit {
                    distribution: uniform,
                    statistic: ku,
                    p_value: stats::ks_p_value(ku, n),
                    log_likelihood: -(n as f64) * libm::log(high - low),
                },
            ]
        }
        Some(h) => {
            let points = libm::round((max - min) / h) as usize + 1;
            let mut observed = vec![0.0f64; points];
            for &x in &sorted {
                let i = libm::round((x - min) / h) as usize;
                observed[i.min(points - 1)] += 1.0;
            }
            let normal = Distribution::Normal { mean, std };
            // Probability of each lattice point under the discretized Normal.
            let normal_pmf: Vec<f64> = (0..points)
                .map(|i| {
                    let v = min + i as f64 * h;
                    normal.mass(v - 0.5 * h, v + 0.5 * h).max(1e-300)
                })
                .collect();
            // Expected bin masses for chi-squared: tails fold into the end bins
            // so that the expected counts sum to n.
            let mut normal_mass = normal_pmf.clone();
            normal_mass[0] += normal.mass(f64::NEG_INFINITY, min - 0.5 * h);
            normal_mass[points - 1] += normal.mass(max + 0.5 * h, f64::INFINITY);
            let du = Distribution::DiscreteUniform { first: min, last: max, step: h };
            let du_mass = vec![1.0 / points as f64; points];
            let chi = |mass: &[f64]| -> f64 {
                observed
                    .iter()
                    .zip(mass)
                    .map(|(o, p)| {
                        let e = p * n as f64;
                        (o - e) * (o - e) / e
                    })
                    .sum()
            };
            let loglik = |mass: &[f64]| -> f64 {
                observed.iter().zip(mass).map(|(o, p)| o * libm::log(*p)).sum()
            };
            let dof = (points as f64 - 3.0).max(1.0);
            let (cn, cu) = (chi(&normal_mass), chi(&du_mass));
            vec![
                CandidateFit {
                    distribution: normal,
                    statistic: cn,
                    p_value: stats::chi_squared_sf(cn, dof),
                    log_likelihood: loglik(&normal_pmf),
                },
                CandidateFit {
                    distribution: du,
                    statistic: cu,
                    p_value: stats::chi_squared_sf(cu, dof),
                    log_likelihood: loglik(&du_mass),
                },
            ]
        }
    };

    let best = match rule {
        SelectionRule::Likelihood => {
            if candidates[1].log_likelihood > candidates[0].log_likelihood {
                1
            } else {
                0
            }
        }
        SelectionRule::Statistic => {
            if candidates[1].statistic < candidates[0].statistic {
                1
            } else {
                0
            }
        }
    };
    let chosen = candidates[best];
    let (lower, upper) = match chosen.distribution {
        Distribution::Normal { mean, std } => (mean - NORMAL_BOUND_SIGMAS * std, mean + NORMAL_BOUND_SIGMAS * std),
        Distribution::Uniform { low, high } => (low, high),
        Distribution::DiscreteUniform { first, last, step } => (first - 0.5 * step, last + 0.5 * step),
    };
    Ok(FittedFeature {
        name: name.into(),
        kind,
        distribution: chosen.distribution,
        statistic: chosen.statistic,
        p_value: chosen.p_value,
        lower,
        upper,
        lattice,
        candidates,
    })
}

/// Independent per-feature fits for every feature of a sample set.
#[derive(Debug, Clone, PartialEq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
pub struct TargetModel {
    pub fits: Vec<FittedFeature>,
    pub samples: usize,
}

impl TargetModel {
    pub fn fit(samples: &FeatureSamples, kind_of: impl Fn(&str) -> FeatureKind, rule: SelectionRule) -> Result<Self> {
        let fits = samples
            .names()
            .iter()
            .enumerate()
            .map(|(j, name)| fit_feature(name, &samples.column(j), kind_of(name), rule))
            .collect::<Result<Vec<_>>>()?;
        Ok(TargetModel { fits, samples: samples.len() })
    }

    pub fn get(&self, name: &str) -> Option<&FittedFeature> {
        self.fits.iter().find(|f| f.name == name)
    }

    pub fn require(&self, name: &str) -> Result<&FittedFeature> {
        self.get(name)
            .ok_or_else(|| Error::Config(alloc::format!("no target fit for feature {name}")))
    }
}

/// Normalized sampling weight of every archive cell.
#[derive(Debug, Clone, PartialEq)]
pub struct CellPrior {
    weights: Vec<f64>,
}

impl CellPrior {
    pub fn from_weights(weights: Vec<f64>) -> Result<Self> {
        let total: f64 = weights.iter().sum();
        if weights.iter().any(|w| !(*w >= 0.0) || !w.is_finite()) || !(total > 1e-12) {
            return Err(Error::Config("cell prior needs finite nonnegative weights with positive total".into()));
        }
        Ok(CellPrior { weights: weights.into_iter().map(|w| w / total).collect() })
    }

    pub fn weights(&self) -> &[f64] {
        &self.weights
    }

    pub fn weight(&self, cell: usize) -> f64 {
        self.weights.get(cell).copied().unwrap_or(0.0)
    }

    pub fn len(&self) -> usize {
        self.weights.len()
    }

    pub fn is_empty(&self) -> bool {
        self.weights.is_empty()
    }
}

/// Discretizes the product of per-dimension fits over the archive cells.
pub fn build_cell_prior(fits: &[&FittedFeature], archive: &GridArchive) -> Result<CellPrior> {
    let dims = archive.dimensions();
    if fits.len() != dims.len() {
        return Err(Error::DimensionMismatch { expected: dims.len(), got: fits.len() });
    }
    let marginals: Vec<Vec<f64>> = dims
        .iter()
        .zip(fits)
        .map(|(d, fit)| (0..d.bins).map(|b| fit.distribution.mass(d.edge(b), d.edge(b + 1))).collect())
        .collect();
    let mut weights = vec![1.0; archive.num_cells()];
    let mut stride = 1;
    for (d, m) in dims.iter().zip(&marginals).rev() {
        for (cell, w) in weights.iter_mut().enumerate() {
            *w *= m[(cell / stride) % d.bins];
        }
        stride *= d.bins;
    }
    let total: f64 = weights.iter().sum();
    if !(total >= 1e-12) {
        return Err(Error::Config(alloc::format!(
            "target mass inside archive bounds is {total:e}; target region misaligned"
        )));
    }
    CellPrior::from_weights(weights)
}

/// Stage-1 bounds enclosing both the initial population and the target
/// region, padded by 2% of the range on each side.
pub fn stage1_bounds(population: &[Vec<f64>], targets: &[(f64, f64)]) -> Vec<(f64, f64)> {
    targets
        .iter()
        .enumerate()
        .map(|(d, &(tlo, thi))| {
            let lo = population.iter().map(|r| r[d]).fold(tlo, f64::min);
            let hi = population.iter().map(|r| r[d]).fold(thi, f64::max);
            let pad = if hi > lo { STAGE1_PADDING * (hi - lo) } else { 0.5 };
            (lo - pad, hi + pad)
        })
        .collect()
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::archive::Dimension;
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;

    fn normal_draws(n: usize, mean: f64, std: f64, seed: u64) -> Vec<f64> {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let d = Normal::new(mean, std).unwrap();
        (0..n).map(|_| d.sample(&mut rng)).collect()
    }

    fn uniform_draws(n: usize, lo: f64, hi: f64, seed: u64) -> Vec<f64> {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        (0..n).map(|_| rng.random_range(lo..hi)).collect()
    }

    #[test]
    fn recovers_normal() {
        let fit = fit_feature("f", &normal_draws(10_000, 0.0, 1.0, 1), FeatureKind::Continuous, SelectionRule::Likelihood).unwrap();
        let Distribution::Normal { mean, std } = fit.distribution else { panic!("{fit:?}") };
        assert!(mean.abs() < 0.05);
        assert!((std - 1.0).abs() < 0.05);
        assert!((fit.lower - (mean - 3.0 * std)).abs() < 1e-12);
    }

    #[test]
    fn recovers_uniform() {
        let fit = fit_feature("f", &uniform_draws(10_000, 2.0, 5.0, 2), FeatureKind::Continuous, SelectionRule::Likelihood).unwrap();
        let Distribution::Uniform { low, high } = fit.distribution else { panic!("{fit:?}") };
        assert!((1.98..=2.02).contains(&low), "{low}");
        assert!((4.98..=5.02).contains(&high), "{high}");
        assert_eq!((fit.lower, fit.upper), (low, high));
    }

    #[test]
    fn constant_samples_are_a_point_mass() {
        let fit = fit_feature("f", &[3.0, 3.0, 3.0], FeatureKind::Continuous, SelectionRule::Likelihood).unwrap();
        assert_eq!(fit.family(), Family::DiscreteUniform);
        assert_eq!((fit.lower, fit.upper), (2.5, 3.5));
    }

    #[test]
    fn too_few_or_bad_samples() {
        assert!(fit_feature("f", &[1.0], FeatureKind::Continuous, SelectionRule::Likelihood).is_err());
        assert!(fit_feature("f", &[1.0, f64::NAN], FeatureKind::Continuous, SelectionRule::Likelihood).is_err());
    }

    #[test]
    fn discrete_uniform_integers() {
        let mut rng = ChaCha8Rng::seed_from_u64(5);
        let xs: Vec<f64> = (0..1000).map(|_| rng.random_range(0..11) as f64).collect();
        let fit = fit_feature("x", &xs, FeatureKind::Discrete, SelectionRule::Likelihood).unwrap();
        assert_eq!(fit.distribution, Distribution::DiscreteUniform { first: 0.0, last: 10.0, step: 1.0 });
        assert_eq!((fit.lower, fit.upper), (-0.5, 10.5));
        assert_eq!(fit.lattice, Some(1.0));
        assert!(fit.p_value > 0.01);
    }

    #[test]
    fn small_discrete_uniform_samples_are_not_taken_for_normal() {
        // Folding the Normal tails into the end bins would inflate its
        // likelihood exactly where uniform samples pile up.
        let mut rng = ChaCha8Rng::seed_from_u64(11);
        let wins = (0..200)
            .filter(|_| {
                let xs: Vec<f64> = (0..100).map(|_| rng.random_range(0..=12) as f64).collect();
                let fit = fit_feature("x", &xs, FeatureKind::Discrete, SelectionRule::Likelihood).unwrap();
                fit.family() == Family::DiscreteUniform
            })
            .count();
        assert!(wins >= 190, "{wins}");
    }

    #[test]
    fn discrete_binomial_prefers_normal() {
        let mut rng = ChaCha8Rng::seed_from_u64(6);
        let xs: Vec<f64> = (0..500).map(|_| (0..9).filter(|_| rng.random_bool(0.5)).count() as f64 / 3.0).collect();
        let fit = fit_feature("m", &xs, FeatureKind::Discrete, SelectionRule::Likelihood).unwrap();
        assert_eq!(fit.family(), Family::Normal);
        assert!((fit.lattice.unwrap() - 1.0 / 3.0).abs() < 1e-9);
    }

    #[test]
    fn discrete_uniform_cdf_and_mass() {
        let d = Distribution::DiscreteUniform { first: 0.0, last: 3.0, step: 1.0 };
        assert_eq!(d.cdf(-0.1), 0.0);
        assert_eq!(d.cdf(0.0), 0.25);
        assert_eq!(d.cdf(2.5), 0.75);
        assert_eq!(d.cdf(9.0), 1.0);
        assert_eq!(d.mass(0.0, 1.0), 0.25);
        assert_eq!(d.mass(-0.5, 3.5), 1.0);
        assert_eq!(d.mass(0.5, 0.9), 0.0);
    }

    #[test]
    fn uniform_prior_is_flat() {
        let fit = FittedFeature {
            name: "u".into(),
            kind: FeatureKind::Continuous,
            distribution: Distribution::Uniform { low: 0.0, high: 1.0 },
            statistic: 0.0,
            p_value: 1.0,
            lower: 0.0,
            upper: 1.0,
            lattice: None,
            candidates: Vec::new(),
        };
        let archive = GridArchive::new(vec![Dimension::new("a", 0.0, 1.0, 4), Dimension::new("b", 0.0, 1.0, 5)]).unwrap();
        let prior = build_cell_prior(&[&fit, &fit], &archive).unwrap();
        for w in prior.weights() {
            assert!((w - 1.0 / 20.0).abs() < 1e-15);
        }
    }

    #[test]
    fn normal_prior_is_mirror_symmetric() {
        let fit = FittedFeature {
            name: "n".into(),
            kind: FeatureKind::Continuous,
            distribution: Distribution::Normal { mean: 0.0, std: 1.0 },
            statistic: 0.0,
            p_value: 1.0,
            lower: -3.0,
            upper: 3.0,
            lattice: None,
            candidates: Vec::new(),
        };
        let archive = GridArchive::new(vec![Dimension::new("a", -3.0, 3.0, 7), Dimension::new("b", -3.0, 3.0, 6)]).unwrap();
        let prior = build_cell_prior(&[&fit, &fit], &archive).unwrap();
        let w = prior.weights();
        assert!((w.iter().sum::<f64>() - 1.0).abs() < 1e-12);
        for i in 0..7 {
            for j in 0..6 {
                let a = w[i * 6 + j];
                let b = w[(6 - i) * 6 + (5 - j)];
                assert!((a - b).abs() < 1e-12);
            }
        }
    }

    #[test]
    fn prior_outside_target_is_an_error() {
        let fit = FittedFeature {
            name: "n".into(),
            kind: FeatureKind::Continuous,
            distribution: Distribution::Uniform { low: 10.0, high: 11.0 },
            statistic: 0.0,
            p_value: 1.0,
            lower: 10.0,
            upper: 11.0,
            lattice: None,
            candidates: Vec::new(),
        };
        let archive = GridArchive::new(vec![Dimension::new("a", 0.0, 1.0, 3)]).unwrap();
        assert!(matches!(build_cell_prior(&[&fit], &archive), Err(Error::Config(_))));
    }

    #[test]
    fn stage1_bounds_examples() {
        let pop = vec![vec![-5.0], vec![-4.0], vec![-4.5]];
        let b = stage1_bounds(&pop, &[(0.0, 1.0)]);
        assert!((b[0].0 + 5.12).abs() < 1e-12 && (b[0].1 - 1.12).abs() < 1e-12);
        let inside = vec![vec![0.2], vec![0.8]];
        let b = stage1_bounds(&inside, &[(0.0, 1.0)]);
        assert!((b[0].0 + 0.02).abs() < 1e-12 && (b[0].1 - 1.02).abs() < 1e-12);
    }

    #[test]
    fn ks_distance_against_lattice_target() {
        // Samples exactly on the folded-normal masses give a small distance.
        let fit = fit_feature("m", &[0.0, 1.0, 1.0, 2.0, 1.0, 0.0, 2.0, 1.0], FeatureKind::Discrete, SelectionRule::Likelihood).unwrap();
        let d = fit.ks_distance(&[0.0, 1.0, 1.0, 2.0, 1.0, 0.0, 2.0, 1.0]);
        assert!(d < 0.15, "{d}");
        // All mass on a single point is far from the target.
        assert!(fit.ks_distance(&[2.0; 20]) > 0.5);
    }

    #[test]
    fn ks_distance_ignores_rounding_off_the_lattice() {
        let ninths: Vec<f64> = [3, 4, 4, 5, 5, 5, 6, 6, 7].iter().map(|&i| i as f64 / 9.0).collect();
        let fit = fit_feature("m", &ninths, FeatureKind::Discrete, SelectionRule::Likelihood).unwrap();
        let exact = fit.ks_distance(&ninths);
        let nudged: Vec<f64> = ninths.iter().map(|v| v + 4.0 * f64::EPSILON).collect();
        assert!((fit.ks_distance(&nudged) - exact).abs() < 1e-12);
    }
}
