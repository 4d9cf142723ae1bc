//! Race tracks from control points. The structured parameterization places
//! control points anywhere on the playfield and rejects collapsed point
//! sets; the unstructured one first squeezes them through a small central
//! window so that almost every track hugs the playfield border.

use alloc::vec::Vec;

use rand::RngCore;

use super::{Domain, FeatureInfo, FeatureKind, Genotype, GenotypeSpace, InvalidLevel};
use crate::stats;
use crate::target::FeatureSamples;
use crate::{Error, Result};

pub mod features;
pub mod track;

pub use track::{CubicBezier, Point, TrackLevel};

pub const PLAYFIELD: f64 = 100.0;

const FEATURES: [FeatureInfo; 14] = {
    let mut out = [FeatureInfo { name: "", kind: FeatureKind::Continuous }; 14];
    let mut i = 0;
    while i < 14 {
        out[i].name = features::NAMES[i];
        i += 1;
    }
    out
};

#[derive(Debug, Clone, Copy, PartialEq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
pub struct RacingConfig {
    pub control_points: usize,
    /// Central-window shrink factor of the training parameterization; 1 is
    /// the structured parameterization without rejection.
    pub k: usize,
    pub samples_per_segment: usize,
    /// Minimum per-axis std of structured control points, as a playfield fraction.
    pub std_threshold: f64,
    /// Turn angle (radians) above which a vertex counts as significant.
    pub significant_turn: f64,
}

impl Default for RacingConfig {
    fn default() -> Self {
        RacingConfig { control_points: 12, k: 32, samples_per_segment: 40, std_threshold: 0.15, significant_turn: 0.1 }
    }
}

/// Maps a unit-square point through the `k`-times-smaller central window:
/// points inside are stretched to fill the square, points outside snap to
/// the nearest point of the square's boundary.
pub fn project_point(p: Point, k: usize) -> Point {
    if k == 1 {
        return p;
    }
    let k = k as f64;
    let half = 0.5 / k;
    if (p[0] - 0.5).abs() <= half && (p[1] - 0.5).abs() <= half {
        return [(p[0] - 0.5) * k + 0.5, (p[1] - 0.5) * k + 0.5];
    }
    let x = p[0].clamp(0.0, 1.0);
    let y = p[1].clamp(0.0, 1.0);
    let candidates = [(x, [0.0, y]), (1.0 - x, [1.0, y]), (y, [x, 0.0]), (1.0 - y, [x, 1.0])];
    let mut best = candidates[0];
    for c in &candidates[1..] {
        if c.0 < best.0 {
            best = *c;
        }
    }
    best.1
}

/// Applies [`project_point`] to every `(x, y)` pair of a flat genotype.
pub fn project_u_k(genes: &[f64], k: usize) -> Vec<f64> {
    genes
        .chunks_exact(2)
        .flat_map(|c| {
            let p = project_point([c[0], c[1]], k);
            [p[0], p[1]]
        })
        .collect()
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Racing {
    cfg: RacingConfig,
}

impl Racing {
    pub fn new(cfg: RacingConfig) -> Result<Self> {
        if cfg.control_points < 3 {
            return Err(Error::Config("racing needs at least 3 control points".into()));
        }
        if cfg.k == 0 || cfg.samples_per_segment == 0 {
            return Err(Error::Config("racing needs k >= 1 and samples_per_segment >= 1".into()));
        }
        Ok(Racing { cfg })
    }

    pub fn config(&self) -> &RacingConfig {
        &self.cfg
    }

    fn control_points(genes: &[f64]) -> Vec<Point> {
        genes.chunks_exact(2).map(|c| [c[0] * PLAYFIELD, c[1] * PLAYFIELD]).collect()
    }

    fn build(&self, mut points: Vec<Point>) -> core::result::Result<TrackLevel, InvalidLevel> {
        track::sort_by_angle(&mut points);
        let level = TrackLevel::through_points(&points, self.cfg.samples_per_segment);
        if level.has_nan() {
            return Err(InvalidLevel);
        }
        Ok(level)
    }

    /// Structured generation: rejects point sets whose smaller per-axis
    /// standard deviation falls below the threshold.
    pub fn generate_structured(&self, genes: &[f64]) -> core::result::Result<TrackLevel, InvalidLevel> {
        let points = Self::control_points(genes);
        let xs: Vec<f64> = points.iter().map(|p| p[0]).collect();
        let ys: Vec<f64> = points.iter().map(|p| p[1]).collect();
        let spread = libm::sqrt(stats::variance(&xs)).min(libm::sqrt(stats::variance(&ys)));
        if spread < self.cfg.std_threshold * PLAYFIELD {
            return Err(InvalidLevel);
        }
        self.build(points)
    }

    /// Training generation: central-window projection, no rejection.
    pub fn generate_unstructured(&self, genes: &[f64]) -> core::result::Result<TrackLevel, InvalidLevel> {
        self.build(Self::control_points(&project_u_k(genes, self.cfg.k)))
    }

    pub fn track_features(&self, level: &TrackLevel) -> Vec<f64> {
        features::track_features(level, self.cfg.significant_turn)
    }

    fn genotype_dim(&self) -> usize {
        2 * self.cfg.control_points
    }
}

impl Domain for Racing {
    type Level = TrackLevel;

    fn name(&self) -> &'static str {
        "racing"
    }

    fn feature_info(&self) -> &[FeatureInfo] {
        &FEATURES
    }

    fn genotype_space(&self) -> GenotypeSpace {
        GenotypeSpace::Continuous { dim: self.genotype_dim(), lower: 0.0, upper: 1.0 }
    }

    fn generate(&self, genotype: &Genotype) -> core::result::Result<TrackLevel, InvalidLevel> {
        match genotype.as_continuous() {
            Some(g) if g.len() == self.genotype_dim() => self.generate_unstructured(g),
            _ => Err(InvalidLevel),
        }
    }

    fn features(&self, level: &TrackLevel) -> Vec<f64> {
        self.track_features(level)
    }

    fn sample_target<R: RngCore + ?Sized>(&self, n: usize, rng: &mut R) -> Result<FeatureSamples> {
        let space = self.genotype_space();
        let max_attempts = n.max(1) * 100;
        let mut rows = Vec::with_capacity(n);
        let mut attempts = 0;
        while rows.len() < n {
            if attempts >= max_attempts {
                return Err(Error::Config(alloc::format!(
                    "structured track rejection rate above 99% ({} accepted of {attempts})",
                    rows.len()
                )));
            }
            attempts += 1;
            let g = space.sample_uniform(rng);
            if let Ok(level) = self.generate_structured(g.as_continuous().unwrap_or(&[])) {
                rows.push(self.track_features(&level));
            }
        }
        FeatureSamples::new(self.feature_names(), rows)
    }
}
