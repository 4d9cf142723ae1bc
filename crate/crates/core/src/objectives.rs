//! Scalar objectives attached to candidates: recency, alignment with the
//! target distribution, measure diversity, and a random tie-breaker.

use alloc::string::String;
use alloc::vec::Vec;

use rand::{Rng, RngCore};

use crate::error::config_err;
use crate::stats::min_max_normalize;
use crate::target::{Distribution, TargetModel};
use crate::Result;

#[derive(Debug, Clone, PartialEq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
#[cfg_attr(feature = "serde", serde(default))]
pub struct ObjectiveConfig {
    /// Objective equals the iteration index, so newer solutions win.
    pub newest: bool,
    pub alignment: bool,
    pub diversity: bool,
    pub random: bool,
    pub alignment_features: Vec<String>,
    pub diversity_features: Vec<String>,
    /// Archive references drawn per batch for the diversity objective.
    pub diversity_refs: usize,
}

impl Default for ObjectiveConfig {
    fn default() -> Self {
        ObjectiveConfig {
            newest: true,
            alignment: false,
            diversity: false,
            random: false,
            alignment_features: Vec::new(),
            diversity_features: Vec::new(),
            diversity_refs: 8,
        }
    }
}

impl ObjectiveConfig {
    pub fn validate(&self) -> Result<()> {
        if !(self.newest || self.alignment || self.diversity || self.random) {
            return Err(config_err("at least one objective must be enabled"));
        }
        if self.alignment && self.alignment_features.is_empty() {
            return Err(config_err("alignment objective needs at least one feature"));
        }
        if self.diversity && (self.diversity_features.is_empty() || self.diversity_refs == 0) {
            return Err(config_err("diversity objective needs features and at least one reference"));
        }
        Ok(())
    }
}

pub fn j_new(iter: u64) -> f64 {
    iter as f64
}

/// `-sum |f_i - t_i| / range_i`, skipping zero-range features.
pub fn j_align(features: &[f64], targets: &[f64], ranges: &[f64]) -> f64 {
    -features
        .iter()
        .zip(targets)
        .zip(ranges)
        .filter(|(_, &r)| r > 0.0)
        .map(|((f, t), r)| (f - t).abs() / r)
        .sum::<f64>()
}

/// Mean range-normalized L1 distance to the references; 0 without references.
pub fn j_diverse(features: &[f64], refs: &[Vec<f64>], ranges: &[f64]) -> f64 {
    if refs.is_empty() {
        return 0.0;
    }
    let total: f64 = refs
        .iter()
        .map(|r| {
            features
                .iter()
                .zip(r)
                .zip(ranges)
                .filter(|(_, &w)| w > 0.0)
                .map(|((a, b), w)| (a - b).abs() / w)
                .sum::<f64>()
        })
        .sum();
    total / refs.len() as f64
}

pub fn j_random<R: RngCore + ?Sized>(rng: &mut R) -> f64 {
    rng.random::<f64>()
}

/// Per-batch draws shared by every candidate of the batch.
#[derive(Debug, Clone, PartialEq, Default)]
pub struct BatchDraws {
    /// One alignment target per alignment feature.
    pub targets: Vec<f64>,
    /// Diversity feature values of the sampled archive references.
    pub refs: Vec<Vec<f64>>,
}

/// Objective configuration resolved against a domain's feature layout.
#[derive(Debug, Clone)]
pub struct Objectives {
    cfg: ObjectiveConfig,
    align_idx: Vec<usize>,
    align_dists: Vec<Distribution>,
    align_ranges: Vec<f64>,
    div_idx: Vec<usize>,
    div_ranges: Vec<f64>,
}

impl Objectives {
    pub fn new(cfg: ObjectiveConfig, feature_index: impl Fn(&str) -> Option<usize>, model: &TargetModel) -> Result<Self> {
        cfg.validate()?;
        let resolve = |names: &[String]| -> Result<Vec<usize>> {
            names
                .iter()
                .map(|n| feature_index(n).ok_or_else(|| config_err(alloc::format!("unknown objective feature {n}"))))
                .collect()
        };
        let (mut align_idx, mut align_dists, mut align_ranges) = (Vec::new(), Vec::new(), Vec::new());
        if cfg.alignment {
            align_idx = resolve(&cfg.alignment_features)?;
            for n in &cfg.alignment_features {
                let fit = model.require(n)?;
                align_dists.push(fit.distribution);
                align_ranges.push(fit.range());
            }
        }
        let (mut div_idx, mut div_ranges) = (Vec::new(), Vec::new());
        if cfg.diversity {
            div_idx = resolve(&cfg.diversity_features)?;
            for n in &cfg.diversity_features {
                div_ranges.push(model.require(n)?.range());
            }
        }
        Ok(Objectives { cfg, align_idx, align_dists, align_ranges, div_idx, div_ranges })
    }

    pub fn config(&self) -> &ObjectiveConfig {
        &self.cfg
    }

    /// Number of archive references the diversity objective needs per batch.
    pub fn refs_needed(&self) -> usize {
        if self.cfg.diversity {
            self.cfg.diversity_refs
        } else {
            0
        }
    }

    /// Draws the batch's alignment targets and projects the references
    /// (full feature vectors) onto the diversity features.
    pub fn draw_batch<R: RngCore + ?Sized>(&self, refs: &[Vec<f64>], rng: &mut R) -> BatchDraws {
        BatchDraws {
            targets: self.align_dists.iter().map(|d| d.sample(rng)).collect(),
            refs: refs.iter().map(|r| self.div_idx.iter().map(|&i| r[i]).collect()).collect(),
        }
    }

    /// Objective of each candidate from its full feature vector; invalid
    /// candidates score NaN and are excluded from normalization.
    pub fn score<R: RngCore + ?Sized>(
        &self,
        iter: u64,
        features: &[Option<&[f64]>],
        draws: &BatchDraws,
        rng: &mut R,
    ) -> Vec<f64> {
        let valid: Vec<usize> = (0..features.len()).filter(|&i| features[i].is_some()).collect();
        let mut parts: Vec<Vec<f64>> = Vec::new();
        if self.cfg.alignment {
            parts.push(
                valid
                    .iter()
                    .map(|&i| {
                        let f = features[i].unwrap_or(&[]);
                        let picked: Vec<f64> = self.align_idx.iter().map(|&j| f[j]).collect();
                        j_align(&picked, &draws.targets, &self.align_ranges)
                    })
                    .collect(),
            );
        }
        if self.cfg.diversity {
            parts.push(
                valid
                    .iter()
                    .map(|&i| {
                        let f = features[i].unwrap_or(&[]);
                        let picked: Vec<f64> = self.div_idx.iter().map(|&j| f[j]).collect();
                        j_diverse(&picked, &draws.refs, &self.div_ranges)
                    })
                    .collect(),
            );
        }
        if self.cfg.random {
            // One draw per candidate slot, valid or not, keeps the stream aligned.
            let draws: Vec<f64> = (0..features.len()).map(|_| j_random(rng)).collect();
            parts.push(valid.iter().map(|&i| draws[i]).collect());
        }
        let combined = combine(self.cfg.newest, iter, &parts, valid.len());
        let mut out = alloc::vec![f64::NAN; features.len()];
        for (k, &i) in valid.iter().enumerate() {
            out[i] = combined[k];
        }
        out
    }
}

/// Combines the non-recency components of a batch.
///
/// A single component without recency is used raw. Otherwise each component
/// is min-max normalized over the batch and summed; with recency enabled the
/// sum is scaled below 1 and added to the iteration index, so a newer
/// candidate still beats every older one.
pub fn combine(newest: bool, iter: u64, parts: &[Vec<f64>], n: usize) -> Vec<f64> {
    let base = if newest { j_new(iter) } else { 0.0 };
    match (newest, parts.len()) {
        (_, 0) => alloc::vec![base; n],
        (false, 1) => parts[0].clone(),
        _ => {
            let mut sum = alloc::vec![0.0; n];
            for p in parts {
                for (s, v) in sum.iter_mut().zip(min_max_normalize(p)) {
                    *s += v;
                }
            }
            let scale = if newest { 1.0 / (parts.len() as f64 + 1.0) } else { 1.0 };
            sum.into_iter().map(|s| base + s * scale).collect()
        }
    }
}
