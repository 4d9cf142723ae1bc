//! Stone-latent generator in which each latent coordinate is the AND of a
//! block of `k` binary genes, so random genotypes almost always produce
//! stones at the all-zero vertex.

use alloc::vec;
use alloc::vec::Vec;

use rand::{Rng, RngCore};

use super::{Alphabet, Domain, FeatureInfo, FeatureKind, Genotype, GenotypeSpace, InvalidLevel};
use crate::stats;
use crate::target::FeatureSamples;
use crate::{Error, Result};

pub type Stone = [bool; 3];

const FEATURES: [FeatureInfo; 5] = [
    FeatureInfo { name: "ManhattanToOptimal", kind: FeatureKind::Discrete },
    FeatureInfo { name: "LatentStateDiversity", kind: FeatureKind::Discrete },
    FeatureInfo { name: "ParityFirstStone", kind: FeatureKind::Discrete },
    FeatureInfo { name: "StoneToStoneDistance", kind: FeatureKind::Continuous },
    FeatureInfo { name: "StoneToStoneDistanceVariance", kind: FeatureKind::Continuous },
];

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
pub struct AlchemyConfig {
    /// Genes per latent coordinate.
    pub k: usize,
    pub stones: usize,
    pub trials: usize,
}

impl Default for AlchemyConfig {
    fn default() -> Self {
        AlchemyConfig { k: 8, stones: 3, trials: 3 }
    }
}

/// Stone latent states, one vector of stones per trial.
#[derive(Debug, Clone, PartialEq, Eq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
pub struct AlchemyLevel {
    pub trials: Vec<Vec<Stone>>,
}

impl AlchemyLevel {
    pub fn single_trial(stones: Vec<Stone>) -> Self {
        AlchemyLevel { trials: vec![stones] }
    }

    fn stones(&self) -> impl Iterator<Item = &Stone> {
        self.trials.iter().flatten()
    }
}

fn coord(b: bool) -> f64 {
    if b {
        1.0
    } else {
        0.0
    }
}

/// Mean Manhattan distance of every stone to the optimal vertex (1,1,1).
pub fn manhattan_to_optimal(level: &AlchemyLevel) -> f64 {
    let dists: Vec<f64> = level
        .stones()
        .map(|s| s.iter().filter(|&&c| !c).count() as f64)
        .collect();
    stats::mean(&dists)
}

/// Per trial: mean over coordinates of the population std across stones;
/// averaged over trials.
pub fn latent_state_diversity(level: &AlchemyLevel) -> f64 {
    let per_trial: Vec<f64> = level
        .trials
        .iter()
        .map(|stones| {
            let mut total = 0.0;
            for c in 0..3 {
                let column: Vec<f64> = stones.iter().map(|s| coord(s[c])).collect();
                total += libm::sqrt(stats::variance(&column));
            }
            total / 3.0
        })
        .collect();
    stats::mean(&per_trial)
}

/// Coordinate sum of the first stone of the first trial.
pub fn parity_first_stone(level: &AlchemyLevel) -> f64 {
    level
        .trials
        .first()
        .and_then(|t| t.first())
        .map(|s| s.iter().filter(|&&c| c).count() as f64)
        .unwrap_or(0.0)
}

fn pairwise_distances(level: &AlchemyLevel) -> Vec<f64> {
    let mut out = Vec::new();
    for stones in &level.trials {
        for i in 0..stones.len() {
            for j in i + 1..stones.len() {
                let d2: f64 = (0..3)
                    .map(|c| {
                        let d = coord(stones[i][c]) - coord(stones[j][c]);
                        d * d
                    })
                    .sum();
                out.push(libm::sqrt(d2));
            }
        }
    }
    out
}

/// Mean Euclidean distance over all within-trial stone pairs.
pub fn stone_to_stone_distance(level: &AlchemyLevel) -> f64 {
    stats::mean(&pairwise_distances(level))
}

/// Population variance of the within-trial pairwise stone distances.
pub fn stone_to_stone_distance_variance(level: &AlchemyLevel) -> f64 {
    stats::variance(&pairwise_distances(level))
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct Alchemy {
    cfg: AlchemyConfig,
}

impl Alchemy {
    pub fn new(cfg: AlchemyConfig) -> Result<Self> {
        if cfg.k == 0 || cfg.trials == 0 {
            return Err(Error::Config("alchemy needs k >= 1 and trials >= 1".into()));
        }
        if cfg.stones < 2 {
            return Err(Error::Config("alchemy diversity features need at least 2 stones".into()));
        }
        Ok(Alchemy { cfg })
    }

    pub fn config(&self) -> &AlchemyConfig {
        &self.cfg
    }

    pub fn genotype_len(&self) -> usize {
        self.cfg.trials * self.cfg.stones * 3 * self.cfg.k
    }

    /// Latent coordinate `(trial, stone, c)` is 1 iff its whole gene block is 1.
    pub fn generate_level(&self, genes: &[i32]) -> AlchemyLevel {
        let k = self.cfg.k;
        let mut blocks = genes.chunks_exact(k).map(|b| b.iter().all(|&g| g == 1));
        let trials = (0..self.cfg.trials)
            .map(|_| {
                (0..self.cfg.stones)
                    .map(|_| {
                        let mut s = [false; 3];
                        for c in &mut s {
                            *c = blocks.next().unwrap_or(false);
                        }
                        s
                    })
                    .collect()
            })
            .collect();
        AlchemyLevel { trials }
    }

    /// Level with every stone latent uniform over the cube vertices.
    pub fn sample_structured_level<R: RngCore + ?Sized>(&self, rng: &mut R) -> AlchemyLevel {
        let trials = (0..self.cfg.trials)
            .map(|_| {
                (0..self.cfg.stones)
                    .map(|_| [rng.random_bool(0.5), rng.random_bool(0.5), rng.random_bool(0.5)])
                    .collect()
            })
            .collect();
        AlchemyLevel { trials }
    }
}

impl Domain for Alchemy {
    type Level = AlchemyLevel;

    fn name(&self) -> &'static str {
        "alchemy"
    }

    fn feature_info(&self) -> &[FeatureInfo] {
        &FEATURES
    }

    fn genotype_space(&self) -> GenotypeSpace {
        GenotypeSpace::Discrete(vec![Alphabet::BINARY; self.genotype_len()])
    }

    fn generate(&self, genotype: &Genotype) -> core::result::Result<AlchemyLevel, InvalidLevel> {
        match genotype.as_discrete() {
            Some(g) if g.len() == self.genotype_len() => Ok(self.generate_level(g)),
            _ => Err(InvalidLevel),
        }
    }

    fn features(&self, level: &AlchemyLevel) -> Vec<f64> {
        vec![
            manhattan_to_optimal(level),
            latent_state_diversity(level),
            parity_first_stone(level),
            stone_to_stone_distance(level),
            stone_to_stone_distance_variance(level),
        ]
    }

    fn sample_target<R: RngCore + ?Sized>(&self, n: usize, rng: &mut R) -> Result<FeatureSamples> {
        let rows = (0..n).map(|_| self.features(&self.sample_structured_level(rng))).collect();
        FeatureSamples::new(self.feature_names(), rows)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    const ONE: Stone = [true, true, true];
    const ZERO: Stone = [false, false, false];

    fn single(k: usize) -> Alchemy {
        Alchemy::new(AlchemyConfig { k, stones: 3, trials: 1 }).unwrap()
    }

    #[test]
    fn and_gate_generation() {
        let env = single(8);
        let all_one = env.generate_level(&vec![1; 72]);
        assert_eq!(all_one.trials, vec![vec![ONE; 3]]);
        let all_zero = env.generate_level(&vec![0; 72]);
        assert_eq!(all_zero.trials, vec![vec![ZERO; 3]]);
        // A single zero gene switches off exactly its own coordinate.
        let mut g = vec![1; 72];
        g[8 * 4 + 3] = 0; // stone 1, coordinate 1
        let lvl = env.generate_level(&g);
        assert_eq!(lvl.trials[0][1], [true, false, true]);
        assert_eq!(lvl.trials[0][0], ONE);
    }

    #[test]
    fn manhattan_examples() {
        assert_eq!(manhattan_to_optimal(&AlchemyLevel::single_trial(vec![ONE; 3])), 0.0);
        assert_eq!(manhattan_to_optimal(&AlchemyLevel::single_trial(vec![ZERO; 3])), 3.0);
        let lvl = AlchemyLevel::single_trial(vec![ONE, ZERO, [true, false, false]]);
        assert!((manhattan_to_optimal(&lvl) - 5.0 / 3.0).abs() < 1e-15);
    }

    #[test]
    fn diversity_examples() {
        assert_eq!(latent_state_diversity(&AlchemyLevel::single_trial(vec![ONE; 3])), 0.0);
        assert!((latent_state_diversity(&AlchemyLevel::single_trial(vec![ONE, ZERO])) - 0.5).abs() < 1e-15);
        let lvl = AlchemyLevel::single_trial(vec![[true, false, false], [true, true, false], [true, false, true]]);
        // Column stds {0, sqrt(2)/3, sqrt(2)/3}.
        let expect = 2.0 * libm::sqrt(2.0) / 3.0 / 3.0;
        assert!((latent_state_diversity(&lvl) - expect).abs() < 1e-12);
        assert!((latent_state_diversity(&lvl) - 0.3143).abs() < 1e-4);
    }

    #[test]
    fn parity_examples() {
        assert_eq!(parity_first_stone(&AlchemyLevel::single_trial(vec![ZERO, ONE])), 0.0);
        assert_eq!(parity_first_stone(&AlchemyLevel::single_trial(vec![ONE, ZERO])), 3.0);
        assert_eq!(parity_first_stone(&AlchemyLevel::single_trial(vec![[true, false, true], ZERO])), 2.0);
    }

    #[test]
    fn distance_examples() {
        let same = AlchemyLevel::single_trial(vec![ONE; 3]);
        assert_eq!(stone_to_stone_distance(&same), 0.0);
        assert_eq!(stone_to_stone_distance_variance(&same), 0.0);
        let pair = AlchemyLevel::single_trial(vec![ZERO, ONE]);
        assert!((stone_to_stone_distance(&pair) - libm::sqrt(3.0)).abs() < 1e-15);
        assert_eq!(stone_to_stone_distance_variance(&pair), 0.0);
        let tri = AlchemyLevel::single_trial(vec![ZERO, [true, false, false], [true, true, false]]);
        let d = [1.0, libm::sqrt(2.0), 1.0];
        let m = d.iter().sum::<f64>() / 3.0;
        let v = d.iter().map(|x| (x - m) * (x - m)).sum::<f64>() / 3.0;
        assert!((stone_to_stone_distance(&tri) - m).abs() < 1e-15);
        assert!((stone_to_stone_distance(&tri) - 1.1381).abs() < 1e-4);
        assert!((stone_to_stone_distance_variance(&tri) - v).abs() < 1e-15);
        assert!((stone_to_stone_distance_variance(&tri) - 0.0381).abs() < 1e-4);
    }

    #[test]
    fn multi_trial_features_average_over_trials() {
        let lvl = AlchemyLevel { trials: vec![vec![ONE, ZERO], vec![ONE, ONE]] };
        assert!((manhattan_to_optimal(&lvl) - 0.75).abs() < 1e-15);
        assert!((latent_state_diversity(&lvl) - 0.25).abs() < 1e-15);
        assert_eq!(parity_first_stone(&lvl), 3.0);
        // Pairs are only formed within a trial: {sqrt(3), 0}.
        assert!((stone_to_stone_distance(&lvl) - libm::sqrt(3.0) / 2.0).abs() < 1e-15);
    }

    #[test]
    fn stone_order_invariance_except_parity() {
        let a = AlchemyLevel::single_trial(vec![ZERO, [true, false, true], ONE]);
        let b = AlchemyLevel::single_trial(vec![ONE, ZERO, [true, false, true]]);
        let env = single(8);
        let (fa, fb) = (env.features(&a), env.features(&b));
        for i in [0, 1, 3, 4] {
            assert!((fa[i] - fb[i]).abs() < 1e-12);
        }
        assert_ne!(fa[2], fb[2]);
    }
}
