//! Goal-placement grid world whose `y` coordinate is the floored sum of `k`
//! trinary genes, so random genotypes crowd the goal onto the center rows.

use alloc::vec;
use alloc::vec::Vec;

use rand::{Rng, RngCore};

use super::{Alphabet, Domain, FeatureInfo, FeatureKind, Genotype, GenotypeSpace, InvalidLevel};
use crate::target::FeatureSamples;
use crate::{Error, Result};

pub const STEP_REWARD: f64 = -0.1;
pub const GOAL_REWARD: f64 = 1.0;

const FEATURES: [FeatureInfo; 2] = [
    FeatureInfo { name: "XPosition", kind: FeatureKind::Discrete },
    FeatureInfo { name: "YPosition", kind: FeatureKind::Discrete },
];

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
pub struct GridNavLevel {
    pub grid: u32,
    pub goal_x: u32,
    pub goal_y: u32,
}

impl GridNavLevel {
    pub fn start(&self) -> (u32, u32) {
        ((self.grid - 1) / 2, (self.grid - 1) / 2)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct GridNav {
    grid: u32,
    k: u32,
}

impl GridNav {
    pub fn new(grid: u32, k: u32) -> Result<Self> {
        if grid == 0 || grid % 2 == 0 {
            return Err(Error::Config(alloc::format!("grid size must be odd, got {grid}")));
        }
        if k == 0 {
            return Err(Error::Config("gridnav needs k >= 1".into()));
        }
        Ok(GridNav { grid, k })
    }

    pub fn grid(&self) -> u32 {
        self.grid
    }

    pub fn k(&self) -> u32 {
        self.k
    }

    /// Row reached by a gene sum `s` in `[-k, k]`.
    pub fn row_for_sum(&self, s: i64) -> u32 {
        let k = self.k as i64;
        ((s + k) * self.grid as i64 / (2 * k + 1)) as u32
    }

    pub fn generate_level(&self, genes: &[i32]) -> GridNavLevel {
        let s: i64 = genes[1..].iter().map(|&g| g as i64).sum();
        GridNavLevel { grid: self.grid, goal_x: genes[0] as u32, goal_y: self.row_for_sum(s) }
    }

    /// Exact distribution of the goal row under uniformly random genes.
    pub fn row_marginal(&self) -> Vec<f64> {
        dr_marginal_oracle(self.k, self.grid)
    }

    /// Rows with nonzero probability under the floor map.
    pub fn reachable_rows(&self) -> Vec<u32> {
        let mut rows: Vec<u32> = (-(self.k as i64)..=self.k as i64).map(|s| self.row_for_sum(s)).collect();
        rows.dedup();
        rows
    }

    /// Number of `(x, y)` cells some genotype can reach.
    pub fn reachable_cells(&self) -> usize {
        self.grid as usize * self.reachable_rows().len()
    }

    /// Probability of each `(x, y)` cell under random genotypes, row-major in `y`.
    pub fn cell_probabilities(&self) -> Vec<f64> {
        let g = self.grid as usize;
        let rows = self.row_marginal();
        let mut out = vec![0.0; g * g];
        for (y, p) in rows.iter().enumerate() {
            for x in 0..g {
                out[y * g + x] = p / g as f64;
            }
        }
        out
    }

    /// Expected number of distinct cells hit by `batch` random genotypes.
    pub fn expected_distinct_cells(&self, batch: u64) -> f64 {
        self.cell_probabilities()
            .iter()
            .map(|&p| 1.0 - libm::pow(1.0 - p, batch as f64))
            .sum()
    }

    /// Exact variance of the distinct-cell count of a random batch.
    pub fn distinct_cells_variance(&self, batch: u64) -> f64 {
        let p = self.cell_probabilities();
        let b = batch as f64;
        let miss: Vec<f64> = p.iter().map(|&pi| libm::pow(1.0 - pi, b)).collect();
        let mut var = 0.0;
        for i in 0..p.len() {
            var += miss[i] * (1.0 - miss[i]);
            for j in 0..p.len() {
                if i != j {
                    let both = libm::pow((1.0 - p[i] - p[j]).max(0.0), b);
                    var += both - miss[i] * miss[j];
                }
            }
        }
        var
    }
}

/// Exact marginal over goal rows for `k` uniform genes in `{-1, 0, 1}` on a
/// `grid`-row board: integer convolution of the gene sum, then the floor map.
pub fn dr_marginal_oracle(k: u32, grid: u32) -> Vec<f64> {
    let width = 2 * k as usize + 1;
    let mut counts: Vec<u128> = vec![0; width];
    counts[k as usize] = 1;
    for _ in 0..k {
        let mut next = vec![0u128; width];
        for (i, &c) in counts.iter().enumerate() {
            if c == 0 {
                continue;
            }
            for d in [-1i64, 0, 1] {
                let j = i as i64 + d;
                if (0..width as i64).contains(&j) {
                    next[j as usize] += c;
                }
            }
        }
        counts = next;
    }
    let total = libm::pow(3.0, k as f64);
    let mut rows = vec![0.0; grid as usize];
    for (t, &c) in counts.iter().enumerate() {
        let y = t * grid as usize / width;
        rows[y] += c as f64 / total;
    }
    rows
}

impl Domain for GridNav {
    type Level = GridNavLevel;

    fn name(&self) -> &'static str {
        "gridnav"
    }

    fn feature_info(&self) -> &[FeatureInfo] {
        &FEATURES
    }

    fn genotype_space(&self) -> GenotypeSpace {
        let mut alpha = vec![Alphabet { min: 0, max: self.grid as i32 - 1 }];
        alpha.extend(core::iter::repeat_n(Alphabet::TRINARY, self.k as usize));
        GenotypeSpace::Discrete(alpha)
    }

    fn generate(&self, genotype: &Genotype) -> core::result::Result<GridNavLevel, InvalidLevel> {
        match genotype.as_discrete() {
            Some(g) if g.len() == self.k as usize + 1 => Ok(self.generate_level(g)),
            _ => Err(InvalidLevel),
        }
    }

    fn features(&self, level: &GridNavLevel) -> Vec<f64> {
        vec![level.goal_x as f64, level.goal_y as f64]
    }

    /// Downstream goals are uniform over the whole board.
    fn sample_target<R: RngCore + ?Sized>(&self, n: usize, rng: &mut R) -> Result<FeatureSamples> {
        let rows = (0..n)
            .map(|_| {
                let x = rng.random_range(0..self.grid) as f64;
                let y = rng.random_range(0..self.grid) as f64;
                vec![x, y]
            })
            .collect();
        FeatureSamples::new(self.feature_names(), rows)
    }
}
