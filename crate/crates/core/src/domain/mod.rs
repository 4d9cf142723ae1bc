//! Level domains: genotype spaces, level generators and feature extractors.

use alloc::vec::Vec;

use rand::{Rng, RngCore};

use crate::target::FeatureSamples;
use crate::Result;

pub mod alchemy;
pub mod gridnav;
pub mod racing;

pub use alchemy::Alchemy;
pub use gridnav::GridNav;
pub use racing::Racing;

/// Raw parameter vector fed to a level generator.
#[derive(Debug, Clone, PartialEq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
#[cfg_attr(feature = "serde", serde(untagged))]
pub enum Genotype {
    Discrete(Vec<i32>),
    Continuous(Vec<f64>),
}

impl Genotype {
    pub fn len(&self) -> usize {
        match self {
            Genotype::Discrete(g) => g.len(),
            Genotype::Continuous(g) => g.len(),
        }
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }

    pub fn as_discrete(&self) -> Option<&[i32]> {
        match self {
            Genotype::Discrete(g) => Some(g),
            Genotype::Continuous(_) => None,
        }
    }

    pub fn as_continuous(&self) -> Option<&[f64]> {
        match self {
            Genotype::Continuous(g) => Some(g),
            Genotype::Discrete(_) => None,
        }
    }
}

/// Contiguous integer alphabet `min..=max` of one discrete gene.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct Alphabet {
    pub min: i32,
    pub max: i32,
}

impl Alphabet {
    pub const BINARY: Alphabet = Alphabet { min: 0, max: 1 };
    pub const TRINARY: Alphabet = Alphabet { min: -1, max: 1 };

    pub fn size(&self) -> usize {
        (self.max - self.min + 1) as usize
    }

    pub fn contains(&self, v: i32) -> bool {
        (self.min..=self.max).contains(&v)
    }

    pub fn sample<R: RngCore + ?Sized>(&self, rng: &mut R) -> i32 {
        rng.random_range(self.min..=self.max)
    }
}

#[derive(Debug, Clone, PartialEq)]
pub enum GenotypeSpace {
    Discrete(Vec<Alphabet>),
    /// Box `[lower, upper]^dim`.
    Continuous { dim: usize, lower: f64, upper: f64 },
}

impl GenotypeSpace {
    pub fn contains(&self, g: &Genotype) -> bool {
        match (self, g) {
            (GenotypeSpace::Discrete(alpha), Genotype::Discrete(v)) => {
                alpha.len() == v.len() && alpha.iter().zip(v).all(|(a, &x)| a.contains(x))
            }
            (GenotypeSpace::Continuous { dim, lower, upper }, Genotype::Continuous(v)) => {
                v.len() == *dim && v.iter().all(|x| (*lower..=*upper).contains(x))
            }
            _ => false,
        }
    }

    pub fn sample_uniform<R: RngCore + ?Sized>(&self, rng: &mut R) -> Genotype {
        match self {
            GenotypeSpace::Discrete(alpha) => {
                Genotype::Discrete(alpha.iter().map(|a| a.sample(rng)).collect())
            }
            GenotypeSpace::Continuous { dim, lower, upper } => Genotype::Continuous(
                (0..*dim).map(|_| rng.random_range(*lower..=*upper)).collect(),
            ),
        }
    }
}

/// Whether a feature takes values on a lattice (chi-squared fit) or on a
/// continuum (Kolmogorov-Smirnov fit).
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
#[cfg_attr(feature = "serde", serde(rename_all = "snake_case"))]
pub enum FeatureKind {
    Continuous,
    Discrete,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct FeatureInfo {
    pub name: &'static str,
    pub kind: FeatureKind,
}

/// A level was rejected by its generator.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct InvalidLevel;

/// A parameterized level generator with measurable features.
///
/// `random_genotype` samples the unstructured training parameterization and
/// `sample_target` the structured downstream distribution whose features
/// supervise the search. Generation must be a pure function of the genotype.
pub trait Domain {
    type Level: Clone;

    fn name(&self) -> &'static str;

    /// All features the domain can measure, in the order returned by `features`.
    fn feature_info(&self) -> &[FeatureInfo];

    fn genotype_space(&self) -> GenotypeSpace;

    fn random_genotype<R: RngCore + ?Sized>(&self, rng: &mut R) -> Genotype {
        self.genotype_space().sample_uniform(rng)
    }

    fn generate(&self, genotype: &Genotype) -> core::result::Result<Self::Level, InvalidLevel>;

    fn features(&self, level: &Self::Level) -> Vec<f64>;

    /// Draws `n` feature vectors from the downstream level distribution.
    fn sample_target<R: RngCore + ?Sized>(&self, n: usize, rng: &mut R) -> Result<FeatureSamples>;

    fn feature_index(&self, name: &str) -> Option<usize> {
        self.feature_info().iter().position(|f| f.name == name)
    }

    fn feature_names(&self) -> Vec<&'static str> {
        self.feature_info().iter().map(|f| f.name).collect()
    }

    /// Generates and measures in one go; `None` for invalid levels.
    fn evaluate(&self, genotype: &Genotype) -> Option<Vec<f64>> {
        self.generate(genotype).ok().map(|level| self.features(&level))
    }
}
