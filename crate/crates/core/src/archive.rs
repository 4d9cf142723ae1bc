//! Sparse grid archive holding one elite per cell.

use alloc::collections::BTreeMap;
use alloc::string::String;
use alloc::vec::Vec;

use rand::distr::weighted::WeightedIndex;
use rand::distr::Distribution;
use rand::{Rng, RngCore};

use crate::domain::Genotype;
use crate::error::config_err;
use crate::target::CellPrior;
use crate::{Error, Result};

/// One axis of the tessellation: `bins` equal cells over `[lower, upper)`.
#[derive(Debug, Clone, PartialEq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
pub struct Dimension {
    pub name: String,
    pub lower: f64,
    pub upper: f64,
    pub bins: usize,
}

impl Dimension {
    pub fn new(name: impl Into<String>, lower: f64, upper: f64, bins: usize) -> Self {
        Dimension { name: name.into(), lower, upper, bins }
    }

    fn validate(&self) -> Result<()> {
        if !(self.lower.is_finite() && self.upper.is_finite() && self.lower < self.upper) {
            return Err(config_err(alloc::format!(
                "dimension {} needs finite lower < upper, got [{}, {})",
                self.name,
                self.lower,
                self.upper
            )));
        }
        if self.bins == 0 {
            return Err(config_err(alloc::format!("dimension {} needs at least one bin", self.name)));
        }
        Ok(())
    }

    pub fn width(&self) -> f64 {
        (self.upper - self.lower) / self.bins as f64
    }

    /// Lower edge of bin `b`; `edge(bins)` is the upper bound.
    pub fn edge(&self, b: usize) -> f64 {
        if b >= self.bins {
            return self.upper;
        }
        self.lower + (self.upper - self.lower) * b as f64 / self.bins as f64
    }

    pub fn center(&self, b: usize) -> f64 {
        0.5 * (self.edge(b) + self.edge(b + 1))
    }

    /// Bin of `x`, clamped to the boundary bins.
    pub fn bin(&self, x: f64) -> usize {
        let t = libm::floor((x - self.lower) / (self.upper - self.lower) * self.bins as f64);
        if t < 0.0 {
            0
        } else {
            (t as usize).min(self.bins - 1)
        }
    }

    /// `[lower, upper)` with the upper edge included.
    pub fn contains(&self, x: f64) -> bool {
        x >= self.lower && x <= self.upper
    }
}

/// A genotype with its measured features and objective.
#[derive(Debug, Clone, PartialEq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
pub struct Solution {
    pub genotype: Genotype,
    pub features: Vec<f64>,
    pub objective: f64,
    pub birth_iter: u64,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub enum InsertOutcome {
    NewCell,
    /// Objective gain over the replaced incumbent.
    Replaced { improvement: f64 },
    /// Incumbent objective minus candidate objective, nonnegative.
    RejectedWorse { deficit: f64 },
}

impl InsertOutcome {
    pub fn is_accepted(&self) -> bool {
        !matches!(self, InsertOutcome::RejectedWorse { .. })
    }
}

/// Per-dimension sub-box of an archive restricting parent selection.
#[derive(Debug, Clone, PartialEq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
pub struct SampleMask {
    pub bounds: Vec<(f64, f64)>,
}

impl SampleMask {
    pub fn full(archive: &GridArchive) -> Self {
        SampleMask { bounds: archive.dims.iter().map(|d| (d.lower, d.upper)).collect() }
    }

    /// Edge-wise linear interpolation from `from` (t = 0) to `to` (t = 1).
    pub fn lerp(from: &[(f64, f64)], to: &[(f64, f64)], t: f64) -> Self {
        let t = t.clamp(0.0, 1.0);
        SampleMask {
            bounds: from
                .iter()
                .zip(to)
                .map(|(&(a0, b0), &(a1, b1))| (a0 + (a1 - a0) * t, b0 + (b1 - b0) * t))
                .collect(),
        }
    }

    pub fn contains(&self, point: &[f64]) -> bool {
        self.bounds.iter().zip(point).all(|(&(lo, hi), &x)| x >= lo && x <= hi)
    }

    /// True if every interval of `self` lies inside the matching one of `other`.
    pub fn is_within(&self, other: &SampleMask) -> bool {
        self.bounds.iter().zip(&other.bounds).all(|(a, b)| a.0 >= b.0 && a.1 <= b.1)
    }
}

/// A k-dimensional grid archive with sparse cell storage.
///
/// Cells are addressed by row-major flat index, last dimension fastest.
#[derive(Debug, Clone)]
pub struct GridArchive {
    dims: Vec<Dimension>,
    cells: BTreeMap<usize, Solution>,
    /// Occupied flat indices in insertion order, for O(1) uniform draws.
    occupied: Vec<usize>,
}

/// Two archives are equal when they hold the same elites over the same
/// grid, regardless of the order the cells were first filled in.
impl PartialEq for GridArchive {
    fn eq(&self, other: &Self) -> bool {
        self.dims == other.dims && self.cells == other.cells
    }
}

impl GridArchive {
    pub fn new(dims: Vec<Dimension>) -> Result<Self> {
        if dims.is_empty() {
            return Err(config_err("archive needs at least one dimension"));
        }
        for d in &dims {
            d.validate()?;
        }
        let total = dims.iter().try_fold(1usize, |acc, d| acc.checked_mul(d.bins));
        if total.is_none() {
            return Err(config_err("archive cell count overflows"));
        }
        Ok(GridArchive { dims, cells: BTreeMap::new(), occupied: Vec::new() })
    }

    pub fn dimensions(&self) -> &[Dimension] {
        &self.dims
    }

    pub fn bounds(&self) -> Vec<(f64, f64)> {
        self.dims.iter().map(|d| (d.lower, d.upper)).collect()
    }

    pub fn num_cells(&self) -> usize {
        self.dims.iter().map(|d| d.bins).product()
    }

    pub fn len(&self) -> usize {
        self.cells.len()
    }

    pub fn is_empty(&self) -> bool {
        self.cells.is_empty()
    }

    pub fn coverage(&self) -> f64 {
        self.len() as f64 / self.num_cells() as f64
    }

    fn check(&self, features: &[f64]) -> Result<()> {
        if features.len() != self.dims.len() {
            return Err(Error::DimensionMismatch { expected: self.dims.len(), got: features.len() });
        }
        if let Some((dim, &value)) = features.iter().enumerate().find(|(_, v)| !v.is_finite()) {
            return Err(Error::NonFiniteFeature { dim, value });
        }
        Ok(())
    }

    /// Per-dimension bin indices of a feature vector.
    pub fn cell_index(&self, features: &[f64]) -> Result<Vec<usize>> {
        self.check(features)?;
        Ok(self.dims.iter().zip(features).map(|(d, &x)| d.bin(x)).collect())
    }

    pub fn flat_index(&self, index: &[usize]) -> usize {
        index.iter().zip(&self.dims).fold(0, |acc, (&i, d)| acc * d.bins + i)
    }

    pub fn unflatten(&self, mut flat: usize) -> Vec<usize> {
        let mut out = alloc::vec![0; self.dims.len()];
        for (o, d) in out.iter_mut().zip(&self.dims).rev() {
            *o = flat % d.bins;
            flat /= d.bins;
        }
        out
    }

    pub fn cell_center(&self, flat: usize) -> Vec<f64> {
        self.unflatten(flat).iter().zip(&self.dims).map(|(&b, d)| d.center(b)).collect()
    }

    /// True if the features fall inside the bounds without clamping.
    pub fn in_bounds(&self, features: &[f64]) -> bool {
        features.len() == self.dims.len() && self.dims.iter().zip(features).all(|(d, &x)| d.contains(x))
    }

    /// Stores `s` if its cell is empty or it strictly beats the incumbent.
    pub fn insert(&mut self, s: Solution) -> Result<InsertOutcome> {
        let idx = self.cell_index(&s.features)?;
        let flat = self.flat_index(&idx);
        match self.cells.get_mut(&flat) {
            None => {
                self.cells.insert(flat, s);
                self.occupied.push(flat);
                Ok(InsertOutcome::NewCell)
            }
            Some(incumbent) if s.objective > incumbent.objective => {
                let improvement = s.objective - incumbent.objective;
                *incumbent = s;
                Ok(InsertOutcome::Replaced { improvement })
            }
            Some(incumbent) => Ok(InsertOutcome::RejectedWorse { deficit: incumbent.objective - s.objective }),
        }
    }

    pub fn get(&self, flat: usize) -> Option<&Solution> {
        self.cells.get(&flat)
    }

    pub fn get_by_features(&self, features: &[f64]) -> Option<&Solution> {
        let idx = self.cell_index(features).ok()?;
        self.get(self.flat_index(&idx))
    }

    /// Occupied cells in ascending flat-index order.
    pub fn iter(&self) -> impl Iterator<Item = (usize, &Solution)> {
        self.cells.iter().map(|(&k, v)| (k, v))
    }

    /// True if the center of cell `flat` lies inside `mask`.
    pub fn cell_in_mask(&self, mut flat: usize, mask: &SampleMask) -> bool {
        for (d, &(lo, hi)) in self.dims.iter().zip(&mask.bounds).rev() {
            let c = d.center(flat % d.bins);
            if c < lo || c > hi {
                return false;
            }
            flat /= d.bins;
        }
        true
    }

    /// Occupied cells whose centers lie inside `mask`.
    pub fn cells_in_mask(&self, mask: &SampleMask) -> Vec<usize> {
        self.occupied.iter().copied().filter(|&c| self.cell_in_mask(c, mask)).collect()
    }

    pub fn count_in_mask(&self, mask: &SampleMask) -> usize {
        self.occupied.iter().filter(|&&c| self.cell_in_mask(c, mask)).count()
    }

    /// `n` uniform draws with replacement from the occupied cells inside
    /// `mask`, or from all occupied cells when the mask holds none of them.
    pub fn sample_uniform_masked<R: RngCore + ?Sized>(
        &self,
        mask: Option<&SampleMask>,
        n: usize,
        rng: &mut R,
    ) -> Result<Vec<&Solution>> {
        if self.is_empty() {
            return Err(Error::EmptyArchive);
        }
        let pool = match mask {
            Some(m) => {
                let inside = self.cells_in_mask(m);
                if inside.is_empty() {
                    log::warn!("sample mask holds no occupied cells; sampling the whole archive");
                    self.occupied.clone()
                } else {
                    inside
                }
            }
            None => self.occupied.clone(),
        };
        Ok((0..n).map(|_| &self.cells[&pool[rng.random_range(0..pool.len())]]).collect())
    }

    /// One draw with probability proportional to the prior over occupied cells.
    pub fn sample_prior_weighted<R: RngCore + ?Sized>(&self, prior: &CellPrior, rng: &mut R) -> Result<&Solution> {
        PriorSampler::new(self, prior)?.sample(self, rng)
    }

    /// A fresh archive over `dims`, refilled with every solution whose
    /// recomputed features fall inside the new bounds. Solutions for which
    /// `features_of` returns `None` are dropped.
    pub fn rebound(&self, dims: Vec<Dimension>, mut features_of: impl FnMut(&Solution) -> Option<Vec<f64>>) -> Result<GridArchive> {
        let mut out = GridArchive::new(dims)?;
        for (_, s) in self.iter() {
            let Some(features) = features_of(s) else { continue };
            if features.iter().all(|v| v.is_finite()) && out.in_bounds(&features) {
                out.insert(Solution { features, ..s.clone() })?;
            }
        }
        Ok(out)
    }
}

/// Precomputed prior-weighted draws over the occupied cells of one archive
/// state. Falls back to uniform when no occupied cell carries prior mass.
#[derive(Debug, Clone)]
pub struct PriorSampler {
    cells: Vec<usize>,
    index: Option<WeightedIndex<f64>>,
}

impl PriorSampler {
    pub fn new(archive: &GridArchive, prior: &CellPrior) -> Result<Self> {
        if archive.is_empty() {
            return Err(Error::EmptyArchive);
        }
        if prior.len() != archive.num_cells() {
            return Err(config_err(alloc::format!(
                "prior covers {} cells, archive has {}",
                prior.len(),
                archive.num_cells()
            )));
        }
        let cells: Vec<usize> = archive.iter().map(|(c, _)| c).collect();
        let index = WeightedIndex::new(cells.iter().map(|&c| prior.weight(c))).ok();
        if index.is_none() {
            log::warn!("occupied cells carry no prior mass; sampling uniformly");
        }
        Ok(PriorSampler { cells, index })
    }

    pub fn sample_cell<R: RngCore + ?Sized>(&self, rng: &mut R) -> usize {
        match &self.index {
            Some(w) => self.cells[w.sample(rng)],
            None => self.cells[rng.random_range(0..self.cells.len())],
        }
    }

    pub fn sample<'a, R: RngCore + ?Sized>(&self, archive: &'a GridArchive, rng: &mut R) -> Result<&'a Solution> {
        archive.get(self.sample_cell(rng)).ok_or(Error::EmptyArchive)
    }
}
