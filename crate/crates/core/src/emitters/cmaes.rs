//! Covariance matrix adaptation evolution strategy with rank-based updates.

use alloc::vec::Vec;

use nalgebra::{DMatrix, DVector, SymmetricEigen};
use rand::RngCore;
use rand_distr::{Distribution, StandardNormal};

use crate::{Error, Result};

/// Largest tolerated covariance condition number before a restart.
const MAX_CONDITION: f64 = 1e14;

#[derive(Debug, Clone)]
pub struct CmaEs {
    dim: usize,
    lambda: usize,
    mu: usize,
    weights: Vec<f64>,
    mueff: f64,
    cc: f64,
    cs: f64,
    c1: f64,
    cmu: f64,
    damps: f64,
    chi_n: f64,
    mean: DVector<f64>,
    sigma: f64,
    pc: DVector<f64>,
    ps: DVector<f64>,
    cov: DMatrix<f64>,
    /// Eigenbasis `B` and axis lengths `D` of `cov`.
    basis: DMatrix<f64>,
    axes: DVector<f64>,
    eigen_at: usize,
    evaluations: usize,
    generation: usize,
}

impl CmaEs {
    /// Default population size `4 + floor(3 ln n)`.
    pub fn default_lambda(dim: usize) -> usize {
        4 + libm::floor(3.0 * libm::log(dim as f64)) as usize
    }

    pub fn new(mean: &[f64], sigma: f64, lambda: usize) -> Result<Self> {
        let dim = mean.len();
        if dim == 0 || lambda < 2 || !(sigma > 0.0) {
            return Err(Error::Config("CMA-ES needs dim >= 1, lambda >= 2 and sigma > 0".into()));
        }
        let n = dim as f64;
        let mu = lambda / 2;
        let raw: Vec<f64> = (0..mu)
            .map(|i| libm::log((lambda as f64 + 1.0) / 2.0) - libm::log(i as f64 + 1.0))
            .collect();
        let sum: f64 = raw.iter().sum();
        let weights: Vec<f64> = raw.iter().map(|w| w / sum).collect();
        let mueff = 1.0 / weights.iter().map(|w| w * w).sum::<f64>();
        let cc = (4.0 + mueff / n) / (n + 4.0 + 2.0 * mueff / n);
        let cs = (mueff + 2.0) / (n + mueff + 5.0);
        let c1 = 2.0 / ((n + 1.3) * (n + 1.3) + mueff);
        let cmu = (1.0 - c1).min(2.0 * (mueff - 2.0 + 1.0 / mueff) / ((n + 2.0) * (n + 2.0) + mueff));
        let damps = 1.0 + 2.0 * (libm::sqrt((mueff - 1.0) / (n + 1.0)) - 1.0).max(0.0) + cs;
        let chi_n = libm::sqrt(n) * (1.0 - 1.0 / (4.0 * n) + 1.0 / (21.0 * n * n));
        Ok(CmaEs {
            dim,
            lambda,
            mu,
            weights,
            mueff,
            cc,
            cs,
            c1,
            cmu,
            damps,
            chi_n,
            mean: DVector::from_column_slice(mean),
            sigma,
            pc: DVector::zeros(dim),
            ps: DVector::zeros(dim),
            cov: DMatrix::identity(dim, dim),
            basis: DMatrix::identity(dim, dim),
            axes: DVector::from_element(dim, 1.0),
            eigen_at: 0,
            evaluations: 0,
            generation: 0,
        })
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn lambda(&self) -> usize {
        self.lambda
    }

    pub fn sigma(&self) -> f64 {
        self.sigma
    }

    pub fn mean(&self) -> &[f64] {
        self.mean.as_slice()
    }

    pub fn generation(&self) -> usize {
        self.generation
    }

    pub fn evaluations(&self) -> usize {
        self.evaluations
    }

    /// `lambda` samples from `N(mean, sigma^2 C)`.
    pub fn ask<R: RngCore + ?Sized>(&self, rng: &mut R) -> Vec<Vec<f64>> {
        (0..self.lambda)
            .map(|_| {
                let z = DVector::from_fn(self.dim, |_, _| StandardNormal.sample(rng));
                let y = &self.basis * z.component_mul(&self.axes);
                (&self.mean + y * self.sigma).as_slice().to_vec()
            })
            .collect()
    }

    /// Updates the distribution from samples ordered best first. Only the
    /// first `mu` entries are used; fewer than `mu` is an error.
    pub fn tell(&mut self, ranked: &[Vec<f64>]) -> Result<()> {
        if ranked.len() < self.mu || ranked.iter().any(|x| x.len() != self.dim) {
            return Err(Error::Config("CMA-ES tell needs at least mu samples of the right length".into()));
        }
        let n = self.dim as f64;
        self.evaluations += ranked.len();
        self.generation += 1;
        let old = self.mean.clone();
        let mut mean = DVector::zeros(self.dim);
        for (w, x) in self.weights.iter().zip(ranked) {
            mean += DVector::from_column_slice(x) * *w;
        }
        let step = (&mean - &old) / self.sigma;

        // C^{-1/2} (m' - m) / sigma in the eigenbasis.
        let inv_axes = self.axes.map(|d| 1.0 / d);
        let whitened = &self.basis * (self.basis.transpose() * &step).component_mul(&inv_axes);
        self.ps = &self.ps * (1.0 - self.cs) + whitened * libm::sqrt(self.cs * (2.0 - self.cs) * self.mueff);
        let ps_norm = self.ps.norm();
        let decay = 1.0 - libm::pow(1.0 - self.cs, 2.0 * self.generation as f64);
        let hsig = ps_norm / libm::sqrt(decay) / self.chi_n < 1.4 + 2.0 / (n + 1.0);
        let h = if hsig { 1.0 } else { 0.0 };
        self.pc = &self.pc * (1.0 - self.cc) + &step * (h * libm::sqrt(self.cc * (2.0 - self.cc) * self.mueff));

        let mut rank_mu = DMatrix::zeros(self.dim, self.dim);
        for (w, x) in self.weights.iter().zip(ranked) {
            let y = (DVector::from_column_slice(x) - &old) / self.sigma;
            rank_mu += &y * y.transpose() * *w;
        }
        let correction = (1.0 - h) * self.cc * (2.0 - self.cc);
        self.cov = &self.cov * (1.0 - self.c1 - self.cmu + self.c1 * correction)
            + &self.pc * self.pc.transpose() * self.c1
            + rank_mu * self.cmu;
        self.sigma *= libm::exp((self.cs / self.damps) * (ps_norm / self.chi_n - 1.0));
        self.mean = mean;

        if !self.sigma.is_finite() || self.mean.iter().any(|v| !v.is_finite()) {
            return Err(Error::Numerical("non-finite mean or step size".into()));
        }
        // Lazy decomposition: refresh roughly every lambda / (10 n (c1 + cmu)) generations.
        let gap = (self.lambda as f64 / ((self.c1 + self.cmu) * n * 10.0)).max(1.0);
        if (self.evaluations - self.eigen_at) as f64 >= gap * self.lambda as f64 {
            self.decompose()?;
        }
        Ok(())
    }

    fn decompose(&mut self) -> Result<()> {
        self.eigen_at = self.evaluations;
        let sym = (&self.cov + self.cov.transpose()) * 0.5;
        if sym.iter().any(|v| !v.is_finite()) {
            return Err(Error::Numerical("non-finite covariance".into()));
        }
        let eig = SymmetricEigen::new(sym.clone());
        let min = eig.eigenvalues.min();
        let max = eig.eigenvalues.max();
        if !(min > 0.0) || max / min > MAX_CONDITION {
            return Err(Error::Numerical("covariance lost positive definiteness".into()));
        }
        self.cov = sym;
        self.axes = eig.eigenvalues.map(libm::sqrt);
        self.basis = eig.eigenvectors;
        Ok(())
    }

    /// Runs ask/tell on `f` until `f < target` or `max_evals` is spent.
    /// Returns the best value and the evaluations used.
    pub fn minimize<R: RngCore + ?Sized>(
        &mut self,
        mut f: impl FnMut(&[f64]) -> f64,
        target: f64,
        max_evals: usize,
        rng: &mut R,
    ) -> Result<(f64, usize)> {
        let mut best = f64::INFINITY;
        let mut used = 0;
        while used < max_evals {
            let xs = self.ask(rng);
            let mut scored: Vec<(f64, Vec<f64>)> = xs.into_iter().map(|x| (f(&x), x)).collect();
            used += scored.len();
            scored.sort_by(|a, b| a.0.total_cmp(&b.0));
            best = best.min(scored[0].0);
            if best < target {
                break;
            }
            let ranked: Vec<Vec<f64>> = scored.into_iter().map(|(_, x)| x).collect();
            self.tell(&ranked)?;
        }
        Ok((best, used))
    }
}
