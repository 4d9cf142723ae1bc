use alloc::vec::Vec;

use rand::RngCore;

use super::cmaes::CmaEs;
use crate::archive::{GridArchive, InsertOutcome};
use crate::domain::Genotype;
use crate::Result;

/// Step size below which the emitter restarts.
pub const MIN_SIGMA: f64 = 1e-8;

/// Orders candidate indices best first: new cells, then replacements by
/// descending gain, then rejections by ascending deficit, then invalid
/// candidates. Ties keep batch order.
pub fn improvement_order(outcomes: &[Option<InsertOutcome>]) -> Vec<usize> {
    let key = |o: &Option<InsertOutcome>| match o {
        Some(InsertOutcome::NewCell) => (0u8, 0.0),
        Some(InsertOutcome::Replaced { improvement }) => (1, -improvement),
        Some(InsertOutcome::RejectedWorse { deficit }) => (2, *deficit),
        None => (3, 0.0),
    };
    let mut idx: Vec<usize> = (0..outcomes.len()).collect();
    idx.sort_by(|&a, &b| {
        let (ka, kb) = (key(&outcomes[a]), key(&outcomes[b]));
        ka.0.cmp(&kb.0).then(ka.1.total_cmp(&kb.1))
    });
    idx
}

/// CMA-ES improvement emitter over a box-bounded continuous genotype.
#[derive(Debug, Clone)]
pub struct EsEmitter {
    lower: f64,
    upper: f64,
    dim: usize,
    sigma0: f64,
    batch: usize,
    es: Option<CmaEs>,
    pending: Vec<Vec<f64>>,
    restarts: usize,
}

impl EsEmitter {
    pub fn new(dim: usize, lower: f64, upper: f64, sigma0: f64, batch: usize) -> Self {
        EsEmitter { lower, upper, dim, sigma0, batch, es: None, pending: Vec::new(), restarts: 0 }
    }

    pub fn restarts(&self) -> usize {
        self.restarts
    }

    pub fn sigma(&self) -> Option<f64> {
        self.es.as_ref().map(|e| e.sigma())
    }

    pub fn state(&self) -> Option<&CmaEs> {
        self.es.as_ref()
    }

    fn restart<R: RngCore + ?Sized>(&mut self, archive: &GridArchive, rng: &mut R) -> Result<()> {
        let mean = match archive.sample_uniform_masked(None, 1, rng) {
            Ok(s) => match s[0].genotype.as_continuous() {
                Some(g) if g.len() == self.dim => g.to_vec(),
                _ => alloc::vec![0.5 * (self.lower + self.upper); self.dim],
            },
            Err(_) => alloc::vec![0.5 * (self.lower + self.upper); self.dim],
        };
        self.es = Some(CmaEs::new(&mean, self.sigma0, self.batch.max(2))?);
        Ok(())
    }

    /// Draws a batch; samples are clipped to the box but the unclipped
    /// draws are kept for the next update.
    pub fn ask<R: RngCore + ?Sized>(&mut self, archive: &GridArchive, rng: &mut R) -> Result<Vec<Genotype>> {
        if self.es.is_none() {
            self.restart(archive, rng)?;
        }
        let es = self.es.as_ref().expect("initialized above");
        let mut raw = es.ask(rng);
        raw.truncate(self.batch);
        let out = raw
            .iter()
            .map(|x| Genotype::Continuous(x.iter().map(|v| v.clamp(self.lower, self.upper)).collect()))
            .collect();
        self.pending = raw;
        Ok(out)
    }

    /// Ranks the last batch by archive improvement and updates the search
    /// distribution, restarting on collapse or numerical failure.
    pub fn tell(&mut self, outcomes: &[Option<InsertOutcome>]) {
        let Some(es) = self.es.as_mut() else { return };
        let ranked: Vec<Vec<f64>> = improvement_order(outcomes)
            .into_iter()
            .filter_map(|i| self.pending.get(i).cloned())
            .collect();
        let failed = es.tell(&ranked).is_err();
        if failed || es.sigma() < MIN_SIGMA {
            log::debug!("ES emitter restart (sigma {:e}, failed {failed})", es.sigma());
            self.es = None;
            self.restarts += 1;
        }
        self.pending.clear();
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::archive::{Dimension, Solution};
    use alloc::vec;
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;

    #[test]
    fn ranking_tiers() {
        let o = [
            Some(InsertOutcome::RejectedWorse { deficit: 0.5 }),
            Some(InsertOutcome::Replaced { improvement: 1.0 }),
            None,
            Some(InsertOutcome::NewCell),
            Some(InsertOutcome::Replaced { improvement: 3.0 }),
            Some(InsertOutcome::RejectedWorse { deficit: 0.1 }),
        ];
        assert_eq!(improvement_order(&o), vec![3, 4, 1, 5, 0, 2]);
    }

    #[test]
    fn corner_mean_stays_in_box() {
        let mut archive = GridArchive::new(vec![Dimension::new("a", 0.0, 1.0, 4)]).unwrap();
        archive
            .insert(Solution { genotype: Genotype::Continuous(vec![1.0; 24]), features: vec![0.5], objective: 0.0, birth_iter: 0 })
            .unwrap();
        let mut rng = ChaCha8Rng::seed_from_u64(4);
        let mut em = EsEmitter::new(24, 0.0, 1.0, 0.1, 8);
        for _ in 0..20 {
            for g in em.ask(&archive, &mut rng).unwrap() {
                assert!(g.as_continuous().unwrap().iter().all(|v| (0.0..=1.0).contains(v)));
            }
            em.tell(&[Some(InsertOutcome::RejectedWorse { deficit: 1.0 }); 8]);
        }
    }

    #[test]
    fn fresh_state_has_requested_spread() {
        let es = CmaEs::new(&[0.5; 24], 0.1, 8).unwrap();
        let mut rng = ChaCha8Rng::seed_from_u64(5);
        let mut sum = [0.0; 24];
        let mut sq = [0.0; 24];
        let n = 10_000;
        let mut drawn = 0;
        while drawn < n {
            for x in es.ask(&mut rng) {
                for (i, v) in x.iter().enumerate() {
                    sum[i] += v;
                    sq[i] += v * v;
                }
                drawn += 1;
            }
        }
        for i in 0..24 {
            let m = sum[i] / drawn as f64;
            let sd = libm::sqrt(sq[i] / drawn as f64 - m * m);
            assert!((sd - 0.1).abs() < 0.01, "{sd}");
        }
    }

    #[test]
    fn constant_rejection_restarts_before_failure() {
        let mut archive = GridArchive::new(vec![Dimension::new("a", 0.0, 1.0, 4)]).unwrap();
        archive
            .insert(Solution { genotype: Genotype::Continuous(vec![0.5; 4]), features: vec![0.5], objective: 0.0, birth_iter: 0 })
            .unwrap();
        let mut rng = ChaCha8Rng::seed_from_u64(6);
        let mut em = EsEmitter::new(4, 0.0, 1.0, 0.1, 8);
        // Reward the candidates closest to a fixed point so sigma collapses.
        for _ in 0..5000 {
            let batch = em.ask(&archive, &mut rng).unwrap();
            let outcomes: Vec<Option<InsertOutcome>> = batch
                .iter()
                .map(|g| {
                    let d: f64 = g.as_continuous().unwrap().iter().map(|v| (v - 0.3) * (v - 0.3)).sum();
                    Some(InsertOutcome::RejectedWorse { deficit: d })
                })
                .collect();
            em.tell(&outcomes);
            if em.restarts() > 0 {
                return;
            }
            assert!(em.sigma().unwrap() > 0.0);
        }
        panic!("no restart");
    }
}
