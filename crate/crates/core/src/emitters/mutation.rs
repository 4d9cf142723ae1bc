use alloc::vec::Vec;

use rand::{Rng, RngCore};

use crate::domain::Alphabet;

/// Resamples each gene with probability `rate`, uniformly among the other
/// symbols of its alphabet. Single-symbol alphabets are left untouched.
pub fn mutate<R: RngCore + ?Sized>(parent: &[i32], alphabets: &[Alphabet], rate: f64, rng: &mut R) -> Vec<i32> {
    parent
        .iter()
        .zip(alphabets)
        .map(|(&g, a)| {
            if a.size() < 2 || rate <= 0.0 || !rng.random_bool(rate.min(1.0)) {
                return g;
            }
            let v = a.min + rng.random_range(0..a.size() as i32 - 1);
            if v >= g {
                v + 1
            } else {
                v
            }
        })
        .collect()
}
