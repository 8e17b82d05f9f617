//! Shared inputs for the benchmarks.

use fairrec_core::{profiles, ContextVector, Environment, Interaction};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

pub fn rng(seed: u64) -> ChaCha8Rng {
    ChaCha8Rng::seed_from_u64(seed)
}

/// `n` uniform contexts of dimension `d`.
pub fn contexts(d: usize, n: usize, seed: u64) -> Vec<ContextVector> {
    let mut r = rng(seed);
    (0..n)
        .map(|_| {
            ContextVector::new((0..d).map(|_| r.random::<f64>()).collect())
                .expect("values in [0, 1]")
        })
        .collect()
}

pub fn calibrated_env() -> Environment {
    Environment::new(profiles::calibrated()).expect("shipped profile is valid")
}

pub fn interactions(env: &Environment, n: usize, seed: u64) -> Vec<Interaction> {
    let mut r = rng(seed);
    (0..n).map(|_| env.sample_interaction(&mut r)).collect()
}
