//! Seeded random chain generation for fuzz harnesses.
//!
//! Kernels are drawn by sampling integer numerators per entry and
//! normalizing each row exactly, which keeps the rationals small enough for
//! fast exact flow computations. Rows that come up all-zero get a self-loop.
//! Everything is driven by a caller-supplied RNG, so runs are reproducible
//! bit for bit under a fixed seed.

use num::BigRational;
use rand::Rng;
use rand_chacha::rand_core::SeedableRng;
use rand_chacha::ChaCha8Rng;

use crate::chain::MarkovChain;
use crate::prob::Prob;

/// Default bound on sampled numerators.
pub const DEFAULT_NUMERATOR_BOUND: u32 = 6;

/// A deterministic RNG for fuzz instance `index` under `seed`.
pub fn instance_rng(seed: u64, index: u64) -> ChaCha8Rng {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    rng.set_stream(index);
    rng
}

/// Draws a row-stochastic chain on `n_states` states with labels `s0..`.
///
/// Each kernel entry gets an integer numerator in `0..=numerator_bound`
/// (zero entries stay absent), then rows are normalized exactly.
pub fn random_chain(rng: &mut impl Rng, n_states: usize, numerator_bound: u32) -> MarkovChain {
    let states: Vec<String> = (0..n_states).map(|i| format!("s{i}")).collect();
    let mut rows: Vec<Vec<Prob>> = Vec::with_capacity(n_states);
    for i in 0..n_states {
        let mut numerators: Vec<u32> =
            (0..n_states).map(|_| rng.gen_range(0..=numerator_bound)).collect();
        let total: u64 = numerators.iter().map(|&v| v as u64).sum();
        if total == 0 {
            numerators[i] = 1;
        }
        let total: i64 = numerators.iter().map(|&v| v as i64).sum();
        rows.push(
            numerators
                .into_iter()
                .map(|v| {
                    Prob::new(BigRational::new((v as i64).into(), total.into()))
                        .expect("normalized entry")
                })
                .collect(),
        );
    }
    MarkovChain::from_dense(states, rows).expect("rows normalized exactly")
}

/// Like [`random_chain`] but with strictly positive entries, which makes the
/// chain irreducible and aperiodic.
pub fn random_positive_chain(
    rng: &mut impl Rng,
    n_states: usize,
    numerator_bound: u32,
) -> MarkovChain {
    let states: Vec<String> = (0..n_states).map(|i| format!("s{i}")).collect();
    let mut rows: Vec<Vec<Prob>> = Vec::with_capacity(n_states);
    for _ in 0..n_states {
        let numerators: Vec<u32> =
            (0..n_states).map(|_| rng.gen_range(1..=numerator_bound.max(1))).collect();
        let total: i64 = numerators.iter().map(|&v| v as i64).sum();
        rows.push(
            numerators
                .into_iter()
                .map(|v| {
                    Prob::new(BigRational::new((v as i64).into(), total.into()))
                        .expect("normalized entry")
                })
                .collect(),
        );
    }
    MarkovChain::from_dense(states, rows).expect("rows normalized exactly")
}
