//! Seeded, portable random streams.
//!
//! Every stream is a ChaCha20 generator keyed by `seed` (expanded with
//! `SeedableRng::seed_from_u64`, a PCG32-based expansion that rand_core
//! documents as portable) with the 64-bit stream id
//! `(purpose << 32) | index`. Streams for different purposes or indices
//! never overlap, so experts, outcomes and certification samples can be
//! drawn independently and reproduced on any platform.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha20Rng;

use crate::simplex::SimplexPoint;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
#[repr(u32)]
pub enum Purpose {
    Outcomes = 1,
    Expert = 2,
    Certification = 3,
    Property = 4,
}

pub fn stream(seed: u64, purpose: Purpose, index: u32) -> ChaCha20Rng {
    let mut rng = ChaCha20Rng::seed_from_u64(seed);
    rng.set_stream(((purpose as u64) << 32) | index as u64);
    rng
}

/// Uniform draw from the simplex (Dirichlet(1, ..., 1)) via normalised exponentials.
pub fn uniform_simplex<R: Rng + ?Sized>(rng: &mut R, dimension: usize) -> SimplexPoint {
    let draws: Vec<f64> = (0..dimension)
        .map(|_| {
            // gen::<f64>() is in [0, 1); 1 - u is in (0, 1]
            let u: f64 = rng.gen();
            -(1.0 - u).ln()
        })
        .collect();
    if draws.iter().all(|&d| d == 0.0) {
        return SimplexPoint::uniform(dimension);
    }
    SimplexPoint::from_unnormalized(draws)
}

/// Inverse-CDF draw of an index from `probabilities`.
pub fn categorical<R: Rng + ?Sized>(rng: &mut R, probabilities: &[f64]) -> usize {
    let u: f64 = rng.gen();
    let mut cumulative = 0.0;
    for (i, p) in probabilities.iter().enumerate() {
        cumulative += p;
        if u < cumulative {
            return i;
        }
    }
    probabilities.len() - 1
}
