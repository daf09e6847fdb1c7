//! Shared fixtures for the criterion benches.

use gaa_core::rng::{self, Purpose};
use gaa_core::{ExpertPanel, SimplexPoint};

/// Seeded random panels and outcomes for a game of `rounds` rounds.
pub fn random_game(
    seed: u64,
    experts: usize,
    outcomes: usize,
    rounds: usize,
) -> (Vec<ExpertPanel>, Vec<usize>) {
    let mut r = rng::stream(seed, Purpose::Property, 0);
    let uniform = vec![1.0 / outcomes as f64; outcomes];
    let panels = (0..rounds)
        .map(|_| {
            let predictions: Vec<SimplexPoint> = (0..experts)
                .map(|_| rng::uniform_simplex(&mut r, outcomes))
                .collect();
            ExpertPanel::new(predictions).expect("nonempty panel")
        })
        .collect();
    let xs = (0..rounds).map(|_| rng::categorical(&mut r, &uniform)).collect();
    (panels, xs)
}
