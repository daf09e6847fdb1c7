#![allow(dead_code)]

use gaa_core::{EntropySpec, SimplexPoint};
use proptest::prelude::*;

/// Interior point with every coordinate at least `floor / n` of the mass.
pub fn interior_point(dim: usize) -> impl Strategy<Value = SimplexPoint> {
    prop::collection::vec(0.02f64..1.0, dim)
        .prop_map(|w| {
            let s: f64 = w.iter().sum();
            SimplexPoint::new(w.iter().map(|x| x / s).collect()).unwrap()
        })
}

pub fn any_interior_point(max_dim: usize) -> impl Strategy<Value = SimplexPoint> {
    (2..=max_dim).prop_flat_map(interior_point)
}

pub fn entropy_families() -> Vec<EntropySpec> {
    vec![
        EntropySpec::neg_shannon(1.0).unwrap(),
        EntropySpec::neg_shannon(0.5).unwrap(),
        EntropySpec::neg_shannon(2.0).unwrap(),
        EntropySpec::neg_tsallis(0.5, 1.0).unwrap(),
        EntropySpec::neg_tsallis(2.0, 1.0).unwrap(),
        EntropySpec::neg_tsallis(3.0, 0.7).unwrap(),
        EntropySpec::quadratic(1.0).unwrap(),
        EntropySpec::quadratic(2.0).unwrap(),
    ]
}

pub fn entropy() -> impl Strategy<Value = EntropySpec> {
    prop::sample::select(entropy_families())
}

pub fn dual(dim: usize, range: f64) -> impl Strategy<Value = Vec<f64>> {
    prop::collection::vec(-range..range, dim)
}

pub fn point(w: &[f64]) -> SimplexPoint {
    SimplexPoint::new(w.to_vec()).unwrap()
}
