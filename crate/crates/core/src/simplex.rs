//! Probability vectors, dual vectors and grids on the finite simplex.
//!
//! A [`SimplexPoint`] is a probability vector over a finite index set. A
//! [`DualVector`] is a finite real vector that is only meaningful modulo the
//! all-ones direction: every conjugate of an entropy on the simplex is
//! translation invariant, so `v` and `v + c·1` are compared as equal.

use crate::error::{invalid, Result};

/// Sum tolerance for a stored simplex point.
pub const SIMPLEX_TOLERANCE: f64 = 1e-9;

/// Inputs within this distance of unit mass are renormalised, anything worse is rejected.
pub const RENORMALIZE_TOLERANCE: f64 = 1e-6;

#[derive(Debug, Clone, PartialEq)]
pub struct SimplexPoint {
    weights: Vec<f64>,
}

impl SimplexPoint {
    /// Validates and stores a probability vector.
    ///
    /// Entries must be finite and nonnegative (round-off negatives down to
    /// `-1e-12` are zeroed). A total mass within [`RENORMALIZE_TOLERANCE`] of
    /// one is renormalised.
    pub fn new(weights: Vec<f64>) -> Result<Self> {
        if weights.is_empty() {
            return Err(invalid("simplex point must have at least one coordinate"));
        }
        let mut weights = weights;
        for (i, w) in weights.iter_mut().enumerate() {
            if !w.is_finite() {
                return Err(invalid(format!("coordinate {i} is not finite")));
            }
            if *w < 0.0 {
                if *w < -1e-12 {
                    return Err(invalid(format!("coordinate {i} is negative ({w})")));
                }
                *w = 0.0;
            }
        }
        let total: f64 = weights.iter().sum();
        if (total - 1.0).abs() > RENORMALIZE_TOLERANCE {
            return Err(invalid(format!("weights sum to {total}, not 1")));
        }
        if (total - 1.0).abs() > 0.0 {
            weights.iter_mut().for_each(|w| *w /= total);
        }
        Ok(Self { weights })
    }

    /// Normalises a nonnegative vector with positive mass.
    pub(crate) fn from_unnormalized(mut weights: Vec<f64>) -> Self {
        let total: f64 = weights.iter().sum();
        debug_assert!(total > 0.0 && total.is_finite());
        weights.iter_mut().for_each(|w| *w = (*w / total).max(0.0));
        Self { weights }
    }

    pub fn uniform(dimension: usize) -> Self {
        assert!(dimension > 0, "simplex dimension must be positive");
        Self {
            weights: vec![1.0 / dimension as f64; dimension],
        }
    }

    /// The point mass on `index`.
    pub fn vertex(dimension: usize, index: usize) -> Self {
        assert!(index < dimension, "vertex index out of range");
        let mut weights = vec![0.0; dimension];
        weights[index] = 1.0;
        Self { weights }
    }

    pub fn dimension(&self) -> usize {
        self.weights.len()
    }

    pub fn weights(&self) -> &[f64] {
        &self.weights
    }

    pub fn into_weights(self) -> Vec<f64> {
        self.weights
    }

    pub fn dot(&self, v: &[f64]) -> f64 {
        debug_assert_eq!(self.weights.len(), v.len());
        self.weights.iter().zip(v).map(|(a, b)| a * b).sum()
    }

    /// True when no coordinate is exactly zero.
    pub fn is_interior(&self) -> bool {
        self.weights.iter().all(|&w| w > 0.0)
    }

    pub fn min_weight(&self) -> f64 {
        self.weights.iter().cloned().fold(f64::INFINITY, f64::min)
    }

    pub fn max_abs_diff(&self, other: &SimplexPoint) -> f64 {
        max_abs_diff(&self.weights, &other.weights)
    }
}

impl AsRef<[f64]> for SimplexPoint {
    fn as_ref(&self) -> &[f64] {
        &self.weights
    }
}

/// A point of the dual space, compared modulo the all-ones vector.
#[derive(Debug, Clone, PartialEq)]
pub struct DualVector {
    values: Vec<f64>,
}

impl DualVector {
    pub fn new(values: Vec<f64>) -> Result<Self> {
        if let Some(i) = values.iter().position(|v| !v.is_finite()) {
            return Err(invalid(format!("dual coordinate {i} is not finite")));
        }
        Ok(Self { values })
    }

    pub fn zeros(dimension: usize) -> Self {
        Self {
            values: vec![0.0; dimension],
        }
    }

    pub fn dimension(&self) -> usize {
        self.values.len()
    }

    pub fn values(&self) -> &[f64] {
        &self.values
    }

    pub fn into_values(self) -> Vec<f64> {
        self.values
    }

    /// `self + alpha·1`.
    pub fn shifted(&self, alpha: f64) -> Self {
        Self {
            values: self.values.iter().map(|v| v + alpha).collect(),
        }
    }

    pub fn scaled(&self, factor: f64) -> Self {
        Self {
            values: self.values.iter().map(|v| v * factor).collect(),
        }
    }

    pub fn sub(&self, other: &[f64]) -> Result<Self> {
        if other.len() != self.values.len() {
            return Err(invalid(format!(
                "dimension mismatch: {} vs {}",
                self.values.len(),
                other.len()
            )));
        }
        DualVector::new(self.values.iter().zip(other).map(|(a, b)| a - b).collect())
    }

    pub fn add(&self, other: &[f64]) -> Result<Self> {
        let negated: Vec<f64> = other.iter().map(|v| -v).collect();
        self.sub(&negated)
    }

    /// Sup-norm distance after removing the mean of `self - other`.
    pub fn distance_mod_ones(&self, other: &DualVector) -> f64 {
        assert_eq!(self.values.len(), other.values.len(), "dimension mismatch");
        if self.values.is_empty() {
            return 0.0;
        }
        let diff: Vec<f64> = self
            .values
            .iter()
            .zip(&other.values)
            .map(|(a, b)| a - b)
            .collect();
        let mean = diff.iter().sum::<f64>() / diff.len() as f64;
        diff.iter().map(|d| (d - mean).abs()).fold(0.0, f64::max)
    }

    pub fn equivalent(&self, other: &DualVector, tolerance: f64) -> bool {
        self.distance_mod_ones(other) <= tolerance
    }
}

impl AsRef<[f64]> for DualVector {
    fn as_ref(&self) -> &[f64] {
        &self.values
    }
}

pub(crate) fn max_abs_diff(a: &[f64], b: &[f64]) -> f64 {
    a.iter()
        .zip(b)
        .map(|(x, y)| (x - y).abs())
        .fold(0.0, f64::max)
}

/// Euclidean projection onto the probability simplex (sort-and-threshold).
pub fn project_to_simplex(v: &[f64]) -> Result<SimplexPoint> {
    if v.is_empty() {
        return Err(invalid("cannot project an empty vector"));
    }
    if let Some(i) = v.iter().position(|x| !x.is_finite()) {
        return Err(invalid(format!("coordinate {i} is not finite")));
    }
    let mut sorted = v.to_vec();
    sorted.sort_by(|a, b| b.total_cmp(a));
    let mut cumulative = 0.0;
    let mut threshold = 0.0;
    for (k, &u) in sorted.iter().enumerate() {
        cumulative += u;
        let t = (cumulative - 1.0) / (k + 1) as f64;
        if u - t > 0.0 {
            threshold = t;
        }
    }
    let weights: Vec<f64> = v.iter().map(|x| (x - threshold).max(0.0)).collect();
    Ok(SimplexPoint::from_unnormalized(weights))
}

/// Raises every coordinate to at least `epsilon`, taking the mass from the
/// unclamped coordinates in proportion to their weight.
pub fn clamp_interior(p: &SimplexPoint, epsilon: f64) -> Result<SimplexPoint> {
    let n = p.dimension();
    if !(epsilon > 0.0 && epsilon < 1.0 / n as f64) {
        return Err(invalid(format!(
            "clamp epsilon {epsilon} must lie in (0, 1/{n})"
        )));
    }
    if p.min_weight() >= epsilon {
        return Ok(p.clone());
    }
    let mut clamped = vec![false; n];
    // Each pass clamps at least one more coordinate, so n passes suffice.
    for _ in 0..n {
        let free_mass: f64 = p
            .weights
            .iter()
            .zip(&clamped)
            .filter(|(_, &c)| !c)
            .map(|(w, _)| w)
            .sum();
        let fixed = clamped.iter().filter(|&&c| c).count() as f64 * epsilon;
        let scale = (1.0 - fixed) / free_mass;
        let mut changed = false;
        for (i, w) in p.weights.iter().enumerate() {
            if !clamped[i] && w * scale < epsilon {
                clamped[i] = true;
                changed = true;
            }
        }
        if !changed {
            let weights = p
                .weights
                .iter()
                .zip(&clamped)
                .map(|(w, &c)| if c { epsilon } else { w * scale })
                .collect();
            return Ok(SimplexPoint { weights });
        }
    }
    // Everything clamped: only possible at epsilon = 1/n, which is rejected above.
    Ok(SimplexPoint::uniform(n))
}

/// Regular grid on the simplex: all compositions of `resolution` into
/// `dimension` nonnegative parts, divided by `resolution`.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct SimplexGrid {
    dimension: usize,
    resolution: usize,
}

impl SimplexGrid {
    pub fn new(dimension: usize, resolution: usize) -> Result<Self> {
        if dimension == 0 || resolution == 0 {
            return Err(invalid("grid dimension and resolution must be positive"));
        }
        Ok(Self {
            dimension,
            resolution,
        })
    }

    pub fn dimension(&self) -> usize {
        self.dimension
    }

    pub fn resolution(&self) -> usize {
        self.resolution
    }

    /// `C(resolution + dimension - 1, dimension - 1)`.
    pub fn len(&self) -> usize {
        binomial(self.resolution + self.dimension - 1, self.dimension - 1)
    }

    pub fn is_empty(&self) -> bool {
        false
    }

    pub fn iter(&self) -> GridIter {
        let mut counts = vec![0usize; self.dimension];
        counts[0] = self.resolution;
        GridIter {
            counts: Some(counts),
            resolution: self.resolution,
        }
    }

    /// Largest resolution whose grid has at most `max_points` points (at least 1).
    pub fn resolution_for_budget(dimension: usize, wanted: usize, max_points: usize) -> usize {
        let mut r = wanted.max(1);
        while r > 1 && binomial(r + dimension - 1, dimension - 1) > max_points {
            r = (r * 3) / 4;
        }
        r.max(1)
    }
}

pub fn enumerate_grid(grid: SimplexGrid) -> Vec<SimplexPoint> {
    grid.iter().collect()
}

/// Iterator over grid points in colexicographic order of the compositions.
#[derive(Debug, Clone)]
pub struct GridIter {
    counts: Option<Vec<usize>>,
    resolution: usize,
}

impl Iterator for GridIter {
    type Item = SimplexPoint;

    fn next(&mut self) -> Option<SimplexPoint> {
        let counts = self.counts.as_mut()?;
        let r = self.resolution as f64;
        let point = SimplexPoint {
            weights: counts.iter().map(|&c| c as f64 / r).collect(),
        };
        // Odometer step: empty the first nonzero slot j into slot 0 (less one
        // unit) and carry that unit into slot j + 1.
        match counts.iter().position(|&c| c > 0) {
            Some(j) if j + 1 < counts.len() => {
                let moved = counts[j];
                counts[j] = 0;
                counts[0] = moved - 1;
                counts[j + 1] += 1;
            }
            _ => self.counts = None,
        }
        Some(point)
    }
}

fn binomial(n: usize, k: usize) -> usize {
    let k = k.min(n - k);
    let mut acc: u128 = 1;
    for i in 0..k {
        acc = acc * (n - i) as u128 / (i + 1) as u128;
    }
    acc.min(usize::MAX as u128) as usize
}

#[cfg(test)]
mod tests {
    use super::*;
    use std::collections::HashSet;

    fn key(p: &SimplexPoint) -> Vec<i64> {
        p.weights().iter().map(|w| (w * 1e6).round() as i64).collect()
    }

    #[test]
    fn constructor_renormalizes_small_drift() {
        let p = SimplexPoint::new(vec![0.5, 0.5 + 5e-7]).unwrap();
        assert!((p.weights().iter().sum::<f64>() - 1.0).abs() < 1e-15);
        assert!(SimplexPoint::new(vec![0.5, 0.6]).is_err());
        assert!(SimplexPoint::new(vec![1.5, -0.5]).is_err());
        assert!(SimplexPoint::new(vec![f64::NAN, 1.0]).is_err());
        assert!(SimplexPoint::new(vec![]).is_err());
    }

    #[test]
    fn projection_examples() {
        let p = project_to_simplex(&[0.5, 0.5]).unwrap();
        assert_eq!(p.weights(), &[0.5, 0.5]);
        let p = project_to_simplex(&[2.0, 0.0]).unwrap();
        assert_eq!(p.weights(), &[1.0, 0.0]);
        let p = project_to_simplex(&[0.8, 0.4]).unwrap();
        assert!((p.weights()[0] - 0.7).abs() < 1e-12);
        assert!((p.weights()[1] - 0.3).abs() < 1e-12);
        assert!(project_to_simplex(&[f64::INFINITY, 0.0]).is_err());
    }

    #[test]
    fn clamp_examples() {
        let p = clamp_interior(&SimplexPoint::vertex(2, 0), 1e-12).unwrap();
        assert!(p.weights()[1] >= 1e-12);
        assert!((p.weights()[0] - (1.0 - 1e-12)).abs() < 1e-15);

        let half = SimplexPoint::uniform(2);
        assert_eq!(clamp_interior(&half, 1e-12).unwrap(), half);

        let p = SimplexPoint::new(vec![0.999999, 0.000001]).unwrap();
        let c = clamp_interior(&p, 1e-3).unwrap();
        assert!(c.weights()[1] >= 1e-3);
        assert!((c.weights()[1] - 1e-3).abs() < 1e-15);
        assert!((c.weights()[0] - 0.999).abs() < 1e-12);
        assert!((c.weights().iter().sum::<f64>() - 1.0).abs() < 1e-12);

        assert!(clamp_interior(&half, 0.5).is_err());
        assert!(clamp_interior(&half, 0.0).is_err());
    }

    #[test]
    fn clamp_cascades_when_rescaling_pushes_others_below() {
        let p = SimplexPoint::new(vec![0.0, 0.0, 0.012, 0.988]).unwrap();
        let c = clamp_interior(&p, 0.01).unwrap();
        assert!(c.min_weight() >= 0.01 - 1e-15);
        assert!((c.weights().iter().sum::<f64>() - 1.0).abs() < 1e-12);
    }

    #[test]
    fn grid_examples() {
        let pts = enumerate_grid(SimplexGrid::new(2, 2).unwrap());
        let set: HashSet<_> = pts.iter().map(key).collect();
        assert_eq!(pts.len(), 3);
        for w in [[1.0, 0.0], [0.5, 0.5], [0.0, 1.0]] {
            assert!(set.contains(&key(&SimplexPoint::new(w.to_vec()).unwrap())));
        }
        let pts = enumerate_grid(SimplexGrid::new(1, 5).unwrap());
        assert_eq!(pts, vec![SimplexPoint::vertex(1, 0)]);
        assert_eq!(enumerate_grid(SimplexGrid::new(3, 2).unwrap()).len(), 6);
        assert!(SimplexGrid::new(0, 2).is_err());
    }

    #[test]
    fn grid_counts_and_uniqueness() {
        for dim in 1..=5 {
            for res in 1..=9 {
                let g = SimplexGrid::new(dim, res).unwrap();
                let pts = enumerate_grid(g);
                assert_eq!(pts.len(), g.len(), "dim {dim} res {res}");
                let set: HashSet<_> = pts.iter().map(key).collect();
                assert_eq!(set.len(), pts.len());
                for p in &pts {
                    assert!((p.weights().iter().sum::<f64>() - 1.0).abs() < 1e-12);
                }
            }
        }
    }

    #[test]
    fn dual_equivalence_mod_ones() {
        let v = DualVector::new(vec![1.0, -2.0, 0.5]).unwrap();
        for alpha in [-10.0, 1.0, 3.7] {
            assert!(v.equivalent(&v.shifted(alpha), 1e-12));
            assert!(v.shifted(alpha).equivalent(&v, 1e-12));
        }
        let w = DualVector::new(vec![1.0, -2.0, 0.6]).unwrap();
        assert!(!v.equivalent(&w, 1e-3));
        assert!(DualVector::new(vec![f64::NAN]).is_err());
    }
}
