//! Entropies on the simplex, their convex conjugates and Bregman divergences.
//!
//! Every supported entropy is separable, `Φ(μ) = (1/η)·(Σ φ(μ_i) + c)`, with a
//! strictly convex per-coordinate `φ`. The conjugate
//! `Φ*(v) = sup_{μ ∈ Δ} ⟨μ, v⟩ − Φ(μ)` is then attained at
//! `μ_i = (φ')⁻¹(η v_i − τ)` (clipped at zero), where the threshold `τ` is the
//! unique root of `Σ μ_i(τ) = 1`. The numeric solver finds `τ` by bisection
//! on that monotone equation; negative Shannon entropy additionally has the
//! log-sum-exp closed form.

use crate::error::{invalid, GaaError, Result};
use crate::simplex::{DualVector, SimplexGrid, SimplexPoint};

#[derive(Debug, Clone, Copy, PartialEq)]
pub enum EntropyFamily {
    /// `Σ μ log μ`
    NegShannon,
    /// `−(1 − Σ μ^q)/(q − 1)`, `q > 0`, `q ≠ 1`
    NegTsallis { q: f64 },
    /// `½ Σ μ²`
    Quadratic,
}

/// `Φ = (1/η)·Φ_base` for one of the [`EntropyFamily`] bases.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct EntropySpec {
    family: EntropyFamily,
    eta: f64,
}

impl EntropySpec {
    pub fn new(family: EntropyFamily, eta: f64) -> Result<Self> {
        if !(eta.is_finite() && eta > 0.0) {
            return Err(invalid(format!("eta must be positive and finite, got {eta}")));
        }
        if let EntropyFamily::NegTsallis { q } = family {
            if !(q.is_finite() && q > 0.0) || q == 1.0 {
                return Err(invalid(format!(
                    "Tsallis index must be positive and different from 1, got {q}"
                )));
            }
        }
        Ok(Self { family, eta })
    }

    pub fn neg_shannon(eta: f64) -> Result<Self> {
        Self::new(EntropyFamily::NegShannon, eta)
    }

    pub fn neg_tsallis(q: f64, eta: f64) -> Result<Self> {
        Self::new(EntropyFamily::NegTsallis { q }, eta)
    }

    pub fn quadratic(eta: f64) -> Result<Self> {
        Self::new(EntropyFamily::Quadratic, eta)
    }

    pub fn family(&self) -> EntropyFamily {
        self.family
    }

    pub fn eta(&self) -> f64 {
        self.eta
    }

    pub fn with_eta(&self, eta: f64) -> Result<Self> {
        Self::new(self.family, eta)
    }

    /// The unscaled base entropy (`η = 1`).
    pub fn base(&self) -> Self {
        Self {
            family: self.family,
            eta: 1.0,
        }
    }

    /// Whether `∇Φ` blows up when a coordinate reaches zero.
    pub fn has_singular_boundary(&self) -> bool {
        match self.family {
            EntropyFamily::NegShannon => true,
            EntropyFamily::NegTsallis { q } => q < 1.0,
            EntropyFamily::Quadratic => false,
        }
    }

    fn phi(&self, m: f64) -> f64 {
        match self.family {
            EntropyFamily::NegShannon => {
                if m > 0.0 {
                    m * m.ln()
                } else {
                    0.0
                }
            }
            EntropyFamily::NegTsallis { q } => m.powf(q) / (q - 1.0),
            EntropyFamily::Quadratic => 0.5 * m * m,
        }
    }

    fn offset(&self) -> f64 {
        match self.family {
            EntropyFamily::NegTsallis { q } => -1.0 / (q - 1.0),
            _ => 0.0,
        }
    }

    /// `φ'(m)`; infinite at `m = 0` for singular families.
    fn phi_prime(&self, m: f64) -> f64 {
        match self.family {
            EntropyFamily::NegShannon => m.ln() + 1.0,
            EntropyFamily::NegTsallis { q } => q * m.powf(q - 1.0) / (q - 1.0),
            EntropyFamily::Quadratic => m,
        }
    }

    fn phi_second(&self, m: f64) -> f64 {
        match self.family {
            EntropyFamily::NegShannon => 1.0 / m,
            EntropyFamily::NegTsallis { q } => q * m.powf(q - 2.0),
            EntropyFamily::Quadratic => 1.0,
        }
    }

    /// `(φ')⁻¹(y)` extended by 0 below the range of `φ'` and by `+∞` above it.
    fn phi_prime_inverse(&self, y: f64) -> f64 {
        match self.family {
            EntropyFamily::NegShannon => (y - 1.0).exp(),
            EntropyFamily::NegTsallis { q } => {
                let base = (q - 1.0) * y / q;
                if base <= 0.0 {
                    if q > 1.0 {
                        0.0
                    } else {
                        f64::INFINITY
                    }
                } else {
                    base.powf(1.0 / (q - 1.0))
                }
            }
            EntropyFamily::Quadratic => y.max(0.0),
        }
    }

    /// Diagonal of the Hessian of `Φ` (natural extension to the orthant).
    pub(crate) fn hessian_diagonal(&self, mu: &[f64]) -> Vec<f64> {
        mu.iter().map(|&m| self.phi_second(m) / self.eta).collect()
    }
}

/// Settings for the numeric conjugate solver.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ConjugateSolverConfig {
    pub max_iterations: usize,
    /// Sup-norm change of the maximiser between the two bracket ends.
    pub tolerance: f64,
    /// Resolution of the grid search used when bisection stalls.
    pub grid_resolution: usize,
}

impl Default for ConjugateSolverConfig {
    fn default() -> Self {
        Self {
            max_iterations: 400,
            tolerance: 1e-12,
            grid_resolution: 200,
        }
    }
}

impl ConjugateSolverConfig {
    pub fn validate(&self) -> Result<()> {
        if self.max_iterations < 1 {
            return Err(invalid("max_iterations must be at least 1"));
        }
        if self.tolerance.is_nan() || self.tolerance <= 0.0 {
            return Err(invalid("solver tolerance must be positive"));
        }
        if self.grid_resolution < 10 {
            return Err(invalid("grid_resolution must be at least 10"));
        }
        Ok(())
    }
}

/// Maximiser and value of `⟨μ, v⟩ − Φ(μ)` over the simplex.
#[derive(Debug, Clone, PartialEq)]
pub struct ConjugateSolution {
    pub value: f64,
    pub maximizer: SimplexPoint,
    pub iterations: usize,
    pub residual: f64,
}

pub fn entropy_value(phi: &EntropySpec, mu: &SimplexPoint) -> f64 {
    let total: f64 = mu.weights().iter().map(|&m| phi.phi(m)).sum();
    (total + phi.offset()) / phi.eta
}

/// Raw coordinate-wise derivative of `Φ`; defined up to `+c·1` on the simplex.
pub fn entropy_gradient(phi: &EntropySpec, mu: &SimplexPoint) -> Result<DualVector> {
    if phi.has_singular_boundary() {
        if let Some((index, &value)) = mu.weights().iter().enumerate().find(|(_, &m)| m <= 0.0) {
            return Err(GaaError::BoundaryGradient { index, value });
        }
    }
    DualVector::new(
        mu.weights()
            .iter()
            .map(|&m| phi.phi_prime(m) / phi.eta)
            .collect(),
    )
}

/// `Φ*(v)`; closed form for negative Shannon entropy, numeric otherwise.
pub fn conjugate(phi: &EntropySpec, v: &DualVector, cfg: &ConjugateSolverConfig) -> Result<f64> {
    match phi.family {
        EntropyFamily::NegShannon => {
            check_nonempty(v)?;
            Ok(log_sum_exp_scaled(v.values(), phi.eta))
        }
        _ => Ok(solve_conjugate(phi, v, cfg)?.value),
    }
}

/// `∇Φ*(v)`, the point of the simplex attaining the conjugate.
pub fn conjugate_gradient(
    phi: &EntropySpec,
    v: &DualVector,
    cfg: &ConjugateSolverConfig,
) -> Result<SimplexPoint> {
    match phi.family {
        EntropyFamily::NegShannon => {
            check_nonempty(v)?;
            Ok(softmax_scaled(v.values(), phi.eta))
        }
        _ => Ok(solve_conjugate(phi, v, cfg)?.maximizer),
    }
}

/// `(1/η) log Σ exp(η v)`, computed with the max shift.
pub fn log_sum_exp_scaled(v: &[f64], eta: f64) -> f64 {
    let max = v.iter().cloned().fold(f64::NEG_INFINITY, f64::max);
    let sum: f64 = v.iter().map(|&x| (eta * (x - max)).exp()).sum();
    max + sum.ln() / eta
}

/// Softmax of `η v`.
pub fn softmax_scaled(v: &[f64], eta: f64) -> SimplexPoint {
    let max = v.iter().cloned().fold(f64::NEG_INFINITY, f64::max);
    let exps: Vec<f64> = v.iter().map(|&x| (eta * (x - max)).exp()).collect();
    SimplexPoint::from_unnormalized(exps)
}

fn check_nonempty(v: &DualVector) -> Result<()> {
    if v.dimension() == 0 {
        Err(invalid("dual vector must be nonempty"))
    } else {
        Ok(())
    }
}

/// Numeric conjugate by bisection on the normalising threshold. Used for
/// every family, including negative Shannon entropy where it serves as a
/// cross-check of the closed form.
pub fn solve_conjugate(
    phi: &EntropySpec,
    v: &DualVector,
    cfg: &ConjugateSolverConfig,
) -> Result<ConjugateSolution> {
    cfg.validate()?;
    check_nonempty(v)?;
    let n = v.dimension();
    let scaled: Vec<f64> = v.values().iter().map(|x| phi.eta * x).collect();
    let weights_at = |tau: f64| -> Vec<f64> {
        scaled
            .iter()
            .map(|&w| phi.phi_prime_inverse(w - tau))
            .collect()
    };
    let mass = |tau: f64| -> f64 { weights_at(tau).iter().sum::<f64>() };

    let anchor = phi.phi_prime(1.0 / n as f64);
    let max = scaled.iter().cloned().fold(f64::NEG_INFINITY, f64::max);
    let min = scaled.iter().cloned().fold(f64::INFINITY, f64::min);
    // mass(lo) >= 1 >= mass(hi)
    let mut lo = min - anchor;
    let mut hi = max - anchor;

    let mut iterations = 0;
    let mut change = f64::INFINITY;
    while iterations < cfg.max_iterations {
        let (wl, wh) = (weights_at(lo), weights_at(hi));
        change = sup_change(&wl, &wh);
        if change <= cfg.tolerance {
            break;
        }
        let mid = 0.5 * (lo + hi);
        if mid <= lo || mid >= hi {
            // bracket is at float resolution
            change = 0.0;
            break;
        }
        if mass(mid) > 1.0 {
            lo = mid;
        } else {
            hi = mid;
        }
        iterations += 1;
    }

    let tau = 0.5 * (lo + hi);
    let raw = weights_at(tau);
    let total: f64 = raw.iter().sum();
    let residual = (total - 1.0).abs();
    let usable = total.is_finite() && total > 0.0;
    let candidate = if usable {
        Some(SimplexPoint::from_unnormalized(raw))
    } else {
        None
    };

    if change > cfg.tolerance || candidate.is_none() {
        let best = grid_fallback(phi, v, cfg, candidate);
        return Err(GaaError::Solver {
            best: best.into_weights(),
            residual: if usable { residual } else { f64::INFINITY },
            iterations,
        });
    }
    let maximizer = candidate.expect("checked above");
    let value = conjugate_objective(phi, v, &maximizer);
    Ok(ConjugateSolution {
        value,
        maximizer,
        iterations,
        residual,
    })
}

fn sup_change(a: &[f64], b: &[f64]) -> f64 {
    a.iter()
        .zip(b)
        .map(|(x, y)| {
            if x.is_infinite() || y.is_infinite() {
                f64::INFINITY
            } else {
                (x - y).abs()
            }
        })
        .fold(0.0, f64::max)
}

/// `⟨μ, v⟩ − Φ(μ)`.
pub fn conjugate_objective(phi: &EntropySpec, v: &DualVector, mu: &SimplexPoint) -> f64 {
    mu.dot(v.values()) - entropy_value(phi, mu)
}

fn grid_fallback(
    phi: &EntropySpec,
    v: &DualVector,
    cfg: &ConjugateSolverConfig,
    candidate: Option<SimplexPoint>,
) -> SimplexPoint {
    let n = v.dimension();
    let resolution = SimplexGrid::resolution_for_budget(n, cfg.grid_resolution, 200_000);
    let grid = SimplexGrid::new(n, resolution).expect("positive grid parameters");
    let mut best = candidate.unwrap_or_else(|| SimplexPoint::uniform(n));
    let mut best_value = conjugate_objective(phi, v, &best);
    for mu in grid.iter() {
        let value = conjugate_objective(phi, v, &mu);
        if value > best_value {
            best_value = value;
            best = mu;
        }
    }
    best
}

/// `D_Φ(μ, μ′) = Φ(μ) − Φ(μ′) − ⟨∇Φ(μ′), μ − μ′⟩`.
///
/// Only `μ′` needs a gradient, so `μ` may sit on the boundary (including a
/// vertex) even for negative Shannon entropy.
pub fn bregman(phi: &EntropySpec, mu: &SimplexPoint, mu_ref: &SimplexPoint) -> Result<f64> {
    if mu.dimension() != mu_ref.dimension() {
        return Err(invalid(format!(
            "dimension mismatch: {} vs {}",
            mu.dimension(),
            mu_ref.dimension()
        )));
    }
    let grad = entropy_gradient(phi, mu_ref)?;
    let linear: f64 = grad
        .values()
        .iter()
        .zip(mu.weights().iter().zip(mu_ref.weights()))
        .map(|(g, (a, b))| g * (a - b))
        .sum();
    Ok(entropy_value(phi, mu) - entropy_value(phi, mu_ref) - linear)
}
