//! Losses over a finite outcome set, expert assessments, and proper losses
//! built from an entropy.

use crate::entropy::{conjugate, entropy_gradient, ConjugateSolverConfig, EntropySpec};
use crate::error::{invalid, GaaError, Result};
use crate::simplex::{DualVector, SimplexPoint};

#[derive(Debug, Clone, Copy, PartialEq)]
pub enum LossFamily {
    /// `ℓ_x(p) = −log p(x)`
    Log,
    /// `ℓ_x(p) = Σ_{x′} (⟦x = x′⟧ − p(x′))²`
    Brier,
    /// `λ^Φ(p) = Φ*(∇Φ(p))·1 − ∇Φ(p)` for an entropy over the outcomes.
    ProperFromEntropy(EntropySpec),
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct LossSpec {
    family: LossFamily,
    outcome_count: usize,
}

impl LossSpec {
    pub fn new(family: LossFamily, outcome_count: usize) -> Result<Self> {
        if outcome_count < 2 {
            return Err(invalid(format!(
                "a loss needs at least two outcomes, got {outcome_count}"
            )));
        }
        Ok(Self {
            family,
            outcome_count,
        })
    }

    pub fn log(outcome_count: usize) -> Result<Self> {
        Self::new(LossFamily::Log, outcome_count)
    }

    pub fn brier(outcome_count: usize) -> Result<Self> {
        Self::new(LossFamily::Brier, outcome_count)
    }

    pub fn proper(entropy: EntropySpec, outcome_count: usize) -> Result<Self> {
        Self::new(LossFamily::ProperFromEntropy(entropy), outcome_count)
    }

    pub fn family(&self) -> LossFamily {
        self.family
    }

    pub fn outcome_count(&self) -> usize {
        self.outcome_count
    }

    /// Whether every loss value is finite at every vertex prediction.
    pub fn finite_at_vertices(&self) -> bool {
        match self.family {
            LossFamily::Log => false,
            LossFamily::Brier => true,
            LossFamily::ProperFromEntropy(phi) => !phi.has_singular_boundary(),
        }
    }

    /// The entropy whose negative is this loss's Bayes risk:
    /// `⟨q, ℓ(q)⟩ = −Φ^ℓ(q)`.
    pub fn bayes_entropy(&self) -> EntropySpec {
        match self.family {
            LossFamily::Log => EntropySpec::neg_shannon(1.0).expect("valid"),
            // 1 − ‖q‖² = −(Σq² − 1)
            LossFamily::Brier => EntropySpec::neg_tsallis(2.0, 1.0).expect("valid"),
            LossFamily::ProperFromEntropy(phi) => phi,
        }
    }

    fn check_prediction(&self, p: &SimplexPoint) -> Result<()> {
        if p.dimension() != self.outcome_count {
            return Err(invalid(format!(
                "prediction has {} outcomes, loss expects {}",
                p.dimension(),
                self.outcome_count
            )));
        }
        Ok(())
    }

    /// `ℓ_x(p)` for a single outcome.
    pub fn loss_at(&self, p: &SimplexPoint, x: usize) -> Result<f64> {
        self.check_prediction(p)?;
        if x >= self.outcome_count {
            return Err(invalid(format!("outcome {x} out of range")));
        }
        match self.family {
            LossFamily::Log => {
                let px = p.weights()[x];
                if px <= 0.0 {
                    Err(GaaError::InfiniteLoss { outcome: x })
                } else {
                    Ok(-px.ln())
                }
            }
            LossFamily::Brier => Ok(brier_at(p.weights(), x)),
            LossFamily::ProperFromEntropy(phi) => Ok(proper_loss_from_entropy(&phi, p)?[x]),
        }
    }

    /// `∇_p ℓ_x(p)` for the natural extension of the loss off the simplex.
    pub(crate) fn loss_gradient(&self, p: &[f64], x: usize) -> Vec<f64> {
        match self.family {
            LossFamily::Log => {
                let mut g = vec![0.0; p.len()];
                g[x] = -1.0 / p[x];
                g
            }
            LossFamily::Brier => p
                .iter()
                .enumerate()
                .map(|(j, &pj)| 2.0 * (pj - indicator(j == x)))
                .collect(),
            // d/dp [⟨p,∇Φ(p)⟩ − Φ(p) − ∂_xΦ(p)] = H(p)(p − e_x)
            LossFamily::ProperFromEntropy(phi) => phi
                .hessian_diagonal(p)
                .iter()
                .zip(p)
                .enumerate()
                .map(|(j, (h, &pj))| h * (pj - indicator(j == x)))
                .collect(),
        }
    }
}

fn indicator(b: bool) -> f64 {
    if b {
        1.0
    } else {
        0.0
    }
}

fn brier_at(p: &[f64], x: usize) -> f64 {
    p.iter()
        .enumerate()
        .map(|(j, &pj)| {
            let d = indicator(j == x) - pj;
            d * d
        })
        .sum()
}

/// One prediction over the outcomes per expert.
#[derive(Debug, Clone, PartialEq)]
pub struct ExpertPanel {
    predictions: Vec<SimplexPoint>,
}

impl ExpertPanel {
    pub fn new(predictions: Vec<SimplexPoint>) -> Result<Self> {
        let first = predictions
            .first()
            .ok_or_else(|| invalid("an expert panel needs at least one expert"))?;
        let dim = first.dimension();
        if let Some(i) = predictions.iter().position(|p| p.dimension() != dim) {
            return Err(invalid(format!(
                "expert {i} predicts over {} outcomes, expert 0 over {dim}",
                predictions[i].dimension()
            )));
        }
        Ok(Self { predictions })
    }

    pub fn expert_count(&self) -> usize {
        self.predictions.len()
    }

    pub fn outcome_count(&self) -> usize {
        self.predictions[0].dimension()
    }

    pub fn predictions(&self) -> &[SimplexPoint] {
        &self.predictions
    }
}

/// Per-expert losses on one outcome, `α_θ(x) = ℓ_x(p_θ)`.
#[derive(Debug, Clone, PartialEq)]
pub struct Assessment {
    pub values: DualVector,
    pub outcome: usize,
}

pub fn loss_vector(loss: &LossSpec, p: &SimplexPoint) -> Result<Vec<f64>> {
    loss.check_prediction(p)?;
    match loss.family {
        LossFamily::ProperFromEntropy(phi) => proper_loss_from_entropy(&phi, p),
        _ => (0..loss.outcome_count).map(|x| loss.loss_at(p, x)).collect(),
    }
}

pub fn assessment(loss: &LossSpec, panel: &ExpertPanel, x: usize) -> Result<Assessment> {
    let values = panel
        .predictions
        .iter()
        .map(|p| loss.loss_at(p, x))
        .collect::<Result<Vec<_>>>()?;
    Ok(Assessment {
        values: DualVector::new(values)?,
        outcome: x,
    })
}

/// Assessments for every outcome, indexed by outcome.
pub fn assessments(loss: &LossSpec, panel: &ExpertPanel) -> Result<Vec<Assessment>> {
    if panel.outcome_count() != loss.outcome_count {
        return Err(invalid(format!(
            "panel predicts over {} outcomes, loss expects {}",
            panel.outcome_count(),
            loss.outcome_count
        )));
    }
    (0..loss.outcome_count)
        .map(|x| assessment(loss, panel, x))
        .collect()
}

/// `λ^Φ(μ) = Φ*(∇Φ(μ))·1 − ∇Φ(μ)`.
pub fn proper_loss_from_entropy(phi: &EntropySpec, mu: &SimplexPoint) -> Result<Vec<f64>> {
    let grad = entropy_gradient(phi, mu)?;
    let potential = conjugate(phi, &grad, &ConjugateSolverConfig::default())?;
    Ok(grad.values().iter().map(|g| potential - g).collect())
}

/// `⟨μ, λ^Φ(μ′)⟩ − ⟨μ, λ^Φ(μ)⟩`, the excess expected loss of reporting `μ′`
/// when outcomes follow `μ`.
pub fn propriety_gap(phi: &EntropySpec, mu: &SimplexPoint, mu_reported: &SimplexPoint) -> Result<f64> {
    if mu.dimension() != mu_reported.dimension() {
        return Err(invalid("dimension mismatch"));
    }
    let reported = proper_loss_from_entropy(phi, mu_reported)?;
    let truthful = proper_loss_from_entropy(phi, mu)?;
    Ok(mu.dot(&reported) - mu.dot(&truthful))
}
