//! The generalised aggregating algorithm.
//!
//! The state keeps the dual point `w = ∇Φ(π) − Σ_s α(x^s)` rather than the
//! mixture; the mixture is `∇Φ*(w)`. Each round the player plays a
//! prediction whose losses sit under the potential-difference bound
//! `Φ*(w) − Φ*(w − α(x))`, and summing those bounds telescopes to
//! `Φ*(w⁰) − Φ*(wᵀ)`, which is at most `L_θᵀ + D_Φ(δ_θ, π)` for every expert.

use crate::entropy::{
    bregman, conjugate, conjugate_gradient, entropy_gradient, entropy_value, softmax_scaled,
    ConjugateSolverConfig, EntropySpec,
};
use crate::error::{invalid, GaaError, Result};
use crate::losses::{assessment, Assessment, ExpertPanel, LossSpec};
use crate::mixability::{mix_bound_at_dual, substitute_for_bound, SubstitutionConfig, SubstitutionResult};
use crate::simplex::{clamp_interior, DualVector, SimplexPoint};

/// Floor applied to priors on the boundary for entropies with singular gradients.
pub const PRIOR_CLAMP: f64 = 1e-12;

#[derive(Debug, Clone, PartialEq)]
pub struct GaaState {
    entropy: EntropySpec,
    prior: SimplexPoint,
    dual: DualVector,
    round: usize,
    solver: ConjugateSolverConfig,
}

impl GaaState {
    pub fn init(entropy: EntropySpec, prior: &SimplexPoint) -> Result<Self> {
        let prior = if entropy.has_singular_boundary() && !prior.is_interior() {
            if prior.dimension() == 1 {
                prior.clone()
            } else {
                clamp_interior(prior, PRIOR_CLAMP).map_err(|e| GaaError::InvalidPrior(e.to_string()))?
            }
        } else {
            prior.clone()
        };
        let dual = entropy_gradient(&entropy, &prior).map_err(|e| GaaError::InvalidPrior(e.to_string()))?;
        Ok(Self {
            entropy,
            prior,
            dual,
            round: 0,
            solver: ConjugateSolverConfig::default(),
        })
    }

    pub fn entropy(&self) -> &EntropySpec {
        &self.entropy
    }

    /// The prior actually used (after clamping).
    pub fn prior(&self) -> &SimplexPoint {
        &self.prior
    }

    pub fn dual(&self) -> &DualVector {
        &self.dual
    }

    pub fn round(&self) -> usize {
        self.round
    }

    pub fn expert_count(&self) -> usize {
        self.prior.dimension()
    }

    /// Current mixture `∇Φ*(w)`.
    pub fn mixture(&self) -> Result<SimplexPoint> {
        conjugate_gradient(&self.entropy, &self.dual, &self.solver)
    }

    /// `Φ*(w)`.
    pub fn potential(&self) -> Result<f64> {
        conjugate(&self.entropy, &self.dual, &self.solver)
    }

    /// Subtracts the assessment in the dual space.
    pub fn update(&self, a: &Assessment) -> Result<Self> {
        Ok(Self {
            dual: self.dual.sub(a.values.values())?,
            round: self.round + 1,
            ..self.clone()
        })
    }

    /// Substitution prediction under the bound at the current dual point.
    /// The result is returned whether or not it is feasible.
    pub fn predict(
        &self,
        panel: &ExpertPanel,
        loss: &LossSpec,
        cfg: &SubstitutionConfig,
    ) -> Result<SubstitutionResult> {
        let bound = mix_bound_at_dual(&self.entropy, &self.dual, panel, loss)?;
        substitute_for_bound(loss, bound, cfg)
    }
}

/// `D_Φ(δ_θ, π)`, the regret allowance against expert `θ`.
pub fn regret_bound(entropy: &EntropySpec, prior: &SimplexPoint, expert: usize) -> Result<f64> {
    if expert >= prior.dimension() {
        return Err(invalid(format!("expert {expert} out of range")));
    }
    let vertex = SimplexPoint::vertex(prior.dimension(), expert);
    if !entropy_value(entropy, &vertex).is_finite() {
        return Err(GaaError::UnboundedPenalty { expert });
    }
    bregman(entropy, &vertex, prior)
}

/// `⟨μ′, L⟩ + D_Φ(μ′, π)`: the bound against a mixture of experts.
pub fn mixture_regret_bound(
    entropy: &EntropySpec,
    prior: &SimplexPoint,
    cumulative_losses: &[f64],
    comparator: &SimplexPoint,
) -> Result<f64> {
    Ok(comparator.dot(cumulative_losses) + bregman(entropy, comparator, prior)?)
}

/// Exponential weights `exp(−η L_θ) / Σ exp(−η L_θ′)`.
pub fn classic_aa_weights(eta: f64, cumulative_losses: &DualVector) -> Result<SimplexPoint> {
    if !(eta > 0.0 && eta.is_finite()) {
        return Err(invalid(format!("eta must be positive, got {eta}")));
    }
    if cumulative_losses.dimension() == 0 {
        return Err(invalid("no experts"));
    }
    Ok(softmax_scaled(cumulative_losses.values(), -eta))
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct GameOptions {
    pub substitution: SubstitutionConfig,
    /// Per-round allowance in the regret-bound check (scaled by T).
    pub bound_tolerance: f64,
    /// Per-round allowance in the telescoping check (scaled by T).
    pub telescoping_tolerance: f64,
}

impl Default for GameOptions {
    fn default() -> Self {
        Self {
            substitution: SubstitutionConfig::default(),
            bound_tolerance: 1e-5,
            telescoping_tolerance: 1e-6,
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct RoundRecord {
    /// 1-based round index.
    pub round: usize,
    pub expert_predictions: Vec<SimplexPoint>,
    /// Mixture in force when the prediction was made.
    pub mixture: SimplexPoint,
    pub prediction: SimplexPoint,
    pub outcome: usize,
    /// `α(x)`, the experts' losses this round.
    pub assessment: Vec<f64>,
    pub player_loss: f64,
    pub slack: f64,
    pub feasible: bool,
    /// Bound for the realised outcome, `Φ*(w) − Φ*(w − α(x))`.
    pub bound_term: f64,
    pub expert_cumulative: Vec<f64>,
    pub player_cumulative: f64,
    pub best_expert: usize,
    pub regret_vs_best: f64,
    pub bound_vs_best: f64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct GameSummary {
    pub rounds: usize,
    pub player_loss: f64,
    pub expert_losses: Vec<f64>,
    pub best_expert: usize,
    /// `Lᵀ − min_θ L_θᵀ`.
    pub regret: f64,
    /// `D_Φ(δ_θ, π)` per expert.
    pub bounds: Vec<f64>,
    pub bound_vs_best: f64,
    /// `Lᵀ − L_θᵀ ≤ D_Φ(δ_θ, π) + tolerance·T`, per expert.
    pub bound_satisfied: Vec<bool>,
    /// The bound check applies only when every round was feasible.
    pub bound_checked: bool,
    pub max_slack: f64,
    pub infeasible_rounds: usize,
    /// `Φ*(w⁰) − Φ*(wᵀ)` with `w⁰ = ∇Φ(π)` and `wᵗ = wᵗ⁻¹ − α(xᵗ)`.
    pub potential_drop: f64,
    /// `|potential_drop − Σ_t bound_term|`.
    pub telescoping_residual: f64,
    pub telescoping_ok: bool,
    /// Prior after clamping; the bounds are measured from it.
    pub prior: SimplexPoint,
}

#[derive(Debug, Clone, PartialEq)]
pub struct GameTrace {
    pub rounds: Vec<RoundRecord>,
    pub summary: GameSummary,
}

impl GameTrace {
    /// True when the bound check ran and held for every expert.
    pub fn all_bounds_hold(&self) -> bool {
        self.summary.bound_checked && self.summary.bound_satisfied.iter().all(|&b| b)
    }
}

pub fn run_game(
    entropy: &EntropySpec,
    prior: &SimplexPoint,
    loss: &LossSpec,
    panels: &[ExpertPanel],
    outcomes: &[usize],
) -> Result<GameTrace> {
    run_game_with(entropy, prior, loss, panels, outcomes, &GameOptions::default())
}

pub fn run_game_with(
    entropy: &EntropySpec,
    prior: &SimplexPoint,
    loss: &LossSpec,
    panels: &[ExpertPanel],
    outcomes: &[usize],
    opts: &GameOptions,
) -> Result<GameTrace> {
    if panels.len() != outcomes.len() {
        return Err(GaaError::InvalidConfig(format!(
            "{} panels for {} outcomes",
            panels.len(),
            outcomes.len()
        )));
    }
    let experts = prior.dimension();
    for (t, (panel, &x)) in panels.iter().zip(outcomes).enumerate() {
        if panel.expert_count() != experts {
            return Err(GaaError::InvalidConfig(format!(
                "round {}: {} experts, prior has {experts}",
                t + 1,
                panel.expert_count()
            )));
        }
        if panel.outcome_count() != loss.outcome_count() || x >= loss.outcome_count() {
            return Err(GaaError::InvalidConfig(format!(
                "round {}: outcome dimensions disagree with the loss",
                t + 1
            )));
        }
    }

    let mut state = GaaState::init(*entropy, prior)?;
    let prior = state.prior().clone();
    let bounds = (0..experts)
        .map(|theta| regret_bound(entropy, &prior, theta))
        .collect::<Result<Vec<_>>>()?;
    let start_potential = state.potential()?;

    let mut records = Vec::with_capacity(panels.len());
    let mut expert_cumulative = vec![0.0; experts];
    let mut player_cumulative = 0.0;
    let mut bound_sum = 0.0;
    for (t, (panel, &x)) in panels.iter().zip(outcomes).enumerate() {
        let mixture = state.mixture()?;
        let sub = state.predict(panel, loss, &opts.substitution)?;
        let player_loss = loss.loss_at(&sub.prediction, x)?;
        let a = assessment(loss, panel, x)?;
        for (c, l) in expert_cumulative.iter_mut().zip(a.values.values()) {
            *c += l;
        }
        player_cumulative += player_loss;
        bound_sum += sub.bound.per_outcome[x];
        let best_expert = argmin(&expert_cumulative);
        records.push(RoundRecord {
            round: t + 1,
            expert_predictions: panel.predictions().to_vec(),
            mixture,
            outcome: x,
            assessment: a.values.values().to_vec(),
            player_loss,
            slack: sub.worst_slack,
            feasible: sub.feasible,
            bound_term: sub.bound.per_outcome[x],
            expert_cumulative: expert_cumulative.clone(),
            player_cumulative,
            best_expert,
            regret_vs_best: player_cumulative - expert_cumulative[best_expert],
            bound_vs_best: bounds[best_expert],
            prediction: sub.prediction,
        });
        state = state.update(&a)?;
    }

    let rounds = records.len();
    let end_potential = state.potential()?;
    let potential_drop = start_potential - end_potential;
    let telescoping_residual = (potential_drop - bound_sum).abs();
    let infeasible_rounds = records.iter().filter(|r| !r.feasible).count();
    let max_slack = records
        .iter()
        .map(|r| r.slack)
        .fold(f64::NEG_INFINITY, f64::max);
    let best_expert = argmin(&expert_cumulative);
    let allowance = opts.bound_tolerance * rounds as f64;
    let bound_satisfied = expert_cumulative
        .iter()
        .zip(&bounds)
        .map(|(l, b)| player_cumulative <= l + b + allowance)
        .collect();

    Ok(GameTrace {
        rounds: records,
        summary: GameSummary {
            rounds,
            player_loss: player_cumulative,
            regret: player_cumulative - expert_cumulative[best_expert],
            bound_vs_best: bounds[best_expert],
            best_expert,
            expert_losses: expert_cumulative,
            bounds,
            bound_satisfied,
            bound_checked: infeasible_rounds == 0,
            max_slack: if rounds == 0 { 0.0 } else { max_slack },
            infeasible_rounds,
            potential_drop,
            telescoping_residual,
            telescoping_ok: telescoping_residual <= opts.telescoping_tolerance * rounds.max(1) as f64,
            prior,
        },
    })
}

/// First index of the minimum.
fn argmin(values: &[f64]) -> usize {
    values
        .iter()
        .enumerate()
        .fold((0, f64::INFINITY), |(bi, bv), (i, &v)| if v < bv { (i, v) } else { (bi, bv) })
        .0
}
