//! Φ-mixability: the per-outcome mixability bound in its three equivalent
//! forms, the substitution solver that looks for a prediction under the
//! bound, sampled certification, and the η search built on top of it.
//!
//! The three bound forms for a mixture `μ` and assessment `α(x)`:
//!
//! ```text
//! definition:  −Φ*(−λ^Φ(μ) − α(x))
//! potential:    Φ*(∇Φ(μ)) − Φ*(∇Φ(μ) − α(x))
//! primal:       inf_{μ′} ⟨μ′, α(x)⟩ + D_Φ(μ′, μ)
//! ```

use rand::Rng;
use rayon::prelude::*;

use crate::entropy::{
    bregman, conjugate, conjugate_gradient, entropy_gradient, ConjugateSolverConfig, EntropySpec,
};
use crate::error::{invalid, GaaError, Result};
use crate::losses::{assessments, loss_vector, proper_loss_from_entropy, ExpertPanel, LossSpec};
use crate::rng::{self, Purpose};
use crate::simplex::{clamp_interior, project_to_simplex, DualVector, SimplexGrid, SimplexPoint};

/// Default feasibility threshold on the worst slack.
pub const SLACK_TOLERANCE: f64 = 1e-7;

/// Right-hand side of the mixability inequality, one entry per outcome.
#[derive(Debug, Clone, PartialEq)]
pub struct MixBound {
    pub per_outcome: Vec<f64>,
}

/// Potential-difference form evaluated at an arbitrary dual point `w`
/// (normally `∇Φ(μ)`, or the accumulated dual state of the aggregating algorithm).
pub fn mix_bound_at_dual(
    phi: &EntropySpec,
    dual: &DualVector,
    panel: &ExpertPanel,
    loss: &LossSpec,
) -> Result<MixBound> {
    if dual.dimension() != panel.expert_count() {
        return Err(invalid(format!(
            "dual point has {} coordinates for {} experts",
            dual.dimension(),
            panel.expert_count()
        )));
    }
    let cfg = ConjugateSolverConfig::default();
    let potential = conjugate(phi, dual, &cfg)?;
    let per_outcome = assessments(loss, panel)?
        .iter()
        .map(|a| Ok(potential - conjugate(phi, &dual.sub(a.values.values())?, &cfg)?))
        .collect::<Result<Vec<_>>>()?;
    Ok(MixBound { per_outcome })
}

/// `Φ*(∇Φ(μ)) − Φ*(∇Φ(μ) − α(x))` for every outcome.
pub fn mix_bound(
    phi: &EntropySpec,
    mu: &SimplexPoint,
    panel: &ExpertPanel,
    loss: &LossSpec,
) -> Result<MixBound> {
    let grad = entropy_gradient(phi, mu)?;
    mix_bound_at_dual(phi, &grad, panel, loss)
}

/// `−Φ*(−λ^Φ(μ) − α(x))`, the bound as it appears in the definition.
pub fn mix_bound_definition(
    phi: &EntropySpec,
    mu: &SimplexPoint,
    panel: &ExpertPanel,
    loss: &LossSpec,
) -> Result<MixBound> {
    if mu.dimension() != panel.expert_count() {
        return Err(invalid("mixture and panel disagree on the number of experts"));
    }
    let cfg = ConjugateSolverConfig::default();
    let lambda = proper_loss_from_entropy(phi, mu)?;
    let per_outcome = assessments(loss, panel)?
        .iter()
        .map(|a| {
            let arg: Vec<f64> = lambda
                .iter()
                .zip(a.values.values())
                .map(|(l, al)| -l - al)
                .collect();
            Ok(-conjugate(phi, &DualVector::new(arg)?, &cfg)?)
        })
        .collect::<Result<Vec<_>>>()?;
    Ok(MixBound { per_outcome })
}

/// `min_{μ′ ∈ grid} ⟨μ′, α(x)⟩ + D_Φ(μ′, μ)` for every outcome.
pub fn mix_bound_primal(
    phi: &EntropySpec,
    mu: &SimplexPoint,
    panel: &ExpertPanel,
    loss: &LossSpec,
    grid_resolution: usize,
) -> Result<MixBound> {
    if mu.dimension() != panel.expert_count() {
        return Err(invalid("mixture and panel disagree on the number of experts"));
    }
    let alphas = assessments(loss, panel)?;
    let grid = SimplexGrid::new(mu.dimension(), grid_resolution)?;
    let mut best = vec![f64::INFINITY; alphas.len()];
    for candidate in grid.iter() {
        let divergence = bregman(phi, &candidate, mu)?;
        for (b, a) in best.iter_mut().zip(&alphas) {
            let value = candidate.dot(a.values.values()) + divergence;
            if value < *b {
                *b = value;
            }
        }
    }
    Ok(MixBound { per_outcome: best })
}

/// Classical exponential-weights bound `−(1/η) log Σ_θ μ(θ) exp(−η α_θ)`.
pub fn shannon_mix_bound(eta: f64, mu: &SimplexPoint, alpha: &[f64]) -> f64 {
    let shifted: Vec<f64> = alpha
        .iter()
        .zip(mu.weights())
        .filter(|(_, &m)| m > 0.0)
        .map(|(a, &m)| -eta * a + m.ln())
        .collect();
    let max = shifted.iter().cloned().fold(f64::NEG_INFINITY, f64::max);
    let sum: f64 = shifted.iter().map(|s| (s - max).exp()).sum();
    -(max + sum.ln()) / eta
}

/// `max_x ℓ_x(p) − bound(x)`; `+∞` when some loss is infinite.
pub fn worst_slack(loss: &LossSpec, p: &SimplexPoint, bound: &MixBound) -> f64 {
    match loss_vector(loss, p) {
        Ok(values) => values
            .iter()
            .zip(&bound.per_outcome)
            .map(|(l, b)| l - b)
            .fold(f64::NEG_INFINITY, f64::max),
        Err(_) => f64::INFINITY,
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SubstitutionConfig {
    pub slack_tolerance: f64,
    /// Maximum number of grid points used to seed the local search.
    pub seed_points: usize,
    /// Number of best grid points refined by projected descent.
    pub starts: usize,
    /// Projected-descent steps per smoothing level.
    pub steps_per_level: usize,
}

impl Default for SubstitutionConfig {
    fn default() -> Self {
        Self {
            slack_tolerance: SLACK_TOLERANCE,
            seed_points: 2_000,
            starts: 4,
            steps_per_level: 60,
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct SubstitutionResult {
    pub prediction: SimplexPoint,
    pub worst_slack: f64,
    pub feasible: bool,
    pub bound: MixBound,
}

pub fn find_substitution(
    phi: &EntropySpec,
    mu: &SimplexPoint,
    panel: &ExpertPanel,
    loss: &LossSpec,
    cfg: &SubstitutionConfig,
) -> Result<SubstitutionResult> {
    let bound = mix_bound(phi, mu, panel, loss)?;
    substitute_for_bound(loss, bound, cfg)
}

/// Minimises `max_x ℓ_x(p) − bound(x)` over predictions `p`.
///
/// The first candidate is the saddle point of the Bayes-risk dual,
/// `q = ∇(Φ^ℓ)*(−bound)`. Every loss here is proper, so
/// `⟨q, ℓ(q)⟩ − ⟨q, bound⟩` lower-bounds the optimum for any `q`; when the
/// candidate's worst slack meets that lower bound it is returned directly.
/// Otherwise grid-seeded projected descent on a log-sum-exp smoothing of the
/// max runs from the best seeds and the best point found is returned.
pub fn substitute_for_bound(
    loss: &LossSpec,
    bound: MixBound,
    cfg: &SubstitutionConfig,
) -> Result<SubstitutionResult> {
    let n = loss.outcome_count();
    if bound.per_outcome.len() != n {
        return Err(invalid("bound and loss disagree on the number of outcomes"));
    }
    if let Some(x) = bound.per_outcome.iter().position(|b| !b.is_finite()) {
        return Err(invalid(format!("mixability bound for outcome {x} is not finite")));
    }
    let finish = |prediction: SimplexPoint, bound: MixBound| {
        let worst = worst_slack(loss, &prediction, &bound);
        SubstitutionResult {
            feasible: worst <= cfg.slack_tolerance,
            prediction,
            worst_slack: worst,
            bound,
        }
    };

    let mut best: Option<(SimplexPoint, f64)> = None;
    let consider = |p: SimplexPoint, best: &mut Option<(SimplexPoint, f64)>| {
        let s = worst_slack(loss, &p, &bound);
        if best.as_ref().is_none_or(|(_, b)| s < *b) {
            *best = Some((p, s));
        }
    };

    let negated = DualVector::new(bound.per_outcome.iter().map(|b| -b).collect())?;
    if let Ok(q) = conjugate_gradient(
        &loss.bayes_entropy(),
        &negated,
        &ConjugateSolverConfig::default(),
    ) {
        let slack = worst_slack(loss, &q, &bound);
        if slack.is_finite() {
            if let Ok(losses) = loss_vector(loss, &q) {
                let lower = q.dot(&losses) - q.dot(&bound.per_outcome);
                if slack - lower <= 1e-12 * (1.0 + slack.abs()) {
                    return Ok(finish(q, bound));
                }
            }
        }
        consider(q, &mut best);
    }

    let resolution = SimplexGrid::resolution_for_budget(n, 1_000, cfg.seed_points);
    let grid = SimplexGrid::new(n, resolution)?;
    let mut seeds: Vec<(f64, SimplexPoint)> = grid
        .iter()
        .map(|p| (worst_slack(loss, &p, &bound), p))
        .filter(|(s, _)| s.is_finite())
        .collect();
    seeds.sort_by(|a, b| a.0.total_cmp(&b.0));
    seeds.truncate(cfg.starts.max(1));
    let mut starts: Vec<SimplexPoint> = seeds.into_iter().map(|(_, p)| p).collect();
    if let Some((p, s)) = &best {
        if s.is_finite() {
            starts.push(p.clone());
        }
    }
    if starts.is_empty() {
        starts.push(SimplexPoint::uniform(n));
    }
    for start in starts {
        let refined = refine(loss, &bound, start, cfg);
        consider(refined, &mut best);
    }
    let (prediction, slack) = best.expect("at least one start");
    if !slack.is_finite() {
        return Err(GaaError::Solver {
            best: prediction.into_weights(),
            residual: f64::INFINITY,
            iterations: 0,
        });
    }
    Ok(finish(prediction, bound))
}

/// Projected gradient descent on `(1/β) log Σ_x exp(β(ℓ_x(p) − b_x))` with
/// increasing `β`. Returns the best point seen under the unsmoothed objective.
fn refine(loss: &LossSpec, bound: &MixBound, start: SimplexPoint, cfg: &SubstitutionConfig) -> SimplexPoint {
    let n = loss.outcome_count();
    let mut p = if loss.finite_at_vertices() {
        start
    } else {
        clamp_interior(&start, 1e-9 / n as f64).unwrap_or(start)
    };
    let mut best = (worst_slack(loss, &p, bound), p.clone());

    let smoothed = |p: &SimplexPoint, beta: f64| -> Option<(f64, Vec<f64>)> {
        let losses = loss_vector(loss, p).ok()?;
        let gaps: Vec<f64> = losses.iter().zip(&bound.per_outcome).map(|(l, b)| l - b).collect();
        let max = gaps.iter().cloned().fold(f64::NEG_INFINITY, f64::max);
        let weights: Vec<f64> = gaps.iter().map(|g| (beta * (g - max)).exp()).collect();
        let total: f64 = weights.iter().sum();
        Some((max + total.ln() / beta, weights.iter().map(|w| w / total).collect()))
    };

    let mut step = 0.1;
    for level in 1..=9 {
        let beta = 10f64.powi(level);
        for _ in 0..cfg.steps_per_level {
            let Some((value, weights)) = smoothed(&p, beta) else { break };
            let mut grad = vec![0.0; n];
            for (x, w) in weights.iter().enumerate() {
                if *w < 1e-300 {
                    continue;
                }
                for (g, d) in grad.iter_mut().zip(loss.loss_gradient(p.weights(), x)) {
                    *g += w * d;
                }
            }
            let mut accepted = false;
            while step > 1e-16 {
                let trial: Vec<f64> = p.weights().iter().zip(&grad).map(|(a, g)| a - step * g).collect();
                let Ok(candidate) = project_to_simplex(&trial) else { break };
                if let Some((trial_value, _)) = smoothed(&candidate, beta) {
                    if trial_value < value {
                        p = candidate;
                        accepted = true;
                        break;
                    }
                }
                step *= 0.5;
            }
            if !accepted {
                break;
            }
            let s = worst_slack(loss, &p, bound);
            if s < best.0 {
                best = (s, p.clone());
            }
            step *= 2.0;
        }
        step = step.max(1e-4);
    }
    best.1
}

/// Minimum over a simplex grid of the worst slack: evidence that no
/// prediction meets the bound when it is clearly positive.
pub fn grid_certificate(loss: &LossSpec, bound: &MixBound, resolution: usize) -> Result<f64> {
    let grid = SimplexGrid::new(loss.outcome_count(), resolution)?;
    Ok(grid
        .iter()
        .map(|p| worst_slack(loss, &p, bound))
        .fold(f64::INFINITY, f64::min))
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct CertifyOptions {
    pub samples: usize,
    pub seed: u64,
    /// Sampled panels have between 2 and `max_experts` experts.
    pub max_experts: usize,
    pub substitution: SubstitutionConfig,
    /// Requested grid resolution for infeasibility certificates; reduced
    /// to keep the grid under a fixed point budget in higher dimensions.
    pub certificate_resolution: usize,
}

impl Default for CertifyOptions {
    fn default() -> Self {
        Self {
            samples: 200,
            seed: 0,
            max_experts: 3,
            substitution: SubstitutionConfig::default(),
            certificate_resolution: 1_000,
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct Witness {
    pub sample: usize,
    pub mixture: SimplexPoint,
    pub panel: ExpertPanel,
    pub slack: f64,
    /// Minimum worst slack over the certificate grid.
    pub certificate: f64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct MixabilityVerdict {
    pub mixable_on_samples: bool,
    pub witness_failures: Vec<Witness>,
    pub samples_tested: usize,
    /// Samples where the solver reported positive slack that the grid did not confirm.
    pub uncertified: usize,
}

pub fn certify_mixability(
    phi: &EntropySpec,
    loss: &LossSpec,
    sample_count: usize,
    seed: u64,
) -> MixabilityVerdict {
    let opts = CertifyOptions {
        samples: sample_count,
        seed,
        ..CertifyOptions::default()
    };
    certify_mixability_with(phi, loss, &opts)
}

enum SampleOutcome {
    Feasible,
    Uncertified,
    Failure(Witness),
}

pub fn certify_mixability_with(
    phi: &EntropySpec,
    loss: &LossSpec,
    opts: &CertifyOptions,
) -> MixabilityVerdict {
    let cases = certification_cases(phi, loss, opts);
    let outcomes: Vec<SampleOutcome> = cases
        .par_iter()
        .enumerate()
        .map(|(i, (mu, panel))| check_case(phi, loss, opts, i, mu, panel))
        .collect();
    let mut witness_failures = Vec::new();
    let mut uncertified = 0;
    for outcome in outcomes {
        match outcome {
            SampleOutcome::Feasible => {}
            SampleOutcome::Uncertified => uncertified += 1,
            SampleOutcome::Failure(w) => witness_failures.push(w),
        }
    }
    MixabilityVerdict {
        mixable_on_samples: witness_failures.is_empty(),
        witness_failures,
        samples_tested: cases.len(),
        uncertified,
    }
}

/// Like [`certify_mixability_with`] but stops at the first certified failure.
fn first_failure(phi: &EntropySpec, loss: &LossSpec, opts: &CertifyOptions) -> Option<Witness> {
    let cases = certification_cases(phi, loss, opts);
    cases
        .par_iter()
        .enumerate()
        .find_map_first(|(i, (mu, panel))| match check_case(phi, loss, opts, i, mu, panel) {
            SampleOutcome::Failure(w) => Some(w),
            _ => None,
        })
}

fn check_case(
    phi: &EntropySpec,
    loss: &LossSpec,
    opts: &CertifyOptions,
    index: usize,
    mu: &SimplexPoint,
    panel: &ExpertPanel,
) -> SampleOutcome {
    let tolerance = opts.substitution.slack_tolerance;
    let bound = match mix_bound(phi, mu, panel, loss) {
        Ok(b) => b,
        Err(_) => return SampleOutcome::Uncertified,
    };
    let slack = match substitute_for_bound(loss, bound.clone(), &opts.substitution) {
        Ok(result) if result.feasible => return SampleOutcome::Feasible,
        Ok(result) => result.worst_slack,
        Err(_) => f64::INFINITY,
    };
    let budget = match loss.family() {
        crate::losses::LossFamily::ProperFromEntropy(_) => 20_000,
        _ => 600_000,
    };
    let resolution =
        SimplexGrid::resolution_for_budget(loss.outcome_count(), opts.certificate_resolution, budget);
    match grid_certificate(loss, &bound, resolution) {
        Ok(certificate) if certificate > 10.0 * tolerance => SampleOutcome::Failure(Witness {
            sample: index,
            mixture: mu.clone(),
            panel: panel.clone(),
            slack,
            certificate,
        }),
        _ => SampleOutcome::Uncertified,
    }
}

/// Random (mixture, panel) pairs followed by deterministic corner cases.
fn certification_cases(
    phi: &EntropySpec,
    loss: &LossSpec,
    opts: &CertifyOptions,
) -> Vec<(SimplexPoint, ExpertPanel)> {
    let outcomes = loss.outcome_count();
    let max_experts = opts.max_experts.max(2);
    let mixture_floor = if phi.has_singular_boundary() { 1e-6 } else { 0.0 };
    let prediction_floor = if loss.finite_at_vertices() { 0.0 } else { 1e-6 };
    let floor = |p: SimplexPoint, eps: f64| {
        if eps > 0.0 {
            clamp_interior(&p, eps).unwrap_or(p)
        } else {
            p
        }
    };

    let mut cases = Vec::with_capacity(opts.samples + 4 * max_experts);
    for i in 0..opts.samples {
        let mut r = rng::stream(opts.seed, Purpose::Certification, i as u32);
        let k = r.gen_range(2..=max_experts);
        let mu = floor(rng::uniform_simplex(&mut r, k), mixture_floor);
        let predictions = (0..k)
            .map(|_| floor(rng::uniform_simplex(&mut r, outcomes), prediction_floor))
            .collect();
        cases.push((mu, ExpertPanel::new(predictions).expect("nonempty panel")));
    }

    // Vertex panels (nudged inside for losses that are infinite there) with
    // central and near-boundary mixtures.
    let vertex_floor = if loss.finite_at_vertices() { 0.0 } else { 1e-3 };
    for k in 2..=max_experts {
        let vertices: Vec<SimplexPoint> = (0..k)
            .map(|t| floor(SimplexPoint::vertex(outcomes, t % outcomes), vertex_floor))
            .collect();
        let panel = ExpertPanel::new(vertices).expect("nonempty panel");
        let mut skewed = vec![0.0; k];
        skewed[0] = 0.7;
        skewed[1] = 0.3;
        for mu in [
            SimplexPoint::uniform(k),
            floor(SimplexPoint::vertex(k, 0), 1e-3),
            floor(SimplexPoint::new(skewed).expect("valid"), mixture_floor.max(1e-3)),
        ] {
            cases.push((mu, panel.clone()));
        }
        let mut mixed = vec![SimplexPoint::uniform(outcomes); k];
        mixed[0] = floor(SimplexPoint::vertex(outcomes, 0), vertex_floor);
        cases.push((SimplexPoint::uniform(k), ExpertPanel::new(mixed).expect("nonempty")));
    }

    // Two experts splitting mass on one edge of the outcome simplex in
    // opposite proportions.
    for a in 0..outcomes {
        for b in a + 1..outcomes {
            for d in [0.1, 0.25, 0.4] {
                let edge = |hi: f64| {
                    let mut w = vec![0.0; outcomes];
                    w[a] = hi;
                    w[b] = 1.0 - hi;
                    floor(SimplexPoint::new(w).expect("valid"), vertex_floor)
                };
                let panel = ExpertPanel::new(vec![edge(0.5 + d), edge(0.5 - d)]).expect("nonempty");
                cases.push((SimplexPoint::uniform(2), panel));
            }
        }
    }
    cases
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct EtaEstimate {
    /// Largest η found mixable on samples.
    pub lo: f64,
    /// Smallest η with a certified failure.
    pub hi: f64,
    pub midpoint: f64,
    pub evaluations: usize,
}

pub const ETA_SEARCH_RANGE: (f64, f64) = (1e-3, 1e3);

pub fn estimate_mixability_constant(
    phi_base: &EntropySpec,
    loss: &LossSpec,
    precision: f64,
) -> Result<EtaEstimate> {
    estimate_mixability_constant_with(phi_base, loss, precision, &CertifyOptions::default())
}

/// Bisection for the largest η such that `ℓ` is `(1/η)·Φ_base`-mixable on
/// the certification samples. Geometric steps until the bracket ratio is
/// below 4, arithmetic steps after that.
pub fn estimate_mixability_constant_with(
    phi_base: &EntropySpec,
    loss: &LossSpec,
    precision: f64,
    opts: &CertifyOptions,
) -> Result<EtaEstimate> {
    if !(precision > 0.0 && precision.is_finite()) {
        return Err(invalid(format!("precision must be positive, got {precision}")));
    }
    let (mut lo, mut hi) = ETA_SEARCH_RANGE;
    let mut evaluations = 0;
    let mut mixable = |eta: f64| -> Result<bool> {
        evaluations += 1;
        let phi = phi_base.base().with_eta(eta)?;
        Ok(first_failure(&phi, loss, opts).is_none())
    };
    if !mixable(lo)? || mixable(hi)? {
        return Err(GaaError::OutOfRange { lo, hi });
    }
    while hi - lo > precision {
        let mid = if hi / lo > 4.0 {
            (lo * hi).sqrt()
        } else {
            0.5 * (lo + hi)
        };
        if mixable(mid)? {
            lo = mid;
        } else {
            hi = mid;
        }
    }
    Ok(EtaEstimate {
        lo,
        hi,
        midpoint: 0.5 * (lo + hi),
        evaluations,
    })
}
