//! Game configuration: a single JSON document, unknown fields rejected.

use gaa_core::rng::{self, Purpose};
use gaa_core::{
    clamp_interior, EntropySpec, ExpertPanel, GameOptions, LossSpec, SimplexPoint, SubstitutionConfig,
};
use serde::{Deserialize, Serialize};

use crate::error::CliError;

/// Floor applied to stochastic expert predictions so log losses stay finite.
pub const STOCHASTIC_FLOOR: f64 = 1e-6;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum FamilyName {
    NegShannon,
    NegTsallis,
    Quadratic,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct EntropyConfig {
    pub family: FamilyName,
    #[serde(default = "one")]
    pub eta: f64,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub q: Option<f64>,
}

fn one() -> f64 {
    1.0
}

impl EntropyConfig {
    pub fn build(&self, field: &str) -> Result<EntropySpec, CliError> {
        let spec = match (self.family, self.q) {
            (FamilyName::NegShannon, None) => EntropySpec::neg_shannon(self.eta),
            (FamilyName::Quadratic, None) => EntropySpec::quadratic(self.eta),
            (FamilyName::NegTsallis, Some(q)) => EntropySpec::neg_tsallis(q, self.eta),
            (FamilyName::NegTsallis, None) => {
                return Err(CliError::invalid(format!("{field}.q: required for neg_tsallis")))
            }
            (_, Some(_)) => {
                return Err(CliError::invalid(format!("{field}.q: only valid for neg_tsallis")))
            }
        };
        spec.map_err(|e| CliError::invalid(format!("{field}: {e}")))
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "family", rename_all = "snake_case", deny_unknown_fields)]
pub enum LossConfig {
    Log,
    Brier,
    Proper { entropy: EntropyConfig },
}

impl LossConfig {
    pub fn build(&self, outcome_count: usize) -> Result<LossSpec, CliError> {
        let spec = match self {
            LossConfig::Log => LossSpec::log(outcome_count),
            LossConfig::Brier => LossSpec::brier(outcome_count),
            LossConfig::Proper { entropy } => LossSpec::proper(entropy.build("loss.entropy")?, outcome_count),
        };
        spec.map_err(|e| CliError::invalid(format!("loss: {e}")))
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case", deny_unknown_fields)]
pub enum ExpertConfig {
    /// The same prediction every round.
    Fixed(Vec<f64>),
    /// One prediction per round.
    Table(Vec<Vec<f64>>),
    /// A fresh uniform draw from the simplex every round.
    Stochastic {
        #[serde(default)]
        seed: Option<u64>,
    },
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case", deny_unknown_fields)]
pub enum PriorConfig {
    Uniform,
    Explicit(Vec<f64>),
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case", deny_unknown_fields)]
pub enum OutcomeConfig {
    Explicit(Vec<usize>),
    Random { probabilities: Vec<f64> },
}

#[derive(Debug, Clone, Copy, Default, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ToleranceConfig {
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub slack: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub bound: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub telescoping: Option<f64>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct GameConfig {
    pub outcome_count: usize,
    pub experts: Vec<ExpertConfig>,
    pub entropy: EntropyConfig,
    pub loss: LossConfig,
    #[serde(default = "uniform_prior")]
    pub prior: PriorConfig,
    pub rounds: usize,
    pub outcomes: OutcomeConfig,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub seed: Option<u64>,
    #[serde(default)]
    pub tolerances: ToleranceConfig,
}

fn uniform_prior() -> PriorConfig {
    PriorConfig::Uniform
}

/// Everything needed to play a game, fully materialised.
#[derive(Debug, Clone)]
pub struct Game {
    pub entropy: EntropySpec,
    pub loss: LossSpec,
    pub prior: SimplexPoint,
    pub panels: Vec<ExpertPanel>,
    pub outcomes: Vec<usize>,
    pub options: GameOptions,
}

fn simplex(weights: &[f64], field: &str) -> Result<SimplexPoint, CliError> {
    SimplexPoint::new(weights.to_vec()).map_err(|e| CliError::invalid(format!("{field}: {e}")))
}

fn positive(value: Option<f64>, default: f64, field: &str) -> Result<f64, CliError> {
    match value {
        None => Ok(default),
        Some(v) if v > 0.0 && v.is_finite() => Ok(v),
        Some(v) => Err(CliError::invalid(format!("{field}: must be positive, got {v}"))),
    }
}

impl GameConfig {
    pub fn from_json(text: &str) -> Result<Self, CliError> {
        serde_json::from_str(text).map_err(|e| CliError::invalid(format!("config: {e}")))
    }

    fn needs_seed(&self) -> bool {
        matches!(self.outcomes, OutcomeConfig::Random { .. })
            || self
                .experts
                .iter()
                .any(|e| matches!(e, ExpertConfig::Stochastic { seed: None }))
    }

    /// Validates the configuration and draws every stochastic element.
    pub fn build(&self) -> Result<Game, CliError> {
        let n = self.outcome_count;
        if n < 2 {
            return Err(CliError::invalid("outcome_count: must be at least 2"));
        }
        let k = self.experts.len();
        if k == 0 {
            return Err(CliError::invalid("experts: at least one expert is required"));
        }
        if self.needs_seed() && self.seed.is_none() {
            return Err(CliError::invalid("seed: required when outcomes or experts are random"));
        }
        let seed = self.seed.unwrap_or(0);
        let entropy = self.entropy.build("entropy")?;
        let loss = self.loss.build(n)?;

        let prior = match &self.prior {
            PriorConfig::Uniform => SimplexPoint::uniform(k),
            PriorConfig::Explicit(w) => {
                if w.len() != k {
                    return Err(CliError::invalid(format!(
                        "prior.explicit: {} weights for {k} experts",
                        w.len()
                    )));
                }
                simplex(w, "prior.explicit")?
            }
        };

        let mut columns: Vec<Vec<SimplexPoint>> = Vec::with_capacity(k);
        for (i, expert) in self.experts.iter().enumerate() {
            let column = match expert {
                ExpertConfig::Fixed(p) => {
                    let field = format!("experts[{i}].fixed");
                    check_len(p.len(), n, &field)?;
                    vec![simplex(p, &field)?; self.rounds]
                }
                ExpertConfig::Table(rows) => {
                    let field = format!("experts[{i}].table");
                    if rows.len() != self.rounds {
                        return Err(CliError::invalid(format!(
                            "{field}: {} rows for {} rounds",
                            rows.len(),
                            self.rounds
                        )));
                    }
                    rows.iter()
                        .enumerate()
                        .map(|(t, p)| {
                            let field = format!("{field}[{t}]");
                            check_len(p.len(), n, &field)?;
                            simplex(p, &field)
                        })
                        .collect::<Result<Vec<_>, _>>()?
                }
                ExpertConfig::Stochastic { seed: own } => {
                    let mut r = rng::stream(own.unwrap_or(seed), Purpose::Expert, i as u32);
                    (0..self.rounds)
                        .map(|_| {
                            clamp_interior(&rng::uniform_simplex(&mut r, n), STOCHASTIC_FLOOR)
                                .map_err(|e| CliError::invalid(format!("experts[{i}]: {e}")))
                        })
                        .collect::<Result<Vec<_>, _>>()?
                }
            };
            columns.push(column);
        }
        let panels = (0..self.rounds)
            .map(|t| ExpertPanel::new(columns.iter().map(|c| c[t].clone()).collect()))
            .collect::<Result<Vec<_>, _>>()
            .map_err(|e| CliError::invalid(format!("experts: {e}")))?;

        let outcomes = match &self.outcomes {
            OutcomeConfig::Explicit(xs) => {
                if xs.len() != self.rounds {
                    return Err(CliError::invalid(format!(
                        "outcomes.explicit: {} outcomes for {} rounds",
                        xs.len(),
                        self.rounds
                    )));
                }
                if let Some(t) = xs.iter().position(|&x| x >= n) {
                    return Err(CliError::invalid(format!(
                        "outcomes.explicit[{t}]: outcome {} out of range",
                        xs[t]
                    )));
                }
                xs.clone()
            }
            OutcomeConfig::Random { probabilities } => {
                let field = "outcomes.random.probabilities";
                check_len(probabilities.len(), n, field)?;
                let probs = simplex(probabilities, field)?;
                let mut r = rng::stream(seed, Purpose::Outcomes, 0);
                (0..self.rounds)
                    .map(|_| rng::categorical(&mut r, probs.weights()))
                    .collect()
            }
        };

        let defaults = GameOptions::default();
        let options = GameOptions {
            substitution: SubstitutionConfig {
                slack_tolerance: positive(
                    self.tolerances.slack,
                    defaults.substitution.slack_tolerance,
                    "tolerances.slack",
                )?,
                ..defaults.substitution
            },
            bound_tolerance: positive(self.tolerances.bound, defaults.bound_tolerance, "tolerances.bound")?,
            telescoping_tolerance: positive(
                self.tolerances.telescoping,
                defaults.telescoping_tolerance,
                "tolerances.telescoping",
            )?,
        };

        Ok(Game {
            entropy,
            loss,
            prior,
            panels,
            outcomes,
            options,
        })
    }
}

fn check_len(got: usize, want: usize, field: &str) -> Result<(), CliError> {
    if got != want {
        return Err(CliError::invalid(format!(
            "{field}: {got} probabilities for {want} outcomes"
        )));
    }
    Ok(())
}
