//! Prediction with expert advice under Φ-mixability.
//!
//! * [`simplex`]: probability vectors, dual vectors modulo `1`, projection, grids.
//! * [`entropy`]: entropies, conjugates, conjugate gradients, Bregman divergences.
//! * [`losses`]: log, Brier and entropy-induced proper losses; assessments.
//! * [`mixability`]: mixability bounds, the substitution solver, certification
//!   and the η search.
//! * [`gaa`]: the generalised aggregating algorithm and game driver.
//!
//! The classical aggregating algorithm is the special case of negative
//! Shannon entropy scaled by `1/η` with a uniform prior.
//!
//! ```
//! use gaa_core::{run_game, EntropySpec, ExpertPanel, LossSpec, SimplexPoint};
//!
//! # fn main() -> gaa_core::Result<()> {
//! let phi = EntropySpec::neg_shannon(1.0)?;
//! let loss = LossSpec::log(2)?;
//! let panel = ExpertPanel::new(vec![
//!     SimplexPoint::new(vec![0.9, 0.1])?,
//!     SimplexPoint::new(vec![0.5, 0.5])?,
//! ])?;
//! let trace = run_game(&phi, &SimplexPoint::uniform(2), &loss, &vec![panel; 3], &[0, 0, 1])?;
//! assert!(trace.summary.regret <= 2f64.ln() + 1e-9);
//! # Ok(())
//! # }
//! ```

pub mod entropy;
pub mod error;
pub mod gaa;
pub mod losses;
pub mod mixability;
pub mod rng;
pub mod simplex;

pub use entropy::{
    bregman, conjugate, conjugate_gradient, entropy_gradient, entropy_value, ConjugateSolverConfig,
    EntropyFamily, EntropySpec,
};
pub use error::{GaaError, Result};
pub use gaa::{
    classic_aa_weights, regret_bound, run_game, run_game_with, GaaState, GameOptions, GameSummary,
    GameTrace, RoundRecord,
};
pub use losses::{
    assessment, loss_vector, proper_loss_from_entropy, propriety_gap, Assessment, ExpertPanel,
    LossFamily, LossSpec,
};
pub use mixability::{
    certify_mixability, certify_mixability_with, estimate_mixability_constant,
    estimate_mixability_constant_with, find_substitution, mix_bound, mix_bound_definition,
    mix_bound_primal, CertifyOptions, EtaEstimate, MixBound, MixabilityVerdict,
    SubstitutionConfig, SubstitutionResult,
};
pub use simplex::{clamp_interior, enumerate_grid, project_to_simplex, DualVector, SimplexGrid, SimplexPoint};
