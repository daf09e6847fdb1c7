//! Command-line surface.

use std::path::PathBuf;

use clap::{Args, Parser, Subcommand, ValueEnum};
use gaa_core::{CertifyOptions, EntropySpec, LossSpec, SimplexPoint};
use serde_json::Value;

use crate::commands;
use crate::config::{EntropyConfig, FamilyName, LossConfig};
use crate::error::{exit, CliError};

#[derive(Debug, Parser)]
#[command(name = "gaa", version, about = "Prediction with expert advice under Φ-mixability")]
pub struct Cli {
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Play the game described by one or more config files.
    Run {
        /// Game config (JSON); repeat to run several.
        #[arg(long = "config", required = true)]
        configs: Vec<PathBuf>,
        /// Output directory for trace.csv and summary.json.
        #[arg(long)]
        out: PathBuf,
        /// Override the config seed.
        #[arg(long)]
        seed: Option<u64>,
        /// Number of configs played concurrently.
        #[arg(long, default_value_t = 1)]
        jobs: usize,
    },
    /// Search for mixability violations on sampled panels.
    CheckMixability {
        #[command(flatten)]
        entropy: EntropyArgs,
        #[command(flatten)]
        loss: LossArgs,
        #[command(flatten)]
        sampling: SamplingArgs,
        /// Maximum number of witnesses printed.
        #[arg(long, default_value_t = 10)]
        max_witnesses: usize,
    },
    /// Estimate the largest η for which the loss is mixable.
    EstimateEta {
        #[arg(long, value_enum)]
        entropy: Family,
        #[arg(long)]
        q: Option<f64>,
        #[command(flatten)]
        loss: LossArgs,
        #[command(flatten)]
        sampling: SamplingArgs,
        /// Width of the final bracket.
        #[arg(long, default_value_t = 0.05)]
        precision: f64,
    },
    /// Print the regret allowance D_Φ(δ_θ, π) for every expert.
    Bound {
        #[command(flatten)]
        entropy: EntropyArgs,
        /// Comma-separated prior weights.
        #[arg(long, value_delimiter = ',', conflicts_with = "experts")]
        prior: Option<Vec<f64>>,
        /// Number of experts under a uniform prior.
        #[arg(long)]
        experts: Option<usize>,
    },
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum Family {
    NegShannon,
    NegTsallis,
    Quadratic,
}

impl From<Family> for FamilyName {
    fn from(f: Family) -> Self {
        match f {
            Family::NegShannon => FamilyName::NegShannon,
            Family::NegTsallis => FamilyName::NegTsallis,
            Family::Quadratic => FamilyName::Quadratic,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum LossName {
    Log,
    Brier,
    Proper,
}

#[derive(Debug, Args)]
pub struct EntropyArgs {
    #[arg(long, value_enum)]
    pub entropy: Family,
    #[arg(long, default_value_t = 1.0)]
    pub eta: f64,
    /// Tsallis exponent.
    #[arg(long)]
    pub q: Option<f64>,
}

impl EntropyArgs {
    fn build(&self) -> Result<EntropySpec, CliError> {
        entropy_spec(self.entropy, self.eta, self.q, "entropy")
    }
}

fn entropy_spec(family: Family, eta: f64, q: Option<f64>, field: &str) -> Result<EntropySpec, CliError> {
    EntropyConfig {
        family: family.into(),
        eta,
        q,
    }
    .build(field)
}

#[derive(Debug, Args)]
pub struct LossArgs {
    #[arg(long, value_enum)]
    pub loss: LossName,
    /// Entropy generating a `proper` loss.
    #[arg(long, value_enum)]
    pub loss_entropy: Option<Family>,
    #[arg(long, default_value_t = 1.0)]
    pub loss_eta: f64,
    #[arg(long)]
    pub loss_q: Option<f64>,
    #[arg(long, default_value_t = 2)]
    pub outcomes: usize,
}

impl LossArgs {
    fn build(&self) -> Result<LossSpec, CliError> {
        let config = match (self.loss, self.loss_entropy) {
            (LossName::Log, None) => LossConfig::Log,
            (LossName::Brier, None) => LossConfig::Brier,
            (LossName::Proper, Some(family)) => LossConfig::Proper {
                entropy: EntropyConfig {
                    family: family.into(),
                    eta: self.loss_eta,
                    q: self.loss_q,
                },
            },
            (LossName::Proper, None) => {
                return Err(CliError::invalid("--loss-entropy: required for a proper loss"))
            }
            (_, Some(_)) => return Err(CliError::invalid("--loss-entropy: only valid with --loss proper")),
        };
        config.build(self.outcomes)
    }
}

#[derive(Debug, Args)]
pub struct SamplingArgs {
    #[arg(long, default_value_t = 200)]
    pub samples: usize,
    #[arg(long, default_value_t = 0)]
    pub seed: u64,
    /// Largest panel size sampled.
    #[arg(long, default_value_t = 3)]
    pub experts: usize,
}

impl SamplingArgs {
    fn options(&self) -> Result<CertifyOptions, CliError> {
        if self.samples == 0 {
            return Err(CliError::invalid("--samples: must be at least 1"));
        }
        if self.experts < 2 {
            return Err(CliError::invalid("--experts: must be at least 2"));
        }
        Ok(CertifyOptions {
            samples: self.samples,
            seed: self.seed,
            max_experts: self.experts,
            ..CertifyOptions::default()
        })
    }
}

fn print_json(value: &Value) {
    println!("{}", serde_json::to_string_pretty(value).expect("json values serialize"));
}

fn report_error(e: &CliError) -> i32 {
    eprintln!("error: {e}");
    e.exit_code()
}

/// Executes a parsed command line and returns the process exit code.
pub fn execute(cli: Cli) -> i32 {
    match cli.command {
        Command::Run {
            configs,
            out,
            seed,
            jobs,
        } => {
            let results = commands::run_files(&configs, &out, jobs, seed);
            for (path, result) in configs.iter().zip(&results) {
                match result {
                    Ok(report) => println!(
                        "{}: regret {} (bound {}), exit {}, outputs in {}",
                        path.display(),
                        report.summary.regret,
                        report.summary.bound_vs_best,
                        report.exit_code,
                        report.out_dir.display()
                    ),
                    Err(e) => eprintln!("error: {}: {e}", path.display()),
                }
            }
            commands::combined_exit_code(&results)
        }
        Command::CheckMixability {
            entropy,
            loss,
            sampling,
            max_witnesses,
        } => {
            let inputs = entropy
                .build()
                .and_then(|phi| Ok((phi, loss.build()?, sampling.options()?)));
            match inputs {
                Ok((phi, loss, opts)) => {
                    let (value, code) = commands::check_mixability(&phi, &loss, &opts, max_witnesses);
                    print_json(&value);
                    code
                }
                Err(e) => report_error(&e),
            }
        }
        Command::EstimateEta {
            entropy,
            q,
            loss,
            sampling,
            precision,
        } => {
            let result = entropy_spec(entropy, 1.0, q, "entropy")
                .and_then(|phi| Ok((phi, loss.build()?, sampling.options()?)))
                .and_then(|(phi, loss, opts)| {
                    if !(precision > 0.0 && precision.is_finite()) {
                        return Err(CliError::invalid("--precision: must be positive"));
                    }
                    commands::estimate_eta(&phi, &loss, precision, &opts)
                });
            match result {
                Ok(value) => {
                    print_json(&value);
                    exit::OK
                }
                Err(e) => report_error(&e),
            }
        }
        Command::Bound {
            entropy,
            prior,
            experts,
        } => {
            let result = entropy.build().and_then(|phi| {
                let prior = match (prior, experts) {
                    (Some(w), None) => SimplexPoint::new(w).map_err(|e| CliError::invalid(format!("--prior: {e}")))?,
                    (None, Some(k)) if k >= 1 => SimplexPoint::uniform(k),
                    (None, Some(_)) => return Err(CliError::invalid("--experts: must be at least 1")),
                    _ => return Err(CliError::invalid("one of --prior or --experts is required")),
                };
                commands::bound(&phi, &prior)
            });
            match result {
                Ok(value) => {
                    print_json(&value);
                    exit::OK
                }
                Err(e) => report_error(&e),
            }
        }
    }
}
