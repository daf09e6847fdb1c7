//! Subcommand implementations. Each returns the JSON to print and an exit code.

use std::path::{Path, PathBuf};
use std::sync::atomic::{AtomicUsize, Ordering};
use std::sync::Mutex;
use std::time::Instant;

use gaa_core::{
    certify_mixability_with, estimate_mixability_constant_with, regret_bound, run_game_with,
    CertifyOptions, EntropySpec, GaaError, LossSpec, SimplexPoint,
};
use serde::Serialize;
use serde_json::{json, Value};

use crate::config::GameConfig;
use crate::error::{exit, CliError};
use crate::report::{round12, write_outputs, Summary};

/// Result of one `run`: the summary written to disk and its exit code.
#[derive(Debug, Clone)]
pub struct RunReport {
    pub summary: Summary,
    pub exit_code: i32,
    pub out_dir: PathBuf,
}

pub fn load_config(path: &Path) -> Result<GameConfig, CliError> {
    let text = std::fs::read_to_string(path).map_err(|e| CliError::io(path, e))?;
    GameConfig::from_json(&text)
}

/// Plays the game described by `config` and writes its outputs to `out_dir`.
pub fn run_config(config: &GameConfig, out_dir: &Path) -> Result<RunReport, CliError> {
    let started = Instant::now();
    let game = config.build()?;
    let trace = run_game_with(
        &game.entropy,
        &game.prior,
        &game.loss,
        &game.panels,
        &game.outcomes,
        &game.options,
    )?;
    let summary = Summary::from_trace(&trace, config.outcome_count, started.elapsed().as_secs_f64());
    write_outputs(out_dir, &trace, &summary)?;
    Ok(RunReport {
        exit_code: summary.exit_code,
        summary,
        out_dir: out_dir.to_path_buf(),
    })
}

pub fn run_file(path: &Path, out_dir: &Path, seed: Option<u64>) -> Result<RunReport, CliError> {
    let mut config = load_config(path)?;
    if seed.is_some() {
        config.seed = seed;
    }
    run_config(&config, out_dir)
}

/// Runs several config files on up to `jobs` threads. With more than one
/// config each gets its own subdirectory of `out`, named after the file stem.
/// Results are returned in input order.
pub fn run_files(
    paths: &[PathBuf],
    out: &Path,
    jobs: usize,
    seed: Option<u64>,
) -> Vec<Result<RunReport, CliError>> {
    let dirs: Vec<PathBuf> = if paths.len() == 1 {
        vec![out.to_path_buf()]
    } else {
        paths
            .iter()
            .enumerate()
            .map(|(i, p)| {
                let stem = p.file_stem().map(|s| s.to_string_lossy().into_owned());
                out.join(stem.unwrap_or_else(|| format!("run{i}")))
            })
            .collect()
    };
    let results: Vec<Mutex<Option<Result<RunReport, CliError>>>> =
        paths.iter().map(|_| Mutex::new(None)).collect();
    let next = AtomicUsize::new(0);
    std::thread::scope(|scope| {
        for _ in 0..jobs.clamp(1, paths.len().max(1)) {
            scope.spawn(|| loop {
                let i = next.fetch_add(1, Ordering::SeqCst);
                if i >= paths.len() {
                    break;
                }
                let result = run_file(&paths[i], &dirs[i], seed);
                *results[i].lock().expect("result slot") = Some(result);
            });
        }
    });
    results
        .into_iter()
        .map(|slot| slot.into_inner().expect("result slot").expect("every config ran"))
        .collect()
}

/// Highest exit code over all runs; errors map through [`CliError::exit_code`].
pub fn combined_exit_code(results: &[Result<RunReport, CliError>]) -> i32 {
    results
        .iter()
        .map(|r| match r {
            Ok(report) => report.exit_code,
            Err(e) => e.exit_code(),
        })
        .max()
        .unwrap_or(exit::OK)
}

#[derive(Debug, Clone, Serialize)]
struct WitnessReport {
    sample: usize,
    mixture: Vec<f64>,
    panel: Vec<Vec<f64>>,
    slack: f64,
    certificate: f64,
}

fn rounded(values: &[f64]) -> Vec<f64> {
    values.iter().map(|&v| round12(v)).collect()
}

pub fn check_mixability(
    phi: &EntropySpec,
    loss: &LossSpec,
    opts: &CertifyOptions,
    max_witnesses: usize,
) -> (Value, i32) {
    let verdict = certify_mixability_with(phi, loss, opts);
    let witnesses: Vec<WitnessReport> = verdict
        .witness_failures
        .iter()
        .take(max_witnesses)
        .map(|w| WitnessReport {
            sample: w.sample,
            mixture: rounded(w.mixture.weights()),
            panel: w.panel.predictions().iter().map(|p| rounded(p.weights())).collect(),
            slack: round12(w.slack),
            certificate: round12(w.certificate),
        })
        .collect();
    let code = if verdict.mixable_on_samples {
        exit::OK
    } else {
        exit::NOT_MIXABLE
    };
    let value = json!({
        "mixable_on_samples": verdict.mixable_on_samples,
        "samples_tested": verdict.samples_tested,
        "witness_count": verdict.witness_failures.len(),
        "uncertified": verdict.uncertified,
        "witnesses": witnesses,
    });
    (value, code)
}

pub fn estimate_eta(
    phi_base: &EntropySpec,
    loss: &LossSpec,
    precision: f64,
    opts: &CertifyOptions,
) -> Result<Value, CliError> {
    match estimate_mixability_constant_with(phi_base, loss, precision, opts) {
        Ok(e) => Ok(json!({
            "lo": round12(e.lo),
            "hi": round12(e.hi),
            "midpoint": round12(e.midpoint),
            "evaluations": e.evaluations,
        })),
        Err(GaaError::OutOfRange { lo, hi }) => Err(CliError::OutOfRange { lo, hi }),
        Err(e) => Err(e.into()),
    }
}

pub fn bound(phi: &EntropySpec, prior: &SimplexPoint) -> Result<Value, CliError> {
    let bounds = (0..prior.dimension())
        .map(|theta| regret_bound(phi, prior, theta).map(round12))
        .collect::<Result<Vec<_>, _>>()?;
    Ok(json!({ "prior": rounded(prior.weights()), "bounds": bounds }))
}
