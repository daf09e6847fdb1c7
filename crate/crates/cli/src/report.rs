//! Trace CSV and summary JSON. Every number is rounded to 12 significant
//! digits so output is byte-stable across runs and platforms.

use std::io::Write;
use std::path::Path;

use gaa_core::{GameTrace, RoundRecord};
use serde::Serialize;

use crate::error::{exit, CliError};

pub const TRACE_FILE: &str = "trace.csv";
pub const SUMMARY_FILE: &str = "summary.json";

/// `x` rounded to 12 significant digits; `-0` becomes `0`.
pub fn round12(x: f64) -> f64 {
    if !x.is_finite() {
        return x;
    }
    if x == 0.0 {
        return 0.0;
    }
    format!("{x:.11e}").parse().expect("formatted float parses")
}

/// `%.12g`-style text: plain decimals for exponents in `[-5, 12)`,
/// scientific notation otherwise.
pub fn format_number(x: f64) -> String {
    if x.is_nan() {
        return "nan".into();
    }
    if x.is_infinite() {
        return if x > 0.0 { "inf".into() } else { "-inf".into() };
    }
    let r = round12(x);
    if r == 0.0 {
        return "0".into();
    }
    let sci = format!("{r:.11e}");
    let (mantissa, exponent) = sci.split_once('e').expect("scientific format");
    let exponent: i32 = exponent.parse().expect("exponent");
    if (-5..12).contains(&exponent) {
        format!("{r}")
    } else {
        let mantissa = mantissa.trim_end_matches('0').trim_end_matches('.');
        format!("{mantissa}e{exponent}")
    }
}

pub fn trace_header(experts: usize) -> Vec<String> {
    let mut header: Vec<String> = ["round", "outcome", "player_prediction", "player_loss", "slack"]
        .iter()
        .map(|s| s.to_string())
        .collect();
    for i in 0..experts {
        header.push(format!("expert{i}_loss"));
        header.push(format!("expert{i}_cumulative"));
    }
    header.push("cumulative_regret_vs_best".into());
    header.push("bound_vs_best".into());
    header
}

fn trace_row(r: &RoundRecord) -> Vec<String> {
    let prediction = r
        .prediction
        .weights()
        .iter()
        .map(|&p| format_number(p))
        .collect::<Vec<_>>()
        .join(";");
    let mut row = vec![
        r.round.to_string(),
        r.outcome.to_string(),
        prediction,
        format_number(r.player_loss),
        format_number(r.slack),
    ];
    for (loss, cumulative) in r.assessment.iter().zip(&r.expert_cumulative) {
        row.push(format_number(*loss));
        row.push(format_number(*cumulative));
    }
    row.push(format_number(r.regret_vs_best));
    row.push(format_number(r.bound_vs_best));
    row
}

pub fn write_trace<W: Write>(trace: &GameTrace, experts: usize, out: W) -> Result<(), CliError> {
    let mut w = csv::WriterBuilder::new()
        .terminator(csv::Terminator::Any(b'\n'))
        .from_writer(out);
    w.write_record(trace_header(experts))?;
    for r in &trace.rounds {
        w.write_record(trace_row(r))?;
    }
    w.flush().map_err(|e| CliError::io(TRACE_FILE, e))?;
    Ok(())
}

fn json_number(x: f64) -> Option<f64> {
    x.is_finite().then(|| round12(x))
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ExpertReport {
    pub expert: usize,
    pub cumulative_loss: f64,
    pub regret: f64,
    pub bound: f64,
    pub bound_satisfied: bool,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct Summary {
    pub rounds: usize,
    pub experts: usize,
    pub outcomes: usize,
    pub player_loss: f64,
    pub best_expert: usize,
    pub regret: f64,
    pub bound_vs_best: f64,
    pub per_expert: Vec<ExpertReport>,
    pub bound_checked: bool,
    pub bound_satisfied: bool,
    pub max_slack: Option<f64>,
    pub infeasible_rounds: usize,
    pub potential_drop: Option<f64>,
    pub telescoping_residual: Option<f64>,
    pub telescoping_ok: bool,
    pub exit_code: i32,
    pub trace: String,
    pub wall_time_seconds: f64,
}

impl Summary {
    pub fn from_trace(trace: &GameTrace, outcomes: usize, wall_time_seconds: f64) -> Self {
        let s = &trace.summary;
        let per_expert: Vec<ExpertReport> = s
            .expert_losses
            .iter()
            .zip(&s.bounds)
            .zip(&s.bound_satisfied)
            .enumerate()
            .map(|(expert, ((&loss, &bound), &ok))| ExpertReport {
                expert,
                cumulative_loss: round12(loss),
                regret: round12(s.player_loss - loss),
                bound: round12(bound),
                bound_satisfied: ok,
            })
            .collect();
        let exit_code = if s.infeasible_rounds > 0 {
            exit::INFEASIBLE
        } else if !trace.all_bounds_hold() {
            exit::BOUND_VIOLATED
        } else {
            exit::OK
        };
        Summary {
            rounds: s.rounds,
            experts: s.expert_losses.len(),
            outcomes,
            player_loss: round12(s.player_loss),
            best_expert: s.best_expert,
            regret: round12(s.regret),
            bound_vs_best: round12(s.bound_vs_best),
            per_expert,
            bound_checked: s.bound_checked,
            bound_satisfied: trace.all_bounds_hold(),
            max_slack: json_number(s.max_slack),
            infeasible_rounds: s.infeasible_rounds,
            potential_drop: json_number(s.potential_drop),
            telescoping_residual: json_number(s.telescoping_residual),
            telescoping_ok: s.telescoping_ok,
            exit_code,
            trace: TRACE_FILE.into(),
            wall_time_seconds: round12(wall_time_seconds),
        }
    }
}

/// Writes `trace.csv` and `summary.json` into `dir`.
pub fn write_outputs(dir: &Path, trace: &GameTrace, summary: &Summary) -> Result<(), CliError> {
    std::fs::create_dir_all(dir).map_err(|e| CliError::io(dir, e))?;
    let trace_path = dir.join(TRACE_FILE);
    let file = std::fs::File::create(&trace_path).map_err(|e| CliError::io(&trace_path, e))?;
    write_trace(trace, summary.experts, std::io::BufWriter::new(file))?;
    let summary_path = dir.join(SUMMARY_FILE);
    let mut text = serde_json::to_string_pretty(summary)?;
    text.push('\n');
    std::fs::write(&summary_path, text).map_err(|e| CliError::io(&summary_path, e))?;
    Ok(())
}
