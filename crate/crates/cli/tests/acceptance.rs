//! Acceptance suite. Runs every criterion, prints one PASS/FAIL line each,
//! and exits non-zero if any criterion fails.

use std::path::Path;
use std::process::Command;
use std::time::{Duration, Instant};

use gaa_cli::config::{
    EntropyConfig, ExpertConfig, FamilyName, GameConfig, LossConfig, OutcomeConfig, PriorConfig,
};
use gaa_cli::run_config;
use gaa_core::entropy::solve_conjugate;
use gaa_core::gaa::mixture_regret_bound;
use gaa_core::mixability::{shannon_mix_bound, SLACK_TOLERANCE};
use gaa_core::rng::{self, Purpose};
use gaa_core::{
    assessment, bregman, certify_mixability, classic_aa_weights, clamp_interior, conjugate,
    conjugate_gradient, entropy_gradient, entropy_value, estimate_mixability_constant, mix_bound,
    mix_bound_definition, mix_bound_primal, proper_loss_from_entropy, propriety_gap, regret_bound,
    run_game, ConjugateSolverConfig, DualVector, EntropySpec, ExpertPanel, GaaState, LossSpec,
    SimplexGrid, SimplexPoint,
};
use rand::Rng;
use rand_chacha::ChaCha20Rng;

const SEED: u64 = 20240611;

struct Outcome {
    pass: bool,
    detail: String,
}

fn check(pass: bool, detail: impl Into<String>) -> Outcome {
    Outcome {
        pass,
        detail: detail.into(),
    }
}

fn cfg() -> ConjugateSolverConfig {
    ConjugateSolverConfig::default()
}

fn stream(criterion: u32) -> ChaCha20Rng {
    rng::stream(SEED, Purpose::Property, criterion)
}

fn random_point(r: &mut ChaCha20Rng, dim: usize, floor: f64) -> SimplexPoint {
    let p = rng::uniform_simplex(r, dim);
    if dim == 1 {
        p
    } else {
        clamp_interior(&p, floor).unwrap()
    }
}

fn random_dual(r: &mut ChaCha20Rng, dim: usize, range: f64) -> DualVector {
    DualVector::new((0..dim).map(|_| r.gen_range(-range..range)).collect()).unwrap()
}

fn families() -> Vec<(&'static str, EntropySpec)> {
    vec![
        ("neg_shannon", EntropySpec::neg_shannon(1.0).unwrap()),
        ("neg_tsallis(q=0.5)", EntropySpec::neg_tsallis(0.5, 1.0).unwrap()),
        ("neg_tsallis(q=2)", EntropySpec::neg_tsallis(2.0, 1.0).unwrap()),
        ("quadratic", EntropySpec::quadratic(1.0).unwrap()),
    ]
}

fn ten_expert_game(eta: f64) -> GameConfig {
    GameConfig {
        outcome_count: 3,
        experts: (0..10).map(|_| ExpertConfig::Stochastic { seed: None }).collect(),
        entropy: EntropyConfig {
            family: FamilyName::NegShannon,
            eta,
            q: None,
        },
        loss: LossConfig::Log,
        prior: PriorConfig::Uniform,
        rounds: 1000,
        outcomes: OutcomeConfig::Random {
            probabilities: vec![0.5, 0.3, 0.2],
        },
        seed: Some(SEED),
        tolerances: Default::default(),
    }
}

fn criterion_1(dir: &Path) -> Outcome {
    let mut lines = Vec::new();
    let mut pass = true;
    for eta in [1.0, 2.0] {
        let started = Instant::now();
        let report = run_config(&ten_expert_game(eta), &dir.join(format!("eta{eta}"))).unwrap();
        let elapsed = started.elapsed();
        let s = &report.summary;
        let bound = 10f64.ln() / eta;
        let ok = s.regret <= bound + 1e-5 * s.rounds as f64 && elapsed < Duration::from_secs(5);
        pass &= ok;
        lines.push(format!(
            "eta={eta}: regret {:.6} <= {:.6} (+{}), {} infeasible rounds, {:.2}s",
            s.regret,
            bound,
            1e-5 * s.rounds as f64,
            s.infeasible_rounds,
            elapsed.as_secs_f64()
        ));
    }
    check(pass, lines.join("; "))
}

fn random_loss(r: &mut ChaCha20Rng, outcomes: usize) -> LossSpec {
    match r.gen_range(0..4) {
        0 => LossSpec::log(outcomes).unwrap(),
        1 => LossSpec::brier(outcomes).unwrap(),
        2 => LossSpec::proper(EntropySpec::neg_tsallis(2.0, 20.0).unwrap(), outcomes).unwrap(),
        _ => LossSpec::proper(EntropySpec::neg_shannon(10.0).unwrap(), outcomes).unwrap(),
    }
}

fn criterion_2() -> Outcome {
    let started = Instant::now();
    let mut r = stream(2);
    let entropies = [
        ("neg_shannon(eta=0.5)", EntropySpec::neg_shannon(0.5).unwrap()),
        ("neg_shannon(eta=1)", EntropySpec::neg_shannon(1.0).unwrap()),
        ("neg_shannon(eta=2)", EntropySpec::neg_shannon(2.0).unwrap()),
        ("quadratic", EntropySpec::quadratic(1.0).unwrap()),
        ("neg_tsallis(q=2)", EntropySpec::neg_tsallis(2.0, 1.0).unwrap()),
    ];
    let rounds = 50;
    let allowance = 1e-5 * rounds as f64;
    let mut pass = true;
    let mut counts = Vec::new();
    for (name, phi) in entropies {
        let mut checked = 0;
        for _ in 0..20 {
            let experts = r.gen_range(2..=4);
            let outcomes = r.gen_range(2..=3);
            let loss = random_loss(&mut r, outcomes);
            let prior = random_point(&mut r, experts, 1e-3);
            let panels: Vec<ExpertPanel> = (0..rounds)
                .map(|_| {
                    ExpertPanel::new((0..experts).map(|_| random_point(&mut r, outcomes, 1e-3)).collect())
                        .unwrap()
                })
                .collect();
            let xs: Vec<usize> = (0..rounds).map(|_| r.gen_range(0..outcomes)).collect();
            let trace = run_game(&phi, &prior, &loss, &panels, &xs).unwrap();
            let s = &trace.summary;
            pass &= s.telescoping_ok;
            if trace.rounds.iter().any(|t| t.slack > SLACK_TOLERANCE) {
                continue;
            }
            checked += 1;
            for theta in 0..experts {
                let b = regret_bound(&phi, &s.prior, theta).unwrap();
                pass &= s.player_loss <= s.expert_losses[theta] + b + allowance;
            }
            for _ in 0..100 {
                let comparator = rng::uniform_simplex(&mut r, experts);
                let b = mixture_regret_bound(&phi, &s.prior, &s.expert_losses, &comparator).unwrap();
                pass &= s.player_loss <= b + allowance;
            }
        }
        pass &= checked > 0;
        counts.push(format!("{name} {checked}/20"));
    }
    let elapsed = started.elapsed();
    pass &= elapsed < Duration::from_secs(60);
    check(
        pass,
        format!("checked runs: {}; {:.1}s", counts.join(", "), elapsed.as_secs_f64()),
    )
}

fn criterion_3() -> Outcome {
    let mut r = stream(3);
    let mut worst_value = 0.0f64;
    let mut worst_gradient = 0.0f64;
    for (_, phi) in families() {
        for _ in 0..1000 {
            let n = r.gen_range(1..=8);
            let v = random_dual(&mut r, n, 5.0);
            let alpha = r.gen_range(-10.0..10.0);
            let shifted = v.shifted(alpha);
            let d = conjugate(&phi, &shifted, &cfg()).unwrap() - conjugate(&phi, &v, &cfg()).unwrap() - alpha;
            worst_value = worst_value.max(d.abs());
            let g0 = conjugate_gradient(&phi, &v, &cfg()).unwrap();
            let g1 = conjugate_gradient(&phi, &shifted, &cfg()).unwrap();
            worst_gradient = worst_gradient.max(g0.max_abs_diff(&g1));
        }
    }
    check(
        worst_value <= 1e-9 && worst_gradient <= 1e-7,
        format!("max value error {worst_value:.2e} (<= 1e-9), max gradient shift {worst_gradient:.2e} (<= 1e-7)"),
    )
}

fn criterion_4() -> Outcome {
    let mut r = stream(4);
    let mut worst = 0.0f64;
    for (_, phi) in families() {
        for _ in 0..200 {
            let dim = r.gen_range(2..=3);
            let mu = random_point(&mut r, dim, 1e-2);
            let v = random_dual(&mut r, dim, 3.0);
            let grad = entropy_gradient(&phi, &mu).unwrap();
            let lhs = conjugate(&phi, &grad, &cfg()).unwrap()
                - conjugate(&phi, &grad.sub(v.values()).unwrap(), &cfg()).unwrap();
            let rhs = SimplexGrid::new(dim, 200)
                .unwrap()
                .iter()
                .map(|p| p.dot(v.values()) + bregman(&phi, &p, &mu).unwrap())
                .fold(f64::INFINITY, f64::min);
            worst = worst.max((lhs - rhs).abs());
        }
    }
    check(worst <= 5e-3, format!("200 cases per family, max gap {worst:.2e} (<= 5e-3)"))
}

fn criterion_5() -> Outcome {
    let mut min_gap = f64::INFINITY;
    let mut savage = 0.0f64;
    for (_, phi) in families() {
        for dim in [2, 3] {
            let grid: Vec<SimplexPoint> = SimplexGrid::new(dim, 50)
                .unwrap()
                .iter()
                .filter(|p| p.is_interior())
                .collect();
            let losses: Vec<Vec<f64>> = grid
                .iter()
                .map(|p| proper_loss_from_entropy(&phi, p).unwrap())
                .collect();
            for (mu, own) in grid.iter().zip(&losses) {
                let truthful = mu.dot(own);
                for (reported, lambda) in grid.iter().zip(&losses) {
                    let gap = mu.dot(lambda) - truthful;
                    min_gap = min_gap.min(gap);
                    savage = savage.max((gap - bregman(&phi, mu, reported).unwrap()).abs());
                }
            }
            for (mu, reported) in grid.iter().zip(grid.iter().rev()) {
                let gap = propriety_gap(&phi, mu, reported).unwrap();
                min_gap = min_gap.min(gap);
                savage = savage.max((gap - bregman(&phi, mu, reported).unwrap()).abs());
            }
        }
    }
    let shannon = EntropySpec::neg_shannon(1.0).unwrap();
    let mut log_gap = 0.0f64;
    for dim in [2, 3] {
        let log = LossSpec::log(dim).unwrap();
        for p in SimplexGrid::new(dim, 50).unwrap().iter().filter(|p| p.is_interior()) {
            let proper = proper_loss_from_entropy(&shannon, &p).unwrap();
            for (x, l) in proper.iter().enumerate() {
                log_gap = log_gap.max((l - log.loss_at(&p, x).unwrap()).abs());
            }
        }
    }
    check(
        min_gap >= -1e-10 && savage <= 1e-7 && log_gap <= 1e-9,
        format!(
            "min propriety gap {min_gap:.2e} (>= -1e-10), max |gap - bregman| {savage:.2e} (<= 1e-7), \
             shannon vs log {log_gap:.2e} (<= 1e-9)"
        ),
    )
}

fn random_panel(r: &mut ChaCha20Rng, experts: usize, outcomes: usize) -> ExpertPanel {
    ExpertPanel::new((0..experts).map(|_| random_point(r, outcomes, 1e-2)).collect()).unwrap()
}

fn criterion_6() -> Outcome {
    let mut r = stream(6);
    let all = families();
    let (mut forms, mut primal, mut closed) = (0.0f64, 0.0f64, 0.0f64);
    for i in 0..200 {
        let (_, phi) = all[i % all.len()];
        let experts = r.gen_range(1..=3);
        let outcomes = r.gen_range(2..=3);
        let loss = if r.gen_bool(0.5) {
            LossSpec::log(outcomes).unwrap()
        } else {
            LossSpec::brier(outcomes).unwrap()
        };
        let mu = random_point(&mut r, experts, 1e-2);
        let panel = random_panel(&mut r, experts, outcomes);
        let potential = mix_bound(&phi, &mu, &panel, &loss).unwrap();
        let definition = mix_bound_definition(&phi, &mu, &panel, &loss).unwrap();
        let grid = mix_bound_primal(&phi, &mu, &panel, &loss, 200).unwrap();
        for x in 0..outcomes {
            forms = forms.max((potential.per_outcome[x] - definition.per_outcome[x]).abs());
            primal = primal.max((potential.per_outcome[x] - grid.per_outcome[x]).abs());
        }
        let eta = [0.5, 1.0, 2.0][i % 3];
        let shannon = EntropySpec::neg_shannon(eta).unwrap();
        let b = mix_bound(&shannon, &mu, &panel, &loss).unwrap();
        for x in 0..outcomes {
            let alpha = assessment(&loss, &panel, x).unwrap();
            closed = closed.max((b.per_outcome[x] - shannon_mix_bound(eta, &mu, alpha.values.values())).abs());
        }
    }
    check(
        forms <= 1e-8 && primal <= 5e-3 && closed <= 1e-9,
        format!(
            "definition vs potential {forms:.2e} (<= 1e-8), grid infimum {primal:.2e} (<= 5e-3), \
             shannon closed form {closed:.2e} (<= 1e-9)"
        ),
    )
}

/// Minimiser of `f` over the simplex: resolution-100 grid, then a
/// resolution-1000 grid restricted to a neighbourhood of the coarse optimum.
fn refined_argmin(dim: usize, f: impl Fn(&SimplexPoint) -> f64) -> SimplexPoint {
    let coarse = SimplexGrid::new(dim, 100)
        .unwrap()
        .iter()
        .min_by(|a, b| f(a).total_cmp(&f(b)))
        .unwrap();
    if dim == 2 {
        return SimplexGrid::new(2, 1000)
            .unwrap()
            .iter()
            .min_by(|a, b| f(a).total_cmp(&f(b)))
            .unwrap();
    }
    let fine = 1000i64;
    let centre: Vec<i64> = coarse.weights().iter().map(|w| (w * fine as f64).round() as i64).collect();
    let radius = 30;
    let mut best = (f(&coarse), coarse);
    for i in (centre[0] - radius).max(0)..=(centre[0] + radius).min(fine) {
        for j in (centre[1] - radius).max(0)..=(centre[1] + radius).min(fine - i) {
            let k = fine - i - j;
            let p = SimplexPoint::new(vec![i as f64 / fine as f64, j as f64 / fine as f64, k as f64 / fine as f64])
                .unwrap();
            let value = f(&p);
            if value < best.0 {
                best = (value, p);
            }
        }
    }
    best.1
}

fn criterion_7() -> Outcome {
    let mut r = stream(7);
    let mut update = 0.0f64;
    for (_, phi) in families() {
        for _ in 0..100 {
            let dim = r.gen_range(2..=3);
            let prior = random_point(&mut r, dim, 1e-2);
            let alpha: Vec<f64> = (0..dim).map(|_| r.gen_range(0.0..2.0)).collect();
            let a = gaa_core::Assessment {
                values: DualVector::new(alpha.clone()).unwrap(),
                outcome: 0,
            };
            let dual_form = GaaState::init(phi, &prior).unwrap().update(&a).unwrap().mixture().unwrap();
            let primal = refined_argmin(dim, |p| {
                if phi.has_singular_boundary() && !p.is_interior() {
                    f64::INFINITY
                } else {
                    p.dot(&alpha) + bregman(&phi, p, &prior).unwrap()
                }
            });
            update = update.max(dual_form.max_abs_diff(&primal));
        }
    }
    let mut classic = 0.0f64;
    for eta in [1.0, 2.0] {
        let game = ten_expert_game(eta).build().unwrap();
        let trace = run_game(&game.entropy, &game.prior, &game.loss, &game.panels, &game.outcomes).unwrap();
        let mut cumulative = vec![0.0; 10];
        for record in &trace.rounds {
            let weights = classic_aa_weights(eta, &DualVector::new(cumulative.clone()).unwrap()).unwrap();
            classic = classic.max(record.mixture.max_abs_diff(&weights));
            cumulative = record.expert_cumulative.clone();
        }
    }
    check(
        update <= 1e-3 && classic <= 1e-9,
        format!("dual vs primal update {update:.2e} (<= 1e-3), GAA vs exponential weights {classic:.2e} (<= 1e-9)"),
    )
}

fn criterion_8() -> Outcome {
    let mut r = stream(8);
    let mut conj = 0.0f64;
    for _ in 0..500 {
        let n = r.gen_range(1..=8);
        let eta = [0.5, 1.0, 2.0][r.gen_range(0..3)];
        let phi = EntropySpec::neg_shannon(eta).unwrap();
        let v = random_dual(&mut r, n, 5.0);
        let numeric = solve_conjugate(&phi, &v, &cfg()).unwrap();
        conj = conj.max((numeric.value - conjugate(&phi, &v, &cfg()).unwrap()).abs());
        conj = conj.max(numeric.maximizer.max_abs_diff(&conjugate_gradient(&phi, &v, &cfg()).unwrap()));
    }
    let h = 1e-6;
    let mut fd = 0.0f64;
    for (_, phi) in families() {
        for _ in 0..200 {
            let n = r.gen_range(2..=6);
            let mu = random_point(&mut r, n, 2e-2);
            let grad = entropy_gradient(&phi, &mu).unwrap();
            for i in 0..n {
                for j in 0..n {
                    if i == j {
                        continue;
                    }
                    let at = |s: f64| {
                        let mut w = mu.weights().to_vec();
                        w[i] += s * h;
                        w[j] -= s * h;
                        entropy_value(&phi, &SimplexPoint::new(w).unwrap())
                    };
                    let numeric = (at(1.0) - at(-1.0)) / (2.0 * h);
                    let exact = grad.values()[i] - grad.values()[j];
                    fd = fd.max((numeric - exact).abs() / exact.abs().max(1e-3));
                }
            }
        }
    }
    check(
        conj <= 1e-6 && fd <= 1e-5,
        format!("numeric vs closed-form conjugate {conj:.2e} (<= 1e-6), finite-difference relative error {fd:.2e} (<= 1e-5)"),
    )
}

fn criterion_9() -> Outcome {
    let started = Instant::now();
    let base = EntropySpec::neg_shannon(1.0).unwrap();
    let log = estimate_mixability_constant(&base, &LossSpec::log(2).unwrap(), 0.05).unwrap();
    let brier = estimate_mixability_constant(&base, &LossSpec::brier(2).unwrap(), 0.1).unwrap();
    let verdict = certify_mixability(
        &EntropySpec::neg_shannon(5.0).unwrap(),
        &LossSpec::brier(2).unwrap(),
        200,
        SEED,
    );
    let certified = verdict
        .witness_failures
        .iter()
        .all(|w| w.certificate > 10.0 * SLACK_TOLERANCE);
    let elapsed = started.elapsed();
    let pass = (log.midpoint - 1.0).abs() <= 0.05
        && (brier.midpoint - 1.0).abs() <= 0.1
        && !verdict.mixable_on_samples
        && certified
        && elapsed < Duration::from_secs(120);
    check(
        pass,
        format!(
            "log eta {:.4} in [{:.4}, {:.4}], brier eta {:.4} in [{:.4}, {:.4}], eta=5 brier rejected with {} certified witnesses; {:.1}s",
            log.midpoint,
            log.lo,
            log.hi,
            brier.midpoint,
            brier.lo,
            brier.hi,
            verdict.witness_failures.len(),
            elapsed.as_secs_f64()
        ),
    )
}

fn criterion_10(dir: &Path) -> Outcome {
    let config = dir.join("ten_experts.json");
    std::fs::write(&config, serde_json::to_string_pretty(&ten_expert_game(1.0)).unwrap()).unwrap();
    let mut traces = Vec::new();
    for run in ["first", "second"] {
        let out = dir.join(run);
        let output = Command::new(env!("CARGO_BIN_EXE_gaa"))
            .args(["run", "--config", config.to_str().unwrap(), "--out", out.to_str().unwrap()])
            .output()
            .unwrap();
        if !output.status.success() {
            return check(false, format!("run exited with {}", output.status));
        }
        traces.push(std::fs::read(out.join("trace.csv")).unwrap());
    }
    check(
        traces[0] == traces[1] && !traces[0].is_empty(),
        format!("two runs, trace.csv {} bytes each, identical: {}", traces[0].len(), traces[0] == traces[1]),
    )
}

type Criterion<'a> = (&'static str, Box<dyn Fn() -> Outcome + 'a>);

fn main() {
    let tmp = tempfile::tempdir().unwrap();
    let criteria: Vec<Criterion> = vec![
        ("1 regret of the aggregating algorithm", Box::new(|| criterion_1(&tmp.path().join("c1")))),
        ("2 regret bounds for every entropy", Box::new(criterion_2)),
        ("3 translation invariance", Box::new(criterion_3)),
        ("4 conjugate difference is a Bregman infimum", Box::new(criterion_4)),
        ("5 propriety of entropy losses", Box::new(criterion_5)),
        ("6 equivalent mixability bounds", Box::new(criterion_6)),
        ("7 dual updates", Box::new(criterion_7)),
        ("8 conjugate and gradient oracles", Box::new(criterion_8)),
        ("9 mixability constants", Box::new(criterion_9)),
        ("10 deterministic traces", Box::new(|| criterion_10(tmp.path()))),
    ];
    let mut failures = 0;
    for (name, run) in &criteria {
        let outcome = run();
        if !outcome.pass {
            failures += 1;
        }
        println!(
            "criterion {name}: {} ({})",
            if outcome.pass { "PASS" } else { "FAIL" },
            outcome.detail
        );
    }
    println!("acceptance: {} of {} criteria passed", criteria.len() - failures, criteria.len());
    if failures > 0 {
        std::process::exit(1);
    }
}
