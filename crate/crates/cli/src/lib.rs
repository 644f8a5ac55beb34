//! Batch front end: load a TOML run configuration, build the problem, run a
//! command and collect its report files.

pub mod config;
mod report;

use std::path::Path;
use std::sync::Arc;

use serde::Serialize;
use serde_json::json;
use thiserror::Error;

use jbsde_core::conditions::{default_delta, hypothesis_holds};
use jbsde_core::norms::{mixed_norm_sq, y_norm_sq, z_norm_sq};
use jbsde_core::solver::picard_map;
use jbsde_core::verification::{random::seeded, run_suite, SuiteOptions};
use jbsde_core::{
    backward_oracle, beta_threshold, check_main_hypothesis, detect_counterexample, picard_iterate, picard_solve,
    BsdeProblem, Error, FlaggedSlot, Generator, ModelSpec, PicardOptions, Solution,
};

pub use config::{BetaSetting, Overrides, RunConfig};
pub use report::Report;

#[derive(Debug, Error)]
pub enum CliError {
    #[error("configuration error: {0}")]
    Config(String),
    #[error("condition violated: {0}")]
    Condition(String),
    #[error("solver failure: {0}")]
    Solver(String),
    #[error("i/o error: {0}")]
    Io(String),
}

impl CliError {
    pub fn exit_code(&self) -> u8 {
        match self {
            CliError::Config(_) | CliError::Io(_) => EXIT_CONFIG,
            CliError::Condition(_) => EXIT_CONDITION,
            CliError::Solver(_) => EXIT_SOLVER,
        }
    }
}

pub const EXIT_OK: u8 = 0;
pub const EXIT_CONFIG: u8 = 1;
/// Also used when a verification check fails.
pub const EXIT_CONDITION: u8 = 2;
pub const EXIT_SOLVER: u8 = 3;

fn classify(e: Error) -> CliError {
    match e {
        Error::ConditionViolated { .. } | Error::DenominatorNonpositive { .. } => CliError::Condition(e.to_string()),
        Error::StepSingular { .. } | Error::Degenerate { .. } | Error::NonFinite { .. } | Error::NoConvergence { .. } => {
            CliError::Solver(e.to_string())
        }
        _ => CliError::Config(e.to_string()),
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Command {
    Solve,
    Verify,
    Sweep,
    Counterexample,
}

impl Command {
    pub fn name(self) -> &'static str {
        match self {
            Command::Solve => "solve",
            Command::Verify => "verify",
            Command::Sweep => "sweep",
            Command::Counterexample => "counterexample",
        }
    }
}

/// Files to write and the process exit code.
#[derive(Debug)]
pub struct RunOutcome {
    pub report: Report,
    pub exit_code: u8,
}

struct Setup {
    problem: BsdeProblem,
    l_y: f64,
    l_z: f64,
    epsilon_star: f64,
    flagged: Vec<FlaggedSlot>,
}

fn prepare(config: &RunConfig, model: &ModelSpec) -> Result<Setup, CliError> {
    let built = model.build().map_err(classify)?;
    config.terminal.validate(built.marks().len()).map_err(classify)?;
    let generator = config.generator();
    let terminal = config.terminal.clone();
    let problem = BsdeProblem::new(&built, 0.0, |h| terminal.evaluate(h), Arc::new(generator.clone())).map_err(classify)?;
    let (l_y, l_z) = (generator.lipschitz_y(), generator.lipschitz_z());
    let epsilon_star = check_main_hypothesis(problem.tree(), l_y);
    let flagged = detect_counterexample(problem.tree(), l_y);
    Ok(Setup {
        problem,
        l_y,
        l_z,
        epsilon_star,
        flagged,
    })
}

#[derive(Debug, Clone, Copy, Serialize)]
struct Calibration {
    delta: f64,
    beta_min: f64,
    beta: f64,
}

impl Setup {
    fn holds(&self) -> bool {
        hypothesis_holds(self.epsilon_star)
    }

    fn delta(&self, requested: Option<f64>) -> Result<f64, CliError> {
        let delta = requested.unwrap_or_else(|| default_delta(self.epsilon_star));
        if !(delta > 0.0 && delta < self.epsilon_star) {
            return Err(CliError::Config(format!("delta {delta} must lie in (0, {})", self.epsilon_star)));
        }
        Ok(delta)
    }

    fn calibrate(&self, config: &RunConfig, delta: Option<f64>) -> Result<Calibration, CliError> {
        let delta = self.delta(delta)?;
        let beta_min = beta_threshold(self.problem.tree(), self.l_y, self.l_z, delta).map_err(classify)?;
        let beta = match config.solver.beta {
            BetaSetting::Auto => beta_min * config.solver.beta_margin,
            BetaSetting::Value(b) => b,
        };
        Ok(Calibration { delta, beta_min, beta })
    }

    fn conditions_json(&self, calibration: Option<Calibration>) -> serde_json::Value {
        json!({
            "epsilon_star": self.epsilon_star,
            "hypothesis_holds": self.holds(),
            "l_y": self.l_y,
            "l_z": self.l_z,
            "flagged_slots": self.flagged,
            "delta": calibration.map(|c| c.delta),
            "beta_min": calibration.map(|c| c.beta_min),
            "beta": calibration.map(|c| c.beta),
        })
    }
}

fn header(command: Command, config: &RunConfig) -> serde_json::Value {
    json!({
        "command": command.name(),
        "seed": config.seed,
        "model": config.model,
        "generator": config.generator(),
        "terminal": config.terminal,
    })
}

fn merge(mut base: serde_json::Value, extra: serde_json::Value) -> serde_json::Value {
    if let (Some(b), serde_json::Value::Object(e)) = (base.as_object_mut(), extra) {
        b.extend(e);
    }
    base
}

/// Summary for a run stopped by the main hypothesis.
fn violation(command: Command, config: &RunConfig, setup: &Setup) -> Result<RunOutcome, CliError> {
    let mut report = Report::default();
    report.json(
        "summary.json",
        &merge(
            header(command, config),
            json!({"status": "condition_violated", "conditions": setup.conditions_json(None)}),
        ),
    )?;
    Ok(RunOutcome {
        report,
        exit_code: EXIT_CONDITION,
    })
}

pub fn run(command: Command, config: &RunConfig) -> Result<RunOutcome, CliError> {
    config.validate()?;
    match command {
        Command::Solve => solve(config),
        Command::Verify => verify(config),
        Command::Sweep => sweep(config),
        Command::Counterexample => counterexample(config),
    }
}

fn picard_options(config: &RunConfig, delta: f64) -> PicardOptions {
    PicardOptions {
        tol: config.solver.tol,
        max_iter: config.solver.max_iter,
        delta: Some(delta),
        enforce_conditions: true,
    }
}

#[derive(Serialize)]
struct IterationRow {
    iteration: usize,
    distance_sq: f64,
    ratio: Option<f64>,
}

#[derive(Serialize)]
struct NodeRow {
    node: usize,
    depth: usize,
    history: String,
    probability: f64,
    doleans: f64,
    y: f64,
}

#[derive(Serialize)]
struct FieldRow {
    slot: usize,
    step: usize,
    parent: usize,
    delta_a: f64,
    mark: usize,
    phi: f64,
    z: f64,
}

fn history_label(problem: &BsdeProblem, node: usize) -> String {
    problem
        .tree()
        .history(node)
        .iter()
        .map(ToString::to_string)
        .collect::<Vec<_>>()
        .join(" ")
}

fn solution_tables(report: &mut Report, problem: &BsdeProblem, sol: &Solution) -> Result<(), CliError> {
    let tree = problem.tree();
    let dol = problem.doleans();
    let nodes: Vec<NodeRow> = tree
        .nodes()
        .iter()
        .enumerate()
        .map(|(i, n)| NodeRow {
            node: i,
            depth: n.depth,
            history: history_label(problem, i),
            probability: n.probability,
            doleans: dol.at_node(i),
            y: sol.y.at(i),
        })
        .collect();
    report.csv("solution.csv", &nodes)?;
    let mut fields = Vec::new();
    for (s, slot) in tree.slots().iter().enumerate() {
        for (x, (&phi, &z)) in slot.phi.iter().zip(sol.z.at(s)).enumerate() {
            fields.push(FieldRow {
                slot: s,
                step: slot.step,
                parent: slot.parent,
                delta_a: slot.delta_a,
                mark: x,
                phi,
                z,
            });
        }
    }
    report.csv("field.csv", &fields)
}

fn solve(config: &RunConfig) -> Result<RunOutcome, CliError> {
    let setup = prepare(config, &config.model)?;
    if !setup.holds() {
        return violation(Command::Solve, config, &setup);
    }
    let cal = setup.calibrate(config, config.solver.delta)?;
    let problem = setup.problem.clone().with_beta(cal.beta).map_err(classify)?;
    let (sol, rep) = picard_solve(&problem, &picard_options(config, cal.delta)).map_err(classify)?;
    let oracle = backward_oracle(&problem, config.solver.oracle_tol).map_err(classify)?;

    let tree = problem.tree();
    let dol = problem.doleans();
    let ones = vec![1.0; tree.slots().len()];
    let distance = mixed_norm_sq(&(&sol.y - &oracle.y), &(&sol.z - &oracle.z), tree, &dol, &ones).sqrt();

    let mut report = Report::default();
    let iterations: Vec<IterationRow> = rep
        .distances
        .iter()
        .enumerate()
        .map(|(i, &d)| IterationRow {
            iteration: i + 1,
            distance_sq: d,
            ratio: (i > 0 && rep.distances[i - 1] > 0.0).then(|| d / rep.distances[i - 1]),
        })
        .collect();
    report.csv("iterations.csv", &iterations)?;
    solution_tables(&mut report, &problem, &sol)?;
    report.json(
        "summary.json",
        &merge(
            header(Command::Solve, config),
            json!({
                "status": "ok",
                "conditions": setup.conditions_json(Some(cal)),
                "picard": {
                    "y0": sol.y0(),
                    "iterations": rep.iterations,
                    "converged": rep.converged,
                    "worst_ratio": rep.worst_ratio(),
                    "alpha": rep.alpha,
                    "residual": rep.residual,
                    "weights_clamped": rep.weights_clamped,
                },
                "oracle": {"y0": oracle.y0()},
                "cross_check": {
                    "y0_gap": (sol.y0() - oracle.y0()).abs(),
                    "max_abs_y_gap": sol.y.max_abs_diff(&oracle.y),
                    "h2_distance": distance,
                },
                "norms": {
                    "y_norm_sq": y_norm_sq(&sol.y, tree, &dol),
                    "z_norm_sq": z_norm_sq(&sol.z, tree, &dol),
                },
            }),
        ),
    )?;
    Ok(RunOutcome {
        report,
        exit_code: EXIT_OK,
    })
}

#[derive(Serialize)]
struct CheckRow<'a> {
    name: &'a str,
    lhs: f64,
    rhs: f64,
    abs_gap: f64,
    rel_gap: f64,
    tolerance: f64,
    pass: bool,
    skipped: bool,
    note: &'a str,
}

fn verify(config: &RunConfig) -> Result<RunOutcome, CliError> {
    let setup = prepare(config, &config.model)?;
    if !setup.holds() {
        return violation(Command::Verify, config, &setup);
    }
    let cal = setup.calibrate(config, config.solver.delta)?;
    let problem = setup.problem.clone().with_beta(cal.beta).map_err(classify)?;
    let opts = SuiteOptions {
        samples: config.verify.samples,
        apriori_constant: config.verify.apriori_constant,
        delta: Some(cal.delta),
    };
    let checks = run_suite(&problem, &opts, &mut seeded(config.seed)).map_err(classify)?;
    let rows: Vec<CheckRow> = checks
        .iter()
        .map(|c| CheckRow {
            name: &c.name,
            lhs: c.lhs,
            rhs: c.rhs,
            abs_gap: c.abs_gap,
            rel_gap: c.rel_gap,
            tolerance: c.tolerance,
            pass: c.pass,
            skipped: c.skipped,
            note: &c.note,
        })
        .collect();
    let failed: Vec<&str> = checks.iter().filter(|c| !c.pass).map(|c| c.name.as_str()).collect();
    let mut report = Report::default();
    report.csv("checks.csv", &rows)?;
    report.json(
        "summary.json",
        &merge(
            header(Command::Verify, config),
            json!({
                "status": if failed.is_empty() { "ok" } else { "checks_failed" },
                "conditions": setup.conditions_json(Some(cal)),
                "checks": {
                    "total": checks.len(),
                    "skipped": checks.iter().filter(|c| c.skipped).count(),
                    "failed": failed,
                    "samples": config.verify.samples,
                },
            }),
        ),
    )?;
    Ok(RunOutcome {
        report,
        exit_code: if failed.is_empty() { EXIT_OK } else { EXIT_CONDITION },
    })
}

#[derive(Debug, Clone, Serialize)]
pub struct SweepRow {
    pub kind: &'static str,
    pub value: f64,
    pub steps: usize,
    pub epsilon_star: f64,
    pub delta: f64,
    pub beta_min: f64,
    pub beta: f64,
    pub converged: bool,
    pub iterations: usize,
    pub worst_ratio: Option<f64>,
    pub ratio_within_delta: Option<bool>,
    pub ratio_within_one_minus_delta: Option<bool>,
    pub y0: f64,
}

fn sweep_row(
    config: &RunConfig,
    setup: &Setup,
    kind: &'static str,
    value: f64,
    delta: f64,
    beta: f64,
) -> Result<SweepRow, CliError> {
    let beta_min = beta_threshold(setup.problem.tree(), setup.l_y, setup.l_z, delta).map_err(classify)?;
    let problem = setup.problem.clone().with_beta(beta).map_err(classify)?;
    let (sol, rep) = picard_iterate(&problem, &picard_options(config, delta), Solution::zeros(problem.tree())).map_err(classify)?;
    let worst = rep.worst_ratio();
    Ok(SweepRow {
        kind,
        value,
        steps: problem.tree().steps(),
        epsilon_star: setup.epsilon_star,
        delta,
        beta_min,
        beta,
        converged: rep.converged,
        iterations: rep.iterations,
        worst_ratio: worst,
        ratio_within_delta: worst.map(|r| r <= delta + 1e-10),
        ratio_within_one_minus_delta: worst.map(|r| r <= 1.0 - delta + 1e-10),
        y0: sol.y0(),
    })
}

fn sweep(config: &RunConfig) -> Result<RunOutcome, CliError> {
    let setup = prepare(config, &config.model)?;
    if !setup.holds() {
        return violation(Command::Sweep, config, &setup);
    }
    let delta = setup.delta(config.solver.delta)?;
    let beta_min = beta_threshold(setup.problem.tree(), setup.l_y, setup.l_z, delta).map_err(classify)?;
    let sw = &config.sweep;
    let mut rows = Vec::new();
    for &m in &sw.beta_multipliers {
        rows.push(sweep_row(config, &setup, "beta_multiplier", m, delta, beta_min * m)?);
    }
    for &b in &sw.betas {
        rows.push(sweep_row(config, &setup, "beta", b, delta, b)?);
    }
    for &d in &sw.deltas {
        let d = setup.delta(Some(d))?;
        let b = beta_threshold(setup.problem.tree(), setup.l_y, setup.l_z, d).map_err(classify)? * config.solver.beta_margin;
        rows.push(sweep_row(config, &setup, "delta", d, d, b)?);
    }
    for &k in &sw.steps {
        let refined = prepare(config, &config.model.with_steps(k))?;
        if !refined.holds() {
            return violation(Command::Sweep, config, &refined);
        }
        let cal = refined.calibrate(config, config.solver.delta)?;
        rows.push(sweep_row(config, &refined, "steps", k as f64, cal.delta, cal.beta)?);
    }
    let mut report = Report::default();
    report.csv_with_header("sweep.csv", &rows, SWEEP_COLUMNS)?;
    report.json(
        "summary.json",
        &merge(
            header(Command::Sweep, config),
            json!({
                "status": "ok",
                "conditions": setup.conditions_json(Some(Calibration { delta, beta_min, beta: beta_min * config.solver.beta_margin })),
                "rows": rows.len(),
                "all_converged": rows.iter().all(|r| r.converged),
            }),
        ),
    )?;
    Ok(RunOutcome {
        report,
        exit_code: EXIT_OK,
    })
}

/// Column names of `sweep.csv`, written even when the table is empty.
pub const SWEEP_COLUMNS: &[&str] = &[
    "kind",
    "value",
    "steps",
    "epsilon_star",
    "delta",
    "beta_min",
    "beta",
    "converged",
    "iterations",
    "worst_ratio",
    "ratio_within_delta",
    "ratio_within_one_minus_delta",
    "y0",
];

#[derive(Serialize)]
struct GrowthRow {
    iteration: usize,
    max_abs_y_at_jump: f64,
    y0: f64,
    distance_sq: f64,
}

fn counterexample(config: &RunConfig) -> Result<RunOutcome, CliError> {
    let setup = prepare(config, &config.model)?;
    let beta = match config.solver.beta {
        BetaSetting::Value(b) => b,
        BetaSetting::Auto => 0.0,
    };
    let problem = setup.problem.clone().with_beta(beta).map_err(classify)?;
    let oracle = match backward_oracle(&problem, config.solver.oracle_tol) {
        Ok(sol) => json!({"outcome": "solved", "y0": sol.y0()}),
        Err(Error::StepSingular { slot, factor }) => json!({"outcome": "step_singular", "slot": slot, "factor": factor}),
        Err(Error::Degenerate { slot }) => json!({"outcome": "degenerate", "slot": slot}),
        Err(e) => json!({"outcome": "failed", "error": e.to_string()}),
    };

    let tree = problem.tree();
    let watched: Vec<usize> = if setup.flagged.is_empty() {
        vec![0]
    } else {
        setup.flagged.iter().map(|f| tree.slot(f.slot).parent).collect()
    };
    let dol = problem.doleans();
    let ones = vec![1.0; tree.slots().len()];
    let iterations = config.counterexample.as_ref().map_or(50, |c| c.iterations);
    let mut current = Solution::zeros(tree);
    let mut rows = Vec::with_capacity(iterations);
    for n in 1..=iterations {
        let next = picard_map(&problem, &current.y, &current.z);
        let distance_sq = mixed_norm_sq(&(&next.y - &current.y), &(&next.z - &current.z), tree, &dol, &ones);
        rows.push(GrowthRow {
            iteration: n,
            max_abs_y_at_jump: watched.iter().map(|&p| next.y.at(p).abs()).fold(0.0, f64::max),
            y0: next.y0(),
            distance_sq,
        });
        current = next;
    }
    let last = rows.last().map(|r| r.max_abs_y_at_jump);
    let mut report = Report::default();
    report.csv("iterations.csv", &rows)?;
    report.json(
        "summary.json",
        &merge(
            header(Command::Counterexample, config),
            json!({
                "status": if setup.flagged.is_empty() { "hypothesis_holds" } else { "counterexample_reproduced" },
                "conditions": setup.conditions_json(None),
                "oracle": oracle,
                "picard": {"iterations": iterations, "beta": beta, "final_max_abs_y_at_jump": last},
            }),
        ),
    )?;
    Ok(RunOutcome {
        report,
        exit_code: if setup.flagged.is_empty() { EXIT_OK } else { EXIT_CONDITION },
    })
}

/// Loads, runs and writes everything under `out`; returns the exit code.
pub fn execute(command: Command, config_path: &Path, overrides: &Overrides, out: Option<&Path>) -> Result<u8, CliError> {
    let mut config = RunConfig::load(config_path)?;
    config.apply(overrides);
    let out = out
        .map(Path::to_path_buf)
        .or_else(|| config.out_dir.clone())
        .unwrap_or_else(|| "jbsde-out".into());
    let outcome = match run(command, &config) {
        Ok(o) => o,
        Err(e) => {
            let mut report = Report::default();
            report.json(
                "summary.json",
                &merge(header(command, &config), json!({"status": "error", "error": e.to_string(), "exit_code": e.exit_code()})),
            )?;
            report.write(&out)?;
            return Err(e);
        }
    };
    outcome.report.write(&out)?;
    Ok(outcome.exit_code)
}
