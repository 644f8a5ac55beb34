//! Named model constructors and the config-addressable presets built on them.

use std::sync::Arc;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::measure::{MarkSpace, Outcome, ScenarioModel};
use crate::solver::GeneratorSpec;

/// Jump sizes of a deterministic compensator: one value for every step, or one per step.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(untagged)]
pub enum JumpSizes {
    Constant(f64),
    PerStep(Vec<f64>),
}

impl JumpSizes {
    fn resolve(&self, steps: usize) -> Result<Vec<f64>> {
        let sizes = match self {
            JumpSizes::Constant(a) => vec![*a; steps],
            JumpSizes::PerStep(v) if v.len() == steps => v.clone(),
            JumpSizes::PerStep(v) => {
                return Err(Error::InvalidParameter(format!("{} jump sizes given for {steps} steps", v.len())));
            }
        };
        for (step, &value) in sizes.iter().enumerate() {
            check_unit(step, value)?;
        }
        Ok(sizes)
    }
}

fn check_unit(step: usize, value: f64) -> Result<()> {
    if (0.0..=1.0).contains(&value) {
        Ok(())
    } else {
        Err(Error::JumpSizeOutOfRange { step, value })
    }
}

fn uniform(m: usize) -> Vec<f64> {
    vec![1.0 / m as f64; m]
}

fn constant_law(phi: Vec<f64>) -> crate::measure::MarkLaw {
    Arc::new(move |_, _| phi.clone())
}

/// `ΔA_k` fixed in advance; `phi` defaults to uniform.
pub fn deterministic_grid(steps: usize, marks: usize, jump_sizes: &JumpSizes, phi: Option<Vec<f64>>) -> Result<ScenarioModel> {
    let sizes = jump_sizes.resolve(steps)?;
    ScenarioModel::new(
        MarkSpace::indexed(marks)?,
        ScenarioModel::uniform_grid(steps, 1.0),
        Arc::new(move |k, _| sizes[k]),
        constant_law(phi.unwrap_or_else(|| uniform(marks))),
    )
}

/// `ΔA_k` read off the outcome of the previous step.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct TwoStateRule {
    /// Jump size of the first step.
    pub initial: f64,
    pub after_jump: f64,
    pub after_no_jump: f64,
    /// Overrides `after_jump` when the two previous steps both jumped.
    #[serde(default)]
    pub after_two_jumps: Option<f64>,
}

impl TwoStateRule {
    pub fn constant(a: f64) -> Self {
        Self {
            initial: a,
            after_jump: a,
            after_no_jump: a,
            after_two_jumps: None,
        }
    }

    pub fn jump_size(&self, history: &[Outcome]) -> f64 {
        match history {
            [] => self.initial,
            [.., a, b] if a.is_jump() && b.is_jump() => self.after_two_jumps.unwrap_or(self.after_jump),
            [.., last] if last.is_jump() => self.after_jump,
            _ => self.after_no_jump,
        }
    }

    fn validate(&self) -> Result<()> {
        check_unit(0, self.initial)?;
        for v in [self.after_jump, self.after_no_jump].into_iter().chain(self.after_two_jumps) {
            check_unit(1, v)?;
        }
        Ok(())
    }
}

/// Predictable but random `A`: the jump size depends on past outcomes.
pub fn predictable_random_jumps(steps: usize, marks: usize, rule: TwoStateRule, phi: Option<Vec<f64>>) -> Result<ScenarioModel> {
    rule.validate()?;
    ScenarioModel::new(
        MarkSpace::indexed(marks)?,
        ScenarioModel::uniform_grid(steps, 1.0),
        Arc::new(move |_, h| rule.jump_size(h)),
        constant_law(phi.unwrap_or_else(|| uniform(marks))),
    )
}

/// Jump skeleton of a piecewise deterministic process: a jump at every grid
/// time (`ΔA ≡ 1`). The post-jump mark law is `initial` at the first step and
/// `transition[x]` after a jump to mark `x` (uniform/`initial` when omitted).
pub fn pdmp_like(steps: usize, initial: Vec<f64>, transition: Option<Vec<Vec<f64>>>) -> Result<ScenarioModel> {
    let m = initial.len();
    if let Some(rows) = &transition {
        if rows.len() != m || rows.iter().any(|r| r.len() != m) {
            return Err(Error::InvalidParameter(format!("transition must be {m} x {m}")));
        }
    }
    ScenarioModel::new(
        MarkSpace::indexed(m)?,
        ScenarioModel::uniform_grid(steps, 1.0),
        Arc::new(|_, _| 1.0),
        Arc::new(move |_, h: &[Outcome]| match (h.last(), &transition) {
            (Some(Outcome::Jump(x)), Some(rows)) => rows[*x].clone(),
            _ => initial.clone(),
        }),
    )
}

/// Poisson-type intensity `rate` on `[0, horizon]` seen on `steps` grid
/// intervals: `ΔA_k = 1 − exp(−rate Δt)`.
pub fn discretized_intensity(rate: f64, steps: usize, horizon: f64, phi: Vec<f64>) -> Result<ScenarioModel> {
    if !(rate.is_finite() && rate >= 0.0) {
        return Err(Error::InvalidParameter(format!("rate must be finite and nonnegative, got {rate}")));
    }
    let grid = ScenarioModel::uniform_grid(steps, horizon);
    let sizes: Vec<f64> = grid.windows(2).map(|w| -(-rate * (w[1] - w[0])).exp_m1()).collect();
    ScenarioModel::new(
        MarkSpace::indexed(phi.len())?,
        grid,
        Arc::new(move |k, _| sizes[k]),
        constant_law(phi),
    )
}

/// Single jump of size `p` at step `jump_step` and the driver `f(y) = y/p`,
/// for which `2 L_y² ΔA² = 2`.
pub fn counterexample_model(p: f64, jump_step: usize, steps: usize) -> Result<(ScenarioModel, GeneratorSpec)> {
    if !(p > 0.0 && p < 1.0) {
        return Err(Error::InvalidParameter(format!("jump size p must lie in (0, 1), got {p}")));
    }
    if jump_step >= steps {
        return Err(Error::InvalidParameter(format!("jump step {jump_step} outside 0..{steps}")));
    }
    let model = ScenarioModel::new(
        MarkSpace::indexed(1)?,
        ScenarioModel::uniform_grid(steps, 1.0),
        Arc::new(move |k, _| if k == jump_step { p } else { 0.0 }),
        constant_law(vec![1.0]),
    )?;
    Ok((model, GeneratorSpec::Counterexample { p }))
}

/// Models addressable by name from a run configuration.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "preset", rename_all = "snake_case", deny_unknown_fields)]
pub enum ModelSpec {
    DeterministicGrid {
        steps: usize,
        #[serde(default = "one")]
        marks: usize,
        jump_size: JumpSizes,
        #[serde(default)]
        phi: Option<Vec<f64>>,
    },
    PredictableRandomJumps {
        steps: usize,
        #[serde(default = "one")]
        marks: usize,
        #[serde(flatten)]
        rule: TwoStateRule,
        #[serde(default)]
        phi: Option<Vec<f64>>,
    },
    PdmpLike {
        steps: usize,
        initial: Vec<f64>,
        #[serde(default)]
        transition: Option<Vec<Vec<f64>>>,
    },
    DiscretizedIntensity {
        rate: f64,
        steps: usize,
        #[serde(default = "unit_horizon")]
        horizon: f64,
        #[serde(default = "single_mark")]
        phi: Vec<f64>,
    },
    Counterexample {
        p: f64,
        #[serde(default)]
        jump_step: usize,
        #[serde(default = "one")]
        steps: usize,
    },
}

fn one() -> usize {
    1
}

fn unit_horizon() -> f64 {
    1.0
}

fn single_mark() -> Vec<f64> {
    vec![1.0]
}

impl ModelSpec {
    pub fn build(&self) -> Result<ScenarioModel> {
        match self.clone() {
            ModelSpec::DeterministicGrid {
                steps,
                marks,
                jump_size,
                phi,
            } => deterministic_grid(steps, marks, &jump_size, phi),
            ModelSpec::PredictableRandomJumps { steps, marks, rule, phi } => predictable_random_jumps(steps, marks, rule, phi),
            ModelSpec::PdmpLike {
                steps,
                initial,
                transition,
            } => pdmp_like(steps, initial, transition),
            ModelSpec::DiscretizedIntensity {
                rate,
                steps,
                horizon,
                phi,
            } => discretized_intensity(rate, steps, horizon, phi),
            ModelSpec::Counterexample { p, jump_step, steps } => counterexample_model(p, jump_step, steps).map(|(m, _)| m),
        }
    }

    /// Same model on a different number of steps, used by grid refinement.
    pub fn with_steps(&self, new_steps: usize) -> Self {
        let mut spec = self.clone();
        match &mut spec {
            ModelSpec::DeterministicGrid { steps, .. }
            | ModelSpec::PredictableRandomJumps { steps, .. }
            | ModelSpec::PdmpLike { steps, .. }
            | ModelSpec::DiscretizedIntensity { steps, .. }
            | ModelSpec::Counterexample { steps, .. } => *steps = new_steps,
        }
        spec
    }
}

/// Terminal conditions `ξ` as functionals of the full outcome history.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "preset", rename_all = "snake_case", deny_unknown_fields)]
pub enum TerminalSpec {
    Constant {
        value: f64,
    },
    /// `scale · #jumps`.
    JumpCount {
        #[serde(default = "unit_scale")]
        scale: f64,
    },
    /// `scale · 1{last jump carried mark}`; zero on paths without jumps.
    LastMarkIndicator {
        mark: usize,
        #[serde(default = "unit_scale")]
        scale: f64,
    },
    /// `Σ weights[x]` over the jumps of the path.
    MarkSum {
        weights: Vec<f64>,
    },
}

fn unit_scale() -> f64 {
    1.0
}

impl TerminalSpec {
    pub fn validate(&self, marks: usize) -> Result<()> {
        match self {
            TerminalSpec::LastMarkIndicator { mark, .. } if *mark >= marks => {
                Err(Error::InvalidParameter(format!("mark {mark} outside 0..{marks}")))
            }
            TerminalSpec::MarkSum { weights } if weights.len() != marks => {
                Err(Error::InvalidParameter(format!("{} weights given for {marks} marks", weights.len())))
            }
            _ => Ok(()),
        }
    }

    pub fn evaluate(&self, history: &[Outcome]) -> f64 {
        match self {
            TerminalSpec::Constant { value } => *value,
            TerminalSpec::JumpCount { scale } => scale * history.iter().filter(|o| o.is_jump()).count() as f64,
            TerminalSpec::LastMarkIndicator { mark, scale } => {
                match history.iter().rev().find_map(|o| match o {
                    Outcome::Jump(x) => Some(*x),
                    Outcome::NoJump => None,
                }) {
                    Some(x) if x == *mark => *scale,
                    _ => 0.0,
                }
            }
            TerminalSpec::MarkSum { weights } => history
                .iter()
                .map(|o| match o {
                    Outcome::Jump(x) => weights[*x],
                    Outcome::NoJump => 0.0,
                })
                .sum(),
        }
    }
}
