use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};

use jbsde_core::{GeneratorSpec, ModelSpec, TerminalSpec};

use crate::CliError;

/// `beta = "auto"` or a number.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(try_from = "BetaRepr", into = "BetaRepr")]
pub enum BetaSetting {
    /// `β_min(δ) · margin`.
    Auto,
    Value(f64),
}

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(untagged)]
enum BetaRepr {
    Number(f64),
    Word(String),
}

impl TryFrom<BetaRepr> for BetaSetting {
    type Error = String;

    fn try_from(r: BetaRepr) -> Result<Self, String> {
        match r {
            BetaRepr::Number(v) => Ok(BetaSetting::Value(v)),
            BetaRepr::Word(w) => w.parse(),
        }
    }
}

impl From<BetaSetting> for BetaRepr {
    fn from(b: BetaSetting) -> Self {
        match b {
            BetaSetting::Auto => BetaRepr::Word("auto".into()),
            BetaSetting::Value(v) => BetaRepr::Number(v),
        }
    }
}

impl std::str::FromStr for BetaSetting {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, String> {
        if s.eq_ignore_ascii_case("auto") {
            return Ok(BetaSetting::Auto);
        }
        s.parse::<f64>()
            .map(BetaSetting::Value)
            .map_err(|_| format!("beta must be \"auto\" or a number, got {s:?}"))
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SolverConfig {
    #[serde(default = "auto")]
    pub beta: BetaSetting,
    /// Multiplies `β_min` when `beta = "auto"`.
    #[serde(default = "unit")]
    pub beta_margin: f64,
    /// Defaults to `ε*/2`.
    #[serde(default)]
    pub delta: Option<f64>,
    #[serde(default = "default_tol")]
    pub tol: f64,
    #[serde(default = "default_max_iter")]
    pub max_iter: usize,
    /// Scalar tolerance of the backward oracle.
    #[serde(default = "default_step_tol")]
    pub oracle_tol: f64,
}

impl Default for SolverConfig {
    fn default() -> Self {
        Self {
            beta: BetaSetting::Auto,
            beta_margin: 1.0,
            delta: None,
            tol: default_tol(),
            max_iter: default_max_iter(),
            oracle_tol: default_step_tol(),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct VerifyConfig {
    #[serde(default = "default_samples")]
    pub samples: usize,
    /// Replaces `c(β)` in the a priori check; a negative control for the checker.
    #[serde(default)]
    pub apriori_constant: Option<f64>,
}

impl Default for VerifyConfig {
    fn default() -> Self {
        Self {
            samples: default_samples(),
            apriori_constant: None,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Default, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SweepConfig {
    /// Multiples of `β_min(δ)`.
    #[serde(default)]
    pub beta_multipliers: Vec<f64>,
    /// Absolute values of `β`, allowed below the threshold.
    #[serde(default)]
    pub betas: Vec<f64>,
    #[serde(default)]
    pub deltas: Vec<f64>,
    /// Step counts for grid refinement of the model.
    #[serde(default)]
    pub steps: Vec<usize>,
}

#[derive(Debug, Clone, PartialEq, Default, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct CounterexampleConfig {
    /// Picard iterations to run past the violated hypothesis.
    #[serde(default = "default_ce_iterations")]
    pub iterations: usize,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct RunConfig {
    pub model: ModelSpec,
    /// Defaults to `f = y/p` for the counter-example model and `f = 0` otherwise.
    #[serde(default)]
    pub generator: Option<GeneratorSpec>,
    #[serde(default = "default_terminal")]
    pub terminal: TerminalSpec,
    #[serde(default)]
    pub solver: SolverConfig,
    #[serde(default)]
    pub verify: VerifyConfig,
    #[serde(default)]
    pub sweep: SweepConfig,
    #[serde(default)]
    pub counterexample: Option<CounterexampleConfig>,
    #[serde(default)]
    pub seed: u64,
    #[serde(default)]
    pub out_dir: Option<PathBuf>,
}

fn auto() -> BetaSetting {
    BetaSetting::Auto
}

fn unit() -> f64 {
    1.0
}

fn default_tol() -> f64 {
    jbsde_core::PicardOptions::default().tol
}

fn default_max_iter() -> usize {
    jbsde_core::PicardOptions::default().max_iter
}

fn default_step_tol() -> f64 {
    jbsde_core::solver::STEP_TOLERANCE
}

fn default_samples() -> usize {
    1000
}

fn default_ce_iterations() -> usize {
    50
}

fn default_terminal() -> TerminalSpec {
    TerminalSpec::JumpCount { scale: 1.0 }
}

/// Command-line values that take precedence over the file.
#[derive(Debug, Clone, Default)]
pub struct Overrides {
    pub seed: Option<u64>,
    pub beta: Option<BetaSetting>,
    pub delta: Option<f64>,
    pub tol: Option<f64>,
}

impl RunConfig {
    pub fn parse(text: &str) -> Result<Self, CliError> {
        toml::from_str(text).map_err(|e| CliError::Config(e.to_string()))
    }

    pub fn load(path: &Path) -> Result<Self, CliError> {
        let text = std::fs::read_to_string(path).map_err(|e| CliError::Config(format!("{}: {e}", path.display())))?;
        Self::parse(&text)
    }

    pub fn apply(&mut self, o: &Overrides) {
        if let Some(seed) = o.seed {
            self.seed = seed;
        }
        if let Some(beta) = o.beta {
            self.solver.beta = beta;
        }
        if let Some(delta) = o.delta {
            self.solver.delta = Some(delta);
        }
        if let Some(tol) = o.tol {
            self.solver.tol = tol;
        }
    }

    pub fn generator(&self) -> GeneratorSpec {
        match (&self.generator, &self.model) {
            (Some(g), _) => g.clone(),
            (None, ModelSpec::Counterexample { p, .. }) => GeneratorSpec::Counterexample { p: *p },
            (None, _) => GeneratorSpec::Zero,
        }
    }

    pub fn validate(&self) -> Result<(), CliError> {
        let s = &self.solver;
        if !(s.tol.is_finite() && s.tol > 0.0) || !(s.oracle_tol.is_finite() && s.oracle_tol > 0.0) {
            return Err(CliError::Config("tolerances must be positive".into()));
        }
        if s.max_iter == 0 {
            return Err(CliError::Config("max_iter must be at least 1".into()));
        }
        if !(s.beta_margin.is_finite() && s.beta_margin >= 1.0) {
            return Err(CliError::Config("beta_margin must be at least 1".into()));
        }
        if let BetaSetting::Value(b) = s.beta {
            if !(b.is_finite() && b >= 0.0) {
                return Err(CliError::Config(format!("beta must be finite and nonnegative, got {b}")));
            }
        }
        let sw = &self.sweep;
        if sw.beta_multipliers.iter().chain(&sw.betas).any(|v| !(v.is_finite() && *v >= 0.0)) {
            return Err(CliError::Config("sweep betas and multipliers must be finite and nonnegative".into()));
        }
        Ok(())
    }
}
