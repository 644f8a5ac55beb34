use std::fmt;

use serde::{Deserialize, Serialize};

use crate::measure::{Outcome, ScenarioTree};
use crate::norms::{mark_mean, seminorm_with};

/// Everything a generator may look at on a slot: only information available
/// strictly before the jump time.
#[derive(Debug, Clone, Copy)]
pub struct SlotContext<'a> {
    pub slot: usize,
    pub step: usize,
    pub delta_a: f64,
    pub phi: &'a [f64],
    pub history: &'a [Outcome],
}

impl<'a> SlotContext<'a> {
    pub fn of(tree: &'a ScenarioTree, slot: usize) -> Self {
        let s = tree.slot(slot);
        Self {
            slot,
            step: s.step,
            delta_a: s.delta_a,
            phi: &s.phi,
            history: &s.history,
        }
    }

    pub fn jumps_so_far(&self) -> usize {
        self.history.iter().filter(|o| o.is_jump()).count()
    }

    pub fn seminorm(&self, zeta: &[f64]) -> f64 {
        seminorm_with(zeta, self.delta_a, self.phi)
    }
}

/// The driver `f(t, y, ζ)` of the equation together with its declared
/// Lipschitz constants.
pub trait Generator: Send + Sync + fmt::Debug {
    fn eval(&self, ctx: &SlotContext<'_>, y: f64, zeta: &[f64]) -> f64;

    fn lipschitz_y(&self) -> f64;

    fn lipschitz_z(&self) -> f64;
}

/// Generators addressable by name from a run configuration.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "preset", rename_all = "snake_case", deny_unknown_fields)]
pub enum GeneratorSpec {
    /// `f ≡ 0`.
    Zero,
    /// `f = slope · y + intercept`.
    AffineY {
        slope: f64,
        #[serde(default)]
        intercept: f64,
    },
    /// `f = slope_y · y + kappa · √(1 − ΔA) · Σ ζ φ + intercept`.
    ///
    /// Linear in `(y, ζ)`; the `ζ` part is 1-Lipschitz for the seminorm
    /// because `seminorm² = (1 − ΔA) |ζ̄|² + Var_φ(ζ)`.
    LinearZ {
        #[serde(default)]
        slope_y: f64,
        kappa: f64,
        #[serde(default)]
        intercept: f64,
    },
    /// `f = c + c_J · #jumps + l_y · tanh(y)
    ///      + l_z · (½ tanh(√(1 − ΔA) ζ̄) + ½ atan(seminorm(ζ)))`.
    Saturating {
        l_y: f64,
        l_z: f64,
        #[serde(default)]
        intercept: f64,
        #[serde(default)]
        intercept_per_jump: f64,
    },
    /// `f = y / p`, the one-step degenerate driver of the counter-example.
    Counterexample { p: f64 },
}

impl Generator for GeneratorSpec {
    fn eval(&self, ctx: &SlotContext<'_>, y: f64, zeta: &[f64]) -> f64 {
        match *self {
            GeneratorSpec::Zero => 0.0,
            GeneratorSpec::AffineY { slope, intercept } => slope * y + intercept,
            GeneratorSpec::LinearZ {
                slope_y,
                kappa,
                intercept,
            } => {
                let mean = mark_mean(zeta, ctx.phi);
                slope_y * y + kappa * (1.0 - ctx.delta_a).sqrt() * mean + intercept
            }
            GeneratorSpec::Saturating {
                l_y,
                l_z,
                intercept,
                intercept_per_jump,
            } => {
                let mean = mark_mean(zeta, ctx.phi);
                let z_part = 0.5 * ((1.0 - ctx.delta_a).sqrt() * mean).tanh() + 0.5 * ctx.seminorm(zeta).atan();
                intercept + intercept_per_jump * ctx.jumps_so_far() as f64 + l_y * y.tanh() + l_z * z_part
            }
            GeneratorSpec::Counterexample { p } => y / p,
        }
    }

    fn lipschitz_y(&self) -> f64 {
        match *self {
            GeneratorSpec::Zero => 0.0,
            GeneratorSpec::AffineY { slope, .. } => slope.abs(),
            GeneratorSpec::LinearZ { slope_y, .. } => slope_y.abs(),
            GeneratorSpec::Saturating { l_y, .. } => l_y.abs(),
            GeneratorSpec::Counterexample { p } => 1.0 / p,
        }
    }

    fn lipschitz_z(&self) -> f64 {
        match *self {
            GeneratorSpec::LinearZ { kappa, .. } => kappa.abs(),
            GeneratorSpec::Saturating { l_z, .. } => l_z.abs(),
            _ => 0.0,
        }
    }
}

/// A driver that ignores `(y, ζ)`: `f_s` is given per slot.
#[derive(Debug, Clone, PartialEq)]
pub struct DrivePath(pub Vec<f64>);

impl Generator for DrivePath {
    fn eval(&self, ctx: &SlotContext<'_>, _y: f64, _zeta: &[f64]) -> f64 {
        self.0[ctx.slot]
    }

    fn lipschitz_y(&self) -> f64 {
        0.0
    }

    fn lipschitz_z(&self) -> f64 {
        0.0
    }
}
