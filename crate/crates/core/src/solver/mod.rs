//! Three routes to the solution of the equation on a scenario tree:
//! the exact linear solve for a frozen driver, the Picard map built on top of
//! it, and an independent backward induction with an implicit one-step solve.

mod generator;
mod picard;

use std::sync::Arc;

pub use generator::{DrivePath, Generator, GeneratorSpec, SlotContext};
pub use picard::{picard_iterate, picard_map, picard_solve, picard_solve_from, PicardOptions, SolveReport};

use crate::error::{Error, Result};
use crate::measure::{build_tree, DoleansPath, Outcome, ScenarioModel, ScenarioTree, Slot};
use crate::norms::{hat_z, mark_mean, AdaptedProcess, PredictableField};

/// Default absolute/relative tolerance of the scalar implicit solve.
pub const STEP_TOLERANCE: f64 = 1e-13;
/// Iteration cap of the scalar implicit solve.
pub const STEP_MAX_ITER: usize = 200;

/// Data `(β, ξ, f)` on an exact scenario tree.
#[derive(Debug, Clone)]
pub struct BsdeProblem {
    tree: ScenarioTree,
    beta: f64,
    terminal: Vec<f64>,
    generator: Arc<dyn Generator>,
}

impl BsdeProblem {
    pub fn new(
        model: &ScenarioModel,
        beta: f64,
        terminal: impl Fn(&[Outcome]) -> f64,
        generator: Arc<dyn Generator>,
    ) -> Result<Self> {
        let tree = build_tree(model)?;
        let values = tree.leaves().map(|n| terminal(&tree.history(n))).collect();
        Self::from_tree(tree, beta, values, generator)
    }

    /// `terminal` holds one value per leaf, in leaf order.
    pub fn from_tree(tree: ScenarioTree, beta: f64, terminal: Vec<f64>, generator: Arc<dyn Generator>) -> Result<Self> {
        if let Some(slot) = tree.slots().iter().find(|s| s.continuous != 0.0) {
            return Err(Error::ContinuousCompensator {
                step: slot.step,
                value: slot.continuous,
            });
        }
        if !(beta.is_finite() && beta >= 0.0) {
            return Err(Error::InvalidBeta {
                value: beta,
                requirement: "finite and nonnegative",
            });
        }
        if terminal.len() != tree.leaf_count() {
            return Err(Error::TerminalLength {
                expected: tree.leaf_count(),
                got: terminal.len(),
            });
        }
        Ok(Self {
            tree,
            beta,
            terminal,
            generator,
        })
    }

    pub fn with_beta(mut self, beta: f64) -> Result<Self> {
        if !(beta.is_finite() && beta >= 0.0) {
            return Err(Error::InvalidBeta {
                value: beta,
                requirement: "finite and nonnegative",
            });
        }
        self.beta = beta;
        Ok(self)
    }

    pub fn with_terminal(mut self, terminal: Vec<f64>) -> Result<Self> {
        if terminal.len() != self.tree.leaf_count() {
            return Err(Error::TerminalLength {
                expected: self.tree.leaf_count(),
                got: terminal.len(),
            });
        }
        self.terminal = terminal;
        Ok(self)
    }

    pub fn with_generator(mut self, generator: Arc<dyn Generator>) -> Self {
        self.generator = generator;
        self
    }

    pub fn tree(&self) -> &ScenarioTree {
        &self.tree
    }

    pub fn beta(&self) -> f64 {
        self.beta
    }

    pub fn terminal(&self) -> &[f64] {
        &self.terminal
    }

    /// `ξ` on the leaf `node`.
    pub fn terminal_at(&self, node: usize) -> f64 {
        self.terminal[node - self.tree.leaves().start]
    }

    pub fn generator(&self) -> &dyn Generator {
        self.generator.as_ref()
    }

    pub fn generator_arc(&self) -> Arc<dyn Generator> {
        Arc::clone(&self.generator)
    }

    pub fn doleans(&self) -> DoleansPath {
        self.tree.doleans(self.beta).expect("beta validated at construction")
    }

    /// `f(s, U_{s−}, V_s)` on every slot.
    pub fn drive(&self, u: &AdaptedProcess, v: &PredictableField) -> Vec<f64> {
        (0..self.tree.slots().len())
            .map(|s| {
                let ctx = SlotContext::of(&self.tree, s);
                self.generator.eval(&ctx, u.at(self.tree.slot(s).parent), v.at(s))
            })
            .collect()
    }

    /// Driver frozen at `(y, ζ) = (0, 0)`.
    pub fn zero_drive(&self) -> Vec<f64> {
        self.drive(&AdaptedProcess::zeros(&self.tree), &PredictableField::zeros(&self.tree))
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct Solution {
    pub y: AdaptedProcess,
    pub z: PredictableField,
}

impl Solution {
    pub fn zeros(tree: &ScenarioTree) -> Self {
        Self {
            y: AdaptedProcess::zeros(tree),
            z: PredictableField::zeros(tree),
        }
    }

    pub fn y0(&self) -> f64 {
        self.y.at(0)
    }

    /// `M_t = Y_t + Σ_{s≤t} f_s ΔA_s`; `drive` holds `f_s` per slot.
    pub fn martingale(&self, tree: &ScenarioTree, drive: &[f64]) -> AdaptedProcess {
        let mut m = vec![0.0; tree.nodes().len()];
        m[0] = self.y.at(0);
        for (s, slot) in tree.slots().iter().enumerate() {
            for b in &slot.branches {
                m[b.child] = m[slot.parent] + self.y.at(b.child) - self.y.at(slot.parent) + drive[s] * slot.delta_a;
            }
        }
        AdaptedProcess(m)
    }
}

/// Martingale increment `g(o) = value(o) − E[value | parent]` in the form
/// `g(Jump x) = Z(x) − Ẑ`, `g(NoJump) = −Ẑ`.
#[derive(Debug, Clone, PartialEq)]
pub struct Representation {
    pub z: Vec<f64>,
    /// Largest reconstruction error of the centered increments.
    pub check: f64,
}

/// Predictable representation on one slot; `values` is parallel to `slot.branches`.
pub fn represent_martingale(values: &[f64], slot: &Slot) -> Representation {
    let m = slot.marks();
    if slot.delta_a == 0.0 {
        return Representation {
            z: vec![0.0; m],
            check: 0.0,
        };
    }
    let value_of = |o: Outcome| {
        slot.branches
            .iter()
            .position(|b| b.outcome == o)
            .map(|i| values[i])
            .expect("branch exists")
    };
    let jump_values: Vec<f64> = (0..m).map(|x| value_of(Outcome::Jump(x))).collect();
    let z: Vec<f64> = if slot.delta_a < 1.0 {
        let base = value_of(Outcome::NoJump);
        jump_values.iter().map(|v| v - base).collect()
    } else {
        let mean = mark_mean(&jump_values, &slot.phi);
        jump_values.iter().map(|v| v - mean).collect()
    };

    let mean: f64 = slot.branches.iter().zip(values).map(|(b, v)| b.probability * v).sum();
    let hat = hat_z(&z, slot);
    let check = slot
        .branches
        .iter()
        .zip(values)
        .map(|(b, v)| {
            let rebuilt = match b.outcome {
                Outcome::Jump(x) => z[x] - hat,
                Outcome::NoJump => -hat,
            };
            (v - mean - rebuilt).abs()
        })
        .fold(0.0, f64::max);
    Representation { z, check }
}

/// Conditional mean of child values over a slot.
pub fn conditional_mean(values: &[f64], slot: &Slot) -> f64 {
    slot.branches.iter().zip(values).map(|(b, v)| b.probability * v).sum()
}

fn child_values(y: &[f64], slot: &Slot) -> Vec<f64> {
    slot.branches.iter().map(|b| y[b.child]).collect()
}

/// Linear solve for a driver given per slot, independent of `(y, ζ)`:
/// `Y = E[ξ + Σ_{future} f ΔA | node]`, `Z` from the representation of `M`.
pub fn solve_with_drive(tree: &ScenarioTree, terminal: &[f64], drive: &[f64]) -> Solution {
    let mut y = vec![0.0; tree.nodes().len()];
    let leaves = tree.leaves();
    y[leaves.clone()].copy_from_slice(terminal);
    let mut z = vec![Vec::new(); tree.slots().len()];
    for (s, slot) in tree.slots().iter().enumerate().rev() {
        let values = child_values(&y, slot);
        y[slot.parent] = conditional_mean(&values, slot) + drive[s] * slot.delta_a;
        z[s] = represent_martingale(&values, slot).z;
    }
    Solution {
        y: AdaptedProcess(y),
        z: PredictableField(z),
    }
}

/// Exact solution for a generator that does not depend on `(y, ζ)`.
pub fn solve_linear(problem: &BsdeProblem) -> Solution {
    solve_with_drive(problem.tree(), problem.terminal(), &problem.zero_drive())
}

/// Solves `y = cond_mean + ΔA f(y, ζ)` on one slot by fixed-point iteration.
pub fn implicit_step_solve(
    cond_mean: f64,
    ctx: &SlotContext<'_>,
    zeta: &[f64],
    generator: &dyn Generator,
    tol: f64,
) -> Result<f64> {
    if ctx.delta_a == 0.0 {
        return Ok(cond_mean);
    }
    let factor = ctx.delta_a * generator.lipschitz_y();
    let step = |y: f64| cond_mean + ctx.delta_a * generator.eval(ctx, y, zeta);
    if factor >= 1.0 {
        // The map is not a contraction; tell apart "no solution" from "every y solves".
        let degenerate = [0.0, 1.0, -1.0, 10.0]
            .iter()
            .all(|&y| (step(y) - y).abs() <= tol * (1.0 + y.abs()));
        return Err(if degenerate {
            Error::Degenerate { slot: ctx.slot }
        } else {
            Error::StepSingular { slot: ctx.slot, factor }
        });
    }
    let mut y = cond_mean;
    for _ in 0..STEP_MAX_ITER {
        let next = step(y);
        if !next.is_finite() {
            return Err(Error::NonFinite { slot: ctx.slot });
        }
        if (next - y).abs() <= tol * y.abs().max(1.0) {
            return Ok(next);
        }
        y = next;
    }
    Err(Error::NoConvergence {
        iterations: STEP_MAX_ITER,
        last_distance: (step(y) - y).abs(),
    })
}

/// Backward induction: `Z` from the children's `Y`, then the implicit step
/// for `Y` at the parent. Independent of the Picard route.
pub fn backward_oracle(problem: &BsdeProblem, tol: f64) -> Result<Solution> {
    let tree = problem.tree();
    let mut y = vec![0.0; tree.nodes().len()];
    y[tree.leaves()].copy_from_slice(problem.terminal());
    let mut z = vec![Vec::new(); tree.slots().len()];
    for (s, slot) in tree.slots().iter().enumerate().rev() {
        let values = child_values(&y, slot);
        let rep = represent_martingale(&values, slot);
        let ctx = SlotContext::of(tree, s);
        y[slot.parent] = implicit_step_solve(conditional_mean(&values, slot), &ctx, &rep.z, problem.generator(), tol)?;
        z[s] = rep.z;
    }
    Ok(Solution {
        y: AdaptedProcess(y),
        z: PredictableField(z),
    })
}

/// Largest violation of `Y_child − Y_parent = g(o) − f ΔA` over all slots and
/// children, with `f` evaluated at the solution itself.
pub fn recursion_residual(problem: &BsdeProblem, solution: &Solution) -> f64 {
    let tree = problem.tree();
    let drive = problem.drive(&solution.y, &solution.z);
    let mut worst: f64 = 0.0;
    for (s, slot) in tree.slots().iter().enumerate() {
        let zeta = solution.z.at(s);
        let hat = hat_z(zeta, slot);
        for b in &slot.branches {
            let g = match b.outcome {
                Outcome::Jump(x) => zeta[x] - hat,
                Outcome::NoJump => -hat,
            };
            let lhs = solution.y.at(b.child) - solution.y.at(slot.parent);
            worst = worst.max((lhs - (g - drive[s] * slot.delta_a)).abs());
        }
    }
    for leaf in tree.leaves() {
        worst = worst.max((solution.y.at(leaf) - problem.terminal_at(leaf)).abs());
    }
    worst
}
