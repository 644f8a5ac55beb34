//! Seeded random instances: models, problems, paths and perturbations.

use std::collections::hash_map::DefaultHasher;
use std::hash::{Hash, Hasher};
use std::sync::Arc;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::measure::{build_tree, MarkSpace, Outcome, PathIncrement, ScenarioModel, ScenarioTree};
use crate::norms::{AdaptedProcess, PredictableField};
use crate::solver::{BsdeProblem, DrivePath, Generator, GeneratorSpec};

/// Shape limits of random instances.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct RandomSpec {
    pub max_steps: usize,
    pub max_marks: usize,
    pub max_l_y: f64,
    pub max_l_z: f64,
}

impl Default for RandomSpec {
    fn default() -> Self {
        Self {
            max_steps: 6,
            max_marks: 3,
            max_l_y: 0.6,
            max_l_z: 1.5,
        }
    }
}

/// How `ΔA` is drawn.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum JumpRegime {
    /// Fixed per step, including 0 and 1.
    Deterministic,
    /// Every slot draws its own `ΔA` and `φ` from its history.
    Predictable,
    /// `ΔA ≡ 1`.
    Certain,
}

fn history_rng(seed: u64, step: usize, history: &[Outcome]) -> ChaCha8Rng {
    let mut h = DefaultHasher::new();
    (seed, step, history).hash(&mut h);
    ChaCha8Rng::seed_from_u64(h.finish())
}

/// `ΔA` with atoms at 0 and 1.
fn draw_jump(rng: &mut impl Rng) -> f64 {
    let u: f64 = rng.random();
    if u < 0.15 {
        1.0
    } else if u < 0.25 {
        0.0
    } else {
        rng.random_range(0.05..0.95)
    }
}

pub fn random_law(rng: &mut impl Rng, m: usize) -> Vec<f64> {
    let w: Vec<f64> = (0..m).map(|_| rng.random_range(0.1..1.0)).collect();
    let total: f64 = w.iter().sum();
    w.into_iter().map(|x| x / total).collect()
}

pub fn random_model(rng: &mut impl Rng, spec: &RandomSpec, regime: JumpRegime) -> ScenarioModel {
    let steps = rng.random_range(1..=spec.max_steps);
    let m = rng.random_range(1..=spec.max_marks);
    let marks = MarkSpace::indexed(m).expect("m >= 1");
    let grid = ScenarioModel::uniform_grid(steps, 1.0);
    let model = match regime {
        JumpRegime::Deterministic => {
            let sizes: Vec<f64> = (0..steps).map(|_| draw_jump(rng)).collect();
            let laws: Vec<Vec<f64>> = (0..steps).map(|_| random_law(rng, m)).collect();
            ScenarioModel::new(marks, grid, Arc::new(move |k, _| sizes[k]), Arc::new(move |k, _| laws[k].clone()))
        }
        JumpRegime::Predictable => {
            let seed: u64 = rng.random();
            ScenarioModel::new(
                marks,
                grid,
                Arc::new(move |k, h| draw_jump(&mut history_rng(seed, k, h))),
                Arc::new(move |k, h| random_law(&mut history_rng(seed ^ 0x9e37_79b9_7f4a_7c15, k, h), m)),
            )
        }
        JumpRegime::Certain => {
            let laws: Vec<Vec<f64>> = (0..steps).map(|_| random_law(rng, m)).collect();
            ScenarioModel::new(marks, grid, Arc::new(|_, _| 1.0), Arc::new(move |k, _| laws[k].clone()))
        }
    };
    model.expect("random model is valid")
}

/// Regime cycling by index so that every batch covers all three.
pub fn regime_for(index: usize) -> JumpRegime {
    match index % 3 {
        0 => JumpRegime::Predictable,
        1 => JumpRegime::Deterministic,
        _ => JumpRegime::Certain,
    }
}

pub fn random_generator(rng: &mut impl Rng, spec: &RandomSpec) -> GeneratorSpec {
    let l_y = rng.random_range(0.0..=spec.max_l_y);
    let l_z = rng.random_range(0.0..=spec.max_l_z);
    if rng.random_bool(0.5) {
        GeneratorSpec::Saturating {
            l_y,
            l_z,
            intercept: rng.random_range(-1.0..1.0),
            intercept_per_jump: rng.random_range(-0.5..0.5),
        }
    } else {
        GeneratorSpec::LinearZ {
            slope_y: if rng.random_bool(0.5) { l_y } else { -l_y },
            kappa: if rng.random_bool(0.5) { l_z } else { -l_z },
            intercept: rng.random_range(-1.0..1.0),
        }
    }
}

pub fn random_terminal(rng: &mut impl Rng, tree: &ScenarioTree) -> Vec<f64> {
    (0..tree.leaf_count()).map(|_| rng.random_range(-2.0..2.0)).collect()
}

/// Nonlinear problem satisfying the main hypothesis, with `β = 0` (callers set it).
pub fn random_problem(rng: &mut impl Rng, spec: &RandomSpec, regime: JumpRegime) -> BsdeProblem {
    let tree = build_tree(&random_model(rng, spec, regime)).expect("valid model");
    let generator = random_generator(rng, spec);
    let terminal = random_terminal(rng, &tree);
    BsdeProblem::from_tree(tree, 0.0, terminal, Arc::new(generator)).expect("valid problem")
}

/// Problem whose driver is a random per-slot path, independent of `(y, ζ)`.
pub fn random_linear_problem(rng: &mut impl Rng, spec: &RandomSpec, regime: JumpRegime, beta: f64) -> BsdeProblem {
    let tree = build_tree(&random_model(rng, spec, regime)).expect("valid model");
    let drive: Vec<f64> = (0..tree.slots().len()).map(|_| rng.random_range(-2.0..2.0)).collect();
    let terminal = random_terminal(rng, &tree);
    BsdeProblem::from_tree(tree, beta, terminal, Arc::new(DrivePath(drive))).expect("valid problem")
}

pub fn random_process(rng: &mut impl Rng, tree: &ScenarioTree) -> AdaptedProcess {
    AdaptedProcess((0..tree.nodes().len()).map(|_| rng.random_range(-3.0..3.0)).collect())
}

/// Random field in canonical form (zero on `ΔA = 0`, centered on `ΔA = 1`).
pub fn random_field(rng: &mut impl Rng, tree: &ScenarioTree) -> PredictableField {
    let raw = PredictableField(
        tree.slots()
            .iter()
            .map(|s| (0..s.marks()).map(|_| rng.random_range(-3.0..3.0)).collect())
            .collect(),
    );
    raw.canonical(tree)
}

pub fn random_mark_vector(rng: &mut impl Rng, m: usize) -> Vec<f64> {
    (0..m).map(|_| rng.random_range(-3.0..3.0)).collect()
}

/// Deterministic path with a mix of continuous parts and jumps (some of size 0 or 1).
pub fn random_path(rng: &mut impl Rng) -> Vec<PathIncrement> {
    let len = rng.random_range(1..=20);
    (0..len)
        .map(|_| {
            let continuous = if rng.random_bool(0.3) { 0.0 } else { rng.random_range(0.0..0.5) };
            PathIncrement::new(continuous, draw_jump(rng))
        })
        .collect()
}

/// Convenience: the Lipschitz constants a problem declares.
pub fn lipschitz_of(problem: &BsdeProblem) -> (f64, f64) {
    let g: &dyn Generator = problem.generator();
    (g.lipschitz_y(), g.lipschitz_z())
}

pub fn seeded(seed: u64) -> ChaCha8Rng {
    ChaCha8Rng::seed_from_u64(seed)
}
