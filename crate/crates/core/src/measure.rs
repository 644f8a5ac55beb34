//! Finite-mark random measures, their compensators and the exact scenario tree.
//!
//! Time is a grid `0 = t_0 < t_1 < ... < t_K = T`. Step `k` covers the
//! interval `(t_k, t_{k+1}]`; the measure can charge only the right end point
//! `t_{k+1}`, with probability `ΔA_k`, and the mark is then drawn from `φ_k`.
//! Both are functions of the outcomes observed strictly before `t_{k+1}`, so
//! `A` is predictable but in general random.

use std::fmt;
use std::ops::Range;
use std::sync::Arc;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Tolerance used when validating that a mark law sums to one.
pub const PROBABILITY_TOLERANCE: f64 = 1e-12;

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct MarkSpace {
    marks: Vec<String>,
}

impl MarkSpace {
    pub fn new(marks: Vec<String>) -> Result<Self> {
        if marks.is_empty() {
            return Err(Error::InvalidMarkSpace);
        }
        for (i, a) in marks.iter().enumerate() {
            if marks[i + 1..].contains(a) {
                return Err(Error::InvalidMarkSpace);
            }
        }
        Ok(Self { marks })
    }

    /// Marks named `x0, x1, ...`.
    pub fn indexed(count: usize) -> Result<Self> {
        Self::new((0..count).map(|i| format!("x{i}")).collect())
    }

    pub fn len(&self) -> usize {
        self.marks.len()
    }

    pub fn is_empty(&self) -> bool {
        self.marks.is_empty()
    }

    pub fn names(&self) -> &[String] {
        &self.marks
    }
}

/// What happens at the right end of a step.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum Outcome {
    Jump(usize),
    NoJump,
}

impl Outcome {
    pub fn is_jump(&self) -> bool {
        matches!(self, Outcome::Jump(_))
    }
}

impl fmt::Display for Outcome {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Outcome::Jump(x) => write!(f, "J{x}"),
            Outcome::NoJump => write!(f, "-"),
        }
    }
}

/// `(step, history) -> ΔA_k`.
pub type JumpRule = Arc<dyn Fn(usize, &[Outcome]) -> f64 + Send + Sync>;
/// `(step, history) -> φ_k`.
pub type MarkLaw = Arc<dyn Fn(usize, &[Outcome]) -> Vec<f64> + Send + Sync>;

/// Predictable specification of the compensator `dA φ` on a finite grid.
#[derive(Clone)]
pub struct ScenarioModel {
    marks: MarkSpace,
    grid: Vec<f64>,
    jump_size: JumpRule,
    mark_law: MarkLaw,
    continuous: Vec<f64>,
}

impl fmt::Debug for ScenarioModel {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.debug_struct("ScenarioModel")
            .field("marks", &self.marks)
            .field("grid", &self.grid)
            .field("continuous", &self.continuous)
            .finish_non_exhaustive()
    }
}

impl ScenarioModel {
    pub fn new(marks: MarkSpace, grid: Vec<f64>, jump_size: JumpRule, mark_law: MarkLaw) -> Result<Self> {
        validate_grid(&grid)?;
        let steps = grid.len() - 1;
        Ok(Self {
            marks,
            grid,
            jump_size,
            mark_law,
            continuous: vec![0.0; steps],
        })
    }

    /// Uniform grid on `[0, horizon]` with `steps` steps.
    pub fn uniform_grid(steps: usize, horizon: f64) -> Vec<f64> {
        (0..=steps).map(|k| horizon * k as f64 / steps.max(1) as f64).collect()
    }

    /// Attach deterministic continuous increments `ΔA^c_k` (path utilities only).
    pub fn with_continuous_increments(mut self, increments: Vec<f64>) -> Result<Self> {
        if increments.len() != self.steps() {
            return Err(Error::InvalidParameter(format!(
                "expected {} continuous increments, got {}",
                self.steps(),
                increments.len()
            )));
        }
        for (step, &value) in increments.iter().enumerate() {
            if !(value.is_finite() && value >= 0.0) {
                return Err(Error::InvalidContinuousIncrement { step, value });
            }
        }
        self.continuous = increments;
        Ok(self)
    }

    pub fn steps(&self) -> usize {
        self.grid.len() - 1
    }

    pub fn marks(&self) -> &MarkSpace {
        &self.marks
    }

    pub fn grid(&self) -> &[f64] {
        &self.grid
    }

    pub fn continuous_increments(&self) -> &[f64] {
        &self.continuous
    }

    pub fn jump_size(&self, step: usize, history: &[Outcome]) -> f64 {
        (self.jump_size)(step, history)
    }

    pub fn mark_law(&self, step: usize, history: &[Outcome]) -> Vec<f64> {
        (self.mark_law)(step, history)
    }

    pub fn is_purely_discrete(&self) -> bool {
        self.continuous.iter().all(|&c| c == 0.0)
    }
}

fn validate_grid(grid: &[f64]) -> Result<()> {
    match grid.first() {
        None => return Err(Error::InvalidGrid("empty grid".into())),
        Some(&t0) if t0 != 0.0 => return Err(Error::InvalidGrid(format!("t_0 = {t0}"))),
        _ => {}
    }
    for (k, w) in grid.windows(2).enumerate() {
        if !(w[1] > w[0]) || !w[1].is_finite() {
            return Err(Error::InvalidGrid(format!("t_{} = {} is not after t_{} = {}", k + 1, w[1], k, w[0])));
        }
    }
    Ok(())
}

fn validate_mark_law(step: usize, phi: &[f64], marks: usize) -> Result<()> {
    if phi.len() != marks {
        return Err(Error::InvalidMarkLaw {
            step,
            reason: format!("expected {marks} entries, got {}", phi.len()),
        });
    }
    if let Some(p) = phi.iter().find(|p| !(p.is_finite() && **p >= 0.0)) {
        return Err(Error::InvalidMarkLaw {
            step,
            reason: format!("entry {p} is not a nonnegative number"),
        });
    }
    let total: f64 = phi.iter().sum();
    if (total - 1.0).abs() > PROBABILITY_TOLERANCE {
        return Err(Error::InvalidMarkLaw {
            step,
            reason: format!("entries sum to {total}"),
        });
    }
    Ok(())
}

#[derive(Debug, Clone, PartialEq)]
pub struct Node {
    pub parent: Option<usize>,
    pub depth: usize,
    /// Outcome that led here from the parent.
    pub incoming: Option<Outcome>,
    /// Slot leading into this node.
    pub incoming_slot: Option<usize>,
    /// Slot leaving this node; `None` on leaves.
    pub slot: Option<usize>,
    pub probability: f64,
    /// `A_{t_k}` along the path, continuous part included.
    pub compensator: f64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct Branch {
    pub outcome: Outcome,
    pub child: usize,
    /// Conditional probability given the parent.
    pub probability: f64,
}

/// One predictable slot: a parent node together with the law of the next outcome.
#[derive(Debug, Clone, PartialEq)]
pub struct Slot {
    pub parent: usize,
    pub step: usize,
    pub delta_a: f64,
    pub continuous: f64,
    pub phi: Vec<f64>,
    pub history: Vec<Outcome>,
    pub branches: Vec<Branch>,
}

impl Slot {
    pub fn marks(&self) -> usize {
        self.phi.len()
    }

    /// Branch for `Jump(mark)`, if that branch exists.
    pub fn jump_branch(&self, mark: usize) -> Option<&Branch> {
        self.branches.iter().find(|b| b.outcome == Outcome::Jump(mark))
    }

    pub fn no_jump_branch(&self) -> Option<&Branch> {
        self.branches.iter().find(|b| b.outcome == Outcome::NoJump)
    }

    pub fn branch_mass(&self) -> f64 {
        self.branches.iter().map(|b| b.probability).sum()
    }
}

/// Exhaustive enumeration of every reachable history of a [`ScenarioModel`].
///
/// Nodes are stored level by level, so the nodes of depth `k` occupy
/// `levels()[k]` and every reduction over node indices runs in a fixed order.
#[derive(Debug, Clone)]
pub struct ScenarioTree {
    marks: MarkSpace,
    grid: Vec<f64>,
    nodes: Vec<Node>,
    slots: Vec<Slot>,
    levels: Vec<Range<usize>>,
}

/// Builds the scenario tree of `model`.
pub fn build_tree(model: &ScenarioModel) -> Result<ScenarioTree> {
    let m = model.marks().len();
    let steps = model.steps();
    let mut nodes = vec![Node {
        parent: None,
        depth: 0,
        incoming: None,
        incoming_slot: None,
        slot: None,
        probability: 1.0,
        compensator: 0.0,
    }];
    let mut slots = Vec::new();
    let mut levels = vec![0..1];
    let mut histories: Vec<Vec<Outcome>> = vec![Vec::new()];

    for step in 0..steps {
        let level = levels[step].clone();
        let mut next_histories = Vec::new();
        let start = nodes.len();
        for (offset, parent) in level.enumerate() {
            let history = std::mem::take(&mut histories[offset]);
            let delta_a = model.jump_size(step, &history);
            if !(0.0..=1.0).contains(&delta_a) {
                return Err(Error::JumpSizeOutOfRange { step, value: delta_a });
            }
            let phi = model.mark_law(step, &history);
            validate_mark_law(step, &phi, m)?;
            let continuous = model.continuous_increments()[step];

            let mut outcomes: Vec<(Outcome, f64)> = Vec::with_capacity(m + 1);
            if delta_a > 0.0 {
                outcomes.extend(phi.iter().enumerate().map(|(x, p)| (Outcome::Jump(x), delta_a * p)));
            }
            if delta_a < 1.0 {
                outcomes.push((Outcome::NoJump, 1.0 - delta_a));
            }

            let slot_index = slots.len();
            let parent_node = nodes[parent].clone();
            let mut branches = Vec::with_capacity(outcomes.len());
            for (outcome, probability) in outcomes {
                let child = nodes.len();
                nodes.push(Node {
                    parent: Some(parent),
                    depth: step + 1,
                    incoming: Some(outcome),
                    incoming_slot: Some(slot_index),
                    slot: None,
                    probability: parent_node.probability * probability,
                    compensator: parent_node.compensator + continuous + delta_a,
                });
                let mut h = history.clone();
                h.push(outcome);
                next_histories.push(h);
                branches.push(Branch {
                    outcome,
                    child,
                    probability,
                });
            }
            nodes[parent].slot = Some(slot_index);
            slots.push(Slot {
                parent,
                step,
                delta_a,
                continuous,
                phi,
                history,
                branches,
            });
        }
        levels.push(start..nodes.len());
        histories = next_histories;
    }

    Ok(ScenarioTree {
        marks: model.marks().clone(),
        grid: model.grid().to_vec(),
        nodes,
        slots,
        levels,
    })
}

impl ScenarioTree {
    pub fn marks(&self) -> &MarkSpace {
        &self.marks
    }

    pub fn mark_count(&self) -> usize {
        self.marks.len()
    }

    pub fn grid(&self) -> &[f64] {
        &self.grid
    }

    pub fn steps(&self) -> usize {
        self.grid.len() - 1
    }

    pub fn nodes(&self) -> &[Node] {
        &self.nodes
    }

    pub fn node(&self, index: usize) -> &Node {
        &self.nodes[index]
    }

    pub fn slots(&self) -> &[Slot] {
        &self.slots
    }

    pub fn slot(&self, index: usize) -> &Slot {
        &self.slots[index]
    }

    pub fn levels(&self) -> &[Range<usize>] {
        &self.levels
    }

    pub fn leaves(&self) -> Range<usize> {
        self.levels[self.steps()].clone()
    }

    pub fn leaf_count(&self) -> usize {
        self.leaves().len()
    }

    /// Slots whose outcome is revealed at `t_{step+1}`, in node order.
    pub fn slots_at_step(&self, step: usize) -> impl Iterator<Item = (usize, &Slot)> + '_ {
        self.levels[step].clone().filter_map(move |n| self.nodes[n].slot.map(|s| (s, &self.slots[s])))
    }

    /// Outcomes on the path from the root to `node`.
    pub fn history(&self, node: usize) -> Vec<Outcome> {
        let mut out = Vec::with_capacity(self.nodes[node].depth);
        let mut cur = node;
        while let Some(outcome) = self.nodes[cur].incoming {
            out.push(outcome);
            cur = self.nodes[cur].parent.expect("non-root node has a parent");
        }
        out.reverse();
        out
    }

    /// Slot indices on the path from the root to `node`, oldest first.
    pub fn path_slots(&self, node: usize) -> Vec<usize> {
        let mut out = Vec::with_capacity(self.nodes[node].depth);
        let mut cur = node;
        while let Some(s) = self.nodes[cur].incoming_slot {
            out.push(s);
            cur = self.slots[s].parent;
        }
        out.reverse();
        out
    }

    pub fn is_purely_discrete(&self) -> bool {
        self.slots.iter().all(|s| s.continuous == 0.0)
    }

    /// Largest jump size over all reachable slots (0 for an empty horizon).
    pub fn max_jump(&self) -> f64 {
        self.slots.iter().map(|s| s.delta_a).fold(0.0, f64::max)
    }

    /// `E[A_T]`.
    pub fn expected_terminal_compensator(&self) -> f64 {
        self.leaves().map(|n| self.nodes[n].probability * self.nodes[n].compensator).sum()
    }

    /// Doléans-Dade exponential of `βA` at every node and slot.
    pub fn doleans(&self, beta: f64) -> Result<DoleansPath> {
        check_beta_nonnegative(beta)?;
        let mut node = vec![1.0; self.nodes.len()];
        let mut slot = vec![1.0; self.slots.len()];
        for (s, sl) in self.slots.iter().enumerate() {
            let value = node[sl.parent] * (beta * sl.continuous).exp() * (1.0 + beta * sl.delta_a);
            slot[s] = value;
            for b in &sl.branches {
                node[b.child] = value;
            }
        }
        Ok(DoleansPath { beta, node, slot })
    }
}

/// `𝓔^β` laid out on a tree.
///
/// The value attached to a slot is `𝓔^β_{t_{k+1}}`, which is shared by every
/// child of the slot's parent: it is determined by the parent history.
#[derive(Debug, Clone, PartialEq)]
pub struct DoleansPath {
    pub beta: f64,
    node: Vec<f64>,
    slot: Vec<f64>,
}

impl DoleansPath {
    pub fn at_node(&self, node: usize) -> f64 {
        self.node[node]
    }

    pub fn at_slot(&self, slot: usize) -> f64 {
        self.slot[slot]
    }

    pub fn nodes(&self) -> &[f64] {
        &self.node
    }
}

fn check_beta_nonnegative(beta: f64) -> Result<()> {
    if beta.is_finite() && beta >= 0.0 {
        Ok(())
    } else {
        Err(Error::InvalidBeta {
            value: beta,
            requirement: "finite and nonnegative",
        })
    }
}

/// Increment of a deterministic finite-variation path over one grid step:
/// a continuous part accrued inside the step and a jump at its right end.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct PathIncrement {
    pub continuous: f64,
    pub jump: f64,
}

impl PathIncrement {
    pub fn new(continuous: f64, jump: f64) -> Self {
        Self { continuous, jump }
    }

    pub fn jump(jump: f64) -> Self {
        Self { continuous: 0.0, jump }
    }

    pub fn continuous(continuous: f64) -> Self {
        Self { continuous, jump: 0.0 }
    }
}

fn validate_path(path: &[PathIncrement]) -> Result<()> {
    for (step, inc) in path.iter().enumerate() {
        if !(0.0..=1.0).contains(&inc.jump) {
            return Err(Error::JumpSizeOutOfRange { step, value: inc.jump });
        }
        if !(inc.continuous.is_finite() && inc.continuous >= 0.0) {
            return Err(Error::InvalidContinuousIncrement {
                step,
                value: inc.continuous,
            });
        }
    }
    Ok(())
}

/// Stochastic exponential `exp(X^c_t) ∏_{s≤t} (1 + ΔX_s)` of a finite-variation
/// path, at `0` and after every increment.
pub fn stochastic_exponential(increments: &[PathIncrement]) -> Vec<f64> {
    let mut out = Vec::with_capacity(increments.len() + 1);
    let mut value = 1.0;
    out.push(value);
    for inc in increments {
        value *= inc.continuous.exp() * (1.0 + inc.jump);
        out.push(value);
    }
    out
}

/// `𝓔^β_t = exp(β A^c_t) ∏_{s≤t} (1 + β ΔA_s)` along `path`.
pub fn doleans_exponential(path: &[PathIncrement], beta: f64) -> Result<Vec<f64>> {
    check_beta_nonnegative(beta)?;
    validate_path(path)?;
    let scaled: Vec<_> = path
        .iter()
        .map(|i| PathIncrement::new(beta * i.continuous, beta * i.jump))
        .collect();
    Ok(stochastic_exponential(&scaled))
}

/// Square-root pair `(𝓔̄, 𝓔̲)` with `𝓔̄² = 𝓔^β` and `𝓔̲ 𝓔̄ = 1`.
#[derive(Debug, Clone, PartialEq)]
pub struct SqrtFactorization {
    pub upper: Vec<f64>,
    pub lower: Vec<f64>,
}

/// Doléans exponentials of
/// `Ā = (β/2) A^c + Σ (√(1+βΔA) − 1)` and
/// `A̲ = −(β/2) A^c − Σ (√(1+βΔA) − 1)/√(1+βΔA)`.
pub fn doleans_sqrt_factorization(path: &[PathIncrement], beta: f64) -> Result<SqrtFactorization> {
    if !(beta.is_finite() && beta > 0.0) {
        return Err(Error::InvalidBeta {
            value: beta,
            requirement: "finite and strictly positive",
        });
    }
    validate_path(path)?;
    let mut upper = Vec::with_capacity(path.len());
    let mut lower = Vec::with_capacity(path.len());
    for inc in path {
        let root = (1.0 + beta * inc.jump).sqrt();
        upper.push(PathIncrement::new(0.5 * beta * inc.continuous, root - 1.0));
        lower.push(PathIncrement::new(-0.5 * beta * inc.continuous, -(root - 1.0) / root));
    }
    Ok(SqrtFactorization {
        upper: stochastic_exponential(&upper),
        lower: stochastic_exponential(&lower),
    })
}
