//! Existence hypothesis, the process `L̂_z`, the contraction weights and the
//! threshold on `β` above which the Picard map contracts.

use serde::Serialize;

use crate::error::{Error, Result};
use crate::measure::ScenarioTree;

/// `2 L_y² ΔA²` within this distance of 1 counts as a violation.
pub const BOUNDARY_TOLERANCE: f64 = 1e-12;

/// `2 L_y² ΔA²`.
pub fn hypothesis_value(l_y: f64, delta_a: f64) -> f64 {
    let s = l_y * delta_a;
    2.0 * s * s
}

/// Slack `ε* = 1 − max_slots 2 L_y² ΔA²`; the hypothesis holds iff it is positive.
pub fn check_main_hypothesis(tree: &ScenarioTree, l_y: f64) -> f64 {
    1.0 - tree
        .slots()
        .iter()
        .map(|s| hypothesis_value(l_y, s.delta_a))
        .fold(0.0, f64::max)
}

pub fn hypothesis_holds(epsilon_star: f64) -> bool {
    epsilon_star > BOUNDARY_TOLERANCE
}

/// `δ = ε*/2`.
pub fn default_delta(epsilon_star: f64) -> f64 {
    0.5 * epsilon_star
}

/// `L̂²_z = max(L_z² + δ, (1−δ) L_y / (√(2(1−δ)) − 2 L_y ΔA))`.
pub fn hat_lz_sq(delta: f64, l_y: f64, l_z: f64, delta_a: f64) -> Result<f64> {
    if !(delta > 0.0 && delta < 1.0) {
        return Err(Error::DeltaOutOfRange {
            delta,
            range: "(0, 1)".into(),
        });
    }
    let first = l_z * l_z + delta;
    if l_y == 0.0 {
        return Ok(first);
    }
    let denom = (2.0 * (1.0 - delta)).sqrt() - 2.0 * l_y * delta_a;
    if denom <= 0.0 {
        return Err(Error::DeltaOutOfRange {
            delta,
            range: format!("(0, 1 - 2 L_y^2 dA^2) with 2 L_y^2 dA^2 = {}", hypothesis_value(l_y, delta_a)),
        });
    }
    Ok(first.max((1.0 - delta) * l_y / denom))
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct ProofWeights {
    pub c: f64,
    pub d: f64,
    pub a: f64,
    pub b: f64,
}

/// `c = (1−δ)/(2L̂²)`, `d = c + ΔA`, `a = 2L̂² max(c, d − ΔA)`,
/// `b = min(β − 1/c, β/(1+βΔA) − 1/d)`.
pub fn proof_weights(beta: f64, delta: f64, delta_a: f64, lhat_sq: f64) -> ProofWeights {
    let c = (1.0 - delta) / (2.0 * lhat_sq);
    let d = c + delta_a;
    let a = 2.0 * lhat_sq * c.max(d - delta_a);
    let b = (beta - 1.0 / c).min(beta / (1.0 + beta * delta_a) - 1.0 / d);
    ProofWeights { c, d, a, b }
}

/// `h(ℓ) = L_y²/ℓ + 2ℓ/(1−δ+2ℓΔA)` and `H(ℓ) = h/(1 − ΔA h)` for one slot.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct HProfile {
    pub delta: f64,
    pub l_y: f64,
    pub delta_a: f64,
}

impl HProfile {
    pub fn h(&self, ell: f64) -> f64 {
        self.l_y * self.l_y / ell + 2.0 * ell / (1.0 - self.delta + 2.0 * ell * self.delta_a)
    }

    /// `None` outside the domain `1 − ΔA h(ℓ) > 0`.
    ///
    /// Evaluated as the single fraction
    /// `(L_y²(1−δ+2ℓΔA) + 2ℓ²) / (ℓ(1−δ−2ΔA²L_y²) − ΔA L_y²(1−δ))`;
    /// `1 − ΔA h` cancels badly near the edge of the domain.
    pub fn big_h(&self, ell: f64) -> Option<f64> {
        let (num, denom) = h_fraction(self.delta, self.l_y, self.delta_a, ell);
        (ell > 0.0 && denom > 0.0).then(|| num / denom)
    }

    /// `ℓ* = (1−δ) L_y / (√(2(1−δ)) − 2 L_y ΔA)`.
    pub fn minimizer(&self) -> f64 {
        (1.0 - self.delta) * self.l_y / ((2.0 * (1.0 - self.delta)).sqrt() - 2.0 * self.l_y * self.delta_a)
    }
}

/// `H(ℓ) = num/denom` with `denom = ℓ(1−δ+2ℓΔA)(1 − ΔA h(ℓ))`, expanded.
fn h_fraction(delta: f64, l_y: f64, delta_a: f64, ell: f64) -> (f64, f64) {
    let (l2, q) = (l_y * l_y, 1.0 - delta);
    let num = l2 * (q + 2.0 * ell * delta_a) + 2.0 * ell * ell;
    let denom = ell * (q - 2.0 * delta_a * delta_a * l2) - delta_a * l2 * q;
    (num, denom)
}

pub fn contraction_profile_h(delta: f64, l_y: f64, delta_a: f64) -> Result<HProfile> {
    if !(0.0..1.0).contains(&delta) {
        return Err(Error::DeltaOutOfRange {
            delta,
            range: "[0, 1)".into(),
        });
    }
    if hypothesis_value(l_y, delta_a) >= 1.0 - delta {
        return Err(Error::DeltaOutOfRange {
            delta,
            range: format!("[0, 1 - {})", hypothesis_value(l_y, delta_a)),
        });
    }
    Ok(HProfile { delta, l_y, delta_a })
}

/// Per-slot pieces of the threshold on `β`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct SlotBound {
    pub lhat_sq: f64,
    /// `L_y²/L̂² + 1/c`.
    pub first_branch: f64,
    /// `1 − ΔA (L_y²/L̂² + 1/d)`.
    pub denominator: f64,
    /// `H(L̂²)`.
    pub threshold: f64,
}

pub fn slot_beta_bound(delta: f64, l_y: f64, l_z: f64, delta_a: f64) -> Result<SlotBound> {
    let lhat_sq = hat_lz_sq(delta, l_y, l_z, delta_a)?;
    let ratio = l_y * l_y / lhat_sq;
    let inv_c = 2.0 * lhat_sq / (1.0 - delta);
    let (num, denom) = h_fraction(delta, l_y, delta_a, lhat_sq);
    let scale = lhat_sq * (1.0 - delta + 2.0 * lhat_sq * delta_a);
    Ok(SlotBound {
        lhat_sq,
        first_branch: ratio + inv_c,
        denominator: denom / scale,
        threshold: num / denom,
    })
}

/// `β_min(δ)`: maximum of the per-slot bound over every reachable slot.
pub fn beta_threshold(tree: &ScenarioTree, l_y: f64, l_z: f64, delta: f64) -> Result<f64> {
    let eps = check_main_hypothesis(tree, l_y);
    if !(delta > 0.0 && delta < eps) {
        return Err(Error::DeltaOutOfRange {
            delta,
            range: format!("(0, {eps})"),
        });
    }
    let mut beta_min: f64 = 0.0;
    for (s, slot) in tree.slots().iter().enumerate() {
        let bound = slot_beta_bound(delta, l_y, l_z, slot.delta_a)?;
        if bound.denominator <= 0.0 {
            return Err(Error::DenominatorNonpositive {
                slot: s,
                value: bound.denominator,
            });
        }
        // The first branch is dominated by H(L̂²); a violation means broken arithmetic.
        if bound.first_branch > bound.threshold * (1.0 + 1e-12) {
            return Err(Error::DenominatorNonpositive {
                slot: s,
                value: bound.threshold - bound.first_branch,
            });
        }
        beta_min = beta_min.max(bound.threshold);
    }
    Ok(beta_min)
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct FlaggedSlot {
    pub slot: usize,
    pub step: usize,
    pub delta_a: f64,
    pub value: f64,
}

/// Slots with `2 L_y² ΔA² ≥ 1`, boundary included.
pub fn detect_counterexample(tree: &ScenarioTree, l_y: f64) -> Vec<FlaggedSlot> {
    tree.slots()
        .iter()
        .enumerate()
        .filter_map(|(s, slot)| {
            let value = hypothesis_value(l_y, slot.delta_a);
            (value >= 1.0 - BOUNDARY_TOLERANCE).then_some(FlaggedSlot {
                slot: s,
                step: slot.step,
                delta_a: slot.delta_a,
                value,
            })
        })
        .collect()
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct SlotProfile {
    pub slot: usize,
    pub delta_a: f64,
    pub lhat_sq: f64,
    pub c: f64,
    pub d: f64,
    pub a: f64,
    pub b: f64,
    /// `L_y²/L̂²`, the lower bound `b` must clear.
    pub b_floor: f64,
    pub beta_min: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ContractionProfile {
    pub slots: Vec<SlotProfile>,
    pub epsilon_star: f64,
    pub delta: f64,
    /// `max_s a_s`, which equals `1 − δ` with the explicit weights.
    pub alpha: f64,
    pub beta: f64,
    pub beta_min: f64,
}

impl ContractionProfile {
    pub fn build(tree: &ScenarioTree, l_y: f64, l_z: f64, beta: f64, delta: f64) -> Result<Self> {
        let epsilon_star = check_main_hypothesis(tree, l_y);
        let beta_min = beta_threshold(tree, l_y, l_z, delta)?;
        let mut slots = Vec::with_capacity(tree.slots().len());
        for (s, slot) in tree.slots().iter().enumerate() {
            let bound = slot_beta_bound(delta, l_y, l_z, slot.delta_a)?;
            let w = proof_weights(beta, delta, slot.delta_a, bound.lhat_sq);
            slots.push(SlotProfile {
                slot: s,
                delta_a: slot.delta_a,
                lhat_sq: bound.lhat_sq,
                c: w.c,
                d: w.d,
                a: w.a,
                b: w.b,
                b_floor: l_y * l_y / bound.lhat_sq,
                beta_min: bound.threshold,
            });
        }
        let alpha = slots.iter().map(|s| s.a).fold(0.0, f64::max);
        Ok(Self {
            slots,
            epsilon_star,
            delta,
            alpha,
            beta,
            beta_min,
        })
    }

    /// `b_s` per slot, the Y-weights of the mixed norm.
    pub fn weights(&self) -> Vec<f64> {
        self.slots.iter().map(|s| s.b).collect()
    }

    /// Proof condition (ii): `b_s ≥ L_y²/L̂²` on every slot.
    pub fn weights_dominate(&self) -> bool {
        self.slots.iter().all(|s| s.b >= s.b_floor - 1e-12 * s.b_floor.abs().max(1.0))
    }
}
