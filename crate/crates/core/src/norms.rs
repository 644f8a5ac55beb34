//! Weighted `H²_β` norms on a scenario tree.
//!
//! Every norm is an exact finite sum over slots, reduced in slot order.

use std::ops::{Add, Sub};

use crate::measure::{DoleansPath, ScenarioTree, Slot};

/// One value per tree node. `Y_{t−}` at a slot is the value at the slot's parent.
#[derive(Debug, Clone, PartialEq)]
pub struct AdaptedProcess(pub Vec<f64>);

impl AdaptedProcess {
    pub fn zeros(tree: &ScenarioTree) -> Self {
        Self(vec![0.0; tree.nodes().len()])
    }

    pub fn at(&self, node: usize) -> f64 {
        self.0[node]
    }

    pub fn scale(&self, c: f64) -> Self {
        Self(self.0.iter().map(|v| c * v).collect())
    }

    pub fn max_abs_diff(&self, other: &Self) -> f64 {
        self.0.iter().zip(&other.0).map(|(a, b)| (a - b).abs()).fold(0.0, f64::max)
    }
}

impl Sub for &AdaptedProcess {
    type Output = AdaptedProcess;

    fn sub(self, rhs: Self) -> AdaptedProcess {
        AdaptedProcess(self.0.iter().zip(&rhs.0).map(|(a, b)| a - b).collect())
    }
}

impl Add for &AdaptedProcess {
    type Output = AdaptedProcess;

    fn add(self, rhs: Self) -> AdaptedProcess {
        AdaptedProcess(self.0.iter().zip(&rhs.0).map(|(a, b)| a + b).collect())
    }
}

/// One mark-vector per slot.
#[derive(Debug, Clone, PartialEq)]
pub struct PredictableField(pub Vec<Vec<f64>>);

impl PredictableField {
    pub fn zeros(tree: &ScenarioTree) -> Self {
        Self(tree.slots().iter().map(|s| vec![0.0; s.marks()]).collect())
    }

    pub fn at(&self, slot: usize) -> &[f64] {
        &self.0[slot]
    }

    pub fn scale(&self, c: f64) -> Self {
        Self(self.0.iter().map(|z| z.iter().map(|v| c * v).collect()).collect())
    }

    /// Canonical representative: zero on `ΔA = 0` slots, `Σ Z φ = 0` on `ΔA = 1` slots.
    pub fn canonical(&self, tree: &ScenarioTree) -> Self {
        Self(
            tree.slots()
                .iter()
                .zip(&self.0)
                .map(|(slot, z)| {
                    if slot.delta_a == 0.0 {
                        vec![0.0; z.len()]
                    } else if slot.delta_a == 1.0 {
                        let mean = mark_mean(z, &slot.phi);
                        z.iter().map(|v| v - mean).collect()
                    } else {
                        z.clone()
                    }
                })
                .collect(),
        )
    }
}

impl Sub for &PredictableField {
    type Output = PredictableField;

    fn sub(self, rhs: Self) -> PredictableField {
        PredictableField(
            self.0
                .iter()
                .zip(&rhs.0)
                .map(|(a, b)| a.iter().zip(b).map(|(x, y)| x - y).collect())
                .collect(),
        )
    }
}

impl Add for &PredictableField {
    type Output = PredictableField;

    fn add(self, rhs: Self) -> PredictableField {
        PredictableField(
            self.0
                .iter()
                .zip(&rhs.0)
                .map(|(a, b)| a.iter().zip(b).map(|(x, y)| x + y).collect())
                .collect(),
        )
    }
}

/// `Σ_x ζ(x) φ(x)`.
pub fn mark_mean(zeta: &[f64], phi: &[f64]) -> f64 {
    zeta.iter().zip(phi).map(|(z, p)| z * p).sum()
}

/// `Σ_x |ζ(x)|² φ(x)`.
pub fn mark_second_moment(zeta: &[f64], phi: &[f64]) -> f64 {
    zeta.iter().zip(phi).map(|(z, p)| z * z * p).sum()
}

/// `Ẑ = ∫ ζ(x) ν({t} × dx) = ΔA Σ ζ φ`.
pub fn hat_z(zeta: &[f64], slot: &Slot) -> f64 {
    if slot.delta_a == 0.0 {
        return 0.0;
    }
    slot.delta_a * mark_mean(zeta, &slot.phi)
}

/// Unweighted slot integrand of the Z-norm:
/// `ΔA Σ |ζ − Ẑ|² φ + |Ẑ|² (1 − ΔA)`.
pub fn z_slot_contribution(zeta: &[f64], slot: &Slot) -> f64 {
    let hat = hat_z(zeta, slot);
    let spread: f64 = zeta.iter().zip(&slot.phi).map(|(z, p)| (z - hat).powi(2) * p).sum();
    slot.delta_a * spread + hat * hat * (1.0 - slot.delta_a)
}

/// `∫_{(t_k, t_{k+1})} 𝓔^β_s dA^c_s` for the linear continuous part of a slot.
pub fn continuous_weight(slot: &Slot, doleans: &DoleansPath) -> f64 {
    if slot.continuous == 0.0 {
        return 0.0;
    }
    let start = doleans.at_node(slot.parent);
    if doleans.beta == 0.0 {
        start * slot.continuous
    } else {
        start * (doleans.beta * slot.continuous).exp_m1() / doleans.beta
    }
}

/// `E[∫ 𝓔^β |Y_{t−}|² dA]`.
pub fn y_norm_sq(y: &AdaptedProcess, tree: &ScenarioTree, doleans: &DoleansPath) -> f64 {
    let weights = vec![1.0; tree.slots().len()];
    weighted_y_sum(y, tree, doleans, &weights)
}

fn weighted_y_sum(y: &AdaptedProcess, tree: &ScenarioTree, doleans: &DoleansPath, b: &[f64]) -> f64 {
    tree.slots()
        .iter()
        .enumerate()
        .map(|(s, slot)| {
            let prob = tree.node(slot.parent).probability;
            let yp = y.at(slot.parent);
            let jump = doleans.at_slot(s) * slot.delta_a;
            let cont = continuous_weight(slot, doleans);
            prob * b[s] * yp * yp * (jump + cont)
        })
        .sum()
}

/// `E[∫ 𝓔^β ∫ |Z − Ẑ|² dν + Σ 𝓔^β |Ẑ|² (1 − ΔA)]`.
pub fn z_norm_sq(z: &PredictableField, tree: &ScenarioTree, doleans: &DoleansPath) -> f64 {
    tree.slots()
        .iter()
        .enumerate()
        .map(|(s, slot)| {
            let prob = tree.node(slot.parent).probability;
            let zeta = z.at(s);
            let atomic = doleans.at_slot(s) * z_slot_contribution(zeta, slot);
            let cont = continuous_weight(slot, doleans) * mark_second_moment(zeta, &slot.phi);
            prob * (atomic + cont)
        })
        .sum()
}

/// `E[∫ 𝓔^β ∫ |Z|² dν]`, the plain `L²(P ⊗ ν)` weight of `Z`.
pub fn z_plain_norm_sq(z: &PredictableField, tree: &ScenarioTree, doleans: &DoleansPath) -> f64 {
    tree.slots()
        .iter()
        .enumerate()
        .map(|(s, slot)| {
            let prob = tree.node(slot.parent).probability;
            let m2 = mark_second_moment(z.at(s), &slot.phi);
            prob * m2 * (doleans.at_slot(s) * slot.delta_a + continuous_weight(slot, doleans))
        })
        .sum()
}

/// `√(Σ |δζ − ΔA δζ̄|² φ + ΔA (1 − ΔA) |δζ̄|²)` with `δζ̄ = Σ δζ φ`.
pub fn lipschitz_seminorm(dzeta: &[f64], slot: &Slot) -> f64 {
    seminorm_with(dzeta, slot.delta_a, &slot.phi)
}

pub(crate) fn seminorm_with(dzeta: &[f64], delta_a: f64, phi: &[f64]) -> f64 {
    let mean = mark_mean(dzeta, phi);
    let spread: f64 = dzeta
        .iter()
        .zip(phi)
        .map(|(z, p)| (z - delta_a * mean).powi(2) * p)
        .sum();
    (spread + delta_a * (1.0 - delta_a) * mean * mean).max(0.0).sqrt()
}

/// `E[|∫ ζ d(μ − ν)({t})|² | parent]`, computed by enumerating the slot's branches.
pub fn jump_second_moment(zeta: &[f64], slot: &Slot) -> f64 {
    let hat = hat_z(zeta, slot);
    slot.branches
        .iter()
        .map(|b| {
            let g = match b.outcome {
                crate::measure::Outcome::Jump(x) => zeta[x] - hat,
                crate::measure::Outcome::NoJump => -hat,
            };
            b.probability * g * g
        })
        .sum()
}

/// `Σ P b 𝓔^β |Y_{t−}|² dA + ‖Z‖²_{β}`: the weighted functional in which
/// the Picard map contracts.
pub fn mixed_norm_sq(
    y: &AdaptedProcess,
    z: &PredictableField,
    tree: &ScenarioTree,
    doleans: &DoleansPath,
    b: &[f64],
) -> f64 {
    weighted_y_sum(y, tree, doleans, b) + z_norm_sq(z, tree, doleans)
}

#[cfg(test)]
mod tests {
    use std::sync::Arc;

    use approx::assert_relative_eq;
    use proptest::prelude::*;

    use super::*;
    use crate::measure::{build_tree, MarkSpace, ScenarioModel};

    fn tree(steps: usize, delta_a: f64, phi: Vec<f64>) -> ScenarioTree {
        let m = phi.len();
        build_tree(
            &ScenarioModel::new(
                MarkSpace::indexed(m).unwrap(),
                ScenarioModel::uniform_grid(steps, 1.0),
                Arc::new(move |_, _| delta_a),
                Arc::new(move |_, _| phi.clone()),
            )
            .unwrap(),
        )
        .unwrap()
    }

    #[test]
    fn hat_z_examples() {
        assert_eq!(hat_z(&[3.0], tree(1, 0.0, vec![1.0]).slot(0)), 0.0);
        assert_eq!(hat_z(&[1.0], tree(1, 0.5, vec![1.0]).slot(0)), 0.5);
        assert_relative_eq!(hat_z(&[2.0, -1.0], tree(1, 1.0, vec![0.3, 0.7]).slot(0)), -0.1, epsilon = 1e-15);
    }

    #[test]
    fn y_norm_examples() {
        let t = tree(1, 0.3, vec![1.0]);
        let d = t.doleans(0.0).unwrap();
        assert_eq!(y_norm_sq(&AdaptedProcess::zeros(&t), &t, &d), 0.0);
        let mut y = AdaptedProcess::zeros(&t);
        y.0[0] = 2.0;
        assert_relative_eq!(y_norm_sq(&y, &t, &d), 0.3 * 4.0, epsilon = 1e-15);

        let t = tree(3, 0.4, vec![0.5, 0.5]);
        let d = t.doleans(0.0).unwrap();
        let ones = AdaptedProcess(vec![1.0; t.nodes().len()]);
        assert_relative_eq!(y_norm_sq(&ones, &t, &d), t.expected_terminal_compensator(), epsilon = 1e-14);
    }

    #[test]
    fn z_norm_examples() {
        let p = 0.3;
        let t = tree(1, p, vec![1.0]);
        let d = t.doleans(0.0).unwrap();
        assert_eq!(z_norm_sq(&PredictableField::zeros(&t), &t, &d), 0.0);
        let z = PredictableField(vec![vec![1.0]]);
        assert_relative_eq!(z_norm_sq(&z, &t, &d), p * (1.0 - p), epsilon = 1e-15);

        let t = tree(1, 1.0, vec![0.2, 0.8]);
        let d = t.doleans(1.0).unwrap();
        let z = PredictableField(vec![vec![1.5, -0.25]]);
        let shifted = PredictableField(vec![vec![1.5 + 7.0, -0.25 + 7.0]]);
        assert_relative_eq!(z_norm_sq(&z, &t, &d), z_norm_sq(&shifted, &t, &d), max_relative = 1e-14);
    }

    #[test]
    fn seminorm_examples() {
        let t = tree(1, 0.0, vec![0.25, 0.75]);
        assert_eq!(lipschitz_seminorm(&[0.0, 0.0], t.slot(0)), 0.0);
        let expected = (0.25f64 * 4.0 + 0.75 * 1.0).sqrt();
        assert_relative_eq!(lipschitz_seminorm(&[2.0, -1.0], t.slot(0)), expected, epsilon = 1e-15);
        let t = tree(1, 1.0, vec![0.5, 0.5]);
        assert_relative_eq!(lipschitz_seminorm(&[1.0, -1.0], t.slot(0)), 1.0, epsilon = 1e-15);
    }

    #[test]
    fn jump_second_moment_examples() {
        assert_eq!(jump_second_moment(&[5.0], tree(1, 0.0, vec![1.0]).slot(0)), 0.0);
        let p = 0.35;
        assert_relative_eq!(jump_second_moment(&[1.0], tree(1, p, vec![1.0]).slot(0)), p * (1.0 - p), epsilon = 1e-15);
    }

    #[test]
    fn mixed_norm_examples() {
        let t = tree(2, 0.4, vec![0.5, 0.5]);
        let d = t.doleans(0.0).unwrap();
        let y = AdaptedProcess((0..t.nodes().len()).map(|i| i as f64 * 0.1).collect());
        let z = PredictableField(t.slots().iter().enumerate().map(|(i, _)| vec![i as f64, -1.0]).collect());
        let zero_b = vec![0.0; t.slots().len()];
        let one_b = vec![1.0; t.slots().len()];
        assert_eq!(mixed_norm_sq(&y, &z, &t, &d, &zero_b), z_norm_sq(&z, &t, &d));
        assert_eq!(
            mixed_norm_sq(&AdaptedProcess::zeros(&t), &PredictableField::zeros(&t), &t, &d, &one_b),
            0.0
        );
        assert_relative_eq!(
            mixed_norm_sq(&y, &z, &t, &d, &one_b),
            y_norm_sq(&y, &t, &d) + z_norm_sq(&z, &t, &d),
            max_relative = 1e-14
        );
    }

    fn slot_strategy() -> impl Strategy<Value = (Slot, Vec<f64>, Vec<f64>)> {
        (1usize..=4, 0.0f64..=1.0, prop::bool::ANY).prop_flat_map(|(m, da, certain)| {
            let da = if certain { 1.0 } else { da };
            (
                prop::collection::vec(0.01f64..1.0, m),
                prop::collection::vec(-5.0f64..5.0, m),
                prop::collection::vec(-5.0f64..5.0, m),
            )
                .prop_map(move |(w, a, b)| {
                    let total: f64 = w.iter().sum();
                    let phi: Vec<f64> = w.iter().map(|x| x / total).collect();
                    let t = tree(1, da, phi);
                    (t.slot(0).clone(), a, b)
                })
        })
    }

    proptest! {
        #[test]
        fn hat_z_is_linear((slot, a, b) in slot_strategy(), s in -3.0f64..3.0, r in -3.0f64..3.0) {
            let combo: Vec<f64> = a.iter().zip(&b).map(|(x, y)| s * x + r * y).collect();
            let lhs = hat_z(&combo, &slot);
            let rhs = s * hat_z(&a, &slot) + r * hat_z(&b, &slot);
            prop_assert!((lhs - rhs).abs() <= 1e-12 * (1.0 + lhs.abs()));
        }

        #[test]
        fn second_moment_matches_z_integrand((slot, a, _b) in slot_strategy()) {
            let lhs = jump_second_moment(&a, &slot);
            let rhs = z_slot_contribution(&a, &slot);
            prop_assert!((lhs - rhs).abs() <= 1e-12 * (1.0 + rhs.abs()));
        }

        #[test]
        fn seminorm_squares_to_contribution((slot, a, _b) in slot_strategy()) {
            prop_assume!(slot.delta_a > 0.0);
            let lhs = lipschitz_seminorm(&a, &slot).powi(2) * slot.delta_a;
            let rhs = z_slot_contribution(&a, &slot);
            prop_assert!((lhs - rhs).abs() <= 1e-12 * (1.0 + rhs.abs()));
        }

        #[test]
        fn two_sided_bound_under_gamma((slot, a, _b) in slot_strategy()) {
            if slot.delta_a >= 1.0 {
                return Ok(());
            }
            let gamma = 1.0 - slot.delta_a;
            let outer = slot.delta_a * mark_second_moment(&a, &slot.phi);
            let mid = z_slot_contribution(&a, &slot);
            prop_assert!(gamma * outer <= mid + 1e-12);
            prop_assert!(mid <= outer + 1e-12);
        }

        #[test]
        fn norms_are_quadratic(c in -4.0f64..4.0, seed in 0u64..1000) {
            let t = tree(2, 0.25 + (seed % 3) as f64 * 0.25, vec![0.4, 0.6]);
            let d = t.doleans(0.7).unwrap();
            let y = AdaptedProcess((0..t.nodes().len()).map(|i| ((i as u64 * 31 + seed) % 17) as f64 - 8.0).collect());
            let z = PredictableField(t.slots().iter().enumerate().map(|(i, _)| vec![(i as u64 + seed) as f64 % 5.0, -1.0]).collect());
            let b = vec![0.5; t.slots().len()];
            let base = mixed_norm_sq(&y, &z, &t, &d, &b);
            let scaled = mixed_norm_sq(&y.scale(c), &z.scale(c), &t, &d, &b);
            prop_assert!((scaled - c * c * base).abs() <= 1e-10 * (1.0 + scaled.abs()));
        }
    }
}
