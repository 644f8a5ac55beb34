use serde::Serialize;

use super::{recursion_residual, solve_with_drive, BsdeProblem, Solution};
use crate::conditions::{check_main_hypothesis, default_delta, detect_counterexample, hypothesis_holds, ContractionProfile, FlaggedSlot};
use crate::error::{Error, Result};
use crate::norms::{mixed_norm_sq, AdaptedProcess, PredictableField};

/// Successive squared distances below this fraction of the first one are
/// rounding noise and produce no contraction ratio.
const RATIO_NOISE_FLOOR: f64 = 1e-16;

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct PicardOptions {
    /// Stop once the mixed-norm distance between successive iterates is at
    /// most `tol · max(1, ‖iterate‖)`.
    pub tol: f64,
    pub max_iter: usize,
    /// Defaults to `ε*/2`.
    pub delta: Option<f64>,
    /// Refuse to iterate when `2 L_y² ΔA² ≥ 1` somewhere.
    pub enforce_conditions: bool,
}

impl Default for PicardOptions {
    fn default() -> Self {
        Self {
            tol: 1e-14,
            max_iter: 10_000,
            delta: None,
            enforce_conditions: true,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct SolveReport {
    /// Number of applications of the Picard map.
    pub iterations: usize,
    pub converged: bool,
    /// Squared mixed-norm distance between iterate `n` and `n − 1`.
    pub distances: Vec<f64>,
    /// `distances[n] / distances[n − 1]` for `n ≥ 1`, above the noise floor.
    pub ratios: Vec<f64>,
    /// Largest violation of the one-slot recursion by the returned pair.
    pub residual: f64,
    pub epsilon_star: f64,
    pub delta: Option<f64>,
    pub beta: f64,
    pub beta_min: Option<f64>,
    /// `max a_s` of the contraction weights.
    pub alpha: Option<f64>,
    pub flagged: Vec<FlaggedSlot>,
    /// Some `b_s` were negative (β below threshold) and were replaced by 0.
    pub weights_clamped: bool,
}

impl SolveReport {
    pub fn worst_ratio(&self) -> Option<f64> {
        self.ratios.iter().copied().reduce(f64::max)
    }
}

/// `Φ(U, V)`: freeze the driver at `f(s, U_{s−}, V_s)` and solve the linear equation.
pub fn picard_map(problem: &BsdeProblem, u: &AdaptedProcess, v: &PredictableField) -> Solution {
    solve_with_drive(problem.tree(), problem.terminal(), &problem.drive(u, v))
}

/// Picard iteration from `(0, 0)`.
pub fn picard_solve(problem: &BsdeProblem, opts: &PicardOptions) -> Result<(Solution, SolveReport)> {
    picard_solve_from(problem, opts, Solution::zeros(problem.tree()))
}

/// Picard iteration from an arbitrary starting pair. Returns the report even
/// when the iteration cap is hit; check [`SolveReport::converged`].
pub fn picard_iterate(problem: &BsdeProblem, opts: &PicardOptions, start: Solution) -> Result<(Solution, SolveReport)> {
    let tree = problem.tree();
    let l_y = problem.generator().lipschitz_y();
    let l_z = problem.generator().lipschitz_z();
    let epsilon_star = check_main_hypothesis(tree, l_y);
    let flagged = detect_counterexample(tree, l_y);

    let (weights, delta, beta_min, alpha, weights_clamped) = if hypothesis_holds(epsilon_star) {
        let delta = opts.delta.unwrap_or_else(|| default_delta(epsilon_star));
        let profile = ContractionProfile::build(tree, l_y, l_z, problem.beta(), delta)?;
        let raw = profile.weights();
        let clamped = raw.iter().any(|&b| b < 0.0);
        let weights = raw.into_iter().map(|b| b.max(0.0)).collect();
        (weights, Some(delta), Some(profile.beta_min), Some(profile.alpha), clamped)
    } else if opts.enforce_conditions {
        let worst = flagged
            .iter()
            .copied()
            .max_by(|a, b| a.value.total_cmp(&b.value))
            .expect("violated hypothesis has a flagged slot");
        return Err(Error::ConditionViolated {
            slot: worst.slot,
            value: worst.value,
        });
    } else {
        (vec![1.0; tree.slots().len()], None, None, None, false)
    };

    let doleans = problem.doleans();
    let mut current = start;
    let mut distances = Vec::new();
    let mut ratios = Vec::new();
    let mut converged = false;
    for n in 1..=opts.max_iter {
        let next = picard_map(problem, &current.y, &current.z);
        let dist = mixed_norm_sq(&(&next.y - &current.y), &(&next.z - &current.z), tree, &doleans, &weights);
        if n >= 2 {
            let prev = distances[n - 2];
            if prev > 0.0 && prev >= RATIO_NOISE_FLOOR * distances[0] {
                ratios.push(dist / prev);
            }
        }
        distances.push(dist);
        current = next;
        if !dist.is_finite() {
            break;
        }
        let scale = mixed_norm_sq(&current.y, &current.z, tree, &doleans, &weights).sqrt().max(1.0);
        if dist.sqrt() <= opts.tol * scale {
            converged = true;
            break;
        }
    }

    let residual = recursion_residual(problem, &current);
    let report = SolveReport {
        iterations: distances.len(),
        converged,
        distances,
        ratios,
        residual,
        epsilon_star,
        delta,
        beta: problem.beta(),
        beta_min,
        alpha,
        flagged,
        weights_clamped,
    };
    Ok((current, report))
}

/// Like [`picard_iterate`] but non-convergence is an error.
pub fn picard_solve_from(problem: &BsdeProblem, opts: &PicardOptions, start: Solution) -> Result<(Solution, SolveReport)> {
    let (solution, report) = picard_iterate(problem, opts, start)?;
    if !report.converged {
        return Err(Error::NoConvergence {
            iterations: report.iterations,
            last_distance: report.distances.last().copied().unwrap_or(f64::NAN).sqrt(),
        });
    }
    Ok((solution, report))
}
