//! Machine checks of the identities and estimates behind existence and
//! uniqueness, evaluated as exact tree sums.

pub mod random;

use std::sync::Arc;

use rand::Rng;
use serde::Serialize;

use crate::conditions::{check_main_hypothesis, contraction_profile_h, default_delta, hat_lz_sq, hypothesis_holds, HProfile};
use crate::error::{Error, Result};
use crate::measure::{doleans_exponential, doleans_sqrt_factorization, PathIncrement, ScenarioTree};
use crate::norms::{
    jump_second_moment, lipschitz_seminorm, mark_mean, y_norm_sq, z_norm_sq, z_plain_norm_sq, PredictableField,
};
use crate::solver::{
    backward_oracle, recursion_residual, solve_linear, BsdeProblem, DrivePath, Generator, SlotContext, Solution,
    STEP_TOLERANCE,
};

/// Relative tolerance of identity checks.
pub const IDENTITY_TOLERANCE: f64 = 1e-10;
/// Slack of inequality checks, relative to `max(1, |rhs|)`.
pub const INEQUALITY_SLACK: f64 = 1e-12;

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct CheckResult {
    pub name: String,
    pub lhs: f64,
    pub rhs: f64,
    /// `|lhs − rhs|` for identities, `lhs − rhs` for inequalities.
    pub abs_gap: f64,
    pub rel_gap: f64,
    pub pass: bool,
    pub tolerance: f64,
    pub skipped: bool,
    pub note: String,
}

impl CheckResult {
    /// `lhs = rhs` up to `tolerance · max(scale, tiny)`.
    pub fn identity(name: &str, lhs: f64, rhs: f64, scale: f64, tolerance: f64) -> Self {
        let abs_gap = (lhs - rhs).abs();
        let rel_gap = if scale > 0.0 { abs_gap / scale } else { abs_gap };
        Self {
            name: name.into(),
            lhs,
            rhs,
            abs_gap,
            rel_gap,
            pass: rel_gap <= tolerance,
            tolerance,
            skipped: false,
            note: String::new(),
        }
    }

    /// `lhs ≤ rhs + slack · max(1, |rhs|)`.
    pub fn inequality(name: &str, lhs: f64, rhs: f64, slack: f64) -> Self {
        let abs_gap = lhs - rhs;
        let scale = rhs.abs().max(1.0);
        Self {
            name: name.into(),
            lhs,
            rhs,
            abs_gap,
            rel_gap: abs_gap / scale,
            pass: abs_gap <= slack * scale,
            tolerance: slack,
            skipped: false,
            note: String::new(),
        }
    }

    pub fn skipped(name: &str, note: &str) -> Self {
        Self {
            name: name.into(),
            lhs: 0.0,
            rhs: 0.0,
            abs_gap: 0.0,
            rel_gap: 0.0,
            pass: true,
            tolerance: 0.0,
            skipped: true,
            note: note.into(),
        }
    }

    pub fn with_note(mut self, note: impl Into<String>) -> Self {
        self.note = note.into();
        self
    }

    /// Skipped checks count as passing.
    pub fn ok(&self) -> bool {
        self.pass
    }
}

/// Folds per-sample results into one row carrying the worst sample.
pub fn aggregate(name: &str, results: &[CheckResult]) -> CheckResult {
    let active: Vec<&CheckResult> = results.iter().filter(|r| !r.skipped).collect();
    let Some(worst) = active.iter().copied().max_by(|a, b| a.rel_gap.total_cmp(&b.rel_gap)) else {
        return CheckResult::skipped(name, "no applicable samples");
    };
    let violations = active.iter().filter(|r| !r.pass).count();
    let mut out = worst.clone();
    out.name = name.into();
    out.pass = violations == 0;
    out.note = format!("{} samples, {} violations (worst sample shown)", active.len(), violations);
    out
}

fn require_path_free(problem: &BsdeProblem) -> Result<()> {
    let g = problem.generator();
    if g.lipschitz_y() != 0.0 || g.lipschitz_z() != 0.0 {
        return Err(Error::InvalidParameter("generator depends on (y, zeta); freeze it first".into()));
    }
    Ok(())
}

/// Energy identity at grid time `t_j` for a `(y, ζ)`-free driver.
pub fn check_energy_identity(problem: &BsdeProblem, solution: &Solution, grid_index: usize) -> Result<CheckResult> {
    require_path_free(problem)?;
    let tree = problem.tree();
    if grid_index > tree.steps() {
        return Err(Error::InvalidParameter(format!("grid index {grid_index} beyond {}", tree.steps())));
    }
    let beta = problem.beta();
    let dol = problem.doleans();
    let drive = problem.zero_drive();

    let y_t: f64 = tree.levels()[grid_index]
        .clone()
        .map(|n| tree.node(n).probability * dol.at_node(n) * solution.y.at(n).powi(2))
        .sum();
    let terminal: f64 = tree
        .leaves()
        .map(|n| tree.node(n).probability * dol.at_node(n) * problem.terminal_at(n).powi(2))
        .sum();
    let (mut y_int, mut z_int, mut cross, mut f_sq) = (0.0, 0.0, 0.0, 0.0);
    for (s, slot) in tree.slots().iter().enumerate().filter(|(_, sl)| sl.step >= grid_index) {
        let p = tree.node(slot.parent).probability;
        let e = dol.at_slot(s);
        let y_p = solution.y.at(slot.parent);
        let da = slot.delta_a;
        y_int += p * e / (1.0 + beta * da) * y_p * y_p * da;
        z_int += p * e * jump_second_moment(solution.z.at(s), slot);
        cross += p * e * y_p * drive[s] * da;
        f_sq += p * e * (drive[s] * da).powi(2);
    }
    let lhs = y_t + beta * y_int + z_int;
    let rhs = terminal + 2.0 * cross - f_sq;
    let scale = [y_t, beta * y_int, z_int, terminal, 2.0 * cross.abs(), f_sq]
        .into_iter()
        .fold(0.0, f64::max);
    Ok(CheckResult::identity(&format!("energy_identity_t{grid_index}"), lhs, rhs, scale, IDENTITY_TOLERANCE))
}

/// Energy identity at every grid time.
pub fn check_identity_all_times(problem: &BsdeProblem, solution: &Solution) -> Result<Vec<CheckResult>> {
    (0..=problem.tree().steps())
        .map(|j| check_energy_identity(problem, solution, j))
        .collect()
}

/// `𝓔_t (∫_{(t,T]} |f| dA)² ≤ (1/β + β Σ ΔA²) ∫_{(t,T]} 𝓔 |f|² dA` on a
/// deterministic path. `f[k]` is constant on step `k`, the continuous part
/// accrues linearly inside the step and the jump sits at its right end.
pub fn check_integral_inequality(path: &[PathIncrement], f: &[f64], beta: f64, grid_index: usize) -> Result<CheckResult> {
    if !(beta.is_finite() && beta > 0.0) {
        return Err(Error::InvalidBeta {
            value: beta,
            requirement: "finite and strictly positive",
        });
    }
    if f.len() != path.len() || grid_index > path.len() {
        return Err(Error::InvalidParameter("driver path length or grid index does not match the path".into()));
    }
    let e = doleans_exponential(path, beta)?;
    let (mut total, mut weighted, mut jumps_sq) = (0.0, 0.0, 0.0);
    for k in grid_index..path.len() {
        let inc = path[k];
        total += f[k].abs() * (inc.continuous + inc.jump);
        // ∫ 𝓔 dA^c over the step, 𝓔 growing like exp(β A^c) from e[k].
        let continuous = e[k] * (beta * inc.continuous).exp_m1() / beta;
        weighted += f[k] * f[k] * (continuous + e[k + 1] * inc.jump);
        jumps_sq += inc.jump * inc.jump;
    }
    let lhs = e[grid_index] * total * total;
    let rhs = (1.0 / beta + beta * jumps_sq) * weighted;
    Ok(CheckResult::inequality("integral_inequality", lhs, rhs, INEQUALITY_SLACK))
}

/// `c(β) = 2 + 4(1+β)/β`.
pub fn apriori_constant(beta: f64) -> f64 {
    2.0 + 4.0 * (1.0 + beta) / beta
}

/// `‖Y‖² + ‖Z‖² ≤ c(β) (E[𝓔_T ξ²] + E[(1/β + β Σ ΔA²) Σ 𝓔 f² ΔA])`.
/// `constant` replaces `c(β)`, which serves as a negative control.
pub fn check_apriori_estimate(problem: &BsdeProblem, solution: &Solution, constant: Option<f64>) -> Result<CheckResult> {
    require_path_free(problem)?;
    let beta = problem.beta();
    if beta <= 0.0 {
        return Err(Error::InvalidBeta {
            value: beta,
            requirement: "strictly positive",
        });
    }
    let tree = problem.tree();
    let dol = problem.doleans();
    let drive = problem.zero_drive();
    let lhs = y_norm_sq(&solution.y, tree, &dol) + z_norm_sq(&solution.z, tree, &dol);
    let mut data = 0.0;
    for leaf in tree.leaves() {
        let p = tree.node(leaf).probability;
        let path = tree.path_slots(leaf);
        let jumps_sq: f64 = path.iter().map(|&s| tree.slot(s).delta_a.powi(2)).sum();
        let weighted: f64 = path
            .iter()
            .map(|&s| dol.at_slot(s) * drive[s] * drive[s] * tree.slot(s).delta_a)
            .sum();
        data += p * (dol.at_node(leaf) * problem.terminal_at(leaf).powi(2) + (1.0 / beta + beta * jumps_sq) * weighted);
    }
    let c = constant.unwrap_or_else(|| apriori_constant(beta));
    Ok(CheckResult::inequality("apriori_estimate", lhs, c * data, INEQUALITY_SLACK).with_note(format!("c = {c}")))
}

/// `γ ‖Z‖²_ν ≤ ‖Z‖²_{H²} ≤ ‖Z‖²_ν` when every `ΔA ≤ 1 − γ`; lower and upper rows.
pub fn check_norm_equivalence(z: &PredictableField, tree: &ScenarioTree, beta: f64, gamma: f64) -> Result<[CheckResult; 2]> {
    if !(gamma > 0.0 && gamma <= 1.0) {
        return Err(Error::InvalidParameter(format!("gamma must lie in (0, 1], got {gamma}")));
    }
    let max_jump = tree.max_jump();
    if max_jump > 1.0 - gamma + 1e-15 {
        return Err(Error::GammaViolated {
            delta_a: max_jump,
            bound: 1.0 - gamma,
        });
    }
    let dol = tree.doleans(beta)?;
    let middle = z_norm_sq(z, tree, &dol);
    let outer = z_plain_norm_sq(z, tree, &dol);
    Ok([
        CheckResult::inequality("norm_equivalence_lower", gamma * outer, middle, INEQUALITY_SLACK),
        CheckResult::inequality("norm_equivalence_upper", middle, outer, INEQUALITY_SLACK),
    ])
}

/// One pair of arguments for the Lipschitz checks.
#[derive(Debug, Clone, PartialEq)]
pub struct LipschitzSample {
    pub y: f64,
    pub y2: f64,
    pub zeta: Vec<f64>,
    pub zeta2: Vec<f64>,
}

/// Seminorm written as `Σ φ |δζ − Ŵ|² + 1{ΔA≠0} (1−ΔA)/ΔA |Ŵ|²` with `Ŵ = ΔA δζ̄`.
pub fn expanded_seminorm_sq(dzeta: &[f64], delta_a: f64, phi: &[f64]) -> f64 {
    let hat = delta_a * mark_mean(dzeta, phi);
    let spread: f64 = dzeta.iter().zip(phi).map(|(v, p)| p * (v - hat).powi(2)).sum();
    if delta_a == 0.0 {
        spread
    } else {
        spread + (1.0 - delta_a) / delta_a * hat * hat
    }
}

/// Lipschitz bound, its squared form with `L̂² > L_z²`, and agreement of the
/// two seminorm expressions, each maximized over `samples`.
pub fn check_lipschitz(
    generator: &dyn Generator,
    tree: &ScenarioTree,
    slot: usize,
    samples: &[LipschitzSample],
    lhat_sq: f64,
) -> Result<[CheckResult; 3]> {
    let l_y = generator.lipschitz_y();
    let l_z = generator.lipschitz_z();
    if lhat_sq <= l_z * l_z {
        return Err(Error::InvalidParameter(format!("L-hat^2 = {lhat_sq} must exceed L_z^2 = {}", l_z * l_z)));
    }
    let ctx = SlotContext::of(tree, slot);
    let s = tree.slot(slot);
    let (mut bound, mut squared, mut forms) = (Vec::new(), Vec::new(), Vec::new());
    for sample in samples {
        let dz: Vec<f64> = sample.zeta2.iter().zip(&sample.zeta).map(|(a, b)| a - b).collect();
        let df = generator.eval(&ctx, sample.y2, &sample.zeta2) - generator.eval(&ctx, sample.y, &sample.zeta);
        let dy = sample.y2 - sample.y;
        let semi = lipschitz_seminorm(&dz, s);
        let expanded = expanded_seminorm_sq(&dz, s.delta_a, &s.phi);
        bound.push(CheckResult::inequality("", df.abs(), l_y * dy.abs() + l_z * semi, INEQUALITY_SLACK));
        squared.push(CheckResult::inequality(
            "",
            df * df,
            2.0 * l_y * l_y * dy * dy + 2.0 * lhat_sq * expanded,
            INEQUALITY_SLACK,
        ));
        let sq = semi * semi;
        forms.push(CheckResult::identity("", sq, expanded, sq.abs().max(expanded.abs()).max(1.0), 1e-12));
    }
    Ok([
        aggregate("lipschitz_bound", &bound),
        aggregate("lipschitz_squared_form", &squared),
        aggregate("seminorm_forms_agree", &forms),
    ])
}

/// `Y_child − Y_parent = g(o) − f ΔA` on every slot, with `f` at the solution.
pub fn check_solution_jump_identity(problem: &BsdeProblem, solution: &Solution) -> CheckResult {
    let residual = recursion_residual(problem, solution);
    let scale = solution.y.0.iter().fold(1.0f64, |m, v| m.max(v.abs()));
    CheckResult::identity("jump_identity", residual, 0.0, scale, IDENTITY_TOLERANCE)
}

/// `(𝓔̄)² = 𝓔^β` and `𝓔̲ 𝓔̄ = 1`, worst relative error along the path.
pub fn check_doleans_factorization(path: &[PathIncrement], beta: f64) -> Result<[CheckResult; 2]> {
    let e = doleans_exponential(path, beta)?;
    let f = doleans_sqrt_factorization(path, beta)?;
    let (mut sq, mut prod) = ((0.0, 0.0, 0.0), (0.0, 0.0, 0.0));
    for i in 0..e.len() {
        let a = f.upper[i] * f.upper[i];
        let r = (a - e[i]).abs() / e[i];
        if r >= sq.2 {
            sq = (a, e[i], r);
        }
        let b = f.upper[i] * f.lower[i];
        let r = (b - 1.0).abs();
        if r >= prod.2 {
            prod = (b, 1.0, r);
        }
    }
    Ok([
        CheckResult::identity("doleans_square", sq.0, sq.1, sq.1, 1e-12),
        CheckResult::identity("doleans_product", prod.0, prod.1, 1.0, 1e-12),
    ])
}

/// Minimizes `H` numerically: log grid over `[1e-8, 1e8]`, then golden-section
/// refinement in `log ℓ` around the best grid point.
pub fn numeric_minimizer(profile: &HProfile) -> Option<f64> {
    const POINTS: usize = 4001;
    let (lo, hi) = (1e-8f64.ln(), 1e8f64.ln());
    let at = |i: usize| (lo + (hi - lo) * i as f64 / (POINTS - 1) as f64).exp();
    let value = |log_ell: f64| profile.big_h(log_ell.exp()).unwrap_or(f64::INFINITY);
    let best = (0..POINTS)
        .filter_map(|i| profile.big_h(at(i)).map(|v| (i, v)))
        .min_by(|a, b| a.1.total_cmp(&b.1))?
        .0;
    let mut a = at(best.saturating_sub(1)).ln();
    let mut b = at((best + 1).min(POINTS - 1)).ln();
    let ratio = (5f64.sqrt() - 1.0) / 2.0;
    let mut c = b - ratio * (b - a);
    let mut d = a + ratio * (b - a);
    for _ in 0..200 {
        if value(c) < value(d) {
            b = d;
        } else {
            a = c;
        }
        c = b - ratio * (b - a);
        d = a + ratio * (b - a);
        if (b - a).abs() < 1e-14 {
            break;
        }
    }
    Some((0.5 * (a + b)).exp())
}

/// Closed-form `ℓ*` against numeric minimization of `H`, relative `1e-6`.
pub fn check_minimizer(delta: f64, l_y: f64, delta_a: f64) -> Result<CheckResult> {
    let profile = contraction_profile_h(delta, l_y, delta_a)?;
    if l_y == 0.0 {
        return Ok(CheckResult::skipped("minimizer", "L_y = 0: H has no interior minimum"));
    }
    let closed = profile.minimizer();
    let numeric = numeric_minimizer(&profile).ok_or_else(|| Error::InvalidParameter("H has an empty domain".into()))?;
    Ok(CheckResult::identity("minimizer", numeric, closed, closed, 1e-6))
}

/// Settings of [`run_suite`].
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SuiteOptions {
    /// Randomized samples per inequality check.
    pub samples: usize,
    /// Replaces `c(β)` in the a priori check.
    pub apriori_constant: Option<f64>,
    pub delta: Option<f64>,
}

impl Default for SuiteOptions {
    fn default() -> Self {
        Self {
            samples: 1000,
            apriori_constant: None,
            delta: None,
        }
    }
}

/// Freezes the driver of `problem` at `solution`: `f_s = f(s, Y_{s−}, Z_s)`.
pub fn frozen_problem(problem: &BsdeProblem, solution: &Solution) -> BsdeProblem {
    let drive = problem.drive(&solution.y, &solution.z);
    problem.clone().with_generator(Arc::new(DrivePath(drive)))
}

/// Every check on one problem. The oracle solution freezes the driver; the
/// identity checks then run on the frozen linear problem, the randomized checks
/// on samples drawn from `rng`.
pub fn run_suite(problem: &BsdeProblem, opts: &SuiteOptions, rng: &mut impl Rng) -> Result<Vec<CheckResult>> {
    let tree = problem.tree();
    let beta = problem.beta();
    let oracle = backward_oracle(problem, STEP_TOLERANCE)?;
    let mut out = vec![check_solution_jump_identity(problem, &oracle)];

    let frozen = frozen_problem(problem, &oracle);
    let linear = solve_linear(&frozen);
    out.push(CheckResult::identity(
        "linear_solve_matches_oracle",
        linear.y.max_abs_diff(&oracle.y),
        0.0,
        oracle.y.0.iter().fold(1.0f64, |m, v| m.max(v.abs())),
        1e-10,
    ));
    out.push(aggregate("energy_identity", &check_identity_all_times(&frozen, &linear)?));

    if beta > 0.0 {
        out.push(check_apriori_estimate(&frozen, &linear, opts.apriori_constant)?);
        let mut ineq = Vec::with_capacity(opts.samples);
        let mut fact = Vec::with_capacity(opts.samples);
        let mut prod = Vec::with_capacity(opts.samples);
        for _ in 0..opts.samples {
            let path = random::random_path(rng);
            let f: Vec<f64> = (0..path.len()).map(|_| rng.random_range(-2.0..2.0)).collect();
            let t = rng.random_range(0..=path.len());
            ineq.push(check_integral_inequality(&path, &f, beta, t)?);
            let [a, b] = check_doleans_factorization(&path, beta)?;
            fact.push(a);
            prod.push(b);
        }
        out.push(aggregate("integral_inequality", &ineq));
        out.push(aggregate("doleans_square", &fact));
        out.push(aggregate("doleans_product", &prod));
    } else {
        for name in ["apriori_estimate", "integral_inequality", "doleans_square", "doleans_product"] {
            out.push(CheckResult::skipped(name, "requires beta > 0"));
        }
    }

    let gamma = 1.0 - tree.max_jump();
    if gamma > 0.0 {
        let [lo, hi] = check_norm_equivalence(&linear.z, tree, beta, gamma)?;
        let (mut lows, mut highs) = (vec![lo], vec![hi]);
        for _ in 0..opts.samples {
            let z = random::random_field(rng, tree);
            let [lo, hi] = check_norm_equivalence(&z, tree, beta, gamma)?;
            lows.push(lo);
            highs.push(hi);
        }
        out.push(aggregate("norm_equivalence_lower", &lows));
        out.push(aggregate("norm_equivalence_upper", &highs));
    } else {
        for name in ["norm_equivalence_lower", "norm_equivalence_upper"] {
            out.push(CheckResult::skipped(name, "some jump has size 1, no gamma in (0, 1]"));
        }
    }

    let g = problem.generator();
    let (l_y, l_z) = (g.lipschitz_y(), g.lipschitz_z());
    let eps = check_main_hypothesis(tree, l_y);
    let delta = opts.delta.unwrap_or_else(|| default_delta(eps.max(0.0)));
    let (mut bound, mut squared, mut forms) = (Vec::new(), Vec::new(), Vec::new());
    let slots = tree.slots().len();
    let per_slot = opts.samples.div_ceil(slots.max(1)).max(1);
    for s in 0..slots {
        let slot = tree.slot(s);
        let lhat_sq = if hypothesis_holds(eps) && delta > 0.0 && delta < eps {
            hat_lz_sq(delta, l_y, l_z, slot.delta_a)?
        } else {
            l_z * l_z + 1.0
        };
        let samples: Vec<LipschitzSample> = (0..per_slot)
            .map(|_| LipschitzSample {
                y: rng.random_range(-3.0..3.0),
                y2: rng.random_range(-3.0..3.0),
                zeta: random::random_mark_vector(rng, slot.marks()),
                zeta2: random::random_mark_vector(rng, slot.marks()),
            })
            .collect();
        let [a, b, c] = check_lipschitz(g, tree, s, &samples, lhat_sq)?;
        bound.push(a);
        squared.push(b);
        forms.push(c);
    }
    out.push(aggregate("lipschitz_bound", &bound));
    out.push(aggregate("lipschitz_squared_form", &squared));
    out.push(aggregate("seminorm_forms_agree", &forms));

    if hypothesis_holds(eps) && l_y > 0.0 && delta > 0.0 && delta < eps {
        let mut mins = Vec::new();
        let mut seen: Vec<f64> = Vec::new();
        for slot in tree.slots() {
            if !seen.contains(&slot.delta_a) {
                seen.push(slot.delta_a);
                mins.push(check_minimizer(delta, l_y, slot.delta_a)?);
            }
        }
        out.push(aggregate("minimizer", &mins));
    } else {
        out.push(CheckResult::skipped("minimizer", "needs L_y > 0 and an admissible delta"));
    }
    Ok(out)
}

#[cfg(test)]
mod tests {
    use approx::assert_relative_eq;

    use super::random::*;
    use super::*;
    use crate::measure::{MarkSpace, Outcome, ScenarioModel};
    use crate::solver::GeneratorSpec;

    fn m1(beta: f64, terminal: impl Fn(&[Outcome]) -> f64) -> BsdeProblem {
        let model = ScenarioModel::new(
            MarkSpace::indexed(1).unwrap(),
            vec![0.0, 1.0],
            Arc::new(|_, _| 0.5),
            Arc::new(|_, _| vec![1.0]),
        )
        .unwrap();
        BsdeProblem::new(&model, beta, terminal, Arc::new(GeneratorSpec::Zero)).unwrap()
    }

    fn jump_indicator(h: &[Outcome]) -> f64 {
        h.iter().filter(|o| o.is_jump()).count() as f64
    }

    #[test]
    fn identity_examples() {
        let pr = m1(1.0, jump_indicator);
        let sol = solve_linear(&pr);
        let at_t = check_energy_identity(&pr, &sol, 1).unwrap();
        assert_eq!(at_t.lhs, at_t.rhs);
        let at_0 = check_energy_identity(&pr, &sol, 0).unwrap();
        assert!(at_0.pass, "{at_0:?}");
        // E[𝓔_T ξ²] = 0.5 · 1.5 · 1.
        assert_relative_eq!(at_0.rhs, 0.75, epsilon = 1e-15);

        let zero = m1(1.0, |_| 0.0);
        let r = check_energy_identity(&zero, &solve_linear(&zero), 0).unwrap();
        assert_eq!((r.lhs, r.rhs), (0.0, 0.0));

        let nonlinear = pr.clone().with_generator(Arc::new(GeneratorSpec::AffineY { slope: 1.0, intercept: 0.0 }));
        assert!(check_energy_identity(&nonlinear, &sol, 0).is_err());
    }

    #[test]
    fn integral_inequality_examples() {
        let r = check_integral_inequality(&[PathIncrement::continuous(1.0)], &[0.0], 1.0, 0).unwrap();
        assert_eq!((r.lhs, r.rhs), (0.0, 0.0));
        let r = check_integral_inequality(&[PathIncrement::continuous(1.0)], &[1.0], 1.0, 0).unwrap();
        assert_relative_eq!(r.lhs, 1.0);
        assert_relative_eq!(r.rhs, std::f64::consts::E - 1.0, epsilon = 1e-15);
        assert!(r.pass);
        let c = 3.0;
        let r = check_integral_inequality(&[PathIncrement::jump(1.0)], &[c], 1.0, 0).unwrap();
        assert_relative_eq!(r.lhs, c * c);
        assert_relative_eq!(r.rhs, 2.0 * 2.0 * c * c);
        assert!(check_integral_inequality(&[PathIncrement::jump(1.0)], &[c], 0.0, 0).is_err());
    }

    #[test]
    fn apriori_examples() {
        assert_eq!(apriori_constant(2.0), 8.0);
        let zero = m1(2.0, |_| 0.0);
        let r = check_apriori_estimate(&zero, &solve_linear(&zero), None).unwrap();
        assert!(r.pass && r.lhs == 0.0 && r.rhs == 0.0);
        let pr = m1(2.0, jump_indicator);
        let sol = solve_linear(&pr);
        assert!(check_apriori_estimate(&pr, &sol, None).unwrap().pass);
        assert!(!check_apriori_estimate(&pr, &sol, Some(0.0)).unwrap().pass);
    }

    #[test]
    fn norm_equivalence_examples() {
        let pr = m1(0.0, jump_indicator);
        let z = PredictableField(vec![vec![1.0]]);
        let [lo, hi] = check_norm_equivalence(&z, pr.tree(), 0.0, 0.5).unwrap();
        assert_eq!((lo.lhs, lo.rhs, hi.rhs), (0.25, 0.25, 0.5));
        assert!(lo.pass && hi.pass);
        assert!(check_norm_equivalence(&z, pr.tree(), 0.0, 0.6).is_err());
        let zero = PredictableField(vec![vec![0.0]]);
        let [lo, hi] = check_norm_equivalence(&zero, pr.tree(), 0.0, 0.5).unwrap();
        assert_eq!((lo.lhs, lo.rhs, hi.rhs), (0.0, 0.0, 0.0));
    }

    #[test]
    fn lipschitz_examples() {
        let pr = m1(0.0, jump_indicator);
        let sample = |y: f64, y2: f64, z: f64, z2: f64| LipschitzSample {
            y,
            y2,
            zeta: vec![z],
            zeta2: vec![z2],
        };
        let constant = GeneratorSpec::AffineY { slope: 0.0, intercept: 3.0 };
        let [a, b, c] = check_lipschitz(&constant, pr.tree(), 0, &[sample(0.0, 1.0, 2.0, -1.0)], 0.5).unwrap();
        assert!(a.pass && b.pass && c.pass);
        assert_eq!(a.lhs, 0.0);
        let linear = GeneratorSpec::AffineY { slope: 0.7, intercept: 0.0 };
        let [a, ..] = check_lipschitz(&linear, pr.tree(), 0, &[sample(1.0, 3.0, 0.5, 0.5)], 0.5).unwrap();
        assert_relative_eq!(a.lhs, a.rhs, epsilon = 1e-15);
        assert!(check_lipschitz(&GeneratorSpec::LinearZ { slope_y: 0.0, kappa: 2.0, intercept: 0.0 }, pr.tree(), 0, &[], 4.0).is_err());
    }

    #[test]
    fn jump_identity_example() {
        let pr = m1(0.0, jump_indicator);
        let sol = solve_linear(&pr);
        let t = pr.tree();
        let slot = t.slot(0);
        let jump = slot.jump_branch(0).unwrap().child;
        let none = slot.no_jump_branch().unwrap().child;
        assert_eq!(sol.y.at(jump) - sol.y.at(0), 0.5);
        assert_eq!(sol.y.at(none) - sol.y.at(0), -0.5);
        assert!(check_solution_jump_identity(&pr, &sol).pass);
    }

    #[test]
    fn minimizer_matches_closed_form() {
        let r = check_minimizer(0.0, 1.0, 0.0).unwrap();
        assert!(r.pass, "{r:?}");
        assert!(check_minimizer(0.1, 0.0, 0.5).unwrap().skipped);
    }

    #[test]
    fn suite_passes_on_random_problems() {
        let mut rng = seeded(11);
        let spec = RandomSpec::default();
        for i in 0..6 {
            let pr = random_problem(&mut rng, &spec, regime_for(i)).with_beta(1.5).unwrap();
            let opts = SuiteOptions { samples: 50, ..Default::default() };
            for r in run_suite(&pr, &opts, &mut rng).unwrap() {
                assert!(r.pass, "{r:?}");
            }
        }
    }

    #[test]
    fn suite_at_zero_beta_skips_beta_checks() {
        let pr = m1(0.0, jump_indicator);
        let out = run_suite(&pr, &SuiteOptions { samples: 10, ..Default::default() }, &mut seeded(1)).unwrap();
        assert!(out.iter().all(|r| r.pass));
        assert!(out.iter().any(|r| r.name == "integral_inequality" && r.skipped));
        assert!(out.iter().any(|r| r.name == "energy_identity" && !r.skipped));
    }
}
