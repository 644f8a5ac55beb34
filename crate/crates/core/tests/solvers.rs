use std::sync::Arc;

use jbsde_core::conditions::{beta_threshold, default_delta};
use jbsde_core::norms::mixed_norm_sq;
use jbsde_core::solver::{picard_solve_from, solve_linear, solve_with_drive, STEP_TOLERANCE};
use jbsde_core::verification::random::*;
use jbsde_core::*;

fn admissible(seed: u64, count: usize) -> Vec<BsdeProblem> {
    let mut rng = seeded(seed);
    let spec = RandomSpec::default();
    (0..count)
        .map(|i| {
            let pr = random_problem(&mut rng, &spec, regime_for(i));
            let (l_y, l_z) = lipschitz_of(&pr);
            let delta = default_delta(check_main_hypothesis(pr.tree(), l_y));
            let beta = beta_threshold(pr.tree(), l_y, l_z, delta).unwrap();
            pr.with_beta(beta).unwrap()
        })
        .collect()
}

#[test]
fn picard_agrees_with_oracle() {
    for pr in admissible(101, 40) {
        let (sol, report) = picard_solve(&pr, &PicardOptions::default()).unwrap();
        let oracle = backward_oracle(&pr, 1e-15).unwrap();
        assert!((sol.y0() - oracle.y0()).abs() <= 1e-8);
        assert!(sol.y.max_abs_diff(&oracle.y) <= 1e-8);
        assert!(report.residual <= 1e-8);
        let dol = pr.doleans();
        let ones = vec![1.0; pr.tree().slots().len()];
        let d = mixed_norm_sq(&(&sol.y - &oracle.y), &(&sol.z - &oracle.z), pr.tree(), &dol, &ones);
        assert!(d.sqrt() <= 1e-8, "{d}");
    }
}

#[test]
fn picard_limit_does_not_depend_on_start() {
    let mut rng = seeded(5);
    for pr in admissible(202, 15) {
        let start = Solution {
            y: random_process(&mut rng, pr.tree()),
            z: random_field(&mut rng, pr.tree()),
        };
        let (a, _) = picard_solve(&pr, &PicardOptions::default()).unwrap();
        let (b, _) = picard_solve_from(&pr, &PicardOptions::default(), start).unwrap();
        assert!(a.y.max_abs_diff(&b.y) <= 1e-9);
    }
}

#[test]
fn linear_solve_is_linear_in_data() {
    let mut rng = seeded(9);
    let spec = RandomSpec::default();
    for i in 0..20 {
        let pr = random_linear_problem(&mut rng, &spec, regime_for(i), 1.0);
        let tree = pr.tree();
        let xi2 = random_terminal(&mut rng, tree);
        let f1 = pr.zero_drive();
        let f2: Vec<f64> = f1.iter().map(|v| 0.5 - v).collect();
        let (a, b) = (1.7, -0.4);
        let xi: Vec<f64> = pr.terminal().iter().zip(&xi2).map(|(x, y)| a * x + b * y).collect();
        let f: Vec<f64> = f1.iter().zip(&f2).map(|(x, y)| a * x + b * y).collect();
        let combined = solve_with_drive(tree, &xi, &f);
        let s1 = solve_with_drive(tree, pr.terminal(), &f1);
        let s2 = solve_with_drive(tree, &xi2, &f2);
        let expect = &s1.y.scale(a) + &s2.y.scale(b);
        assert!(combined.y.max_abs_diff(&expect) <= 1e-12);
    }
}

#[test]
fn martingale_part_has_zero_conditional_increments() {
    for (i, pr) in admissible(303, 10).into_iter().enumerate() {
        let sol = backward_oracle(&pr, STEP_TOLERANCE).unwrap();
        let drive = pr.drive(&sol.y, &sol.z);
        let m = sol.martingale(pr.tree(), &drive);
        for slot in pr.tree().slots() {
            let mean: f64 = slot.branches.iter().map(|b| b.probability * m.at(b.child)).sum();
            assert!((mean - m.at(slot.parent)).abs() <= 1e-10, "problem {i}");
        }
    }
}

#[test]
fn driver_free_problem_matches_linear_solve() {
    let mut rng = seeded(17);
    let spec = RandomSpec::default();
    for i in 0..10 {
        let pr = random_linear_problem(&mut rng, &spec, regime_for(i), 2.0);
        let lin = solve_linear(&pr);
        let oracle = backward_oracle(&pr, STEP_TOLERANCE).unwrap();
        assert!(lin.y.max_abs_diff(&oracle.y) <= 1e-12);
        let (pic, report) = picard_solve(&pr, &PicardOptions::default()).unwrap();
        assert_eq!(pic, lin);
        assert!(report.iterations <= 2);
    }
}

#[test]
fn counterexample_iterates_blow_up() {
    let (model, gen) = scenarios::counterexample_model(0.5, 0, 1).unwrap();
    let pr = BsdeProblem::new(&model, 0.0, |h| 1e5 * h.iter().filter(|o| o.is_jump()).count() as f64, Arc::new(gen)).unwrap();
    assert!(matches!(backward_oracle(&pr, STEP_TOLERANCE), Err(Error::StepSingular { .. })));
    let opts = PicardOptions {
        enforce_conditions: false,
        max_iter: 50,
        ..Default::default()
    };
    let (sol, report) = picard_iterate(&pr, &opts, Solution::zeros(pr.tree())).unwrap();
    assert!(!report.converged);
    // Y_n at the root is n times the conditional mean 5e4.
    assert!((sol.y0() - 50.0 * 5e4).abs() < 1e-6);
    assert!(report.ratios[1..].iter().all(|&r| (r - 1.0).abs() <= 1e-12));
}

#[test]
fn refinement_of_intensity_grid_settles() {
    let gen = GeneratorSpec::Saturating {
        l_y: 0.3,
        l_z: 0.5,
        intercept: 0.2,
        intercept_per_jump: 0.0,
    };
    let mut y0 = Vec::new();
    for steps in [2, 4, 8, 16] {
        let model = scenarios::discretized_intensity(1.0, steps, 1.0, vec![1.0]).unwrap();
        let pr = BsdeProblem::new(&model, 0.0, |h| h.iter().filter(|o| o.is_jump()).count() as f64, Arc::new(gen.clone())).unwrap();
        y0.push(backward_oracle(&pr, STEP_TOLERANCE).unwrap().y0());
    }
    let gaps: Vec<f64> = y0.windows(2).map(|w| (w[1] - w[0]).abs()).collect();
    assert!(gaps.windows(2).all(|g| g[1] < g[0]), "{y0:?}");
}
