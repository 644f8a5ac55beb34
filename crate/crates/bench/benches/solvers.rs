use std::sync::Arc;

use criterion::{criterion_group, criterion_main, BenchmarkId, Criterion};

use jbsde_core::conditions::{check_main_hypothesis, default_delta};
use jbsde_core::scenarios::{predictable_random_jumps, TwoStateRule};
use jbsde_core::{backward_oracle, beta_threshold, build_tree, picard_solve, BsdeProblem, GeneratorSpec, PicardOptions, TerminalSpec};

fn problem(steps: usize) -> BsdeProblem {
    let rule = TwoStateRule {
        initial: 0.3,
        after_jump: 0.6,
        after_no_jump: 0.3,
        after_two_jumps: Some(1.0),
    };
    let model = predictable_random_jumps(steps, 2, rule, Some(vec![0.4, 0.6])).unwrap();
    let generator = GeneratorSpec::Saturating {
        l_y: 0.4,
        l_z: 0.8,
        intercept: 0.1,
        intercept_per_jump: 0.0,
    };
    let terminal = TerminalSpec::MarkSum { weights: vec![1.0, -0.5] };
    let pr = BsdeProblem::new(&model, 0.0, |h| terminal.evaluate(h), Arc::new(generator)).unwrap();
    let delta = default_delta(check_main_hypothesis(pr.tree(), 0.4));
    let beta = beta_threshold(pr.tree(), 0.4, 0.8, delta).unwrap();
    pr.with_beta(beta).unwrap()
}

fn solvers(c: &mut Criterion) {
    let mut group = c.benchmark_group("solvers");
    for steps in [3, 5, 7] {
        let pr = problem(steps);
        group.bench_with_input(BenchmarkId::new("backward_oracle", steps), &pr, |b, pr| {
            b.iter(|| backward_oracle(pr, 1e-13).unwrap())
        });
        group.bench_with_input(BenchmarkId::new("picard_solve", steps), &pr, |b, pr| {
            b.iter(|| picard_solve(pr, &PicardOptions::default()).unwrap())
        });
    }
    group.finish();
}

fn trees(c: &mut Criterion) {
    let rule = TwoStateRule::constant(0.5);
    for steps in [4, 8] {
        let model = predictable_random_jumps(steps, 3, rule, None).unwrap();
        c.bench_function(&format!("build_tree/{steps}"), |b| b.iter(|| build_tree(&model).unwrap()));
    }
}

criterion_group!(benches, solvers, trees);
criterion_main!(benches);
