use criterion::{criterion_group, criterion_main, BatchSize, Criterion};
use std::hint::black_box;

use mdhopf::simulator::{plan_step, InitialCondition, SimState, Stepper};
use mdhopf::validation::case_one_curves;
use mdhopf::{find_double_hopf, normal_form, sectors, stability_verdict, Grid, HSolver, Tolerances};
use mdhopf_bench::first_example;

fn analysis(c: &mut Criterion) {
    let a = first_example();
    let tol = Tolerances::default();
    let (c1, c2, bx) = case_one_curves();
    c.bench_function("find_double_hopf", |b| {
        b.iter(|| find_double_hopf(c1, c2, bx, black_box(&a.params), &a.eq, &tol).unwrap())
    });
    for (name, solver) in [("normal_form/closed_form", HSolver::ClosedForm), ("normal_form/generic", HSolver::Generic)]
    {
        c.bench_function(name, |b| {
            b.iter(|| normal_form(black_box(&a.dhp), &a.params, &a.eq, &a.taylor, solver, &tol).unwrap())
        });
    }
    let at = a.params.with_point(6.96, 12.5);
    c.bench_function("stability_verdict", |b| b.iter(|| stability_verdict(black_box(&at), &a.eq, None)));
    c.bench_function("sectors", |b| b.iter(|| sectors(black_box(&a.amp), &a.dhp, &tol).unwrap()));
}

fn simulator(c: &mut Criterion) {
    let a = first_example();
    let params = a.params.with_point(6.96, 12.5);
    let mut group = c.benchmark_group("rk4_steps");
    for m in [64usize, 256] {
        let grid = Grid::new(m, params.ell).unwrap();
        let plan = plan_step(&grid, &params, None).unwrap();
        let ic = InitialCondition::Cosine { amp_u: 0.005, amp_v: -0.005, k: 1.0 };
        let (u, v) = ic.fields(&grid, &a.eq);
        group.bench_function(format!("m{m}x100"), |b| {
            b.iter_batched(
                || (SimState::new(u.clone(), v.clone(), &grid, &plan), Stepper::new(grid, plan)),
                |(mut state, mut stepper)| {
                    for _ in 0..100 {
                        stepper.step(&mut state, &params).unwrap();
                    }
                    state
                },
                BatchSize::LargeInput,
            )
        });
    }
    group.finish();
}

criterion_group!(benches, analysis, simulator);
criterion_main!(benches);
