//! Batch solves on the rayon pool against the sequential loop.
//!
//! Without the `parallel` feature both variants run sequentially.

use std::hint::black_box;

use criterion::{criterion_group, criterion_main, BenchmarkId, Criterion};
use qsocp::batch::{solve_family, solve_family_sequential, solve_many, solve_many_sequential};
use qsocp::problems::{gen_lasso_member, gen_portfolio_member};
use qsocp::{analyze_family, ProblemFamily, Settings};

fn family_batches(c: &mut Criterion) {
    let settings = Settings::default();
    let mut group = c.benchmark_group("portfolio_family");
    group.sample_size(20);
    for count in [16usize, 64] {
        let members: Vec<_> = (0..count as u64).map(|v| gen_portfolio_member(10, 10, 1.0, 1, v).unwrap()).collect();
        let plan = analyze_family(&ProblemFamily::from_problem(&members[0])).unwrap();
        group.bench_with_input(BenchmarkId::new("parallel", count), &members, |b, m| {
            b.iter(|| solve_family(&plan, black_box(m), &settings).unwrap())
        });
        group.bench_with_input(BenchmarkId::new("sequential", count), &members, |b, m| {
            b.iter(|| solve_family_sequential(&plan, black_box(m), &settings).unwrap())
        });
    }
    group.finish();
}

fn independent_batches(c: &mut Criterion) {
    let settings = Settings::default();
    let mut group = c.benchmark_group("lasso_independent");
    group.sample_size(20);
    let problems: Vec<_> =
        (0..32u64).map(|s| gen_lasso_member(20, 2, s, s).unwrap().to_problem().unwrap()).collect();
    group.bench_function("parallel", |b| b.iter(|| solve_many(black_box(&problems), &settings)));
    group.bench_function("sequential", |b| b.iter(|| solve_many_sequential(black_box(&problems), &settings)));
    group.finish();
}

criterion_group!(benches, family_batches, independent_batches);
criterion_main!(benches);
