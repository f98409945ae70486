use criterion::{criterion_group, criterion_main, BenchmarkId, Criterion};
use opsplit_bench::dr_problem;
use opsplit_core::operators::Vector;
use opsplit_core::splitting::{build_dr, iterate, IterOptions};
use opsplit_core::verifier::check_membership;
use std::hint::black_box;

fn dr(c: &mut Criterion) {
    let mut g = c.benchmark_group("dr_solve");
    g.sample_size(20);
    for dim in [4, 16, 64] {
        let (plan, a, b) = dr_problem(dim, 3);
        let t = build_dr(&plan, &a, &b).unwrap().t;
        let x0 = Vector::from_element(dim, 1.0);
        g.bench_with_input(BenchmarkId::from_parameter(dim), &dim, |bch, _| {
            bch.iter(|| iterate(&t, black_box(&x0), &IterOptions::default(), None, None).unwrap().records.len())
        });
    }
    g.finish();
}

fn membership(c: &mut Criterion) {
    let (plan, a, b) = dr_problem(8, 4);
    let t = build_dr(&plan, &a, &b).unwrap().t;
    let cert = plan.certificate().unwrap();
    let mut g = c.benchmark_group("membership");
    g.sample_size(10);
    g.bench_function("dr_dim8_10k_pairs", |bch| bch.iter(|| check_membership(&t, cert, 10_000, 1e-9).pass));
    g.finish();
}

criterion_group!(benches, dr, membership);
criterion_main!(benches);
