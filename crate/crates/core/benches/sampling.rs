use criterion::{criterion_group, criterion_main, BenchmarkId, Criterion};

use jetcalc_core::audit::{fixture, verify_paper};
use jetcalc_core::expr::is_zero;
use jetcalc_core::par::Execution;
use jetcalc_core::symmetry::{apply, mu_prolong};
use jetcalc_core::Sampler;

fn policies() -> Vec<(&'static str, Execution)> {
    vec![
        ("sequential", Execution::Sequential),
        #[cfg(feature = "parallel")]
        ("parallel", Execution::Parallel),
    ]
}

fn sampling(c: &mut Criterion) {
    let f = fixture("sec4_case1.jsy").expect("bundled fixture");
    let ctx = &f.ctx;
    let y = mu_prolong(ctx, f.field("X").unwrap(), f.one_form("mu").unwrap(), 1).unwrap();
    let residual = apply(ctx, &y, f.expr("xi1").unwrap()).unwrap();

    let mut group = c.benchmark_group("is_zero");
    group.sample_size(20);
    for (name, exec) in policies() {
        let s = Sampler { exec, ..Sampler::default() };
        group.bench_with_input(BenchmarkId::from_parameter(name), &s, |b, s| {
            b.iter(|| is_zero(ctx, &residual, s))
        });
    }
    group.finish();

    let mut group = c.benchmark_group("verify_paper");
    group.sample_size(10);
    for (name, exec) in policies() {
        let s = Sampler { exec, ..Sampler::default() };
        group.bench_with_input(BenchmarkId::from_parameter(name), &s, |b, s| b.iter(|| verify_paper(s)));
    }
    group.finish();
}

criterion_group!(benches, sampling);
criterion_main!(benches);
