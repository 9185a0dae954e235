use std::hint::black_box;

use criterion::{criterion_group, criterion_main, BenchmarkId, Criterion};

use ncv::models::{sim1_params, ModelParams};
use ncv::ncv::{ncv_select, repeat_ncv, Candidate, ModelKind, NcvConfig};
use ncv::seed::rng;
use ncv::Execution;

fn modes() -> Vec<(&'static str, Execution)> {
    let mut m = vec![("sequential", Execution::Sequential)];
    if cfg!(feature = "parallel") {
        m.push(("parallel", Execution::Parallel));
    }
    m
}

fn select(c: &mut Criterion) {
    let mut group = c.benchmark_group("ncv_select");
    group.sample_size(10);
    let candidates = Candidate::grid(&[ModelKind::Sbm, ModelKind::Dcbm], 4);
    for n in [300, 600] {
        let a = ModelParams::from(sim1_params(n, 3, n / 3, 0.2).unwrap())
            .sample(&mut rng(1))
            .unwrap();
        for (name, exec) in modes() {
            let cfg = NcvConfig::default().with_execution(exec);
            group.bench_with_input(BenchmarkId::new(name, n), &a, |b, a| {
                b.iter(|| ncv_select(black_box(a), &candidates, &cfg, 7).unwrap())
            });
        }
    }
    group.finish();
}

fn repeated(c: &mut Criterion) {
    let mut group = c.benchmark_group("repeat_ncv");
    group.sample_size(10);
    let candidates = Candidate::grid(&[ModelKind::Sbm], 4);
    let a = ModelParams::from(sim1_params(300, 2, 150, 0.1).unwrap())
        .sample(&mut rng(2))
        .unwrap();
    for (name, exec) in modes() {
        let cfg = NcvConfig::default().with_execution(exec);
        group.bench_function(name, |b| b.iter(|| repeat_ncv(black_box(&a), &candidates, &cfg, 8, 3).unwrap()));
    }
    group.finish();
}

criterion_group!(benches, select, repeated);
criterion_main!(benches);
