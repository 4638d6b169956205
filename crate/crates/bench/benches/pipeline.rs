use criterion::{criterion_group, criterion_main, BatchSize, Criterion};

use svmtune::kernel::{rbf, KernelCache, KernelParams};
use svmtune::solvers::{self, SolverKind, TrainConfig};
use svmtune::surrogate::HyperPoint;
use svmtune_bench::checkerboard;

fn bench_kernel(c: &mut Criterion) {
    let ds = checkerboard(1000);
    let params = KernelParams::new(0.5).unwrap();
    c.bench_function("rbf_single", |b| {
        b.iter(|| rbf(&ds.examples[0], &ds.examples[1], params))
    });
    c.bench_function("kernel_row_n1000", |b| {
        b.iter_batched(
            || KernelCache::new(64 << 20),
            |mut cache| cache.row(&ds, 17, params).iter().sum::<f64>(),
            BatchSize::SmallInput,
        )
    });
}

fn bench_solvers(c: &mut Criterion) {
    let ds = checkerboard(400);
    for kind in SolverKind::ALL {
        let cfg = TrainConfig::new(1.0, 1.0).unwrap();
        c.bench_function(&format!("train_{}_n400", kind.name()), |b| {
            b.iter(|| solvers::train(kind, &ds, &cfg).unwrap())
        });
    }
}

fn bench_surrogate(c: &mut Criterion) {
    let records: Vec<(HyperPoint, f64)> = svmtune::tuner::initial_design(40, 7)
        .into_iter()
        .map(|p| {
            let y = ((p.log2_c - 3.0).powi(2) + (p.log2_gamma + 5.0).powi(2)) / 500.0;
            (p, y)
        })
        .collect();
    c.bench_function("surrogate_fit_n40", |b| {
        b.iter(|| svmtune::surrogate::fit(&records).unwrap())
    });
    let s = svmtune::surrogate::fit(&records).unwrap();
    let q = HyperPoint::new(1.0, -1.0).unwrap();
    c.bench_function("surrogate_posterior", |b| b.iter(|| s.posterior(q)));
}

criterion_group!(benches, bench_kernel, bench_solvers, bench_surrogate);
criterion_main!(benches);
