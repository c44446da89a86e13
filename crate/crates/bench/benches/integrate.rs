use criterion::{black_box, criterion_group, criterion_main, BenchmarkId, Criterion};
use maxcon_bench::inv_sizes;
use maxcon_core::hypothesis::sigma_t;
use maxcon_core::mvdist::mvt_cdf;
use maxcon_core::power::critical_u;
use maxcon_core::{default_pg_contrasts, QmcConfig};

fn bench_mvt_cdf(c: &mut Criterion) {
    let contrasts = default_pg_contrasts();
    let one = sigma_t(&contrasts, &inv_sizes(0.25)).unwrap();
    let two = sigma_t(&contrasts.augmented(), &inv_sizes(0.25)).unwrap();
    let mut group = c.benchmark_group("mvt_cdf");
    for tol in [1e-2, 1e-3, 1e-4] {
        let cfg = QmcConfig::with_tol(tol);
        group.bench_with_input(BenchmarkId::new("one_sided", tol), &cfg, |b, cfg| {
            b.iter(|| mvt_cdf(black_box(&[1.9; 3]), &one, 97.0, &[0.0; 3], cfg).unwrap())
        });
        group.bench_with_input(BenchmarkId::new("two_sided", tol), &cfg, |b, cfg| {
            b.iter(|| mvt_cdf(black_box(&[2.2; 6]), &two, 97.0, &[0.0; 6], cfg).unwrap())
        });
    }
    group.finish();
}

fn bench_critical_u(c: &mut Criterion) {
    let sigma = sigma_t(&default_pg_contrasts(), &inv_sizes(0.25)).unwrap();
    let cfg = QmcConfig::with_tol(1e-4);
    c.bench_function("critical_u", |b| b.iter(|| critical_u(black_box(0.05), &sigma, 97.0, &cfg).unwrap()));
}

criterion_group!(
    name = integrate;
    config = Criterion::default().sample_size(20);
    targets = bench_mvt_cdf, bench_critical_u
);
criterion_main!(integrate);
