use criterion::{criterion_group, criterion_main, BenchmarkId, Criterion};
use maxcon_bench::scenario_dataset;
use maxcon_core::{
    default_pg_contrasts, kruskal_wallis_test, max_contrast_test, modified_max_contrast_test,
    permuted_modified_max_contrast_test, Pattern, PermutationConfig, QmcConfig, Tail,
};

fn bench_tests(c: &mut Criterion) {
    let contrasts = default_pg_contrasts();
    let qmc = QmcConfig::with_tol(1e-2);
    let perm = PermutationConfig { eps: 1e-2, ..PermutationConfig::default() };
    let data = [
        ("null", scenario_dataset(None, 0.0, 0.33, 1)),
        ("dominant", scenario_dataset(Some(Pattern::Dominant), 1.0, 0.5, 1)),
    ];
    let mut group = c.benchmark_group("tests");
    for (label, ds) in &data {
        group.bench_with_input(BenchmarkId::new("mcm", label), ds, |b, ds| {
            b.iter(|| max_contrast_test(ds, &contrasts, Tail::Two, &qmc).unwrap())
        });
        group.bench_with_input(BenchmarkId::new("mmcm", label), ds, |b, ds| {
            b.iter(|| modified_max_contrast_test(ds, &contrasts, Tail::Two, &qmc).unwrap())
        });
        group.bench_with_input(BenchmarkId::new("pmmcm", label), ds, |b, ds| {
            b.iter(|| permuted_modified_max_contrast_test(ds, &contrasts, Tail::Two, &perm).unwrap())
        });
        group.bench_with_input(BenchmarkId::new("kw", label), ds, |b, ds| {
            b.iter(|| kruskal_wallis_test(ds).unwrap())
        });
    }
    group.finish();
}

criterion_group!(
    name = tests;
    config = Criterion::default().sample_size(10);
    targets = bench_tests
);
criterion_main!(tests);
