use std::hint::black_box;

use affinity_core::propagate::{power_series_closed_form, power_series_truncated};
use affinity_core::normalize::choose_alpha;
use affinity_core::rng::Lcg64;
use affinity_core::verify::{self, Property, VerifyOptions};
use affinity_core::AffinityMatrix;
use criterion::{criterion_group, criterion_main, BenchmarkId, Criterion};

fn matmul(c: &mut Criterion) {
    let mut group = c.benchmark_group("matmul");
    for n in [32usize, 128, 256] {
        let mut rng = Lcg64::new(n as u64);
        let a = rng.matrix(n, n, 0.0, 1.0);
        let b = rng.matrix(n, n, 0.0, 1.0);
        group.bench_with_input(BenchmarkId::new("sequential", n), &n, |bench, _| {
            bench.iter(|| black_box(a.matmul_seq(&b).unwrap()))
        });
        group.bench_with_input(BenchmarkId::new("default", n), &n, |bench, _| {
            bench.iter(|| black_box(a.matmul(&b).unwrap()))
        });
    }
    group.finish();
}

fn path_sums(c: &mut Criterion) {
    let mut group = c.benchmark_group("path_sum");
    for n in [30usize, 100] {
        let a = AffinityMatrix::new(Lcg64::new(7).matrix(n, n, 0.0, 1.0)).unwrap();
        let scaling = choose_alpha(&a, 0.5).unwrap();
        group.bench_with_input(BenchmarkId::new("closed_form", n), &n, |bench, _| {
            bench.iter(|| black_box(power_series_closed_form(&a, &scaling).unwrap()))
        });
        group.bench_with_input(BenchmarkId::new("truncated_60", n), &n, |bench, _| {
            bench.iter(|| black_box(power_series_truncated(&a, scaling.alpha(), 60).unwrap()))
        });
    }
    group.finish();
}

fn verification(c: &mut Criterion) {
    let opts = VerifyOptions::default();
    let mut group = c.benchmark_group("verify");
    group.sample_size(10);
    group.bench_function("closed_form_vs_truncated_x20", |bench| {
        bench.iter(|| black_box(verify::check(Property::ClosedFormVsTruncated, &opts).unwrap()))
    });
    group.bench_function("closed_form_vs_truncated_x20_sequential", |bench| {
        bench.iter(|| {
            let worst = (0..opts.instances)
                .map(|i| {
                    let mut rng = Lcg64::stream(opts.seed, i as u64);
                    verify::closed_form_vs_truncated(&mut rng, opts.alpha_rho).unwrap()
                })
                .fold(0.0, f64::max);
            black_box(worst)
        })
    });
    group.finish();
}

criterion_group!(benches, matmul, path_sums, verification);
criterion_main!(benches);
