use criterion::{black_box, criterion_group, criterion_main, BenchmarkId, Criterion};
use noiseamp::variance::total_variance;
use noiseamp::{
    consensus_variance, ensemble_variance, na_certificate, scaling_sweep, simulate, variance_amplification, Algo,
    Objective, ParamsSource, TorusSpec,
};
use noiseamp_bench::{rate_optimal, spread_spectrum};

fn variance(c: &mut Criterion) {
    let mut group = c.benchmark_group("variance");
    for &n in &[10usize, 1000, 100_000] {
        let s = spread_spectrum(1e4, n);
        for algo in Algo::ALL {
            let cfg = rate_optimal(algo, &s);
            group.bench_with_input(BenchmarkId::new(format!("total/{algo}"), n), &n, |b, _| {
                b.iter(|| total_variance(black_box(&cfg), black_box(&s)).unwrap())
            });
        }
    }
    let s = spread_spectrum(100.0, 50);
    let cfg = rate_optimal(Algo::Na, &s);
    group.bench_function("full_report/na/50", |b| {
        b.iter(|| variance_amplification(&cfg, &s).unwrap())
    });
    group.finish();
}

fn consensus(c: &mut Criterion) {
    let mut group = c.benchmark_group("consensus");
    group.sample_size(10);
    for (d, n0) in [(1u32, 4096u64), (2, 256), (3, 64), (4, 24)] {
        let t = TorusSpec::new(d, n0).unwrap();
        group.bench_function(format!("hb/d{d}/n0={n0}"), |b| {
            b.iter(|| consensus_variance(Algo::Hb, &t, ParamsSource::RateOptimal).unwrap())
        });
    }
    group.bench_function("sweep/na/d3", |b| {
        b.iter(|| scaling_sweep(Algo::Na, 3, &[16, 24, 32, 48, 64]).unwrap())
    });
    group.finish();
}

fn certificates(c: &mut Criterion) {
    c.bench_function("certificate/na/kappa=1e4", |b| {
        b.iter(|| na_certificate(black_box(1e4), 1e4, 10).unwrap())
    });
}

fn monte_carlo(c: &mut Criterion) {
    let mut group = c.benchmark_group("monte_carlo");
    group.sample_size(10);
    let s = spread_spectrum(9.0, 2);
    let obj = Objective::quadratic(s.clone());
    for algo in Algo::ALL {
        let cfg = rate_optimal(algo, &s);
        group.bench_function(format!("simulate/{algo}/1e5"), |b| {
            b.iter(|| simulate(&cfg, &obj, 100_000, 1).unwrap())
        });
    }
    let s = spread_spectrum(1e3, 50);
    let obj = Objective::quadratic(s.clone());
    let cfg = rate_optimal(Algo::Na, &s);
    group.bench_function("ensemble/na/n50/R20/T2000", |b| {
        b.iter(|| ensemble_variance(&cfg, &obj, 2000, 20, 7).unwrap())
    });
    group.finish();
}

criterion_group!(benches, variance, consensus, certificates, monte_carlo);
criterion_main!(benches);
