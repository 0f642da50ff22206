//! Solver throughput across instance sizes.
//!
//! Run with: cargo bench -p otkit-bench
//!
//! Benchmark groups:
//!   - sinkhorn/*, greenkhorn/*   fixed iteration budgets, so time tracks per-iteration cost
//!   - exact/*, auction/*         min-cost flow and assignment auction
//!   - primal_dual/*              APDGCD and extragradient at a fixed accuracy target
//!   - warping/*                  OT warping against the naive DTW baseline
//!   - barycenter/*               entropic fixed-support barycenter

use std::time::Duration;

use criterion::{black_box, criterion_group, criterion_main, BenchmarkId, Criterion, Throughput};
use otkit_bench::{dtw_distance, random_walk, uniform_instance};
use otkit_core::entropic::{greenkhorn, sinkhorn, EntropicOptions, LogDomain};
use otkit_core::exact::{auction_solve, solve_exact};
use otkit_core::extensions::{barycenter_entropic, BarycenterOptions, BarycenterProblem};
use otkit_core::otw::{otw_distance, OtwConfig};
use otkit_core::primal_dual::{apdgcd, extragradient_ot, ApdOptions, ExtragradOptions};
use otkit_core::DiscreteMeasure;

const SEED: u64 = 42;

fn fixed_iterations(iterations: usize) -> EntropicOptions {
    // an unreachable tolerance, so every run does exactly `iterations` sweeps
    EntropicOptions::new(0.1).tol(f64::MIN_POSITIVE).max_iter(iterations).log_domain(LogDomain::Never)
}

fn bench_sinkhorn(c: &mut Criterion) {
    let mut group = c.benchmark_group("sinkhorn");
    let opts = fixed_iterations(50);
    for n in [64, 128, 256, 512] {
        let p = uniform_instance(SEED, n);
        group.throughput(Throughput::Elements((n * n) as u64));
        group.bench_with_input(BenchmarkId::from_parameter(n), &p, |b, p| {
            b.iter(|| sinkhorn(p.a.weights(), p.b.weights(), &p.cost, black_box(&opts)).unwrap())
        });
    }
    group.finish();
}

fn bench_greenkhorn(c: &mut Criterion) {
    let mut group = c.benchmark_group("greenkhorn");
    for n in [64, 128, 256] {
        let p = uniform_instance(SEED, n);
        // one greedy update per iteration, so 2n of them match one Sinkhorn sweep
        let opts = fixed_iterations(2 * n);
        group.bench_with_input(BenchmarkId::from_parameter(n), &p, |b, p| {
            b.iter(|| greenkhorn(p.a.weights(), p.b.weights(), &p.cost, black_box(&opts)).unwrap())
        });
    }
    group.finish();
}

fn bench_exact(c: &mut Criterion) {
    let mut group = c.benchmark_group("exact");
    for n in [16, 32, 64, 128] {
        let p = uniform_instance(SEED, n);
        group.bench_with_input(BenchmarkId::from_parameter(n), &p, |b, p| {
            b.iter(|| solve_exact(p.a.weights(), p.b.weights(), black_box(&p.cost)).unwrap())
        });
    }
    group.finish();
}

fn bench_auction(c: &mut Criterion) {
    let mut group = c.benchmark_group("auction");
    for n in [16, 32, 64, 128] {
        let cost = uniform_instance(SEED, n).cost;
        let eps = 0.01 * cost.max_abs() / n as f64;
        group.bench_with_input(BenchmarkId::from_parameter(n), &cost, |b, cost| {
            b.iter(|| auction_solve(black_box(cost), eps).unwrap())
        });
    }
    group.finish();
}

fn bench_primal_dual(c: &mut Criterion) {
    let mut group = c.benchmark_group("primal_dual");
    group.sample_size(10);
    for n in [8, 16] {
        let p = uniform_instance(SEED, n);
        let eps = 0.05 * p.cost.max_abs();
        group.bench_with_input(BenchmarkId::new("apdgcd", n), &p, |b, p| {
            b.iter(|| apdgcd(p.a.weights(), p.b.weights(), &p.cost, &ApdOptions::new(eps)).unwrap())
        });
        group.bench_with_input(BenchmarkId::new("extragradient", n), &p, |b, p| {
            b.iter(|| extragradient_ot(p.a.weights(), p.b.weights(), &p.cost, &ExtragradOptions::new(eps)).unwrap())
        });
    }
    group.finish();
}

fn bench_warping(c: &mut Criterion) {
    let mut group = c.benchmark_group("warping");
    let exact = OtwConfig { temporal_weight: 0.5, ..OtwConfig::default() };
    let entropic = OtwConfig { eta: 0.1, ..exact };
    for len in [32, 64, 128] {
        let (x, y) = (random_walk(1, len), random_walk(2, len));
        group.bench_with_input(BenchmarkId::new("otw_exact", len), &len, |b, _| {
            b.iter(|| otw_distance(black_box(&x), black_box(&y), &exact).unwrap())
        });
        group.bench_with_input(BenchmarkId::new("otw_entropic", len), &len, |b, _| {
            b.iter(|| otw_distance(black_box(&x), black_box(&y), &entropic).unwrap())
        });
        group.bench_with_input(BenchmarkId::new("dtw", len), &len, |b, _| {
            b.iter(|| dtw_distance(black_box(x.values()), black_box(y.values()), 1).unwrap())
        });
    }
    group.finish();
}

fn bench_barycenter(c: &mut Criterion) {
    let mut group = c.benchmark_group("barycenter");
    for m in [32, 64] {
        let inputs: Vec<DiscreteMeasure> = (0..3).map(|k| uniform_instance(SEED + k, m).a).collect();
        let cost = otkit_core::CostMatrix::from_fn(m, m, |i, j| ((i as f64 - j as f64) / m as f64).powi(2)).unwrap();
        let problem = BarycenterProblem::new(inputs, vec![1.0 / 3.0; 3], vec![cost; 3]).unwrap();
        let opts = BarycenterOptions::new(0.01).tol(1e-6);
        group.bench_with_input(BenchmarkId::from_parameter(m), &problem, |b, problem| {
            b.iter(|| barycenter_entropic(black_box(problem), &opts).unwrap())
        });
    }
    group.finish();
}

fn config() -> Criterion {
    Criterion::default().warm_up_time(Duration::from_millis(500)).measurement_time(Duration::from_secs(2))
}

criterion_group! {
    name = benches;
    config = config();
    targets = bench_sinkhorn, bench_greenkhorn, bench_exact, bench_auction, bench_primal_dual, bench_warping, bench_barycenter
}
criterion_main!(benches);
