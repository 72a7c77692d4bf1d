//! Criterion benches for the hot kernels, parameterized by rayon pool size
//! so the parallel speedup (or its absence) is directly visible. Building
//! with `--no-default-features` benches the fully sequential code path
//! under the `threads/0` label.

use criterion::{criterion_group, criterion_main, BenchmarkId, Criterion};
use num_complex::Complex64;
use semigroup_dim::measure::{conformal_measure, regularity_audit, Metric};
use semigroup_dim::semigroup::GeneratorSystem;
use semigroup_dim::sphere::{RationalMap, SpherePoint};
use semigroup_dim::thermo::bowen_dimension;
use semigroup_dim::NumericTolerances;

fn gasket() -> GeneratorSystem {
    let tol = NumericTolerances::default();
    let s = 3.0_f64.sqrt() / 2.0;
    let gens = [(1.0, 0.0), (-0.5, s), (-0.5, -s)]
        .iter()
        .map(|&(re, im)| {
            RationalMap::from_polynomial(
                vec![Complex64::new(-re, -im), Complex64::new(2.0, 0.0)],
                &tol,
            )
            .unwrap()
        })
        .collect();
    GeneratorSystem::new(gens, tol).unwrap()
}

/// Pool sizes to compare: sequential-in-pool (1) and whatever the host has.
/// Under `--no-default-features` rayon is absent and `0` marks the plain
/// sequential path.
fn pool_sizes() -> Vec<usize> {
    #[cfg(feature = "parallel")]
    {
        let avail = std::thread::available_parallelism().map_or(1, |n| n.get());
        if avail > 1 {
            vec![1, avail]
        } else {
            vec![1]
        }
    }
    #[cfg(not(feature = "parallel"))]
    {
        vec![0]
    }
}

fn with_pool<T: Send>(threads: usize, f: impl FnOnce() -> T + Send) -> T {
    #[cfg(feature = "parallel")]
    {
        rayon::ThreadPoolBuilder::new()
            .num_threads(threads)
            .build()
            .unwrap()
            .install(f)
    }
    #[cfg(not(feature = "parallel"))]
    {
        let _ = threads;
        f()
    }
}

fn bench_kernels(c: &mut Criterion) {
    let gs = gasket();
    let base = SpherePoint::finite(1.0, 0.0);

    let mut group = c.benchmark_group("preimage_tree_depth8");
    group.sample_size(10);
    for &threads in &pool_sizes() {
        group.bench_with_input(BenchmarkId::from_parameter(threads), &threads, |b, &t| {
            b.iter(|| with_pool(t, || gs.log_norm_levels(base, 8).unwrap()));
        });
    }
    group.finish();

    let mut group = c.benchmark_group("bowen_dimension_depth7");
    group.sample_size(10);
    for &threads in &pool_sizes() {
        group.bench_with_input(BenchmarkId::from_parameter(threads), &threads, |b, &t| {
            b.iter(|| with_pool(t, || bowen_dimension(&gs, base, 7, 1e-10).unwrap()));
        });
    }
    group.finish();

    let mut group = c.benchmark_group("regularity_audit");
    group.sample_size(10);
    let mu = conformal_measure(&gs, 1.584962500721156, base, 6, 9).unwrap();
    for &threads in &pool_sizes() {
        group.bench_with_input(BenchmarkId::from_parameter(threads), &threads, |b, &t| {
            b.iter(|| {
                with_pool(t, || {
                    regularity_audit(&mu, 1.584962500721156, 10, 0.01, 0.16, 7, Metric::Chordal)
                        .unwrap()
                })
            });
        });
    }
    group.finish();
}

criterion_group!(kernels, bench_kernels);
criterion_main!(kernels);
