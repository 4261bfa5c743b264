use std::hint::black_box;

use criterion::{criterion_group, criterion_main, BenchmarkId, Criterion};
use laxlab_bench::{near_pole, reference, regular, window};
use laxlab_core::elliptic::jacobi;
use laxlab_core::flowint::{integrate_system, PathSpec};
use laxlab_core::singlattice::{classical_lattice, rh_lattice};
use laxlab_core::toeplitz::sigma_min_at;
use num_complex::Complex64;

fn sigma_min(c: &mut Criterion) {
    let cfg = reference();
    let mut group = c.benchmark_group("sigma_min");
    group.sample_size(20);
    for n in [16, 32, 64] {
        group.bench_with_input(BenchmarkId::new("near_pole", n), &n, |b, &n| {
            b.iter(|| sigma_min_at(&cfg, black_box(near_pole()), n).unwrap())
        });
    }
    group.bench_function("regular_96", |b| b.iter(|| sigma_min_at(&cfg, black_box(regular()), 96).unwrap()));
    group.finish();
}

fn lattice(c: &mut Criterion) {
    let cfg = reference();
    let w = window();
    c.bench_function("classical_lattice", |b| b.iter(|| classical_lattice(&cfg, black_box(&w), 12).unwrap()));
    c.bench_function("rh_lattice", |b| b.iter(|| rh_lattice(&cfg, black_box(&w), 12).unwrap()));
}

fn elliptic(c: &mut Criterion) {
    let m = Complex64::new(2.356, 0.0);
    let u = Complex64::new(0.4, 0.9);
    c.bench_function("jacobi_sn_cn_dn", |b| b.iter(|| jacobi(black_box(u), black_box(m)).unwrap()));
}

fn flow(c: &mut Criterion) {
    let cfg = reference();
    let path = PathSpec::segment(Complex64::new(1.0, 0.0), 0.05, cfg.tol).unwrap();
    c.bench_function("integrate_to_t1", |b| b.iter(|| integrate_system(&cfg, black_box(&path)).unwrap()));
}

criterion_group!(benches, sigma_min, lattice, elliptic, flow);
criterion_main!(benches);
