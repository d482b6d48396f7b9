//! Sequential versus parallel execution of the main estimators.

use criterion::{criterion_group, criterion_main, BenchmarkId, Criterion};
use flagquer::functional::{functional_i, GaussianFn, QuasiConcaveFn};
use flagquer::quermass::{example2_a, phi_r, psi_omega, psi_r, Permutation};
use flagquer::{Body, ExecMode, IndexSeq, McConfig};
use nalgebra::DMatrix;

const SAMPLES: usize = 20_000;

fn modes() -> [(&'static str, ExecMode); 2] {
    [("sequential", ExecMode::Sequential), ("parallel", ExecMode::Parallel)]
}

fn config(mode: ExecMode) -> McConfig {
    McConfig {
        mode,
        ..McConfig::new(SAMPLES, 1)
    }
}

fn bodies(c: &mut Criterion) {
    let s = IndexSeq::new(3, vec![1, 2]).unwrap();
    let cube = Body::cube(3, 1.0).unwrap();
    let cross = Body::cross_polytope(3, 1.0).unwrap();
    let omega = Permutation::new(vec![2, 1, 3]).unwrap();
    let mut g = c.benchmark_group("bodies");
    g.sample_size(10);
    for (name, mode) in modes() {
        let cfg = config(mode);
        g.bench_with_input(BenchmarkId::new("psi_r cube", name), &cfg, |b, cfg| {
            b.iter(|| psi_r(&cube, &s, cfg).unwrap())
        });
        g.bench_with_input(BenchmarkId::new("phi_r cross-polytope", name), &cfg, |b, cfg| {
            b.iter(|| phi_r(&cross, &s, cfg).unwrap())
        });
        g.bench_with_input(BenchmarkId::new("psi_omega cube", name), &cfg, |b, cfg| {
            b.iter(|| psi_omega(&cube, &omega, cfg).unwrap())
        });
    }
    g.finish();
}

fn functions(c: &mut Criterion) {
    let s = IndexSeq::new(3, vec![1, 2]).unwrap();
    let m = DMatrix::from_row_slice(3, 3, &[4.0, 0.5, 0.0, 0.5, 0.25, 0.0, 0.0, 0.0, 1.0]);
    let f = QuasiConcaveFn::Gaussian(GaussianFn::new(m).unwrap());
    let mut g = c.benchmark_group("functions");
    g.sample_size(10);
    for (name, mode) in modes() {
        let cfg = config(mode);
        g.bench_with_input(BenchmarkId::new("functional_i gaussian", name), &cfg, |b, cfg| {
            b.iter(|| functional_i(&f, &s, cfg).unwrap())
        });
        g.bench_with_input(BenchmarkId::new("example2_a", name), &cfg, |b, cfg| {
            b.iter(|| example2_a([1.0, 2.0, 0.5], cfg).unwrap())
        });
    }
    g.finish();
}

criterion_group!(benches, bodies, functions);
criterion_main!(benches);
