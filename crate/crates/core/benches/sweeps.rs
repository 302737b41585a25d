use criterion::{black_box, criterion_group, criterion_main, BenchmarkId, Criterion};
use num_complex::Complex64;

use condtel::analysis::sweep_grid_with;
use condtel::bk::{bk_scan_with, BkConfig};
use condtel::{Exec, FockVector, SqueezeParams};

fn test_state(cutoff: usize) -> FockVector {
    let h = std::f64::consts::FRAC_1_SQRT_2;
    let z = Complex64::new(0.0, 0.0);
    FockVector::new(&[z, Complex64::new(h, 0.0), z, Complex64::new(0.0, h)], cutoff).unwrap()
}

fn strategies() -> Vec<(&'static str, Exec)> {
    #[allow(unused_mut)]
    let mut out = vec![("sequential", Exec::Sequential)];
    #[cfg(feature = "parallel")]
    out.push(("parallel", Exec::Parallel));
    out
}

fn outcome_grid(c: &mut Criterion) {
    let psi = test_state(60);
    let a = SqueezeParams::real(1.5).unwrap();
    let mut group = c.benchmark_group("outcome_grid");
    for n_max in [12, 30] {
        for (name, exec) in strategies() {
            group.bench_with_input(BenchmarkId::new(name, n_max), &n_max, |b, &n_max| {
                b.iter(|| sweep_grid_with(black_box(&psi), a, a, n_max, exec).unwrap())
            });
        }
    }
    group.finish();
}

fn quadrature_grid(c: &mut Criterion) {
    let psi = test_state(60);
    let config = BkConfig {
        half_width: 4.0,
        step: 0.1,
        cutoff: 60,
        ..BkConfig::new(1.5).unwrap()
    };
    let mut group = c.benchmark_group("quadrature_grid");
    group.sample_size(10);
    for (name, exec) in strategies() {
        group.bench_function(name, |b| {
            b.iter(|| bk_scan_with(black_box(&psi), &config, exec).unwrap())
        });
    }
    group.finish();
}

criterion_group!(benches, outcome_grid, quadrature_grid);
criterion_main!(benches);
