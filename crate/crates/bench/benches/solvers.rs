use std::hint::black_box;

use criterion::{criterion_group, criterion_main, BenchmarkId, Criterion};
use ionkin_core::fdsolver::{explicit_step_nonuniform, explicit_step_uniform, FieldLevel, SolveConfig};
use ionkin_core::quadrature::lobatto_rule;
use ionkin_core::spectral::{alpha_history, expand, required_nodes, CoefficientTable};
use ionkin_core::{example2, lobatto_axis, time_grid, CoefficientFunction, Grid2D, Method, Truncation};
use ndarray::Array2;

fn explicit_steps(c: &mut Criterion) {
    let mut group = c.benchmark_group("explicit_step");
    for n in [26usize, 64, 128] {
        let tg = time_grid(1.0, 1).unwrap();
        let config = SolveConfig::new(Method::UniformTrapezoid, n, n, tg).unwrap();
        let grid = Grid2D::uniform(n, n).unwrap();
        let level = FieldLevel::sample(&grid, 0, |x, y| y * (1.0 - y) * (1.0 + x));
        let f = Array2::from_elem(grid.shape(), 0.5);
        group.bench_with_input(BenchmarkId::new("uniform", n), &n, |b, _| {
            b.iter(|| explicit_step_uniform(black_box(&level), 1.0, &f, &config).unwrap())
        });

        let grid = Grid2D::lobatto(n, n).unwrap();
        let level = FieldLevel::sample(&grid, 0, |x, y| y * (1.0 - y) * (1.0 + x));
        group.bench_with_input(BenchmarkId::new("lobatto", n), &n, |b, _| {
            b.iter(|| explicit_step_nonuniform(black_box(&level), 1.0, &f, &grid, 1e-6).unwrap())
        });
    }
    group.finish();
}

fn lobatto_nodes(c: &mut Criterion) {
    let mut group = c.benchmark_group("lobatto_axis");
    for n in [26usize, 100, 400] {
        group.bench_with_input(BenchmarkId::from_parameter(n), &n, |b, &n| b.iter(|| lobatto_axis(black_box(n)).unwrap()));
    }
    group.finish();
}

fn spectral(c: &mut Criterion) {
    let problem = example2();
    let trunc = Truncation::new(10, 10).unwrap();
    let nodes = required_nodes(trunc);
    let rule = lobatto_rule(&Grid2D::lobatto(nodes - 1, nodes - 1).unwrap()).unwrap();
    let tg = time_grid(problem.horizon, 50).unwrap();
    let expand_once = || -> CoefficientTable {
        expand(|x, y| problem.phi(x, y), |x, y, t| problem.source(x, y, t), trunc, &rule, tg).unwrap()
    };
    c.bench_function("expand_m10_k10_nt50", |b| b.iter(expand_once));

    let table = expand_once();
    let p = CoefficientFunction::new(tg.times().map(|t| (9.8696 * t).exp()).collect()).unwrap();
    c.bench_function("alpha_history_m10_k10_nt50", |b| b.iter(|| alpha_history(black_box(&p), &table).unwrap()));
}

criterion_group!(benches, explicit_steps, lobatto_nodes, spectral);
criterion_main!(benches);
