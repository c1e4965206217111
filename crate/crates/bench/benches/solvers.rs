use criterion::{black_box, criterion_group, criterion_main, BenchmarkId, Criterion};

use hgl_core::biharmonic::BiharmonicSolver;
use hgl_core::evolution::ImexStepper;
use hgl_core::radial::{radial_solve, RadialProblem};
use hgl_core::selfsim::{shoot, ShootConfig};
use hgl_core::stationary::{ForcingShape, ProblemSpec};
use hgl_core::{BoundaryCondition, GridSpec};

fn selfsim(c: &mut Criterion) {
    let mut g = c.benchmark_group("shoot");
    for (slope, eta_max) in [(-1.0, 20.0), (1.0, 20.0), (-1e6, 8e-3)] {
        let cfg = ShootConfig::new(slope, eta_max);
        g.bench_with_input(BenchmarkId::from_parameter(slope), &cfg, |b, cfg| b.iter(|| shoot(black_box(cfg)).unwrap()));
    }
    g.finish();
}

fn biharmonic(c: &mut Criterion) {
    let mut g = c.benchmark_group("biharmonic_solve");
    for (bc, n) in [(BoundaryCondition::Navier, 65), (BoundaryCondition::Navier, 129), (BoundaryCondition::Dirichlet, 65)] {
        let grid = GridSpec::unit_square(n).unwrap();
        let solver = BiharmonicSolver::new(grid, bc);
        let f = ForcingShape::Constant.sample(grid, bc);
        g.bench_function(BenchmarkId::new(bc.as_str(), n), |b| b.iter(|| solver.solve(black_box(&f)).unwrap()));
    }
    g.finish();
}

fn imex(c: &mut Criterion) {
    let mut g = c.benchmark_group("imex_step");
    for bc in [BoundaryCondition::Navier, BoundaryCondition::Dirichlet] {
        let grid = GridSpec::unit_square(65).unwrap();
        let spec = ProblemSpec::with_shape(grid, bc, ForcingShape::Sine, 1.0).unwrap();
        let stepper = ImexStepper::new(&spec);
        let u = ForcingShape::Sine.sample(grid, bc).scaled(0.1);
        let source = spec.source();
        g.bench_function(bc.as_str(), |b| b.iter(|| stepper.step(black_box(&u), &source, 1e-4).unwrap()));
    }
    g.finish();
}

fn radial(c: &mut Criterion) {
    let prob = RadialProblem::constant(401, BoundaryCondition::Dirichlet, 100.0).unwrap();
    c.bench_function("radial_newton_401", |b| b.iter(|| radial_solve(black_box(&prob), 1e-10).unwrap()));
}

criterion_group!(benches, selfsim, biharmonic, imex, radial);
criterion_main!(benches);
