use std::f64::consts::PI;
use std::sync::Arc;

use hgl_core::evolution::{evolve, EvolutionConfig, Outcome};
use hgl_core::stationary::{ForcingShape, ProblemSpec};
use hgl_core::{BoundaryCondition, GridField2D, GridSpec};

const BC: BoundaryCondition = BoundaryCondition::Navier;

/// `u* = e^{-t} sin πx sin πy`.
fn exact(grid: GridSpec, t: f64) -> GridField2D {
    GridField2D::from_fn(grid, BC, |x, y| (-t).exp() * (PI * x).sin() * (PI * y).sin())
}

/// `u*_t + Δ²u* − det D²u*`, so that `u*` solves the forced equation with `λ = 1`.
fn source(grid: GridSpec, t: f64) -> GridField2D {
    let p4 = PI.powi(4);
    GridField2D::from_fn(grid, BC, move |x, y| {
        let (sx, sy, cx, cy) = ((PI * x).sin(), (PI * y).sin(), (PI * x).cos(), (PI * y).cos());
        let e = (-t).exp();
        (4.0 * p4 - 1.0) * e * sx * sy - e * e * p4 * (sx * sx * sy * sy - cx * cx * cy * cy)
    })
}

/// Max nodal error at `t_max`.
fn error(n: usize, dt: f64, t_max: f64) -> f64 {
    let grid = GridSpec::unit_square(n).unwrap();
    let spec = ProblemSpec::with_shape(grid, BC, ForcingShape::Constant, 1.0).unwrap();
    let mut cfg = EvolutionConfig::new(spec, exact(grid, 0.0), dt, t_max);
    cfg.forcing = Some(Arc::new(move |t| source(grid, t)));
    let tr = evolve(&cfg).unwrap();
    assert_eq!(tr.outcome, Outcome::ReachedHorizon);
    assert!((tr.times.last().unwrap() - t_max).abs() < 1e-12);
    tr.final_field().unwrap().sub(&exact(grid, t_max)).unwrap().max_abs()
}

#[test]
fn manufactured_solution_first_order_in_time() {
    // Fine grid so the spatial error stays well below the temporal one.
    let errs: Vec<f64> = [4e-2, 2e-2, 1e-2].iter().map(|&dt| error(129, dt, 0.4)).collect();
    let orders: Vec<f64> = errs.windows(2).map(|w| (w[0] / w[1]).log2()).collect();
    eprintln!("dt errors {errs:?} orders {orders:?}");
    assert!(orders.iter().all(|&p| p >= 0.9), "{errs:?}");
}

#[test]
fn manufactured_solution_second_order_in_space() {
    // dt tied to h² so the temporal error shrinks at the spatial rate.
    let errs: Vec<f64> = [9usize, 17, 33]
        .iter()
        .map(|&n| {
            let h = 1.0 / (n - 1) as f64;
            error(n, 0.5 * h * h, 0.1)
        })
        .collect();
    let orders: Vec<f64> = errs.windows(2).map(|w| (w[0] / w[1]).log2()).collect();
    eprintln!("h errors {errs:?} orders {orders:?}");
    assert!(orders.iter().all(|&p| p >= 1.9), "{errs:?}");
}
