//! Finite-difference operators, trapezoid quadrature and discrete Sobolev norms.

use serde::{Deserialize, Serialize};

use super::{BoundaryCondition, GridField2D, GridSpec};
use crate::error::{Error, Result};

fn check_operable(f: &GridField2D) -> Result<()> {
    let GridSpec { nx, ny, .. } = *f.spec();
    if nx < GridSpec::MIN_NODES || ny < GridSpec::MIN_NODES {
        return Err(Error::GridTooSmall { nx, ny });
    }
    f.check_finite()
}

/// Second difference along one line of `n` samples at position `k`, closed at
/// the ends either by odd reflection or by a one-sided second-order stencil.
#[inline]
fn second_diff_line(at: impl Fn(usize) -> f64, n: usize, k: usize, bc: BoundaryCondition) -> f64 {
    if k > 0 && k < n - 1 {
        return at(k - 1) - 2.0 * at(k) + at(k + 1);
    }
    // Mirror index so both ends share one formula.
    let (a, b, c, d) = if k == 0 {
        (at(0), at(1), at(2), at(3))
    } else {
        (at(n - 1), at(n - 2), at(n - 3), at(n - 4))
    };
    match bc {
        // Ghost value 2a - b makes the normal second difference vanish.
        BoundaryCondition::Navier => 0.0,
        BoundaryCondition::Dirichlet => 2.0 * a - 5.0 * b + 4.0 * c - d,
    }
}

/// Five-point discrete Laplacian.
///
/// Boundary nodes are closed per the field's boundary condition: odd reflection
/// for Navier, one-sided second-order differences for Dirichlet.
pub fn laplacian(f: &GridField2D) -> Result<GridField2D> {
    check_operable(f)?;
    let spec = *f.spec();
    let GridSpec { nx, ny, .. } = spec;
    let (ihx2, ihy2) = (1.0 / (spec.hx() * spec.hx()), 1.0 / (spec.hy() * spec.hy()));
    let bc = f.bc();
    let v = f.values();
    let mut out = vec![0.0; spec.len()];
    for j in 0..ny {
        for i in 0..nx {
            let dxx = second_diff_line(|k| v[j * nx + k], nx, i, bc);
            let dyy = second_diff_line(|k| v[k * nx + i], ny, j, bc);
            out[j * nx + i] = dxx * ihx2 + dyy * ihy2;
        }
    }
    GridField2D::from_values(spec, bc, out)
}

/// `u_xx u_yy - u_xy²` with centered differences on interior nodes; the
/// boundary ring is zero.
pub fn hessian_det(f: &GridField2D) -> Result<GridField2D> {
    check_operable(f)?;
    let spec = *f.spec();
    let GridSpec { nx, ny, .. } = spec;
    let (hx, hy) = (spec.hx(), spec.hy());
    let (ihx2, ihy2, ihxy) = (1.0 / (hx * hx), 1.0 / (hy * hy), 0.25 / (hx * hy));
    let v = f.values();
    let mut out = vec![0.0; spec.len()];
    for j in 1..ny - 1 {
        for i in 1..nx - 1 {
            let k = j * nx + i;
            let uxx = (v[k - 1] - 2.0 * v[k] + v[k + 1]) * ihx2;
            let uyy = (v[k - nx] - 2.0 * v[k] + v[k + nx]) * ihy2;
            let uxy = (v[k + nx + 1] - v[k + nx - 1] - v[k - nx + 1] + v[k - nx - 1]) * ihxy;
            out[k] = uxx * uyy - uxy * uxy;
        }
    }
    GridField2D::from_values(spec, f.bc(), out)
}

fn first_line(at: &dyn Fn(usize) -> f64, n: usize, k: usize, h: f64) -> f64 {
    if k == 0 {
        (-3.0 * at(0) + 4.0 * at(1) - at(2)) / (2.0 * h)
    } else if k == n - 1 {
        (3.0 * at(n - 1) - 4.0 * at(n - 2) + at(n - 3)) / (2.0 * h)
    } else {
        (at(k + 1) - at(k - 1)) / (2.0 * h)
    }
}

fn second_line(at: &dyn Fn(usize) -> f64, n: usize, k: usize, h: f64) -> f64 {
    second_diff_line(at, n, k, BoundaryCondition::Dirichlet) / (h * h)
}

/// ∂f/∂x, centered in the interior and one-sided (second order) on the edges.
pub fn d_dx(f: &GridField2D) -> GridField2D {
    along_x(f, first_line)
}

pub fn d_dy(f: &GridField2D) -> GridField2D {
    along_y(f, first_line)
}

pub fn d2_dx2(f: &GridField2D) -> GridField2D {
    along_x(f, second_line)
}

pub fn d2_dy2(f: &GridField2D) -> GridField2D {
    along_y(f, second_line)
}

type LineOp = fn(&dyn Fn(usize) -> f64, usize, usize, f64) -> f64;

fn along_x(f: &GridField2D, op: LineOp) -> GridField2D {
    let spec = *f.spec();
    let (nx, h) = (spec.nx, spec.hx());
    let v = f.values();
    let mut out = vec![0.0; spec.len()];
    for j in 0..spec.ny {
        let row = &v[j * nx..(j + 1) * nx];
        for i in 0..nx {
            out[j * nx + i] = op(&|k| row[k], nx, i, h);
        }
    }
    GridField2D::from_values(spec, f.bc(), out).expect("derivative of a finite field")
}

fn along_y(f: &GridField2D, op: LineOp) -> GridField2D {
    let spec = *f.spec();
    let (nx, ny, h) = (spec.nx, spec.ny, spec.hy());
    let v = f.values();
    let mut out = vec![0.0; spec.len()];
    for i in 0..nx {
        for j in 0..ny {
            out[j * nx + i] = op(&|k| v[k * nx + i], ny, j, h);
        }
    }
    GridField2D::from_values(spec, f.bc(), out).expect("derivative of a finite field")
}

/// Tensor trapezoid weights, row-major like the field values.
pub fn quadrature_weights(spec: &GridSpec) -> Vec<f64> {
    let wx = |i: usize| if i == 0 || i == spec.nx - 1 { 0.5 } else { 1.0 };
    let wy = |j: usize| if j == 0 || j == spec.ny - 1 { 0.5 } else { 1.0 };
    let cell = spec.hx() * spec.hy();
    let mut w = Vec::with_capacity(spec.len());
    for j in 0..spec.ny {
        for i in 0..spec.nx {
            w.push(cell * wx(i) * wy(j));
        }
    }
    w
}

/// Trapezoid rule over the whole rectangle.
pub fn quadrature(f: &GridField2D) -> f64 {
    let spec = f.spec();
    let (nx, ny) = (spec.nx, spec.ny);
    let v = f.values();
    let mut total = 0.0;
    for j in 0..ny {
        let wy = if j == 0 || j == ny - 1 { 0.5 } else { 1.0 };
        let row = &v[j * nx..(j + 1) * nx];
        let inner: f64 = row[1..nx - 1].iter().sum::<f64>() + 0.5 * (row[0] + row[nx - 1]);
        total += wy * inner;
    }
    total * spec.hx() * spec.hy()
}

/// Discrete L² norms of a field and of its first and second derivatives.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct NormReport {
    pub l2: f64,
    pub grad_l2: f64,
    pub hess_l2: f64,
    pub sobolev22: f64,
}

impl NormReport {
    pub const ZERO: NormReport = NormReport { l2: 0.0, grad_l2: 0.0, hess_l2: 0.0, sobolev22: 0.0 };
}

/// Trapezoid-quadrature surrogate of the W^{2,2} norm.
///
/// The Hessian contribution is `u_xx² + 2u_xy² + u_yy²` (Frobenius).
pub fn sobolev_norms(f: &GridField2D) -> Result<NormReport> {
    check_operable(f)?;
    let fx = d_dx(f);
    let fy = d_dy(f);
    let fxx = d2_dx2(f);
    let fyy = d2_dy2(f);
    let fxy = d_dy(&fx);
    let w = quadrature_weights(f.spec());
    let (mut l2, mut g2, mut h2) = (0.0, 0.0, 0.0);
    for k in 0..w.len() {
        let u = f.values()[k];
        let (ux, uy) = (fx.values()[k], fy.values()[k]);
        let (uxx, uyy, uxy) = (fxx.values()[k], fyy.values()[k], fxy.values()[k]);
        l2 += w[k] * u * u;
        g2 += w[k] * (ux * ux + uy * uy);
        h2 += w[k] * (uxx * uxx + 2.0 * uxy * uxy + uyy * uyy);
    }
    Ok(NormReport {
        l2: l2.sqrt(),
        grad_l2: g2.sqrt(),
        hess_l2: h2.sqrt(),
        sobolev22: (l2 + g2 + h2).sqrt(),
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;
    use std::f64::consts::PI;

    const NAV: BoundaryCondition = BoundaryCondition::Navier;
    const DIR: BoundaryCondition = BoundaryCondition::Dirichlet;

    fn interior_max_err(a: &GridField2D, exact: impl Fn(f64, f64) -> f64) -> f64 {
        let s = a.spec();
        let mut m = 0.0f64;
        for j in 1..s.ny - 1 {
            for i in 1..s.nx - 1 {
                m = m.max((a.get(i, j) - exact(s.x(i), s.y(j))).abs());
            }
        }
        m
    }

    fn sine(spec: GridSpec) -> GridField2D {
        GridField2D::from_fn(spec, NAV, |x, y| (PI * x).sin() * (PI * y).sin())
    }

    #[test]
    fn laplacian_of_zero_is_zero() {
        let f = GridField2D::zeros(GridSpec::unit_square(8).unwrap(), DIR);
        assert_eq!(laplacian(&f).unwrap().max_abs(), 0.0);
    }

    #[test]
    fn laplacian_exact_on_quadratics() {
        let spec = GridSpec::with_origin(17, 13, 2.0, 1.5, -1.0, -0.5).unwrap();
        for bc in [NAV, DIR] {
            let f = GridField2D::from_fn(spec, bc, |x, y| x * x + y * y);
            let lap = laplacian(&f).unwrap();
            assert!(interior_max_err(&lap, |_, _| 4.0) < 1e-10);
        }
        // One-sided closure is exact for quadratics on the boundary as well.
        let f = GridField2D::from_fn(spec, DIR, |x, y| 3.0 * x * x - x * y + 0.5 * y * y + x);
        let lap = laplacian(&f).unwrap();
        assert!(lap.values().iter().all(|v| (v - 7.0).abs() < 1e-9));
    }

    #[test]
    fn laplacian_navier_vanishes_on_homogeneous_boundary() {
        let f = sine(GridSpec::unit_square(33).unwrap());
        let mut g = f.clone();
        g.zero_boundary();
        let lap = laplacian(&g).unwrap();
        assert!(lap.boundary_max_abs() < 1e-12);
    }

    #[test]
    fn laplacian_sine_second_order() {
        let err = |n| {
            let f = sine(GridSpec::unit_square(n).unwrap());
            let lap = laplacian(&f).unwrap();
            let h = 1.0 / (n - 1) as f64;
            (interior_max_err(&lap, |x, y| -2.0 * PI * PI * (PI * x).sin() * (PI * y).sin()), h)
        };
        let (e1, h1) = err(64);
        let (e2, h2) = err(128);
        let order = (e1 / e2).ln() / (h1 / h2).ln();
        assert!(order >= 1.9, "observed order {order}");
        assert!(e2 < 2e-3, "{e2}");
    }

    #[test]
    fn hessian_det_quadratics() {
        let spec = GridSpec::unit_square(9).unwrap();
        let f = GridField2D::from_fn(spec, DIR, |x, y| x * x + y * y);
        assert!(interior_max_err(&hessian_det(&f).unwrap(), |_, _| 4.0) < 1e-9);
        let f = GridField2D::from_fn(spec, DIR, |x, y| x * y);
        let det = hessian_det(&f).unwrap();
        assert!(interior_max_err(&det, |_, _| -1.0) < 1e-9);
        assert_eq!(det.boundary_max_abs(), 0.0);
    }

    #[test]
    fn hessian_det_cubic() {
        let spec = GridSpec::unit_square(21).unwrap();
        let f = GridField2D::from_fn(spec, DIR, |x, y| x.powi(3) + y.powi(3));
        let det = hessian_det(&f).unwrap();
        assert!(interior_max_err(&det, |x, y| 36.0 * x * y) < 1e-8);
    }

    #[test]
    fn hessian_det_second_order() {
        // u = sin(πx) sin(πy): det = π⁴ (sin²πx sin²πy − cos²πx cos²πy)
        let exact = |x: f64, y: f64| {
            let (sx, sy, cx, cy) = ((PI * x).sin(), (PI * y).sin(), (PI * x).cos(), (PI * y).cos());
            PI.powi(4) * (sx * sx * sy * sy - cx * cx * cy * cy)
        };
        let err = |n| {
            let det = hessian_det(&sine(GridSpec::unit_square(n).unwrap())).unwrap();
            (interior_max_err(&det, exact), 1.0 / (n - 1) as f64)
        };
        let (e1, h1) = err(64);
        let (e2, h2) = err(128);
        let order = (e1 / e2).ln() / (h1 / h2).ln();
        assert!(order >= 1.9, "observed order {order}");
    }

    #[test]
    fn too_small_grid_is_rejected() {
        assert!(matches!(GridSpec::unit_square(3), Err(Error::GridTooSmall { .. })));
    }

    #[test]
    fn quadrature_cases() {
        let spec = GridSpec::unit_square(11).unwrap();
        let one = GridField2D::from_fn(spec, DIR, |_, _| 1.0);
        assert!((quadrature(&one) - 1.0).abs() < 1e-14);
        assert_eq!(quadrature(&GridField2D::zeros(spec, DIR)), 0.0);
        let exact = 4.0 / (PI * PI);
        let e1 = (quadrature(&sine(GridSpec::unit_square(33).unwrap())) - exact).abs();
        let e2 = (quadrature(&sine(GridSpec::unit_square(65).unwrap())) - exact).abs();
        assert!(e1 < 5e-3 && e2 < e1 / 3.5, "{e1} {e2}");
    }

    #[test]
    fn weights_sum_to_area() {
        let spec = GridSpec::new(7, 9, 2.0, 3.0).unwrap();
        let s: f64 = quadrature_weights(&spec).iter().sum();
        assert!((s - 6.0).abs() < 1e-12);
    }

    #[test]
    fn norms_of_zero() {
        let f = GridField2D::zeros(GridSpec::unit_square(10).unwrap(), NAV);
        assert_eq!(sobolev_norms(&f).unwrap(), NormReport::ZERO);
    }

    #[test]
    fn norms_interior_constant_bounded() {
        let c = 2.5;
        let f = GridField2D::from_fn_interior(GridSpec::unit_square(20).unwrap(), DIR, |_, _| c);
        assert!(sobolev_norms(&f).unwrap().l2 <= c);
    }

    #[test]
    fn norms_sine_converge() {
        let r = sobolev_norms(&sine(GridSpec::unit_square(129).unwrap())).unwrap();
        assert!((r.l2 - 0.5).abs() < 1e-4, "l2 {}", r.l2);
        // ∫|∇u|² = π²/2, ∫|D²u|² = π⁴
        assert!((r.grad_l2 - PI / 2f64.sqrt()).abs() < 1e-3);
        assert!((r.hess_l2 - PI * PI).abs() < 1e-2);
        let combined = (r.l2.powi(2) + r.grad_l2.powi(2) + r.hess_l2.powi(2)).sqrt();
        assert!((r.sobolev22 - combined).abs() <= 1e-14 * combined);
    }

    proptest! {
        #![proptest_config(ProptestConfig::with_cases(32))]

        #[test]
        fn norms_absolutely_homogeneous(c in -50.0f64..50.0, a in 0.1f64..3.0, b in -2.0f64..2.0) {
            let spec = GridSpec::unit_square(17).unwrap();
            let f = GridField2D::from_fn(spec, DIR, |x, y| a * (x * y).sin() + b * x * x * y);
            let n1 = sobolev_norms(&f).unwrap();
            let n2 = sobolev_norms(&f.scaled(c)).unwrap();
            let tol = 1e-12 * n1.sobolev22 * c.abs().max(1.0);
            prop_assert!((n2.l2 - c.abs() * n1.l2).abs() <= tol);
            prop_assert!((n2.grad_l2 - c.abs() * n1.grad_l2).abs() <= tol);
            prop_assert!((n2.hess_l2 - c.abs() * n1.hess_l2).abs() <= tol);
        }

        #[test]
        fn quadrature_is_linear(a in -10.0f64..10.0, b in -10.0f64..10.0, k in 1.0f64..5.0) {
            let spec = GridSpec::new(13, 9, 1.3, 0.7).unwrap();
            let f = GridField2D::from_fn(spec, DIR, |x, y| (k * x).cos() + y);
            let g = GridField2D::from_fn(spec, DIR, |x, y| x * y * y - k);
            let lhs = quadrature(&f.scaled(a).axpy(b, &g).unwrap());
            let rhs = a * quadrature(&f) + b * quadrature(&g);
            prop_assert!((lhs - rhs).abs() <= 1e-12 * (1.0 + lhs.abs()));
        }
    }
}
