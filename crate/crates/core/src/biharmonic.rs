//! Discrete bilaplacian on the interior nodes of a rectangle and its inverse.
//!
//! Both boundary conditions share the 13-point stencil
//! `D⁴x + 2 D²x D²y + D⁴y`; they differ only in the ghost value used by the
//! fourth differences next to the boundary. With `u = 0` on the boundary node,
//! the ghost one cell outside is `+u₁` for the clamped (Dirichlet) pair and
//! `-u₁` for the hinged (Navier) pair. The Navier operator is exactly
//! `Δₕ(Δₕ·)` with zero boundary data and is diagonalized by the type-I sine
//! transform; the clamped operator differs from it by a rank-deficient
//! boundary term and is solved by conjugate gradients preconditioned with the
//! Navier inverse.

use std::sync::Arc;

use rustdct::{Dst1, DctPlanner};

use crate::error::{Error, Result};
use crate::grid::{BoundaryCondition, GridField2D, GridSpec};

/// Relative residual at which the clamped conjugate-gradient solve stops.
pub const CG_REL_TOL: f64 = 1e-10;
const CG_MAX_ITER: usize = 2000;

/// Plans and eigenvalues for repeated bilaplacian solves on one grid.
#[derive(Clone)]
pub struct BiharmonicSolver {
    spec: GridSpec,
    bc: BoundaryCondition,
    dst_x: Arc<dyn Dst1<f64>>,
    dst_y: Arc<dyn Dst1<f64>>,
    eig_x: Vec<f64>,
    eig_y: Vec<f64>,
}

impl std::fmt::Debug for BiharmonicSolver {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.debug_struct("BiharmonicSolver").field("spec", &self.spec).field("bc", &self.bc).finish()
    }
}

/// Outcome of an iterative solve.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SolveStats {
    pub iterations: usize,
    pub relative_residual: f64,
}

fn dirichlet_laplacian_eigs(n_interior: usize, h: f64) -> Vec<f64> {
    let m = (n_interior + 1) as f64;
    (1..=n_interior)
        .map(|k| {
            let s = (std::f64::consts::PI * k as f64 / (2.0 * m)).sin();
            4.0 * s * s / (h * h)
        })
        .collect()
}

impl BiharmonicSolver {
    pub fn new(spec: GridSpec, bc: BoundaryCondition) -> Self {
        let (mx, my) = spec.interior_dims();
        let mut planner = DctPlanner::new();
        Self {
            spec,
            bc,
            dst_x: planner.plan_dst1(mx),
            dst_y: planner.plan_dst1(my),
            eig_x: dirichlet_laplacian_eigs(mx, spec.hx()),
            eig_y: dirichlet_laplacian_eigs(my, spec.hy()),
        }
    }

    pub fn spec(&self) -> &GridSpec {
        &self.spec
    }

    pub fn bc(&self) -> BoundaryCondition {
        self.bc
    }

    /// Eigenvalues `(μₓ + μᵧ)²` of the hinged operator, indexed like the interior.
    pub fn navier_eigenvalue(&self, kx: usize, ky: usize) -> f64 {
        let mu = self.eig_x[kx] + self.eig_y[ky];
        mu * mu
    }

    /// In-place 2D sine transform of an interior-shaped buffer.
    fn dst2(&self, data: &mut [f64]) {
        let (mx, my) = self.spec.interior_dims();
        for row in data.chunks_exact_mut(mx) {
            self.dst_x.process_dst1(row);
        }
        let mut column = vec![0.0; my];
        for i in 0..mx {
            for j in 0..my {
                column[j] = data[j * mx + i];
            }
            self.dst_y.process_dst1(&mut column);
            for j in 0..my {
                data[j * mx + i] = column[j];
            }
        }
    }

    /// Solves `(shift·I + Δ²_Navier) u = f` on interior vectors.
    fn navier_shifted_interior(&self, f: &[f64], shift: f64) -> Vec<f64> {
        let (mx, my) = self.spec.interior_dims();
        let mut data = f.to_vec();
        self.dst2(&mut data);
        for j in 0..my {
            for i in 0..mx {
                let mu = self.eig_x[i] + self.eig_y[j];
                data[j * mx + i] /= shift + mu * mu;
            }
        }
        self.dst2(&mut data);
        let norm = 4.0 / (((mx + 1) * (my + 1)) as f64);
        for v in &mut data {
            *v *= norm;
        }
        data
    }

    /// Applies the 13-point operator for the given ghost sign to an interior vector.
    fn apply_interior(&self, u: &[f64], bc: BoundaryCondition) -> Vec<f64> {
        let (mx, my) = self.spec.interior_dims();
        let (hx, hy) = (self.spec.hx(), self.spec.hy());
        let ghost = match bc {
            BoundaryCondition::Dirichlet => 1.0,
            BoundaryCondition::Navier => -1.0,
        };
        // Interior index ii in 0..mx is grid node ii+1; grid nodes 0 and nx-1 are zero.
        let at = |ii: isize, jj: isize| -> f64 {
            let (mxi, myi) = (mx as isize, my as isize);
            let (mut s, mut i, mut j) = (1.0, ii, jj);
            if i == -2 {
                s *= ghost;
                i = 0;
            } else if i == mxi + 1 {
                s *= ghost;
                i = mxi - 1;
            }
            if j == -2 {
                s *= ghost;
                j = 0;
            } else if j == myi + 1 {
                s *= ghost;
                j = myi - 1;
            }
            if i < 0 || j < 0 || i >= mxi || j >= myi {
                0.0
            } else {
                s * u[j as usize * mx + i as usize]
            }
        };
        let (c4x, c4y, cxy) = (1.0 / hx.powi(4), 1.0 / hy.powi(4), 2.0 / (hx * hx * hy * hy));
        let mut out = vec![0.0; mx * my];
        for j in 0..my {
            for i in 0..mx {
                let (ii, jj) = (i as isize, j as isize);
                let c = at(ii, jj);
                let dxxxx = at(ii - 2, jj) - 4.0 * at(ii - 1, jj) + 6.0 * c - 4.0 * at(ii + 1, jj)
                    + at(ii + 2, jj);
                let dyyyy = at(ii, jj - 2) - 4.0 * at(ii, jj - 1) + 6.0 * c - 4.0 * at(ii, jj + 1)
                    + at(ii, jj + 2);
                let dxxyy = 4.0 * c
                    - 2.0 * (at(ii - 1, jj) + at(ii + 1, jj) + at(ii, jj - 1) + at(ii, jj + 1))
                    + at(ii - 1, jj - 1)
                    + at(ii + 1, jj - 1)
                    + at(ii - 1, jj + 1)
                    + at(ii + 1, jj + 1);
                out[j * mx + i] = c4x * dxxxx + c4y * dyyyy + cxy * dxxyy;
            }
        }
        out
    }

    /// Discrete Δ² of `u` for this solver's boundary condition; boundary ring zero.
    pub fn apply(&self, u: &GridField2D) -> Result<GridField2D> {
        self.check(u)?;
        let out = self.apply_interior(&u.interior(), self.bc);
        Ok(GridField2D::from_interior(self.spec, self.bc, &out))
    }

    pub fn solve(&self, f: &GridField2D) -> Result<GridField2D> {
        self.solve_shifted(f, 0.0).map(|(u, _)| u)
    }

    /// Solves `(shift·I + Δ²) u = f` on the interior; `shift ≥ 0`.
    pub fn solve_shifted(&self, f: &GridField2D, shift: f64) -> Result<(GridField2D, SolveStats)> {
        self.check(f)?;
        if !(shift >= 0.0 && shift.is_finite()) {
            return Err(Error::InvalidParameter(format!("shift must be finite and >= 0, got {shift}")));
        }
        let rhs = f.interior();
        let (u, stats) = match self.bc {
            BoundaryCondition::Navier => {
                (self.navier_shifted_interior(&rhs, shift), SolveStats { iterations: 0, relative_residual: 0.0 })
            }
            BoundaryCondition::Dirichlet => self.clamped_pcg(&rhs, shift)?,
        };
        let out = GridField2D::from_interior(self.spec, self.bc, &u);
        out.check_finite()?;
        Ok((out, stats))
    }

    fn clamped_pcg(&self, b: &[f64], shift: f64) -> Result<(Vec<f64>, SolveStats)> {
        let n = b.len();
        let bnorm = norm2(b);
        if bnorm == 0.0 {
            return Ok((vec![0.0; n], SolveStats { iterations: 0, relative_residual: 0.0 }));
        }
        let op = |v: &[f64]| -> Vec<f64> {
            let mut av = self.apply_interior(v, BoundaryCondition::Dirichlet);
            if shift != 0.0 {
                for (a, x) in av.iter_mut().zip(v) {
                    *a += shift * x;
                }
            }
            av
        };
        let mut x = self.navier_shifted_interior(b, shift);
        let ax = op(&x);
        let mut r: Vec<f64> = b.iter().zip(&ax).map(|(bi, ai)| bi - ai).collect();
        let mut z = self.navier_shifted_interior(&r, shift);
        let mut p = z.clone();
        let mut rz = dot(&r, &z);
        let mut rel = norm2(&r) / bnorm;
        let mut it = 0;
        while rel > CG_REL_TOL {
            if it >= CG_MAX_ITER || !rel.is_finite() {
                return Err(Error::LinearSolve { iterations: it, residual: rel });
            }
            let ap = op(&p);
            let alpha = rz / dot(&p, &ap);
            for k in 0..n {
                x[k] += alpha * p[k];
                r[k] -= alpha * ap[k];
            }
            z = self.navier_shifted_interior(&r, shift);
            let rz_new = dot(&r, &z);
            let beta = rz_new / rz;
            rz = rz_new;
            for k in 0..n {
                p[k] = z[k] + beta * p[k];
            }
            rel = norm2(&r) / bnorm;
            it += 1;
        }
        Ok((x, SolveStats { iterations: it, relative_residual: rel }))
    }

    fn check(&self, f: &GridField2D) -> Result<()> {
        if !self.spec.same_shape(f.spec()) {
            return Err(Error::GridMismatch("field does not match solver grid".into()));
        }
        f.check_finite()
    }
}

/// Inverse bilaplacian with homogeneous boundary data of kind `bc`.
pub fn solve_biharmonic(f: &GridField2D, bc: BoundaryCondition) -> Result<GridField2D> {
    BiharmonicSolver::new(*f.spec(), bc).solve(f)
}

/// Discrete Δ² with the ghost closure of `bc`.
pub fn apply_biharmonic(u: &GridField2D, bc: BoundaryCondition) -> Result<GridField2D> {
    BiharmonicSolver::new(*u.spec(), bc).apply(u)
}

pub(crate) fn dot(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| x * y).sum()
}

pub(crate) fn norm2(a: &[f64]) -> f64 {
    dot(a, a).sqrt()
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;
    use std::f64::consts::PI;

    const NAV: BoundaryCondition = BoundaryCondition::Navier;
    const DIR: BoundaryCondition = BoundaryCondition::Dirichlet;

    fn sine(n: usize, amp: f64) -> GridField2D {
        let spec = GridSpec::unit_square(n).unwrap();
        GridField2D::from_fn_interior(spec, NAV, |x, y| amp * (PI * x).sin() * (PI * y).sin())
    }

    #[test]
    fn zero_rhs_gives_zero() {
        for bc in [NAV, DIR] {
            let f = GridField2D::zeros(GridSpec::unit_square(12).unwrap(), bc);
            assert_eq!(solve_biharmonic(&f, bc).unwrap().max_abs(), 0.0);
        }
    }

    #[test]
    fn navier_eigenfunction() {
        let u = solve_biharmonic(&sine(65, 4.0 * PI.powi(4)), NAV).unwrap();
        let err = u.sub(&sine(65, 1.0)).unwrap().max_abs();
        assert!(err < 5e-3, "{err}");
    }

    #[test]
    fn navier_apply_is_laplacian_squared() {
        let spec = GridSpec::new(11, 9, 1.0, 0.8).unwrap();
        let u = GridField2D::from_fn_interior(spec, NAV, |x, y| x * (1.0 - x) * y.sin() + x * y);
        let lap = crate::grid::laplacian(&u).unwrap();
        let mut lap0 = lap.clone();
        lap0.zero_boundary();
        let mut lap2 = crate::grid::laplacian(&lap0).unwrap();
        lap2.zero_boundary();
        let a = apply_biharmonic(&u, NAV).unwrap();
        assert!(a.sub(&lap2).unwrap().max_abs() < 1e-8 * lap2.max_abs());
    }

    #[test]
    fn clamped_operator_is_symmetric() {
        let spec = GridSpec::new(9, 8, 1.0, 1.0).unwrap();
        let solver = BiharmonicSolver::new(spec, DIR);
        let (mx, my) = spec.interior_dims();
        let n = mx * my;
        let basis = |k: usize| {
            let mut e = vec![0.0; n];
            e[k] = 1.0;
            e
        };
        let cols: Vec<Vec<f64>> = (0..n).map(|k| solver.apply_interior(&basis(k), DIR)).collect();
        for a in 0..n {
            for b in 0..n {
                assert!((cols[a][b] - cols[b][a]).abs() < 1e-9 * cols[a][a].abs());
            }
            assert!(cols[a][a] > 0.0);
        }
    }

    #[test]
    fn clamped_solve_inverts_apply() {
        let spec = GridSpec::unit_square(33).unwrap();
        let solver = BiharmonicSolver::new(spec, DIR);
        let f = GridField2D::from_fn_interior(spec, DIR, |x, y| 1.0 + x * y - y * y);
        let (u, stats) = solver.solve_shifted(&f, 0.0).unwrap();
        assert!(stats.relative_residual <= CG_REL_TOL);
        let back = solver.apply(&u).unwrap();
        assert!(back.sub(&f).unwrap().max_abs() < 1e-8 * f.max_abs());
    }

    #[test]
    fn clamped_plate_constant_load_matches_reference() {
        // Clamped square plate under uniform load: centre deflection ≈ 0.00126532 q/D.
        let spec = GridSpec::unit_square(129).unwrap();
        let f = GridField2D::from_fn_interior(spec, DIR, |_, _| 1.0);
        let u = solve_biharmonic(&f, DIR).unwrap();
        let centre = u.get(64, 64);
        assert!((centre - 0.00126532).abs() < 1e-5, "{centre}");
    }

    #[test]
    fn shifted_solve_handles_identity_weight() {
        let spec = GridSpec::unit_square(17).unwrap();
        for bc in [NAV, DIR] {
            let solver = BiharmonicSolver::new(spec, bc);
            let f = GridField2D::from_fn_interior(spec, bc, |x, y| (3.0 * x).sin() * y);
            let shift = 1e5;
            let (u, _) = solver.solve_shifted(&f, shift).unwrap();
            let lhs = solver.apply(&u).unwrap().axpy(shift, &u).unwrap();
            assert!(lhs.sub(&f).unwrap().max_abs() < 1e-8 * f.max_abs());
        }
    }

    proptest! {
        #![proptest_config(ProptestConfig::with_cases(16))]
        #[test]
        fn solve_is_linear(a in -5.0f64..5.0, b in -5.0f64..5.0, k in 1.0f64..6.0, navier in any::<bool>()) {
            let bc = if navier { NAV } else { DIR };
            let spec = GridSpec::new(21, 17, 1.0, 0.9).unwrap();
            let f = GridField2D::from_fn_interior(spec, bc, |x, y| (k * x).cos() * y);
            let g = GridField2D::from_fn_interior(spec, bc, |x, y| x - y * y);
            let solver = BiharmonicSolver::new(spec, bc);
            let lhs = solver.solve(&f.scaled(a).axpy(b, &g).unwrap()).unwrap();
            let rhs = solver.solve(&f).unwrap().scaled(a).axpy(b, &solver.solve(&g).unwrap()).unwrap();
            let scale = rhs.max_abs().max(1e-12);
            prop_assert!(lhs.sub(&rhs).unwrap().max_abs() <= 1e-8 * scale);
        }

        #[test]
        fn navier_solve_inverts_stencil(seed in proptest::collection::vec(-1.0f64..1.0, 15 * 15)) {
            let spec = GridSpec::unit_square(17).unwrap();
            let u = GridField2D::from_interior(spec, NAV, &seed);
            let solver = BiharmonicSolver::new(spec, NAV);
            let back = solver.solve(&solver.apply(&u).unwrap()).unwrap();
            prop_assert!(back.sub(&u).unwrap().max_abs() <= 1e-10);
        }
    }
}
