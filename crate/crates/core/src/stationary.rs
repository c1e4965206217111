//! Stationary problem `Δ²u = det(D²u) + λh` on a rectangle.
//!
//! The clamped problem is the Euler–Lagrange equation of
//!
//! ```text
//! J(u) = ½∫|Δu|² − ∫u_x u_y u_xy − λ∫h u
//! ```
//!
//! whose discrete version lives in [`energy`] / [`energy_gradient`]. The
//! quadratic term uses the ghost-closed Laplacian on every node, which makes
//! its exact gradient `hₓhᵧ·Δ²ₕu` with the same 13-point operator the solvers
//! invert.

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::biharmonic::{dot, BiharmonicSolver};
use crate::error::{Error, Result};
use crate::grid::{hessian_det, quadrature, sobolev_norms, BoundaryCondition, GridField2D, GridSpec};

/// Iterates whose W²,² norm exceeds this multiple of ‖λh‖ count as divergent.
pub const DIVERGENCE_FACTOR: f64 = 1e6;
pub const DEFAULT_MAX_ITER: usize = 500;

/// Built-in forcing profiles.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum ForcingShape {
    /// `h ≡ 1`
    Constant,
    /// First sine eigenfunction of the rectangle.
    Sine,
}

impl ForcingShape {
    pub fn sample(self, grid: GridSpec, bc: BoundaryCondition) -> GridField2D {
        match self {
            ForcingShape::Constant => GridField2D::from_fn(grid, bc, |_, _| 1.0),
            ForcingShape::Sine => {
                let (lx, ly, x0, y0) = (grid.lx, grid.ly, grid.x0, grid.y0);
                GridField2D::from_fn(grid, bc, move |x, y| {
                    (std::f64::consts::PI * (x - x0) / lx).sin()
                        * (std::f64::consts::PI * (y - y0) / ly).sin()
                })
            }
        }
    }
}

/// Domain, boundary condition, forcing and intensity of a stationary problem.
#[derive(Debug, Clone)]
pub struct ProblemSpec {
    pub grid: GridSpec,
    pub bc: BoundaryCondition,
    pub h: GridField2D,
    pub lambda: f64,
}

impl ProblemSpec {
    pub fn new(grid: GridSpec, bc: BoundaryCondition, h: GridField2D, lambda: f64) -> Result<Self> {
        if !grid.same_shape(h.spec()) {
            return Err(Error::GridMismatch("forcing does not match the problem grid".into()));
        }
        h.check_finite()?;
        if !lambda.is_finite() {
            return Err(Error::InvalidParameter(format!("lambda must be finite, got {lambda}")));
        }
        Ok(Self { grid, bc, h: h.with_bc(bc), lambda })
    }

    pub fn with_shape(grid: GridSpec, bc: BoundaryCondition, shape: ForcingShape, lambda: f64) -> Result<Self> {
        Self::new(grid, bc, shape.sample(grid, bc), lambda)
    }

    pub fn with_lambda(&self, lambda: f64) -> Self {
        Self { lambda, ..self.clone() }
    }

    /// `λh` as a field.
    pub fn source(&self) -> GridField2D {
        self.h.scaled(self.lambda)
    }

    fn check_field(&self, u: &GridField2D) -> Result<()> {
        if !self.grid.same_shape(u.spec()) {
            return Err(Error::GridMismatch("field does not match the problem grid".into()));
        }
        u.check_finite()
    }
}

/// The three terms of J and their combination.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct EnergyReport {
    pub quadratic: f64,
    pub cubic: f64,
    pub linear: f64,
    pub total: f64,
}

impl EnergyReport {
    fn from_terms(quadratic: f64, cubic: f64, linear: f64) -> Self {
        Self { quadratic, cubic, linear, total: quadratic - cubic - linear }
    }
}

/// Laplacian at every node with the boundary closed by a ghost node: even
/// reflection (`∂ₙu = 0`) for clamped, odd reflection for hinged boundaries.
fn ghost_laplacian(u: &GridField2D, bc: BoundaryCondition) -> Vec<f64> {
    let spec = u.spec();
    let (nx, ny) = (spec.nx, spec.ny);
    let (ihx2, ihy2) = (1.0 / (spec.hx() * spec.hx()), 1.0 / (spec.hy() * spec.hy()));
    let v = u.values();
    let line = |at: &dyn Fn(usize) -> f64, n: usize, k: usize| -> f64 {
        let (c, inner) = match k {
            0 => (at(0), at(1)),
            k if k == n - 1 => (at(n - 1), at(n - 2)),
            _ => return at(k - 1) - 2.0 * at(k) + at(k + 1),
        };
        let ghost = match bc {
            BoundaryCondition::Dirichlet => inner,
            BoundaryCondition::Navier => 2.0 * c - inner,
        };
        ghost - 2.0 * c + inner
    };
    let mut out = vec![0.0; spec.len()];
    for j in 0..ny {
        for i in 0..nx {
            let dxx = line(&|k| v[j * nx + k], nx, i);
            let dyy = line(&|k| v[k * nx + i], ny, j);
            out[j * nx + i] = dxx * ihx2 + dyy * ihy2;
        }
    }
    out
}

/// Centered `(u_x, u_y, u_xy)` at interior node `k`.
#[inline]
fn centered_first(v: &[f64], k: usize, nx: usize, hx: f64, hy: f64) -> (f64, f64, f64) {
    let ux = (v[k + 1] - v[k - 1]) / (2.0 * hx);
    let uy = (v[k + nx] - v[k - nx]) / (2.0 * hy);
    let uxy = (v[k + nx + 1] - v[k + nx - 1] - v[k - nx + 1] + v[k - nx - 1]) / (4.0 * hx * hy);
    (ux, uy, uxy)
}

/// `∫u_x u_y u_xy` by the interior midpoint-in-cell sum. On a homogeneous
/// boundary one of `u_x`, `u_y` is tangential and vanishes, so boundary nodes
/// contribute nothing.
fn cubic_term(u: &GridField2D) -> f64 {
    let spec = u.spec();
    let (nx, ny, hx, hy) = (spec.nx, spec.ny, spec.hx(), spec.hy());
    let v = u.values();
    let mut s = 0.0;
    for j in 1..ny - 1 {
        for i in 1..nx - 1 {
            let (ux, uy, uxy) = centered_first(v, j * nx + i, nx, hx, hy);
            s += ux * uy * uxy;
        }
    }
    s * hx * hy
}

/// Exact `C(u + αd) − C(u)` for the cubic term, expanded in powers of α.
fn cubic_change(u: &GridField2D, d: &GridField2D, alpha: f64) -> f64 {
    let spec = u.spec();
    let (nx, ny, hx, hy) = (spec.nx, spec.ny, spec.hx(), spec.hy());
    let (v, w) = (u.values(), d.values());
    let (mut s1, mut s2, mut s3) = (0.0, 0.0, 0.0);
    for j in 1..ny - 1 {
        for i in 1..nx - 1 {
            let k = j * nx + i;
            let (ux, uy, uxy) = centered_first(v, k, nx, hx, hy);
            let (dx, dy, dxy) = centered_first(w, k, nx, hx, hy);
            s1 += dx * uy * uxy + ux * dy * uxy + ux * uy * dxy;
            s2 += dx * dy * uxy + dx * uy * dxy + ux * dy * dxy;
            s3 += dx * dy * dxy;
        }
    }
    hx * hy * alpha * (s1 + alpha * (s2 + alpha * s3))
}

/// Discrete J_λ and its three terms.
pub fn energy(u: &GridField2D, spec: &ProblemSpec) -> Result<EnergyReport> {
    spec.check_field(u)?;
    let lap = ghost_laplacian(u, spec.bc);
    let sq = GridField2D::from_values(spec.grid, spec.bc, lap.iter().map(|l| l * l).collect())?;
    let quadratic = 0.5 * quadrature(&sq);
    let cubic = cubic_term(u);
    let hu = GridField2D::from_values(
        spec.grid,
        spec.bc,
        spec.h.values().iter().zip(u.values()).map(|(h, u)| h * u).collect(),
    )?;
    let linear = spec.lambda * quadrature(&hu);
    Ok(EnergyReport::from_terms(quadratic, cubic, linear))
}

/// Gradient of the discrete cubic term with respect to interior nodal values.
fn cubic_gradient(u: &GridField2D) -> Vec<f64> {
    let spec = u.spec();
    let (nx, ny, hx, hy) = (spec.nx, spec.ny, spec.hx(), spec.hy());
    let v = u.values();
    let mut g = vec![0.0; spec.len()];
    let (cx, cy, cxy) = (hy / 2.0, hx / 2.0, 0.25);
    for j in 1..ny - 1 {
        for i in 1..nx - 1 {
            let k = j * nx + i;
            let (ux, uy, uxy) = centered_first(v, k, nx, hx, hy);
            // ∂/∂u_m of hₓhᵧ·a·b·c, scattered through each stencil.
            let da = cx * uy * uxy;
            g[k + 1] += da;
            g[k - 1] -= da;
            let db = cy * ux * uxy;
            g[k + nx] += db;
            g[k - nx] -= db;
            let dc = cxy * ux * uy;
            g[k + nx + 1] += dc;
            g[k - nx - 1] += dc;
            g[k + nx - 1] -= dc;
            g[k - nx + 1] -= dc;
        }
    }
    g
}

/// Discrete first variation of J_λ with respect to the interior nodal values;
/// zero on the boundary ring.
pub fn energy_gradient(u: &GridField2D, spec: &ProblemSpec) -> Result<GridField2D> {
    let solver = BiharmonicSolver::new(spec.grid, spec.bc);
    energy_gradient_with(u, spec, &solver)
}

fn energy_gradient_with(u: &GridField2D, spec: &ProblemSpec, solver: &BiharmonicSolver) -> Result<GridField2D> {
    spec.check_field(u)?;
    let cell = spec.grid.hx() * spec.grid.hy();
    let au = solver.apply(u)?;
    let cg = cubic_gradient(u);
    let mut g: Vec<f64> = au
        .values()
        .iter()
        .zip(&cg)
        .zip(spec.h.values())
        .map(|((a, c), h)| cell * a - c - spec.lambda * cell * h)
        .collect();
    let mut out = GridField2D::from_values(spec.grid, spec.bc, std::mem::take(&mut g))?;
    out.zero_boundary();
    Ok(out)
}

/// L² norm of the gradient's density `G / (hₓhᵧ)` over interior nodes.
pub fn gradient_norm(g: &GridField2D) -> f64 {
    let cell = g.spec().hx() * g.spec().hy();
    (g.interior().iter().map(|v| v * v).sum::<f64>() / cell).sqrt()
}

/// Interior L² norm (trapezoid, boundary excluded).
fn interior_l2(f: &GridField2D) -> f64 {
    let cell = f.spec().hx() * f.spec().hy();
    (cell * f.interior().iter().map(|v| v * v).sum::<f64>()).sqrt()
}

/// Residual `‖Δ²u − det D²u − λh‖₂` over interior nodes.
pub fn stationary_residual(u: &GridField2D, spec: &ProblemSpec) -> Result<f64> {
    let solver = BiharmonicSolver::new(spec.grid, spec.bc);
    stationary_residual_with(u, spec, &solver)
}

fn stationary_residual_with(u: &GridField2D, spec: &ProblemSpec, solver: &BiharmonicSolver) -> Result<f64> {
    spec.check_field(u)?;
    let r = solver.apply(u)?.sub(&hessian_det(u)?)?.sub(&spec.source())?;
    Ok(interior_l2(&r))
}

/// A solution candidate together with its diagnostics.
#[derive(Debug, Clone)]
pub struct StationarySolution {
    pub u: GridField2D,
    pub residual: f64,
    pub iterations: usize,
    pub energy: EnergyReport,
    pub converged: bool,
    /// Energy after each accepted step (descent only).
    pub energy_history: Vec<f64>,
}

/// Picard iteration `u⁺ = (Δ²)⁻¹(det D²u + λh)` from `u = 0`.
///
/// Converges when successive iterates are within `tol` in the discrete W²,²
/// norm. Iterates growing past [`DIVERGENCE_FACTOR`]·‖λh‖ (or turning
/// non-finite) abort with [`Error::Divergence`].
pub fn fixed_point_solve(spec: &ProblemSpec, tol: f64, max_iter: usize) -> Result<StationarySolution> {
    if !(tol > 0.0) {
        return Err(Error::InvalidParameter(format!("tol must be positive, got {tol}")));
    }
    let solver = BiharmonicSolver::new(spec.grid, spec.bc);
    let source = spec.source();
    let scale = interior_l2(&source);
    let mut u = GridField2D::zeros(spec.grid, spec.bc);
    let mut last_update = f64::INFINITY;
    for iteration in 1..=max_iter {
        let rhs = match hessian_det(&u).and_then(|d| d.axpy(1.0, &source)) {
            Ok(r) => r,
            Err(_) => return Err(Error::Divergence { iteration, norm: f64::INFINITY }),
        };
        let next = match solver.solve(&rhs) {
            Ok(n) => n,
            Err(Error::NonFinite { .. }) => return Err(Error::Divergence { iteration, norm: f64::INFINITY }),
            Err(e) => return Err(e),
        };
        let norm = sobolev_norms(&next).map(|n| n.sobolev22).unwrap_or(f64::INFINITY);
        if !norm.is_finite() || norm > DIVERGENCE_FACTOR * scale {
            return Err(Error::Divergence { iteration, norm });
        }
        last_update = sobolev_norms(&next.sub(&u)?)?.sobolev22;
        u = next;
        if last_update <= tol {
            let residual = stationary_residual_with(&u, spec, &solver)?;
            let energy = energy(&u, spec)?;
            return Ok(StationarySolution {
                u,
                residual,
                iterations: iteration,
                energy,
                converged: true,
                energy_history: Vec::new(),
            });
        }
    }
    Err(Error::MaxIter { max_iter, last_update })
}

const ARMIJO_C: f64 = 1e-4;
const MAX_BACKTRACKS: usize = 50;

/// Preconditioned steepest descent on J_λ for the clamped problem.
///
/// The search direction is the H²-gradient `−(Δ²ₕ)⁻¹(G/hₓhᵧ)`, steps are
/// chosen by Armijo backtracking from `α = 1`, and the iteration stops once
/// [`gradient_norm`] drops to `tol`. Energy changes are evaluated by exact
/// polynomial expansion rather than by differencing two energies.
pub fn descent_solve(spec: &ProblemSpec, tol: f64, max_iter: usize) -> Result<StationarySolution> {
    if spec.bc != BoundaryCondition::Dirichlet {
        return Err(Error::InvalidParameter(
            "energy descent needs the clamped (dirichlet) problem; the hinged problem has no known functional"
                .into(),
        ));
    }
    if !(tol > 0.0) {
        return Err(Error::InvalidParameter(format!("tol must be positive, got {tol}")));
    }
    let solver = BiharmonicSolver::new(spec.grid, spec.bc);
    let cell = spec.grid.hx() * spec.grid.hy();
    let mut u = GridField2D::zeros(spec.grid, spec.bc);
    let mut current = energy(&u, spec)?.total;
    let mut history = vec![current];
    for iteration in 0..=max_iter {
        let g = energy_gradient_with(&u, spec, &solver)?;
        let gnorm = gradient_norm(&g);
        if gnorm <= tol {
            let residual = stationary_residual_with(&u, spec, &solver)?;
            let energy = energy(&u, spec)?;
            return Ok(StationarySolution {
                u,
                residual,
                iterations: iteration,
                energy,
                converged: true,
                energy_history: history,
            });
        }
        if iteration == max_iter {
            return Err(Error::MaxIter { max_iter, last_update: gnorm });
        }
        let d = solver.solve(&g.scaled(-1.0 / cell))?;
        let ad = solver.apply(&d)?;
        let au = solver.apply(&u)?;
        let slope = dot(g.values(), d.values());
        if !(slope < 0.0) {
            return Err(Error::LineSearchStagnation { iteration, gradient_norm: gnorm });
        }
        let curvature = cell * dot(ad.values(), d.values());
        let lin_au = cell * dot(au.values(), d.values());
        let lin_h = cell * spec.lambda * dot(spec.h.values(), d.values());
        let change = |alpha: f64| {
            alpha * lin_au + 0.5 * alpha * alpha * curvature - cubic_change(&u, &d, alpha) - alpha * lin_h
        };
        let mut alpha = 1.0;
        let mut accepted = None;
        for _ in 0..MAX_BACKTRACKS {
            let dj = change(alpha);
            if dj.is_finite() && dj <= ARMIJO_C * alpha * slope {
                accepted = Some(dj);
                break;
            }
            alpha *= 0.5;
        }
        let dj = accepted.ok_or(Error::LineSearchStagnation { iteration, gradient_norm: gnorm })?;
        u = u.axpy(alpha, &d)?;
        current += dj;
        history.push(current);
    }
    unreachable!("loop returns on its final iteration")
}

/// One row of a λ sweep.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct ContinuationRow {
    pub lambda: f64,
    pub converged: bool,
    pub residual: Option<f64>,
    pub norm: Option<f64>,
    pub iterations: Option<usize>,
    pub failure: Option<String>,
}

/// λ sweep results and the convergence bracket they imply.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct ContinuationTable {
    pub rows: Vec<ContinuationRow>,
    /// `(last convergent λ, first failing λ)`, when a failure occurred after a success.
    pub bracket: Option<(f64, f64)>,
}

impl ContinuationTable {
    pub fn bracket_width(&self) -> Option<f64> {
        self.bracket.map(|(a, b)| b - a)
    }

    pub fn to_csv(&self) -> String {
        let mut s = String::from("lambda,converged,residual,norm\n");
        for r in &self.rows {
            let opt = |v: Option<f64>| v.map(|x| format!("{x:e}")).unwrap_or_else(|| "nan".into());
            s.push_str(&format!("{:e},{},{},{}\n", r.lambda, r.converged, opt(r.residual), opt(r.norm)));
        }
        s
    }
}

/// Runs [`fixed_point_solve`] at every λ of an increasing grid.
pub fn continuation_lambda(
    template: &ProblemSpec,
    lambda_grid: &[f64],
    tol: f64,
    max_iter: usize,
) -> Result<ContinuationTable> {
    if lambda_grid.windows(2).any(|w| !(w[1] > w[0])) {
        return Err(Error::InvalidParameter("lambda grid must be strictly increasing".into()));
    }
    if lambda_grid.iter().any(|l| *l < 0.0 || !l.is_finite()) {
        return Err(Error::InvalidParameter("lambda grid must be finite and non-negative".into()));
    }
    let rows: Vec<ContinuationRow> = lambda_grid
        .par_iter()
        .map(|&lambda| match fixed_point_solve(&template.with_lambda(lambda), tol, max_iter) {
            Ok(sol) => ContinuationRow {
                lambda,
                converged: true,
                residual: Some(sol.residual),
                norm: sobolev_norms(&sol.u).ok().map(|n| n.sobolev22),
                iterations: Some(sol.iterations),
                failure: None,
            },
            Err(e) => ContinuationRow {
                lambda,
                converged: false,
                residual: None,
                norm: None,
                iterations: None,
                failure: Some(e.to_string()),
            },
        })
        .collect();
    let bracket = rows.iter().position(|r| !r.converged).and_then(|first_fail| {
        (first_fail > 0).then(|| (rows[first_fail - 1].lambda, rows[first_fail].lambda))
    });
    Ok(ContinuationTable { rows, bracket })
}

/// `n` logarithmically spaced values from `lo` to `hi` inclusive.
pub fn log_grid(lo: f64, hi: f64, n: usize) -> Vec<f64> {
    if n == 1 {
        return vec![lo];
    }
    let (a, b) = (lo.ln(), hi.ln());
    (0..n).map(|k| (a + (b - a) * k as f64 / (n - 1) as f64).exp()).collect()
}
