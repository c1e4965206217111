//! Rotationally symmetric stationary problem on the unit disc.
//!
//! For `u = u(r)` the stationary equation reads
//! `(1/r){r[(1/r)(ru′)′]′}′ − u′u″/r = λh(r)`. Multiplying by `r` and
//! integrating once from the centre, where `u′(0) = 0`, gives the first
//! integral
//!
//! ```text
//! r (Δ_r u)′ = (u′)²/2 + λH(r),   H(r) = ∫₀ʳ s h(s) ds.
//! ```
//!
//! With `w = u′` this is the second-order problem `(rw′)′ − w/r = w²/2 + λH`,
//! `w(0) = 0`, closed at `r = 1` by `w = 0` (clamped) or `w′ + w = 0`
//! (hinged, i.e. `Δ_r u = 0`). It is discretised conservatively on a uniform
//! grid and solved by damped Newton with a tridiagonal Jacobian; `u` is then
//! recovered from `u(1) = 0`.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::grid::BoundaryCondition;

pub const MIN_NODES: usize = 16;
pub const DEFAULT_MAX_NEWTON: usize = 50;
const MIN_DAMPING: f64 = 1.0 / 1024.0;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RadialProblem {
    pub nr: usize,
    pub bc: BoundaryCondition,
    /// Forcing sampled at `r_i = i/(nr−1)`.
    pub h: Vec<f64>,
    pub lambda: f64,
}

impl RadialProblem {
    pub fn new(nr: usize, bc: BoundaryCondition, h: Vec<f64>, lambda: f64) -> Result<Self> {
        let p = Self { nr, bc, h, lambda };
        p.validate()?;
        Ok(p)
    }

    /// Forcing `h ≡ 1`.
    pub fn constant(nr: usize, bc: BoundaryCondition, lambda: f64) -> Result<Self> {
        Self::new(nr, bc, vec![1.0; nr], lambda)
    }

    pub fn from_fn(nr: usize, bc: BoundaryCondition, lambda: f64, h: impl Fn(f64) -> f64) -> Result<Self> {
        let dr = 1.0 / (nr.max(2) - 1) as f64;
        Self::new(nr, bc, (0..nr).map(|i| h(i as f64 * dr)).collect(), lambda)
    }

    pub fn validate(&self) -> Result<()> {
        if self.nr < MIN_NODES {
            return Err(Error::InvalidParameter(format!("nr must be at least {MIN_NODES}, got {}", self.nr)));
        }
        if self.h.len() != self.nr {
            return Err(Error::InvalidParameter(format!("h has {} samples for nr = {}", self.h.len(), self.nr)));
        }
        if let Some(index) = self.h.iter().position(|v| !v.is_finite()) {
            return Err(Error::NonFinite { index });
        }
        if !self.lambda.is_finite() {
            return Err(Error::InvalidParameter(format!("lambda must be finite, got {}", self.lambda)));
        }
        Ok(())
    }

    pub fn with_lambda(&self, lambda: f64) -> Self {
        Self { lambda, ..self.clone() }
    }

    pub fn dr(&self) -> f64 {
        1.0 / (self.nr - 1) as f64
    }

    pub fn r(&self) -> Vec<f64> {
        let dr = self.dr();
        (0..self.nr).map(|i| i as f64 * dr).collect()
    }

    /// `H(r_i) = ∫₀^{r_i} s h(s) ds` by the trapezoid rule (exact for `h` constant).
    pub fn forcing_integral(&self) -> Vec<f64> {
        let dr = self.dr();
        let mut out = vec![0.0; self.nr];
        for i in 1..self.nr {
            let (a, b) = ((i - 1) as f64 * dr, i as f64 * dr);
            out[i] = out[i - 1] + 0.5 * dr * (a * self.h[i - 1] + b * self.h[i]);
        }
        out
    }

    /// Number of Newton unknowns `w_1, …`: the clamped end value is fixed.
    fn unknowns(&self) -> usize {
        match self.bc {
            BoundaryCondition::Dirichlet => self.nr - 2,
            BoundaryCondition::Navier => self.nr - 1,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RadialSolution {
    pub lambda: f64,
    pub r: Vec<f64>,
    pub u: Vec<f64>,
    /// `u′`
    pub up: Vec<f64>,
    /// `Δ_r u = u″ + u′/r`
    pub lap: Vec<f64>,
    /// Discrete L² norm of the first-integral residual.
    pub residual: f64,
    /// `|(Δ_r u)′(0)|`, extrapolated linearly from `(Δ_r u)′ = (w²/2 + λH)/r`
    /// at the first two nodes.
    pub center_lap_slope: f64,
    pub iterations: usize,
    pub converged: bool,
}

impl RadialSolution {
    pub fn max_abs(&self) -> f64 {
        self.u.iter().fold(0.0, |m, v| m.max(v.abs()))
    }

    /// `CSV` with columns `r,u,up,lap`.
    pub fn to_csv(&self) -> String {
        let mut out = String::from("r,u,up,lap\n");
        for i in 0..self.r.len() {
            out.push_str(&format!("{:e},{:e},{:e},{:e}\n", self.r[i], self.u[i], self.up[i], self.lap[i]));
        }
        out
    }
}

/// Residual of `(rw′)′ − w/r − w²/2 − λH` at every node for `w = u′` on the
/// full grid (entries at `r = 0` and, for clamped ends, `r = 1` are zero).
fn residual_w(w: &[f64], prob: &RadialProblem, big_h: &[f64]) -> Vec<f64> {
    let n = prob.nr;
    let dr = prob.dr();
    let mut out = vec![0.0; n];
    let last = match prob.bc {
        BoundaryCondition::Dirichlet => n - 1,
        BoundaryCondition::Navier => n,
    };
    for i in 1..last {
        let r = i as f64 * dr;
        let (rm, rp) = (r - 0.5 * dr, r + 0.5 * dr);
        let wp = if i + 1 < n { w[i + 1] } else { w[n - 2] - 2.0 * dr * w[n - 1] };
        let flux = (rp * (wp - w[i]) - rm * (w[i] - w[i - 1])) / (dr * dr);
        out[i] = flux - w[i] / r - 0.5 * w[i] * w[i] - prob.lambda * big_h[i];
    }
    out
}

fn l2(v: &[f64], dr: f64) -> f64 {
    (v.iter().map(|x| x * x).sum::<f64>() * dr).sqrt()
}

/// First-integral residual for sampled `u` (second-order differences for `u′`).
pub fn radial_residual(u: &[f64], prob: &RadialProblem) -> Result<Vec<f64>> {
    prob.validate()?;
    if u.len() != prob.nr {
        return Err(Error::InvalidParameter(format!("u has {} samples for nr = {}", u.len(), prob.nr)));
    }
    let n = prob.nr;
    let dr = prob.dr();
    let mut w = vec![0.0; n];
    for i in 1..n - 1 {
        w[i] = (u[i + 1] - u[i - 1]) / (2.0 * dr);
    }
    w[n - 1] = (3.0 * u[n - 1] - 4.0 * u[n - 2] + u[n - 3]) / (2.0 * dr);
    Ok(residual_w(&w, prob, &prob.forcing_integral()))
}

/// Thomas algorithm; `None` when a pivot vanishes relative to the row scale.
fn solve_tridiagonal(sub: &[f64], diag: &[f64], sup: &[f64], rhs: &[f64]) -> Option<Vec<f64>> {
    let m = diag.len();
    let mut c = vec![0.0; m];
    let mut d = vec![0.0; m];
    let mut pivot = diag[0];
    let scale = |i: usize| diag[i].abs() + sub[i].abs() + sup[i].abs();
    if pivot.abs() <= 1e-14 * scale(0) {
        return None;
    }
    c[0] = sup[0] / pivot;
    d[0] = rhs[0] / pivot;
    for i in 1..m {
        pivot = diag[i] - sub[i] * c[i - 1];
        if pivot.abs() <= 1e-14 * scale(i) {
            return None;
        }
        c[i] = sup[i] / pivot;
        d[i] = (rhs[i] - sub[i] * d[i - 1]) / pivot;
    }
    for i in (0..m - 1).rev() {
        d[i] -= c[i] * d[i + 1];
    }
    Some(d)
}

fn assemble(w: &[f64], prob: &RadialProblem, big_h: &[f64]) -> RadialSolution {
    let n = prob.nr;
    let dr = prob.dr();
    let r = prob.r();
    let mut u = vec![0.0; n];
    for i in (0..n - 1).rev() {
        u[i] = u[i + 1] - 0.5 * dr * (w[i] + w[i + 1]);
    }
    let mut lap = vec![0.0; n];
    lap[0] = 2.0 * w[1] / dr;
    for i in 1..n - 1 {
        lap[i] = (w[i + 1] - w[i - 1]) / (2.0 * dr) + w[i] / r[i];
    }
    lap[n - 1] = match prob.bc {
        BoundaryCondition::Dirichlet => (3.0 * w[n - 1] - 4.0 * w[n - 2] + w[n - 3]) / (2.0 * dr) + w[n - 1],
        BoundaryCondition::Navier => 0.0,
    };
    let residual = l2(&residual_w(w, prob, big_h), dr);
    let q = |i: usize| (0.5 * w[i] * w[i] + prob.lambda * big_h[i]) / r[i];
    let center_lap_slope = (2.0 * q(1) - q(2)).abs();
    RadialSolution {
        lambda: prob.lambda,
        r,
        u,
        up: w.to_vec(),
        lap,
        residual,
        center_lap_slope,
        iterations: 0,
        converged: false,
    }
}

/// Damped Newton from `guess` (values of `u′` on the grid, or zero).
pub fn radial_solve_from(prob: &RadialProblem, tol: f64, guess: Option<&[f64]>) -> Result<RadialSolution> {
    prob.validate()?;
    if !(tol > 0.0) {
        return Err(Error::InvalidParameter(format!("tol must be positive, got {tol}")));
    }
    let n = prob.nr;
    let dr = prob.dr();
    let big_h = prob.forcing_integral();
    let mut w = match guess {
        Some(g) if g.len() == n => g.to_vec(),
        Some(g) => {
            return Err(Error::InvalidParameter(format!("guess has {} samples for nr = {n}", g.len())));
        }
        None => vec![0.0; n],
    };
    w[0] = 0.0;
    if prob.bc == BoundaryCondition::Dirichlet {
        w[n - 1] = 0.0;
    }
    let m = prob.unknowns();
    let fail = |reason: String| Error::NewtonFailure { lambda: prob.lambda, reason };
    let mut res = residual_w(&w, prob, &big_h);
    let mut norm = l2(&res, dr);
    for iter in 0..=DEFAULT_MAX_NEWTON {
        if !norm.is_finite() {
            return Err(fail(format!("non-finite residual at iteration {iter}")));
        }
        if norm <= tol {
            let mut sol = assemble(&w, prob, &big_h);
            sol.iterations = iter;
            sol.converged = true;
            return Ok(sol);
        }
        if iter == DEFAULT_MAX_NEWTON {
            break;
        }
        let (mut sub, mut diag, mut sup) = (vec![0.0; m], vec![0.0; m], vec![0.0; m]);
        for k in 0..m {
            let i = k + 1;
            let r = i as f64 * dr;
            let (rm, rp) = (r - 0.5 * dr, r + 0.5 * dr);
            diag[k] = -(rp + rm) / (dr * dr) - 1.0 / r - w[i];
            sub[k] = rm / (dr * dr);
            sup[k] = rp / (dr * dr);
            if i == n - 1 {
                // Hinged end: ghost value w_{n} = w_{n−2} − 2dr·w_{n−1}.
                diag[k] -= rp * 2.0 * dr / (dr * dr);
                sub[k] += rp / (dr * dr);
                sup[k] = 0.0;
            }
        }
        sub[0] = 0.0;
        let rhs: Vec<f64> = (0..m).map(|k| -res[k + 1]).collect();
        let step = solve_tridiagonal(&sub, &diag, &sup, &rhs)
            .ok_or_else(|| fail(format!("singular Jacobian at iteration {iter}")))?;
        let mut alpha = 1.0;
        loop {
            let mut trial = w.clone();
            for k in 0..m {
                trial[k + 1] += alpha * step[k];
            }
            let tr = residual_w(&trial, prob, &big_h);
            let tn = l2(&tr, dr);
            if tn.is_finite() && tn < (1.0 - 1e-4 * alpha) * norm {
                w = trial;
                res = tr;
                norm = tn;
                break;
            }
            alpha *= 0.5;
            if alpha < MIN_DAMPING {
                return Err(fail(format!("step collapse at iteration {iter}, residual {norm:.3e}")));
            }
        }
    }
    Err(fail(format!("no convergence in {DEFAULT_MAX_NEWTON} iterations, residual {norm:.3e}")))
}

/// Newton from `u ≡ 0`.
pub fn radial_solve(prob: &RadialProblem, tol: f64) -> Result<RadialSolution> {
    radial_solve_from(prob, tol, None)
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RadialStep {
    pub lambda: f64,
    pub converged: bool,
    pub iterations: usize,
    pub max_abs_u: f64,
    pub failure: Option<String>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FoldBracket {
    /// Largest intensity with a converged solution.
    pub lambda_ok: f64,
    /// Smallest intensity tried that failed; `None` if none failed.
    pub lambda_fail: Option<f64>,
    pub history: Vec<RadialStep>,
    #[serde(skip)]
    pub last_solution: Option<RadialSolution>,
}

impl FoldBracket {
    pub fn relative_width(&self) -> Option<f64> {
        self.lambda_fail.map(|f| (f - self.lambda_ok) / f)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ContinuationOptions {
    pub tol: f64,
    /// Bisection stops once `(λ_fail − λ_ok)/λ_fail` is at most this.
    pub rel_width: f64,
    /// Start every solve from the last converged solution instead of zero.
    pub warm_start: bool,
}

impl Default for ContinuationOptions {
    fn default() -> Self {
        Self { tol: 1e-10, rel_width: 1e-3, warm_start: true }
    }
}

/// Walks the increasing `steps`; at the first failure, bisects between the last
/// success and the failure.
pub fn radial_continuation(template: &RadialProblem, steps: &[f64], opts: ContinuationOptions) -> Result<FoldBracket> {
    template.validate()?;
    if steps.is_empty() || steps.windows(2).any(|w| !(w[1] > w[0])) || steps[0] < 0.0 {
        return Err(Error::InvalidParameter("lambda steps must be non-negative and strictly increasing".into()));
    }
    let mut history = Vec::new();
    let mut best: Option<RadialSolution> = None;
    let attempt = |lambda: f64, from: &Option<RadialSolution>, history: &mut Vec<RadialStep>| {
        let guess = if opts.warm_start { from.as_ref().map(|s| s.up.as_slice()) } else { None };
        let out = radial_solve_from(&template.with_lambda(lambda), opts.tol, guess);
        history.push(match &out {
            Ok(s) => RadialStep { lambda, converged: true, iterations: s.iterations, max_abs_u: s.max_abs(), failure: None },
            Err(e) => RadialStep { lambda, converged: false, iterations: 0, max_abs_u: f64::NAN, failure: Some(e.to_string()) },
        });
        out.ok()
    };
    let mut lambda_ok = f64::NAN;
    let mut lambda_fail = None;
    for &lambda in steps {
        match attempt(lambda, &best, &mut history) {
            Some(sol) => {
                lambda_ok = lambda;
                best = Some(sol);
            }
            None => {
                lambda_fail = Some(lambda);
                break;
            }
        }
    }
    if let (Some(mut hi), false) = (lambda_fail, lambda_ok.is_nan()) {
        let mut lo = lambda_ok;
        while (hi - lo) / hi > opts.rel_width {
            let mid = 0.5 * (lo + hi);
            match attempt(mid, &best, &mut history) {
                Some(sol) => {
                    lo = mid;
                    best = Some(sol);
                }
                None => hi = mid,
            }
        }
        lambda_ok = lo;
        lambda_fail = Some(hi);
    }
    Ok(FoldBracket { lambda_ok, lambda_fail, history, last_solution: best })
}

/// `n + 1` evenly spaced intensities on `[0, lambda_max]`.
pub fn linear_steps(lambda_max: f64, n: usize) -> Vec<f64> {
    (0..=n).map(|k| lambda_max * k as f64 / n.max(1) as f64).collect()
}
