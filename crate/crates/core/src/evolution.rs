//! First-order IMEX time stepping for `u_t + Δ²u = det(D²u) + λh`.
//!
//! Each step solves `(I + dt·Δ²)u⁺ = u + dt(det D²uⁿ + λh(tⁿ⁺¹))`: the stiff
//! bilaplacian is implicit, the nonlinearity explicit. Runs stop early when the
//! W²,² norm falls below a decay threshold (unforced runs only) or exceeds a
//! blow-up cap.

use std::fmt;
use std::sync::Arc;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::biharmonic::BiharmonicSolver;
use crate::error::{Error, Result};
use crate::grid::{hessian_det, quadrature, sobolev_norms, BoundaryCondition, GridField2D};
use crate::stationary::{energy, ProblemSpec};

pub const DECAY_THRESHOLD: f64 = 1e-8;
/// Default cap: this multiple of the reference norm (initial data or forcing).
pub const BLOWUP_FACTOR: f64 = 1e6;
/// Number of trailing samples used to extrapolate the blow-up time.
pub const T_STAR_WINDOW: usize = 5;
/// Relative boundary values below this are treated as round-off and cleared.
const BOUNDARY_ROUNDOFF: f64 = 1e-12;

/// `h(t)`; multiplied by `λ` and sampled at the new time level of every step.
pub type ForcingProvider = Arc<dyn Fn(f64) -> GridField2D + Send + Sync>;

#[derive(Clone)]
pub struct EvolutionConfig {
    /// Grid, boundary condition, intensity and (time-independent) forcing.
    pub spec: ProblemSpec,
    pub u0: GridField2D,
    pub dt: f64,
    pub t_max: f64,
    /// Keep a snapshot every this many steps (0 keeps only the initial and final fields).
    pub snapshot_every: usize,
    /// Explicit blow-up cap on the W²,² norm; `None` uses [`BLOWUP_FACTOR`] times the reference norm.
    pub blowup_norm_cap: Option<f64>,
    /// Replaces `spec.h` when present.
    pub forcing: Option<ForcingProvider>,
}

impl fmt::Debug for EvolutionConfig {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.debug_struct("EvolutionConfig")
            .field("bc", &self.spec.bc)
            .field("lambda", &self.spec.lambda)
            .field("dt", &self.dt)
            .field("t_max", &self.t_max)
            .field("snapshot_every", &self.snapshot_every)
            .field("blowup_norm_cap", &self.blowup_norm_cap)
            .field("time_dependent_forcing", &self.forcing.is_some())
            .finish()
    }
}

impl EvolutionConfig {
    pub fn new(spec: ProblemSpec, u0: GridField2D, dt: f64, t_max: f64) -> Self {
        Self { spec, u0, dt, t_max, snapshot_every: 0, blowup_norm_cap: None, forcing: None }
    }

    pub fn validate(&self) -> Result<()> {
        if !(self.dt > 0.0 && self.dt.is_finite()) {
            return Err(Error::InvalidParameter(format!("dt must be positive, got {}", self.dt)));
        }
        if !(self.t_max > 0.0 && self.t_max.is_finite()) {
            return Err(Error::InvalidParameter(format!("t_max must be positive, got {}", self.t_max)));
        }
        if !self.spec.grid.same_shape(self.u0.spec()) {
            return Err(Error::GridMismatch("initial data does not match the problem grid".into()));
        }
        self.u0.check_finite()?;
        let edge = self.u0.boundary_max_abs();
        if edge > BOUNDARY_ROUNDOFF * self.u0.max_abs().max(1.0) {
            return Err(Error::InvalidParameter(format!("initial data must vanish on the boundary, found {edge:e}")));
        }
        if let Some(cap) = self.blowup_norm_cap {
            if !(cap > 0.0) {
                return Err(Error::InvalidParameter(format!("blowup_norm_cap must be positive, got {cap}")));
            }
        }
        Ok(())
    }

    /// `λh(t)` as a field.
    pub fn source_at(&self, t: f64) -> GridField2D {
        match &self.forcing {
            Some(p) => p(t).with_bc(self.spec.bc).scaled(self.spec.lambda),
            None => self.spec.source(),
        }
    }

    fn unforced(&self) -> bool {
        self.spec.lambda == 0.0 || (self.forcing.is_none() && self.spec.h.max_abs() == 0.0)
    }
}

/// One reusable implicit solver for a fixed grid and boundary condition.
pub struct ImexStepper {
    solver: BiharmonicSolver,
}

impl ImexStepper {
    pub fn new(spec: &ProblemSpec) -> Self {
        Self { solver: BiharmonicSolver::new(spec.grid, spec.bc) }
    }

    /// `(I + dt·Δ²)⁻¹(u + dt(det D²u + source))`.
    pub fn step(&self, u: &GridField2D, source: &GridField2D, dt: f64) -> Result<GridField2D> {
        let explicit = hessian_det(u)?.axpy(1.0, source)?;
        let rhs = explicit.axpy(1.0 / dt, u)?;
        self.solver.solve_shifted(&rhs, 1.0 / dt).map(|(v, _)| v)
    }
}

/// A single step with the time-independent forcing of `spec`.
pub fn imex_step(u: &GridField2D, spec: &ProblemSpec, dt: f64) -> Result<GridField2D> {
    if !(dt > 0.0 && dt.is_finite()) {
        return Err(Error::InvalidParameter(format!("dt must be positive, got {dt}")));
    }
    if !spec.grid.same_shape(u.spec()) {
        return Err(Error::GridMismatch("field does not match the problem grid".into()));
    }
    ImexStepper::new(spec).step(&u.clone().with_bc(spec.bc), &spec.source(), dt)
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub enum Outcome {
    ReachedHorizon,
    Decayed,
    BlowUp,
    /// A step failed (e.g. a linear solve or a non-finite state); the trace is partial.
    Aborted(String),
}

impl Outcome {
    pub fn label(&self) -> &'static str {
        match self {
            Outcome::ReachedHorizon => "ReachedHorizon",
            Outcome::Decayed => "Decayed",
            Outcome::BlowUp => "BlowUp",
            Outcome::Aborted(_) => "Aborted",
        }
    }
}

#[derive(Debug, Clone)]
pub struct EvolutionTrace {
    pub times: Vec<f64>,
    pub sobolev22: Vec<f64>,
    /// `J_λ(u(t))` at every recorded time (clamped runs only).
    pub energy: Option<Vec<f64>>,
    pub snapshots: Vec<(f64, GridField2D)>,
    pub outcome: Outcome,
    /// Root of the line through `(t, 1/‖u‖)` over the last samples; a heuristic.
    pub t_star_estimate: Option<f64>,
    pub blowup_norm_cap: f64,
    pub steps: usize,
}

impl EvolutionTrace {
    /// `t,sobolev22[,energy]`.
    pub fn to_csv(&self) -> String {
        let mut out = String::from(if self.energy.is_some() { "t,sobolev22,energy\n" } else { "t,sobolev22\n" });
        for (k, (t, n)) in self.times.iter().zip(&self.sobolev22).enumerate() {
            match &self.energy {
                Some(e) => out.push_str(&format!("{t:e},{n:e},{:e}\n", e[k])),
                None => out.push_str(&format!("{t:e},{n:e}\n")),
            }
        }
        out
    }

    pub fn final_field(&self) -> Option<&GridField2D> {
        self.snapshots.last().map(|(_, u)| u)
    }
}

fn norm22(u: &GridField2D) -> Result<f64> {
    Ok(sobolev_norms(u)?.sobolev22)
}

fn interior_l2(f: &GridField2D) -> f64 {
    let cell = f.spec().hx() * f.spec().hy();
    (cell * f.interior().iter().map(|v| v * v).sum::<f64>()).sqrt()
}

/// Least-squares root of `1/‖u‖` against `t` over the trailing window.
pub fn extrapolate_t_star(times: &[f64], norms: &[f64]) -> Option<f64> {
    let k = times.len().min(norms.len()).min(T_STAR_WINDOW);
    if k < 2 {
        return None;
    }
    let (t, y): (Vec<f64>, Vec<f64>) = times[times.len() - k..]
        .iter()
        .zip(&norms[norms.len() - k..])
        .map(|(&t, &n)| (t, 1.0 / n))
        .unzip();
    let n = k as f64;
    let (mt, my) = (t.iter().sum::<f64>() / n, y.iter().sum::<f64>() / n);
    let sxy: f64 = t.iter().zip(&y).map(|(a, b)| (a - mt) * (b - my)).sum();
    let sxx: f64 = t.iter().map(|a| (a - mt) * (a - mt)).sum();
    if sxx == 0.0 || !(sxy < 0.0) {
        return None;
    }
    let slope = sxy / sxx;
    let root = mt - my / slope;
    (root.is_finite()).then(|| root.max(*t.last().expect("k >= 2")))
}

/// Marches from `u0` to `t_max`, stopping early on decay or blow-up.
pub fn evolve(cfg: &EvolutionConfig) -> Result<EvolutionTrace> {
    cfg.validate()?;
    let spec = &cfg.spec;
    let stepper = ImexStepper::new(spec);
    let clamped = spec.bc == BoundaryCondition::Dirichlet;
    let mut u = cfg.u0.clone().with_bc(spec.bc);
    u.zero_boundary();
    let n0 = norm22(&u)?;
    let reference = n0.max(interior_l2(&cfg.source_at(0.0)));
    let cap = cfg.blowup_norm_cap.unwrap_or(BLOWUP_FACTOR * reference);
    let unforced = cfg.unforced();

    let mut trace = EvolutionTrace {
        times: vec![0.0],
        sobolev22: vec![n0],
        energy: if clamped { Some(vec![energy(&u, spec)?.total]) } else { None },
        snapshots: vec![(0.0, u.clone())],
        outcome: Outcome::ReachedHorizon,
        t_star_estimate: None,
        blowup_norm_cap: cap,
        steps: 0,
    };
    if unforced && n0 <= DECAY_THRESHOLD {
        trace.outcome = Outcome::Decayed;
        return Ok(trace);
    }

    let total = (cfg.t_max / cfg.dt - 1e-9).ceil().max(1.0) as usize;
    let mut t = 0.0;
    for k in 1..=total {
        let t_next = if k == total { cfg.t_max } else { k as f64 * cfg.dt };
        let dt = t_next - t;
        let next = stepper.step(&u, &cfg.source_at(t_next), dt).and_then(|v| {
            v.check_finite()?;
            Ok(v)
        });
        let next = match next {
            Ok(v) => v,
            Err(e) => {
                trace.outcome = Outcome::Aborted(format!("step {k} at t = {t_next:e}: {e}"));
                break;
            }
        };
        u = next;
        t = t_next;
        let n = norm22(&u)?;
        trace.steps = k;
        trace.times.push(t);
        trace.sobolev22.push(n);
        if let Some(e) = trace.energy.as_mut() {
            e.push(energy(&u, spec)?.total);
        }
        if cfg.snapshot_every > 0 && k % cfg.snapshot_every == 0 && k != total {
            trace.snapshots.push((t, u.clone()));
        }
        if n >= cap {
            trace.outcome = Outcome::BlowUp;
            trace.t_star_estimate = extrapolate_t_star(&trace.times, &trace.sobolev22);
            break;
        }
        if unforced && n <= DECAY_THRESHOLD {
            trace.outcome = Outcome::Decayed;
            break;
        }
    }
    if trace.snapshots.last().map(|(s, _)| *s) != Some(t) {
        trace.snapshots.push((t, u));
    }
    Ok(trace)
}

/// `J_λ` of every snapshot; meaningful for clamped runs.
pub fn energy_monitor(trace: &EvolutionTrace, spec: &ProblemSpec) -> Result<Vec<(f64, f64)>> {
    trace.snapshots.iter().map(|(t, u)| Ok((*t, energy(u, spec)?.total))).collect()
}

/// Runs `A·φ` for each amplitude in parallel and reports the outcomes in input order.
pub fn amplitude_sweep(
    spec: &ProblemSpec,
    shape: &GridField2D,
    amplitudes: &[f64],
    dt: f64,
    t_max: f64,
) -> Vec<(f64, Result<Outcome>)> {
    amplitudes
        .par_iter()
        .map(|&a| {
            let cfg = EvolutionConfig::new(spec.clone(), shape.scaled(a), dt, t_max);
            (a, evolve(&cfg).map(|tr| tr.outcome))
        })
        .collect()
}

/// `∫u` over the domain; handy for diagnostics of forced runs.
pub fn mass(u: &GridField2D) -> f64 {
    quadrature(u)
}
