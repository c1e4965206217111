//! Self-similar profiles `u(r, t) = f(r / t^{1/4})` of the unforced equation.
//!
//! Writing `g = f′`, the profile equation is the strongly singular third-order
//! ODE
//!
//! ```text
//! 4g − η⁴g − 4ηg′ − 4η²gg′ + 8η²g″ + 4η³g‴ = 0,   g(0) = g″(0) = 0,
//! ```
//!
//! with the far-field requirement `g′(η) → 0`. The only free datum at the
//! origin is the slope `a = g′(0)`; regular solutions start as
//! `g = aη + (a²/16)η³ + …`. This module launches at a small `η₀ > 0` from
//! that expansion, integrates with an adaptive Dormand–Prince pair either in
//! `η` or in `r = log η`, and reports whether the trajectory reached the end of
//! the window, blew up, or stalled.

mod ansatz;
mod certificate;
pub mod integrator;
mod profile;
mod sweep;

pub use ansatz::{default_sample_etas, verify_ansatz, AnsatzPoint, AnsatzReport, ProfileFn, RadialProfile};
pub use certificate::{blowup_certificate, BlowupCertificate, SampleCheck};
pub use profile::{reconstruct_f, FSample, FTrajectory};
pub use sweep::{
    figure1_panels, negative_slope_grid, sweep, trajectory_csv, trajectory_from_csv, FigurePanel,
    RunSummary, SweepResult, SweepTemplate, TerminationTally,
};

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use integrator::{integrate, Flow, Outcome, StepControl};

/// `g‴` from the profile equation; requires `η > 0`.
#[inline]
pub fn rhs_eta(eta: f64, g: f64, g1: f64, g2: f64) -> f64 {
    debug_assert!(eta > 0.0, "the profile equation is singular at η = 0");
    let e2 = eta * eta;
    (e2 * e2 * g + 4.0 * eta * g1 + 4.0 * e2 * g * g1 - 8.0 * e2 * g2 - 4.0 * g) / (4.0 * e2 * eta)
}

/// Same equation after `η = eʳ`, `h(r) = g(eʳ)`:
/// `h‴ = h″ + h′ + eʳh′h + ¼(e⁴ʳ − 4)h`.
#[inline]
pub fn rhs_log(r: f64, h: f64, h1: f64, h2: f64) -> f64 {
    let er = r.exp();
    h2 + h1 + er * h1 * h + 0.25 * (er.powi(4) - 4.0) * h
}

/// Value of `g‴(0)` forced by regularity at the origin.
#[inline]
pub fn third_derivative_at_origin(slope: f64) -> f64 {
    3.0 * slope * slope / 8.0
}

/// Two-term expansion `(g, g′, g″)` at `η₀` for slope `a`.
pub fn series_start(slope: f64, eta0: f64) -> [f64; 3] {
    let a2 = slope * slope;
    [
        slope * eta0 + a2 / 16.0 * eta0.powi(3),
        slope + 3.0 * a2 / 16.0 * eta0 * eta0,
        3.0 * a2 / 8.0 * eta0,
    ]
}

/// `(η, g, g′, g″)` → `(r, h, h′, h″)` with `η = eʳ`.
pub fn to_log_state(eta: f64, s: [f64; 3]) -> (f64, [f64; 3]) {
    (eta.ln(), [s[0], eta * s[1], eta * eta * s[2] + eta * s[1]])
}

/// Inverse of [`to_log_state`].
pub fn from_log_state(r: f64, s: [f64; 3]) -> (f64, [f64; 3]) {
    let eta = r.exp();
    (eta, [s[0], s[1] / eta, (s[2] - s[1]) / (eta * eta)])
}

/// Default launch abscissa: `10⁻³`, reduced to `10⁻²/√|a|` for steep slopes so
/// that the neglected terms of the expansion stay small.
pub fn default_eta0(slope: f64) -> f64 {
    let scale = if slope == 0.0 { f64::INFINITY } else { 1e-2 / slope.abs().sqrt() };
    1e-3f64.min(scale)
}

pub const DEFAULT_G_CAP: f64 = 1e8;
pub const DEFAULT_REL_TOL: f64 = 1e-10;
pub const DEFAULT_ABS_TOL: f64 = 1e-12;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ShootConfig {
    /// `g′(0)`
    pub slope: f64,
    pub eta0: f64,
    pub eta_max: f64,
    pub rel_tol: f64,
    pub abs_tol: f64,
    /// `|g|` at which the run is declared a blow-up.
    pub g_cap: f64,
    /// Abscissas the integrator must land on exactly (sorted, inside the window).
    #[serde(default, skip_serializing_if = "Vec::is_empty")]
    pub checkpoints: Vec<f64>,
}

impl ShootConfig {
    pub fn new(slope: f64, eta_max: f64) -> Self {
        Self {
            slope,
            eta0: default_eta0(slope),
            eta_max,
            rel_tol: DEFAULT_REL_TOL,
            abs_tol: DEFAULT_ABS_TOL,
            g_cap: DEFAULT_G_CAP,
            checkpoints: Vec::new(),
        }
    }

    pub fn validate(&self) -> Result<()> {
        let bad = |m: String| Err(Error::InvalidParameter(m));
        if !self.slope.is_finite() {
            return bad(format!("slope must be finite, got {}", self.slope));
        }
        if !(self.eta0 > 0.0 && self.eta0 < self.eta_max && self.eta_max.is_finite()) {
            return bad(format!("need 0 < eta0 < eta_max, got {} and {}", self.eta0, self.eta_max));
        }
        for (name, tol) in [("rel_tol", self.rel_tol), ("abs_tol", self.abs_tol)] {
            if !(tol > 0.0 && tol <= 1e-3) {
                return bad(format!("{name} must lie in (0, 1e-3], got {tol}"));
            }
        }
        if !(self.g_cap >= 1e6) {
            return bad(format!("g_cap must be at least 1e6, got {}", self.g_cap));
        }
        if self.checkpoints.windows(2).any(|w| !(w[1] > w[0])) {
            return bad("checkpoints must be strictly increasing".into());
        }
        Ok(())
    }

    fn step_control(&self) -> StepControl {
        StepControl { rel_tol: self.rel_tol, abs_tol: self.abs_tol, ..StepControl::default() }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum Termination {
    ReachedEnd,
    BlowUp,
    StepUnderflow,
}

impl Termination {
    pub fn as_str(self) -> &'static str {
        match self {
            Termination::ReachedEnd => "ReachedEnd",
            Termination::BlowUp => "BlowUp",
            Termination::StepUnderflow => "StepUnderflow",
        }
    }
}

impl std::fmt::Display for Termination {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(self.as_str())
    }
}

/// One accepted point `(η, g, g′, g″)`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct TrajectorySample {
    pub eta: f64,
    pub g: f64,
    pub gp: f64,
    pub gpp: f64,
}

impl TrajectorySample {
    pub fn state(&self) -> [f64; 3] {
        [self.g, self.gp, self.gpp]
    }

    /// `g‴` from the equation.
    pub fn gppp(&self) -> f64 {
        rhs_eta(self.eta, self.g, self.gp, self.gpp)
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ShootResult {
    pub slope: f64,
    pub samples: Vec<TrajectorySample>,
    pub termination: Termination,
    /// Extrapolated blow-up abscissa when `termination == BlowUp`.
    pub eta_bar: Option<f64>,
    /// `|g′(η_max)|` when `termination == ReachedEnd`.
    pub decay_residual: Option<f64>,
    pub n_steps: usize,
    pub diagnostic: Option<String>,
}

impl ShootResult {
    /// Wraps externally produced samples (e.g. read back from CSV).
    pub fn from_samples(slope: f64, samples: Vec<TrajectorySample>, termination: Termination) -> Result<Self> {
        if samples.is_empty() {
            return Err(Error::Trajectory("no samples".into()));
        }
        if samples.windows(2).any(|w| !(w[1].eta > w[0].eta)) {
            return Err(Error::Trajectory("samples must be strictly increasing in eta".into()));
        }
        let last = *samples.last().expect("non-empty");
        let (eta_bar, decay_residual) = match termination {
            Termination::BlowUp => (Some(estimate_eta_bar(&samples)), None),
            Termination::ReachedEnd => (None, Some(last.gp.abs())),
            Termination::StepUnderflow => (None, None),
        };
        let n_steps = samples.len() - 1;
        Ok(Self { slope, samples, termination, eta_bar, decay_residual, n_steps, diagnostic: None })
    }

    pub fn first(&self) -> &TrajectorySample {
        &self.samples[0]
    }

    pub fn last(&self) -> &TrajectorySample {
        self.samples.last().expect("trajectories always hold the launch sample")
    }
}

/// Root of the least-squares line through `(η, 1/g)` over the last three samples.
fn estimate_eta_bar(samples: &[TrajectorySample]) -> f64 {
    let tail = &samples[samples.len().saturating_sub(3)..];
    let last = tail[tail.len() - 1].eta;
    if tail.len() < 2 {
        return last;
    }
    let n = tail.len() as f64;
    let (sx, sy) = tail.iter().fold((0.0, 0.0), |(a, b), s| (a + s.eta, b + 1.0 / s.g));
    let (mx, my) = (sx / n, sy / n);
    let (mut sxx, mut sxy) = (0.0, 0.0);
    for s in tail {
        sxx += (s.eta - mx) * (s.eta - mx);
        sxy += (s.eta - mx) * (1.0 / s.g - my);
    }
    if sxx == 0.0 || sxy == 0.0 {
        return last;
    }
    let slope = sxy / sxx;
    let root = mx - my / slope;
    if root.is_finite() && root >= last {
        root
    } else {
        last
    }
}

fn finish(
    cfg: &ShootConfig,
    samples: Vec<TrajectorySample>,
    outcome: Outcome,
    blew_up: bool,
    n_steps: usize,
) -> ShootResult {
    let last = *samples.last().expect("launch sample present");
    let (termination, diagnostic) = match outcome {
        _ if blew_up => (Termination::BlowUp, None),
        Outcome::ReachedEnd => (Termination::ReachedEnd, None),
        Outcome::Stopped => (Termination::BlowUp, None),
        Outcome::StepUnderflow { t, step } => {
            (Termination::StepUnderflow, Some(format!("step {step:.3e} underflowed at {t:.6e}")))
        }
        Outcome::NonFinite { t } => (Termination::StepUnderflow, Some(format!("non-finite state near {t:.6e}"))),
        Outcome::MaxSteps { t } => (Termination::StepUnderflow, Some(format!("step budget exhausted at {t:.6e}"))),
    };
    let eta_bar = (termination == Termination::BlowUp).then(|| estimate_eta_bar(&samples));
    let decay_residual = (termination == Termination::ReachedEnd).then(|| last.gp.abs());
    let _ = cfg;
    ShootResult { slope: cfg.slope, samples, termination, eta_bar, decay_residual, n_steps, diagnostic }
}

/// Integrates the profile equation in `η` from the series launch.
pub fn shoot(cfg: &ShootConfig) -> Result<ShootResult> {
    cfg.validate()?;
    let y0 = series_start(cfg.slope, cfg.eta0);
    let mut samples = vec![TrajectorySample { eta: cfg.eta0, g: y0[0], gp: y0[1], gpp: y0[2] }];
    let mut blew_up = false;
    let cap = cfg.g_cap;
    let summary = integrate(
        |eta, y: &[f64; 3]| [y[1], y[2], rhs_eta(eta, y[0], y[1], y[2])],
        cfg.eta0,
        y0,
        cfg.eta_max,
        &cfg.step_control(),
        &cfg.checkpoints,
        |eta, y| {
            samples.push(TrajectorySample { eta, g: y[0], gp: y[1], gpp: y[2] });
            if y[0].abs() >= cap {
                blew_up = true;
                Flow::Stop
            } else {
                Flow::Continue
            }
        },
    );
    Ok(finish(cfg, samples, summary.outcome, blew_up, summary.accepted))
}

/// Integrates the `r = log η` form and maps the samples back to `η`.
pub fn shoot_log(cfg: &ShootConfig) -> Result<ShootResult> {
    cfg.validate()?;
    let launch = series_start(cfg.slope, cfg.eta0);
    let (r0, h0) = to_log_state(cfg.eta0, launch);
    let r_end = cfg.eta_max.ln();
    let checkpoints: Vec<f64> = cfg.checkpoints.iter().map(|c| c.ln()).collect();
    let mut samples = vec![TrajectorySample { eta: cfg.eta0, g: launch[0], gp: launch[1], gpp: launch[2] }];
    let mut blew_up = false;
    let cap = cfg.g_cap;
    let ctl = StepControl { min_step_abs: 1e-14, ..cfg.step_control() };
    let summary = integrate(
        |r, y: &[f64; 3]| [y[1], y[2], rhs_log(r, y[0], y[1], y[2])],
        r0,
        h0,
        r_end,
        &ctl,
        &checkpoints,
        |r, y| {
            let (eta, s) = from_log_state(r, *y);
            // Land exactly on requested η values despite exp(log(η)) rounding.
            let eta = checkpoints
                .iter()
                .position(|&c| c == r)
                .map(|k| cfg.checkpoints[k])
                .unwrap_or(if r == r_end { cfg.eta_max } else { eta });
            samples.push(TrajectorySample { eta, g: s[0], gp: s[1], gpp: s[2] });
            if y[0].abs() >= cap {
                blew_up = true;
                Flow::Stop
            } else {
                Flow::Continue
            }
        },
    );
    Ok(finish(cfg, samples, summary.outcome, blew_up, summary.accepted))
}

/// Launch sensitivity: the same run from `η₀` and `η₀/2`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct LaunchCheck {
    pub eta0: f64,
    /// Blow-up abscissa or final `g`, from `η₀` and from `η₀/2`.
    pub value: f64,
    pub value_half: f64,
    pub relative_change: f64,
}

pub fn launch_check(cfg: &ShootConfig) -> Result<LaunchCheck> {
    let full = shoot(cfg)?;
    let half = shoot(&ShootConfig { eta0: cfg.eta0 / 2.0, ..cfg.clone() })?;
    let pick = |r: &ShootResult| r.eta_bar.unwrap_or(r.last().g);
    let (value, value_half) = (pick(&full), pick(&half));
    let relative_change = if value == value_half {
        0.0
    } else {
        (value - value_half).abs() / value.abs().max(value_half.abs())
    };
    Ok(LaunchCheck { eta0: cfg.eta0, value, value_half, relative_change })
}
