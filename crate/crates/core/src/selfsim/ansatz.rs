//! Finite-difference check that `u(r, t) = f(r / t^{1/4})` solves the unforced
//! radial equation `u_t + Δ_r²u = u′u″/r`.

use serde::{Deserialize, Serialize};

use super::profile::FTrajectory;
use super::rhs_eta;
use crate::error::{Error, Result};

/// A profile `f(η)` that can be sampled on its domain.
pub trait RadialProfile {
    fn domain(&self) -> (f64, f64);
    /// Values at the given abscissas, or `None` if any lies outside the domain.
    /// Implementations should evaluate a batch consistently, since the caller
    /// differentiates the results numerically.
    fn values(&self, etas: &[f64]) -> Option<Vec<f64>>;
}

/// Closed-form profile, mainly for controls.
pub struct ProfileFn<F: Fn(f64) -> f64> {
    pub f: F,
    pub lo: f64,
    pub hi: f64,
}

impl<F: Fn(f64) -> f64> RadialProfile for ProfileFn<F> {
    fn domain(&self) -> (f64, f64) {
        (self.lo, self.hi)
    }

    fn values(&self, etas: &[f64]) -> Option<Vec<f64>> {
        etas.iter().map(|&e| (e >= self.lo && e <= self.hi).then(|| (self.f)(e))).collect()
    }
}

impl RadialProfile for FTrajectory {
    fn domain(&self) -> (f64, f64) {
        FTrajectory::domain(self)
    }

    /// Integrates the profile equation once, from the sample left of the
    /// smallest request, through all requested points with a common step.
    fn values(&self, etas: &[f64]) -> Option<Vec<f64>> {
        let (lo, hi) = FTrajectory::domain(self);
        if etas.iter().any(|&e| !(e >= lo && e <= hi)) {
            return None;
        }
        let mut order: Vec<usize> = (0..etas.len()).collect();
        order.sort_by(|&i, &j| etas[i].total_cmp(&etas[j]));
        let start = etas[order[0]];
        let k = self.samples.partition_point(|s| s.eta <= start).saturating_sub(1);
        let base = self.source_sample(k);
        let mut y = [self.samples[k].f, base.g, base.gp, base.gpp];
        let mut x = base.eta;
        let h_max = 2e-4 * x.max(0.05);
        let mut out = vec![0.0; etas.len()];
        for &i in &order {
            let target = etas[i];
            while x < target {
                let h = h_max.min(target - x);
                rk4(&mut y, x, h);
                x = if h == target - x { target } else { x + h };
            }
            out[i] = y[0];
        }
        Some(out)
    }
}

fn rk4(y: &mut [f64; 4], x: f64, h: f64) {
    let rhs = |x: f64, y: &[f64; 4]| [y[1], y[2], y[3], rhs_eta(x, y[1], y[2], y[3])];
    let step = |y: &[f64; 4], k: &[f64; 4], s: f64| [y[0] + s * k[0], y[1] + s * k[1], y[2] + s * k[2], y[3] + s * k[3]];
    let k1 = rhs(x, y);
    let k2 = rhs(x + h / 2.0, &step(y, &k1, h / 2.0));
    let k3 = rhs(x + h / 2.0, &step(y, &k2, h / 2.0));
    let k4 = rhs(x + h, &step(y, &k3, h));
    for j in 0..4 {
        y[j] += h / 6.0 * (k1[j] + 2.0 * k2[j] + 2.0 * k3[j] + k4[j]);
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct AnsatzPoint {
    pub r: f64,
    pub t: f64,
    pub residual: f64,
    /// `|u_t| + |Δ²u| + |u′u″/r|` at the point.
    pub scale: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct AnsatzReport {
    pub step: f64,
    pub max_residual: f64,
    /// Largest `residual / scale` over points with a non-zero scale.
    pub max_relative: f64,
    pub points: Vec<AnsatzPoint>,
}

/// Evaluates the residual at `r = η t^{1/4}` for every `(t, η)` pair. The
/// spatial step is `step · t^{1/4}` (a step of `step` in `η`) and the time
/// step is `step · t`; both enter at second order.
pub fn verify_ansatz(profile: &dyn RadialProfile, times: &[f64], etas: &[f64], step: f64) -> Result<AnsatzReport> {
    if !(step > 0.0) || times.is_empty() || etas.is_empty() {
        return Err(Error::InvalidParameter("need step > 0 and non-empty sample sets".into()));
    }
    if times.iter().chain(etas).any(|&v| !(v > 0.0 && v.is_finite())) {
        return Err(Error::InvalidParameter("sample times and abscissas must be positive".into()));
    }
    let mut points = Vec::with_capacity(times.len() * etas.len());
    for &t in times {
        let q = t.powf(0.25);
        let dr = step * q;
        let dt = step * t;
        for &eta in etas {
            let r = eta * q;
            // Spatial stencil r + k·dr (k = −2..2) at time t, then r at t ± dt.
            let mut at = Vec::with_capacity(7);
            for k in -2..=2 {
                at.push((r + k as f64 * dr) / q);
            }
            at.push(r / (t + dt).powf(0.25));
            at.push(r / (t - dt).powf(0.25));
            let u = profile.values(&at).ok_or_else(|| {
                let (lo, hi) = profile.domain();
                Error::Trajectory(format!(
                    "stencil at r={r}, t={t} leaves the profile range [{lo}, {hi}]"
                ))
            })?;
            let (um2, um1, u0, up1, up2) = (u[0], u[1], u[2], u[3], u[4]);
            let u1 = (up1 - um1) / (2.0 * dr);
            let u2 = (up1 - 2.0 * u0 + um1) / (dr * dr);
            let u3 = (up2 - 2.0 * up1 + 2.0 * um1 - um2) / (2.0 * dr.powi(3));
            let u4 = (up2 - 4.0 * up1 + 6.0 * u0 - 4.0 * um1 + um2) / dr.powi(4);
            let ut = (u[5] - u[6]) / (2.0 * dt);
            let bilap = u4 + 2.0 * u3 / r - u2 / (r * r) + u1 / (r * r * r);
            let nonlinear = u1 * u2 / r;
            points.push(AnsatzPoint {
                r,
                t,
                residual: (ut + bilap - nonlinear).abs(),
                scale: ut.abs() + bilap.abs() + nonlinear.abs(),
            });
        }
    }
    let max_residual = points.iter().map(|p| p.residual).fold(0.0, f64::max);
    let max_relative = points
        .iter()
        .filter(|p| p.scale > 0.0)
        .map(|p| p.residual / p.scale)
        .fold(0.0, f64::max);
    Ok(AnsatzReport { step, max_residual, max_relative, points })
}

/// Evenly spaced `η` samples well inside a profile's domain.
pub fn default_sample_etas(domain: (f64, f64), n: usize) -> Vec<f64> {
    let lo = domain.0.max(0.5);
    let hi = (0.5 * domain.1).min(4.0).max(lo);
    if n <= 1 || hi == lo {
        return vec![lo];
    }
    (0..n).map(|k| lo + (hi - lo) * k as f64 / (n - 1) as f64).collect()
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::selfsim::{reconstruct_f, shoot, ShootConfig};

    const TIMES: [f64; 3] = [0.5, 1.0, 2.0];

    #[test]
    fn zero_profile_has_zero_residual() {
        let zero = ProfileFn { f: |_| 0.0, lo: 0.0, hi: 10.0 };
        let rep = verify_ansatz(&zero, &TIMES, &[0.5, 1.0, 2.0], 0.05).unwrap();
        assert_eq!(rep.max_residual, 0.0);
    }

    #[test]
    fn gaussian_is_not_a_solution() {
        let gauss = ProfileFn { f: |e: f64| (-e * e).exp(), lo: 0.0, hi: 10.0 };
        let etas = [0.6, 1.0, 1.5];
        let coarse = verify_ansatz(&gauss, &TIMES, &etas, 0.04).unwrap();
        let fine = verify_ansatz(&gauss, &TIMES, &etas, 0.02).unwrap();
        assert!(fine.max_relative > 0.1, "{}", fine.max_relative);
        assert!(fine.max_residual > 0.5 * coarse.max_residual);
    }

    #[test]
    fn computed_profile_residual_shrinks_quadratically() {
        let res = shoot(&ShootConfig::new(-1.0, 20.0)).unwrap();
        let f = reconstruct_f(&res).unwrap();
        let etas = default_sample_etas(RadialProfile::domain(&f), 6);
        let coarse = verify_ansatz(&f, &TIMES, &etas, 0.04).unwrap();
        let fine = verify_ansatz(&f, &TIMES, &etas, 0.02).unwrap();
        assert!(coarse.max_residual / fine.max_residual > 3.0, "{} {}", coarse.max_residual, fine.max_residual);
        assert!(fine.max_relative < 1e-3, "{}", fine.max_relative);
    }

    #[test]
    fn out_of_range_is_an_error() {
        let res = shoot(&ShootConfig::new(-1.0, 2.0)).unwrap();
        let f = reconstruct_f(&res).unwrap();
        assert!(matches!(verify_ansatz(&f, &[1.0], &[1.99], 0.05), Err(Error::Trajectory(_))));
    }
}
