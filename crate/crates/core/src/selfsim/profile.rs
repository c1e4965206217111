//! Recovery of the profile `f` from `g = f′`.

use serde::{Deserialize, Serialize};

use super::{RadialProfile, ShootResult, Termination, TrajectorySample};
use crate::error::{Error, Result};

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct FSample {
    pub eta: f64,
    pub f: f64,
}

/// `f` on the trajectory's abscissas, anchored by `f(η_max) = 0`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FTrajectory {
    pub samples: Vec<FSample>,
    /// `|f(η₀)|`: how far the tail integral of `g` is from cancelling.
    pub cancellation_residual: f64,
    #[serde(skip)]
    source: Vec<TrajectorySample>,
}

/// Integrates `g` with the endpoint-corrected trapezoid rule
/// `∫ g ≈ H(g₀ + g₁)/2 + H²(g₀′ − g₁′)/12`, fourth order in the step.
pub fn reconstruct_f(res: &ShootResult) -> Result<FTrajectory> {
    if res.termination != Termination::ReachedEnd {
        return Err(Error::Trajectory(format!(
            "cannot reconstruct f from a {} trajectory",
            res.termination
        )));
    }
    let s = &res.samples;
    let mut running = Vec::with_capacity(s.len());
    let mut acc = 0.0;
    running.push(0.0);
    for w in s.windows(2) {
        let h = w[1].eta - w[0].eta;
        acc += 0.5 * h * (w[0].g + w[1].g) + h * h / 12.0 * (w[0].gp - w[1].gp);
        running.push(acc);
    }
    let samples = s
        .iter()
        .zip(&running)
        .map(|(t, &c)| FSample { eta: t.eta, f: c - acc })
        .collect();
    Ok(FTrajectory { samples, cancellation_residual: acc.abs(), source: s.clone() })
}

impl FTrajectory {
    pub fn domain(&self) -> (f64, f64) {
        (self.samples[0].eta, self.samples[self.samples.len() - 1].eta)
    }

    /// `f(η)` between samples, from the profile equation integrated out of
    /// the nearest sample on the left.
    pub fn eval(&self, eta: f64) -> Option<f64> {
        RadialProfile::values(self, &[eta]).map(|v| v[0])
    }

    pub(crate) fn source_sample(&self, k: usize) -> &TrajectorySample {
        &self.source[k]
    }
}
