//! Sample-wise check of the blow-up mechanism for positive slopes.
//!
//! Along any solution, `φ(η) = η³g″ − η²g′ + ηg` satisfies
//! `φ′ = η⁴g/4 + η²gg′`, so once `g, g′ > 0` the quantity `φ` is positive and
//! increasing, which is what drives `g` to infinity. The certificate verifies
//! these sign conditions on the computed samples.

use serde::{Deserialize, Serialize};

use super::{ShootResult, TrajectorySample};

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SampleCheck {
    pub eta: f64,
    pub phi: f64,
    pub gp_positive: bool,
    pub phi_positive: bool,
    /// `φ` did not decrease since the previous sample (true at the first sample).
    pub phi_increasing: bool,
}

impl SampleCheck {
    pub fn holds(&self) -> bool {
        self.gp_positive && self.phi_positive && self.phi_increasing
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BlowupCertificate {
    pub passed: bool,
    /// Set for the zero trajectory, where `φ ≡ 0` and the check is vacuous.
    pub degenerate: bool,
    pub first_violation: Option<usize>,
    pub checks: Vec<SampleCheck>,
}

pub fn phi(s: &TrajectorySample) -> f64 {
    let e = s.eta;
    e * e * e * s.gpp - e * e * s.gp + e * s.g
}

pub fn blowup_certificate(res: &ShootResult) -> BlowupCertificate {
    let degenerate = res.slope == 0.0 && res.samples.iter().all(|s| s.g == 0.0 && s.gp == 0.0 && s.gpp == 0.0);
    if degenerate {
        return BlowupCertificate { passed: true, degenerate, first_violation: None, checks: Vec::new() };
    }
    let mut checks = Vec::with_capacity(res.samples.len());
    let mut prev: Option<f64> = None;
    for s in &res.samples {
        let p = phi(s);
        checks.push(SampleCheck {
            eta: s.eta,
            phi: p,
            gp_positive: s.gp > 0.0,
            phi_positive: p > 0.0,
            phi_increasing: prev.map_or(true, |q| p >= q),
        });
        prev = Some(p);
    }
    let first_violation = checks.iter().position(|c| !c.holds());
    BlowupCertificate { passed: first_violation.is_none(), degenerate, first_violation, checks }
}
