//! Batches of shooting runs, their text formats, and the Figure-1 slope sets.

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use super::{default_eta0, shoot, shoot_log, ShootConfig, ShootResult, Termination, TrajectorySample};
use crate::error::{Error, Result};

/// Shared settings for every slope of a sweep.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SweepTemplate {
    /// Fixed launch abscissa; `None` picks [`default_eta0`] per slope.
    pub eta0: Option<f64>,
    pub eta_max: f64,
    pub rel_tol: f64,
    pub abs_tol: f64,
    pub g_cap: f64,
    /// Integrate in `r = log η` instead of `η`.
    pub log_form: bool,
}

impl SweepTemplate {
    pub fn new(eta_max: f64) -> Self {
        let base = ShootConfig::new(0.0, eta_max);
        Self {
            eta0: None,
            eta_max,
            rel_tol: base.rel_tol,
            abs_tol: base.abs_tol,
            g_cap: base.g_cap,
            log_form: false,
        }
    }

    pub fn config_for(&self, slope: f64) -> ShootConfig {
        ShootConfig {
            slope,
            eta0: self.eta0.unwrap_or_else(|| default_eta0(slope)),
            eta_max: self.eta_max,
            rel_tol: self.rel_tol,
            abs_tol: self.abs_tol,
            g_cap: self.g_cap,
            checkpoints: Vec::new(),
        }
    }

    pub fn run(&self, slope: f64) -> Result<ShootResult> {
        let cfg = self.config_for(slope);
        if self.log_form {
            shoot_log(&cfg)
        } else {
            shoot(&cfg)
        }
    }
}

/// The per-run record written as summary JSON.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RunSummary {
    pub slope: f64,
    /// `ReachedEnd`, `BlowUp`, `StepUnderflow`, or `Error` for a rejected run.
    pub termination: String,
    pub eta_bar: Option<f64>,
    pub decay_residual: Option<f64>,
    pub n_steps: usize,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub error: Option<String>,
}

impl RunSummary {
    pub fn of(res: &ShootResult) -> Self {
        Self {
            slope: res.slope,
            termination: res.termination.to_string(),
            eta_bar: res.eta_bar,
            decay_residual: res.decay_residual,
            n_steps: res.n_steps,
            error: res.diagnostic.clone(),
        }
    }

    fn failed(slope: f64, err: &Error) -> Self {
        Self {
            slope,
            termination: "Error".into(),
            eta_bar: None,
            decay_residual: None,
            n_steps: 0,
            error: Some(err.to_string()),
        }
    }
}

#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct TerminationTally {
    pub reached_end: usize,
    pub blow_up: usize,
    pub step_underflow: usize,
    pub failed: usize,
}

#[derive(Debug)]
pub struct SweepResult {
    pub template: SweepTemplate,
    pub slopes: Vec<f64>,
    /// One entry per slope, in input order.
    pub runs: Vec<Result<ShootResult>>,
}

impl SweepResult {
    pub fn summaries(&self) -> Vec<RunSummary> {
        self.slopes
            .iter()
            .zip(&self.runs)
            .map(|(&a, r)| match r {
                Ok(res) => RunSummary::of(res),
                Err(e) => RunSummary::failed(a, e),
            })
            .collect()
    }

    pub fn tally(&self) -> TerminationTally {
        let mut t = TerminationTally::default();
        for r in &self.runs {
            match r.as_ref().map(|r| r.termination) {
                Ok(Termination::ReachedEnd) => t.reached_end += 1,
                Ok(Termination::BlowUp) => t.blow_up += 1,
                Ok(Termination::StepUnderflow) => t.step_underflow += 1,
                Err(_) => t.failed += 1,
            }
        }
        t
    }

    /// `slope,termination,eta_bar,decay_residual,n_steps`; empty cells for absent values.
    pub fn summary_csv(&self) -> String {
        let opt = |v: Option<f64>| v.map(|x| format!("{x:e}")).unwrap_or_default();
        let mut out = String::from("slope,termination,eta_bar,decay_residual,n_steps\n");
        for s in self.summaries() {
            out.push_str(&format!(
                "{:e},{},{},{},{}\n",
                s.slope,
                s.termination,
                opt(s.eta_bar),
                opt(s.decay_residual),
                s.n_steps
            ));
        }
        out
    }
}

/// Runs every slope (in parallel on the current rayon pool); a failing slope is
/// recorded and does not stop the others.
pub fn sweep(slopes: &[f64], template: &SweepTemplate) -> Result<SweepResult> {
    if slopes.is_empty() {
        return Err(Error::InvalidParameter("slope list is empty".into()));
    }
    let runs = slopes.par_iter().map(|&a| template.run(a)).collect();
    Ok(SweepResult { template: template.clone(), slopes: slopes.to_vec(), runs })
}

/// Trajectory CSV: header `eta,g,gp,gpp`, one row per accepted sample.
pub fn trajectory_csv(res: &ShootResult) -> String {
    let mut out = String::with_capacity(48 * (res.samples.len() + 1));
    out.push_str("eta,g,gp,gpp\n");
    for s in &res.samples {
        out.push_str(&format!("{:e},{:e},{:e},{:e}\n", s.eta, s.g, s.gp, s.gpp));
    }
    out
}

pub fn trajectory_from_csv(text: &str) -> Result<Vec<TrajectorySample>> {
    let mut lines = text.lines().filter(|l| !l.trim().is_empty());
    match lines.next().map(str::trim) {
        Some("eta,g,gp,gpp") => {}
        other => return Err(Error::Parse(format!("expected header `eta,g,gp,gpp`, found {other:?}"))),
    }
    lines
        .enumerate()
        .map(|(k, line)| {
            let v: Vec<f64> = line
                .split(',')
                .map(|c| c.trim().parse::<f64>())
                .collect::<std::result::Result<_, _>>()
                .map_err(|e| Error::Parse(format!("row {}: {e}", k + 1)))?;
            match v[..] {
                [eta, g, gp, gpp] => Ok(TrajectorySample { eta, g, gp, gpp }),
                _ => Err(Error::Parse(format!("row {}: expected 4 columns, found {}", k + 1, v.len()))),
            }
        })
        .collect()
}

/// One panel of Figure 1: its slope set and the `η` window it is drawn on.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FigurePanel {
    pub name: &'static str,
    pub slopes: Vec<f64>,
    pub eta_max: f64,
}

/// The four slope sets. Negative slopes steeper than about `−18` turn around
/// and blow up to `+∞` at a finite `η̄` shrinking roughly like `|a|^{-1/2}`
/// (`η̄ ≈ 2.74` for `−10²`, `≈ 0.0176` for `−2.4·10⁶`), so each panel ends just
/// before the smallest `η̄` of its set.
pub fn figure1_panels() -> Vec<FigurePanel> {
    vec![
        FigurePanel { name: "a", slopes: vec![-1.0, -10.0, -1e2], eta_max: 2.5 },
        FigurePanel { name: "b", slopes: vec![-1.0, -1e2, -1e4], eta_max: 0.25 },
        FigurePanel { name: "c", slopes: vec![-1e4, -1e5, -1e6, -1e7], eta_max: 8e-3 },
        FigurePanel { name: "d", slopes: vec![-1e4, -1e5, -8.5e5, -2.4e6], eta_max: 1.5e-2 },
    ]
}

/// `−10^e` for `per_decade` values per decade between the two exponents.
pub fn negative_slope_grid(lo_exp: f64, hi_exp: f64, per_decade: usize) -> Vec<f64> {
    let n = ((hi_exp - lo_exp) * per_decade as f64).round().max(0.0) as usize;
    (0..=n)
        .map(|k| -(10f64).powf(lo_exp + (hi_exp - lo_exp) * k as f64 / n.max(1) as f64))
        .collect()
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn zero_slope_sweep() {
        let res = sweep(&[0.0], &SweepTemplate::new(10.0)).unwrap();
        assert_eq!(res.tally(), TerminationTally { reached_end: 1, ..Default::default() });
        let r = res.runs[0].as_ref().unwrap();
        assert!(r.samples.iter().all(|s| s.g == 0.0));
    }

    #[test]
    fn failures_are_recorded_not_fatal() {
        let t = SweepTemplate { eta0: Some(5.0), ..SweepTemplate::new(2.0) };
        let res = sweep(&[-1.0, 1.0], &t).unwrap();
        assert_eq!(res.tally().failed, 2);
        assert!(res.summaries().iter().all(|s| s.termination == "Error" && s.error.is_some()));
        assert!(sweep(&[], &t).is_err());
    }

    #[test]
    fn positive_slopes_blow_up_earlier_for_larger_slopes() {
        let slopes: Vec<f64> = (-4..=7).map(|e| 10f64.powi(e)).collect();
        let res = sweep(&slopes, &SweepTemplate::new(200.0)).unwrap();
        assert_eq!(res.tally().blow_up, slopes.len());
        let bars: Vec<f64> = res.runs.iter().map(|r| r.as_ref().unwrap().eta_bar.unwrap()).collect();
        assert!(bars.windows(2).all(|w| w[1] < w[0]), "{bars:?}");
    }

    #[test]
    fn csv_round_trip_is_exact() {
        let res = shoot(&ShootConfig::new(-2.0, 3.0)).unwrap();
        let text = trajectory_csv(&res);
        assert!(text.starts_with("eta,g,gp,gpp\n"));
        assert_eq!(trajectory_from_csv(&text).unwrap(), res.samples);
        assert!(trajectory_from_csv("eta,g\n1,2\n").is_err());
        assert!(trajectory_from_csv("eta,g,gp,gpp\n1,2,3\n").is_err());
    }

    #[test]
    fn summary_json_shape() {
        let res = sweep(&[-1.0], &SweepTemplate::new(5.0)).unwrap();
        let v = serde_json::to_value(&res.summaries()[0]).unwrap();
        for key in ["slope", "termination", "eta_bar", "decay_residual", "n_steps"] {
            assert!(v.get(key).is_some(), "{key}");
        }
        assert_eq!(v["termination"], "ReachedEnd");
    }

    #[test]
    fn figure_panels_reach_end() {
        for panel in figure1_panels() {
            let res = sweep(&panel.slopes, &SweepTemplate::new(panel.eta_max)).unwrap();
            assert_eq!(res.tally().reached_end, panel.slopes.len(), "panel {}", panel.name);
        }
    }

    #[test]
    fn grid_spacing() {
        let g = negative_slope_grid(0.0, 2.0, 2);
        assert_eq!(g.len(), 5);
        assert_eq!(g[0], -1.0);
        assert!((g[4] + 100.0).abs() < 1e-12);
    }
}
