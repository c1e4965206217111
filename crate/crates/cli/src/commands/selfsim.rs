use serde::Serialize;
use serde_json::json;

use hgl_core::selfsim::{
    blowup_certificate, default_sample_etas, reconstruct_f, sweep as run_sweep, trajectory_csv, trajectory_from_csv,
    verify_ansatz, RunSummary, ShootResult, SweepTemplate, Termination, TrajectorySample, DEFAULT_G_CAP,
};

use super::out_dir;
use crate::config::{parse_float_list, Params};
use crate::run::{error_json, Run};
use crate::{CliError, ShootArgs, ShootOpts, SweepArgs, VerifyArgs};

pub const DEFAULT_ETA_MAX: f64 = 20.0;

/// Times and step of the ansatz check on a reconstructed profile.
const ANSATZ_TIMES: [f64; 3] = [0.5, 1.0, 2.0];
const ANSATZ_STEP: f64 = 0.02;
const ANSATZ_ETAS: usize = 6;
/// Pass threshold for the largest relative ansatz residual.
const ANSATZ_TOL: f64 = 1e-3;
/// Pass threshold for the per-step equation consistency defect.
const ODE_TOL: f64 = 1e-5;

pub fn template(o: &ShootOpts, p: &mut Params) -> Result<SweepTemplate, CliError> {
    let mut t = SweepTemplate::new(p.get("eta-max", o.eta_max, DEFAULT_ETA_MAX)?);
    t.eta0 = p.opt("eta0", o.eta0)?;
    t.rel_tol = p.get("rel-tol", o.rel_tol, t.rel_tol)?;
    t.abs_tol = p.get("abs-tol", o.abs_tol, t.abs_tol)?;
    t.g_cap = p.get("g-cap", o.g_cap, t.g_cap)?;
    t.log_form = p.get("log-form", o.log_form, false)?;
    Ok(t)
}

pub fn shoot(a: &ShootArgs, mut p: Params) -> Result<(), CliError> {
    let slope: f64 = p.require("slope", a.slope)?;
    let tmpl = template(&a.opts, &mut p)?;
    let out = out_dir(&mut p, &a.out, "selfsim-shoot")?;
    let cfg = tmpl.config_for(slope);
    cfg.validate()?;
    p.note("eta0", &cfg.eta0);
    let mut run = Run::create(&out, "selfsim shoot", p.finish()?)?;
    let res = match tmpl.run(slope) {
        Ok(r) => r,
        Err(e) => {
            run.write_json("summary.json", &json!({ "slope": slope, "termination": "Error", "error": error_json(&e) }))?;
            return run.fail(e.to_string());
        }
    };
    run.write("trajectory.csv", &trajectory_csv(&res))?;
    run.write_json("summary.json", &RunSummary::of(&res))?;
    if res.termination == Termination::BlowUp && slope > 0.0 {
        run.write_json("certificate.json", &blowup_certificate(&res))?;
    }
    match res.termination {
        Termination::StepUnderflow => {
            let msg = res.diagnostic.clone().unwrap_or_else(|| "step underflow".into());
            run.fail(msg)
        }
        _ => run.succeed(),
    }
}

pub fn sweep(a: &SweepArgs, mut p: Params) -> Result<(), CliError> {
    let text: String = p.require("slopes", a.slopes.clone())?;
    let slopes = parse_float_list(&text).map_err(|e| CliError::Usage(format!("--slopes: {e}")))?;
    let tmpl = template(&a.opts, &mut p)?;
    let out = out_dir(&mut p, &a.out, "selfsim-sweep")?;
    for &s in &slopes {
        tmpl.config_for(s).validate()?;
    }
    let mut run = Run::create(&out, "selfsim sweep", p.finish()?)?;
    let res = run_sweep(&slopes, &tmpl)?;
    write_sweep(&mut run, "", &res)?;
    let tally = res.tally();
    if tally.failed + tally.step_underflow > 0 {
        let msg = format!("{} of {} slopes failed", tally.failed + tally.step_underflow, slopes.len());
        return run.fail(msg);
    }
    run.succeed()
}

/// Per-run trajectory directories plus `summary.csv` and `summary.json`, under `prefix`.
pub fn write_sweep(run: &mut Run, prefix: &str, res: &hgl_core::selfsim::SweepResult) -> Result<(), CliError> {
    for (k, r) in res.runs.iter().enumerate() {
        if let Ok(r) = r {
            run.write(&format!("{prefix}runs/run_{k:03}/trajectory.csv"), &trajectory_csv(r))?;
        }
    }
    run.write(&format!("{prefix}summary.csv"), &res.summary_csv())?;
    run.write_json(&format!("{prefix}summary.json"), &json!({ "tally": res.tally(), "runs": res.summaries() }))
}

#[derive(Debug, Serialize)]
struct OdeCheck {
    /// Largest relative defect of the g' increments against the equation's g'''.
    max_relative_defect: f64,
    worst_eta: Option<f64>,
    tolerance: f64,
    passed: bool,
}

/// Compares each `g′` increment with the Hermite-corrected trapezoid integral
/// of `g″`, whose end slopes `g‴` come from the equation.
fn ode_check(samples: &[TrajectorySample]) -> OdeCheck {
    let mut worst = 0.0;
    let mut worst_eta = None;
    for w in samples.windows(2) {
        let (a, b) = (&w[0], &w[1]);
        let h = b.eta - a.eta;
        let predicted = 0.5 * h * (a.gpp + b.gpp) + h * h / 12.0 * (a.gppp() - b.gppp());
        let actual = b.gp - a.gp;
        let scale = actual.abs() + 0.5 * h * (a.gpp.abs() + b.gpp.abs());
        let rel = if scale > 0.0 { (predicted - actual).abs() / scale } else { (predicted - actual).abs() };
        if !(rel <= worst) {
            worst = rel;
            worst_eta = Some(b.eta);
        }
    }
    OdeCheck { max_relative_defect: worst, worst_eta, tolerance: ODE_TOL, passed: worst <= ODE_TOL }
}

fn parse_termination(s: &str) -> Result<Termination, CliError> {
    match s.trim() {
        "ReachedEnd" => Ok(Termination::ReachedEnd),
        "BlowUp" => Ok(Termination::BlowUp),
        "StepUnderflow" => Ok(Termination::StepUnderflow),
        other => Err(CliError::Usage(format!("termination must be ReachedEnd, BlowUp or StepUnderflow, got '{other}'"))),
    }
}

pub fn verify(a: &VerifyArgs, mut p: Params) -> Result<(), CliError> {
    let input: std::path::PathBuf = p.require("input", a.input.clone())?;
    let slope_arg: Option<f64> = p.opt("slope", a.slope)?;
    let term_arg: Option<String> = p.opt("termination", a.termination.clone())?;
    let g_cap: f64 = p.get("g-cap", a.g_cap, DEFAULT_G_CAP)?;
    let out = out_dir(&mut p, &a.out, "selfsim-verify")?;
    let text = std::fs::read_to_string(&input)
        .map_err(|e| CliError::Usage(format!("cannot read {}: {e}", input.display())))?;
    let samples = trajectory_from_csv(&text)?;
    let first = *samples.first().ok_or_else(|| CliError::Usage("trajectory has no samples".into()))?;
    let last = *samples.last().expect("non-empty");
    let slope = slope_arg.unwrap_or(first.gp);
    let termination = match term_arg.as_deref() {
        Some(t) => parse_termination(t)?,
        None if last.g.abs() >= g_cap => Termination::BlowUp,
        None => Termination::ReachedEnd,
    };
    p.note("slope", &slope);
    p.note("termination", &termination);
    let res = ShootResult::from_samples(slope, samples, termination)?;
    let mut run = Run::create(&out, "selfsim verify", p.finish()?)?;
    run.input(&input);

    let ode = ode_check(&res.samples);
    let mut failures = Vec::new();
    if !ode.passed {
        failures.push(format!("equation defect {:.3e} exceeds {ODE_TOL:e}", ode.max_relative_defect));
    }
    let certificate = (termination == Termination::BlowUp && slope > 0.0).then(|| blowup_certificate(&res));
    if let Some(c) = &certificate {
        if !c.passed {
            failures.push(format!("blow-up certificate fails at sample {:?}", c.first_violation));
        }
    }
    let ansatz = if termination == Termination::ReachedEnd {
        let f = reconstruct_f(&res)?;
        let etas = default_sample_etas(f.domain(), ANSATZ_ETAS);
        match verify_ansatz(&f, &ANSATZ_TIMES, &etas, ANSATZ_STEP) {
            Ok(rep) => {
                let passed = rep.max_relative <= ANSATZ_TOL;
                if !passed {
                    failures.push(format!("ansatz residual {:.3e} exceeds {ANSATZ_TOL:e}", rep.max_relative));
                }
                json!({
                    "times": ANSATZ_TIMES,
                    "etas": etas,
                    "step": ANSATZ_STEP,
                    "max_residual": rep.max_residual,
                    "max_relative": rep.max_relative,
                    "tolerance": ANSATZ_TOL,
                    "passed": passed,
                    "cancellation_residual": f.cancellation_residual,
                })
            }
            Err(e) => json!({ "skipped": error_json(&e) }),
        }
    } else {
        serde_json::Value::Null
    };
    let report = json!({
        "input": input.display().to_string(),
        "slope": slope,
        "termination": termination,
        "n_samples": res.samples.len(),
        "eta_bar": res.eta_bar,
        "ode": ode,
        "certificate": certificate.map(|c| json!({ "passed": c.passed, "degenerate": c.degenerate, "first_violation": c.first_violation })),
        "ansatz": ansatz,
        "passed": failures.is_empty(),
        "failures": failures,
    });
    run.write_json("verify.json", &report)?;
    if failures.is_empty() {
        run.succeed()
    } else {
        run.fail(failures.join("; "))
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use hgl_core::selfsim::{shoot, ShootConfig};

    #[test]
    fn equation_check_accepts_solutions_and_rejects_tampering() {
        for a in [-1e4, -1.0, 1.0, 100.0] {
            let res = shoot(&ShootConfig::new(a, 20.0)).unwrap();
            let c = ode_check(&res.samples);
            assert!(c.passed, "a={a}: {}", c.max_relative_defect);
        }
        let mut res = shoot(&ShootConfig::new(-1.0, 5.0)).unwrap();
        let k = res.samples.len() / 2;
        res.samples[k].gpp *= 1.01;
        assert!(!ode_check(&res.samples).passed);
    }
}
