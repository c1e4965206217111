use serde_json::json;

use hgl_core::radial::{linear_steps, radial_continuation, radial_solve, ContinuationOptions, RadialProblem};
use hgl_core::BoundaryCondition;

use super::{boundary, out_dir};
use crate::config::Params;
use crate::run::{error_json, Run};
use crate::{CliError, RadialContinueArgs, RadialSolveArgs};

pub const DEFAULT_NR: usize = 401;

pub fn solve(a: &RadialSolveArgs, mut p: Params) -> Result<(), CliError> {
    let bc = boundary(&mut p, &a.bc, BoundaryCondition::Dirichlet)?;
    let lambda = p.get("lambda", a.lambda, 1.0)?;
    let nr = p.get("nr", a.nr, DEFAULT_NR)?;
    let tol = p.get("tol", a.tol, ContinuationOptions::default().tol)?;
    let out = out_dir(&mut p, &a.out, "radial-solve")?;
    let prob = RadialProblem::constant(nr, bc, lambda)?;
    let mut run = Run::create(&out, "radial solve", p.finish()?)?;
    match radial_solve(&prob, tol) {
        Ok(sol) => {
            run.write("profile.csv", &sol.to_csv())?;
            run.write_json(
                "summary.json",
                &json!({
                    "lambda": lambda,
                    "bc": bc,
                    "converged": sol.converged,
                    "iterations": sol.iterations,
                    "residual": sol.residual,
                    "center_lap_slope": sol.center_lap_slope,
                    "max_abs_u": sol.max_abs(),
                }),
            )?;
            run.succeed()
        }
        Err(e) => {
            run.write_json(
                "summary.json",
                &json!({ "lambda": lambda, "bc": bc, "converged": false, "error": error_json(&e) }),
            )?;
            run.fail(e.to_string())
        }
    }
}

pub fn continuation(a: &RadialContinueArgs, mut p: Params) -> Result<(), CliError> {
    let bc = boundary(&mut p, &a.bc, BoundaryCondition::Dirichlet)?;
    let lambda_max: f64 = p.require("lambda-max", a.lambda_max)?;
    let steps = p.get("steps", a.steps, 8usize)?;
    let nr = p.get("nr", a.nr, DEFAULT_NR)?;
    let defaults = ContinuationOptions::default();
    let tol = p.get("tol", a.tol, defaults.tol)?;
    let rel_width = p.get("rel-width", a.rel_width, defaults.rel_width)?;
    let cold = p.get("cold", a.cold, false)?;
    let out = out_dir(&mut p, &a.out, "radial-continue")?;
    if !(lambda_max > 0.0 && lambda_max.is_finite()) || steps == 0 {
        return Err(CliError::Usage("need lambda-max > 0 and steps >= 1".into()));
    }
    if !(rel_width > 0.0) {
        return Err(CliError::Usage(format!("rel-width must be positive, got {rel_width}")));
    }
    let template = RadialProblem::constant(nr, bc, 0.0)?;
    let opts = ContinuationOptions { tol, rel_width, warm_start: !cold };
    let mut run = Run::create(&out, "radial continue", p.finish()?)?;
    let bracket = radial_continuation(&template, &linear_steps(lambda_max, steps), opts)?;
    let mut history = String::from("lambda,converged,iterations,max_abs_u\n");
    for s in &bracket.history {
        history.push_str(&format!("{:e},{},{},{:e}\n", s.lambda, s.converged, s.iterations, s.max_abs_u));
    }
    run.write("history.csv", &history)?;
    if let Some(sol) = &bracket.last_solution {
        run.write("profile.csv", &sol.to_csv())?;
    }
    run.write_json(
        "summary.json",
        &json!({
            "bc": bc,
            "bracket": {
                "lambda_ok": (!bracket.lambda_ok.is_nan()).then_some(bracket.lambda_ok),
                "lambda_fail": bracket.lambda_fail,
                "relative_width": bracket.relative_width(),
            },
            "history": bracket.history,
        }),
    )?;
    run.succeed()
}
