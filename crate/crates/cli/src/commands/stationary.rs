use serde_json::{json, Value};

use hgl_core::grid::field_to_csv_string;
use hgl_core::stationary::{
    continuation_lambda, descent_solve, fixed_point_solve, ProblemSpec, StationarySolution, DEFAULT_MAX_ITER,
};
use hgl_core::BoundaryCondition;

use super::{boundary, forcing_source, out_dir, problem, unit_grid, FieldSource};
use crate::config::{parse_float_list, Params};
use crate::run::{error_json, Run};
use crate::{CliError, ProblemOpts, StationaryContinueArgs, StationarySolveArgs};

pub const DEFAULT_NX: usize = 65;
pub const DEFAULT_TOL: f64 = 1e-10;

struct Resolved {
    bc: BoundaryCondition,
    source: FieldSource,
    nx: usize,
    ny: usize,
    tol: f64,
    max_iter: usize,
}

fn resolve(o: &ProblemOpts, p: &mut Params) -> Result<Resolved, CliError> {
    let bc = boundary(p, &o.bc, BoundaryCondition::Navier)?;
    let h: String = p.get("h", o.h.clone(), "const".to_string())?;
    let source = forcing_source(&h)?;
    let nx = p.get("nx", o.nx, DEFAULT_NX)?;
    let ny = p.get("ny", o.ny, nx)?;
    let tol = p.get("tol", o.tol, DEFAULT_TOL)?;
    let max_iter = p.get("max-iter", o.max_iter, DEFAULT_MAX_ITER)?;
    Ok(Resolved { bc, source, nx, ny, tol, max_iter })
}

impl Resolved {
    fn spec(&self, lambda: f64) -> Result<ProblemSpec, CliError> {
        problem(&self.source, unit_grid(self.nx, self.ny)?, self.bc, lambda)
    }
}

fn summary(lambda: f64, method: &str, sol: &StationarySolution) -> Value {
    json!({
        "lambda": lambda,
        "method": method,
        "converged": sol.converged,
        "iterations": sol.iterations,
        "residual": sol.residual,
        "energy": sol.energy,
    })
}

pub fn solve(a: &StationarySolveArgs, mut p: Params) -> Result<(), CliError> {
    let lambda = p.get("lambda", a.lambda, 1.0)?;
    let method: String = p.get("method", a.method.clone(), "picard".to_string())?;
    let r = resolve(&a.problem, &mut p)?;
    let out = out_dir(&mut p, &a.out, "stationary-solve")?;
    if method != "picard" && method != "descent" {
        return Err(CliError::Usage(format!("method must be picard or descent, got '{method}'")));
    }
    if method == "descent" && r.bc != BoundaryCondition::Dirichlet {
        return Err(CliError::Usage("descent needs --bc dirichlet; the hinged problem has no energy".into()));
    }
    let spec = r.spec(lambda)?;
    p.note("grid", &spec.grid);
    let mut run = Run::create(&out, "stationary solve", p.finish()?)?;
    if let FieldSource::File(path) = &r.source {
        run.input(path);
    }
    let result = match method.as_str() {
        "descent" => descent_solve(&spec, r.tol, r.max_iter),
        _ => fixed_point_solve(&spec, r.tol, r.max_iter),
    };
    match result {
        Ok(sol) => {
            run.write("field.csv", &field_to_csv_string(&sol.u))?;
            run.write_json("summary.json", &summary(lambda, &method, &sol))?;
            run.succeed()
        }
        Err(e) => {
            run.write_json(
                "summary.json",
                &json!({
                    "lambda": lambda,
                    "method": method,
                    "converged": false,
                    "iterations": null,
                    "residual": null,
                    "energy": null,
                    "error": error_json(&e),
                }),
            )?;
            run.fail(e.to_string())
        }
    }
}

pub fn continuation(a: &StationaryContinueArgs, mut p: Params) -> Result<(), CliError> {
    let text: String = p.require("lambda-grid", a.lambda_grid.clone())?;
    let grid = parse_float_list(&text).map_err(|e| CliError::Usage(format!("--lambda-grid: {e}")))?;
    let r = resolve(&a.problem, &mut p)?;
    let out = out_dir(&mut p, &a.out, "stationary-continue")?;
    let spec = r.spec(0.0)?;
    p.note("lambdas", &grid);
    let mut run = Run::create(&out, "stationary continue", p.finish()?)?;
    if let FieldSource::File(path) = &r.source {
        run.input(path);
    }
    let table = continuation_lambda(&spec, &grid, r.tol, r.max_iter)?;
    run.write("continuation.csv", &table.to_csv())?;
    run.write_json(
        "summary.json",
        &json!({
            "bracket": table.bracket.map(|(ok, fail)| json!({ "lambda_ok": ok, "lambda_fail": fail })),
            "bracket_width": table.bracket_width(),
            "rows": table.rows,
        }),
    )?;
    run.succeed()
}
