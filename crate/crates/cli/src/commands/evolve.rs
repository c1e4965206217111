use serde_json::json;

use hgl_core::evolution::{evolve as run_evolution, EvolutionConfig, Outcome};
use hgl_core::grid::field_to_csv_string;
use hgl_core::stationary::ForcingShape;
use hgl_core::BoundaryCondition;

use super::{boundary, forcing_source, out_dir, problem, read_field, unit_grid, FieldSource};
use crate::config::Params;
use crate::run::Run;
use crate::{CliError, EvolveArgs};

pub const DEFAULT_NX: usize = 33;

enum Initial {
    Sine(f64),
    File(std::path::PathBuf),
}

fn initial(text: &str) -> Result<Initial, CliError> {
    let t = text.trim();
    if let Some(a) = t.strip_prefix("sine:") {
        let amp: f64 = a.trim().parse().map_err(|e| CliError::Usage(format!("--ic sine:A: '{a}': {e}")))?;
        return Ok(Initial::Sine(amp));
    }
    match t.strip_prefix("file:") {
        Some(path) if !path.is_empty() => Ok(Initial::File(path.into())),
        _ => Err(CliError::Usage(format!("--ic must be sine:A or file:PATH, got '{t}'"))),
    }
}

pub fn evolve(a: &EvolveArgs, mut p: Params) -> Result<(), CliError> {
    let bc = boundary(&mut p, &a.bc, BoundaryCondition::Navier)?;
    let lambda = p.get("lambda", a.lambda, 0.0)?;
    let h: String = p.get("h", a.h.clone(), "sine".to_string())?;
    let ic: String = p.get("ic", a.ic.clone(), "sine:0.01".to_string())?;
    let nx = p.get("nx", a.nx, DEFAULT_NX)?;
    let dt = p.get("dt", a.dt, 1e-4)?;
    let t_max = p.get("t-max", a.t_max, 1.0)?;
    let snapshot_every = p.get("snapshot-every", a.snapshot_every, 0usize)?;
    let cap: Option<f64> = p.opt("blowup-cap", a.blowup_cap)?;
    let out = out_dir(&mut p, &a.out, "evolve")?;

    let source = forcing_source(&h)?;
    let init = initial(&ic)?;
    let u0 = match &init {
        Initial::Sine(amp) => ForcingShape::Sine.sample(unit_grid(nx, nx)?, bc).scaled(*amp),
        Initial::File(path) => read_field(path, bc)?,
    };
    let spec = problem(&source, *u0.spec(), bc, lambda)?;
    let mut cfg = EvolutionConfig::new(spec, u0, dt, t_max);
    cfg.snapshot_every = snapshot_every;
    cfg.blowup_norm_cap = cap;
    cfg.validate()?;
    p.note("grid", &cfg.spec.grid);

    let mut run = Run::create(&out, "evolve", p.finish()?)?;
    if let FieldSource::File(path) = &source {
        run.input(path);
    }
    if let Initial::File(path) = &init {
        run.input(path);
    }
    let trace = run_evolution(&cfg)?;
    run.write("norms.csv", &trace.to_csv())?;
    let mut index = String::from("index,t,file\n");
    for (k, (t, u)) in trace.snapshots.iter().enumerate() {
        let name = format!("snapshots/snapshot_{k:04}.csv");
        run.write(&name, &field_to_csv_string(u))?;
        index.push_str(&format!("{k},{t:e},{name}\n"));
    }
    run.write("snapshots.csv", &index)?;
    let final_norm = trace.sobolev22.last().copied();
    run.write_json(
        "summary.json",
        &json!({
            "outcome": trace.outcome.label(),
            "t_star_estimate": trace.t_star_estimate,
            "t_star_method": "heuristic: root of a least-squares line through (t, 1/||u||_W22) over the last 5 samples",
            "steps": trace.steps,
            "t_final": trace.times.last(),
            "final_sobolev22": final_norm,
            "blowup_norm_cap": trace.blowup_norm_cap,
            "final_energy": trace.energy.as_ref().and_then(|e| e.last()),
            "abort_reason": match &trace.outcome { Outcome::Aborted(m) => Some(m.as_str()), _ => None },
        }),
    )?;
    match trace.outcome {
        Outcome::Aborted(m) => run.fail(m),
        _ => run.succeed(),
    }
}
