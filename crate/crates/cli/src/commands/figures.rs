use serde_json::json;

use hgl_core::selfsim::{figure1_panels, sweep, SweepTemplate};

use crate::config::Params;
use crate::run::Run;
use crate::CliError;

/// One bundle `panel_<name>/` per slope set: trajectories, summaries and the panel window.
pub fn fig1(outdir: &std::path::Path, p: Params) -> Result<(), CliError> {
    let panels = figure1_panels();
    let mut p = p;
    p.note("panels", &panels);
    let mut run = Run::create(outdir, "figures fig1", p.finish()?)?;
    let mut failed = Vec::new();
    for panel in &panels {
        let res = sweep(&panel.slopes, &SweepTemplate::new(panel.eta_max))?;
        let prefix = format!("panel_{}/", panel.name);
        run.write_json(&format!("{prefix}panel.json"), &json!({ "name": panel.name, "eta_max": panel.eta_max, "slopes": panel.slopes }))?;
        super::selfsim::write_sweep(&mut run, &prefix, &res)?;
        let tally = res.tally();
        if tally.reached_end != panel.slopes.len() {
            failed.push(format!("panel {}: {} of {} slopes did not reach the end", panel.name, panel.slopes.len() - tally.reached_end, panel.slopes.len()));
        }
    }
    if failed.is_empty() {
        run.succeed()
    } else {
        run.fail(failed.join("; "))
    }
}
