//! Subcommand implementations.

pub mod evolve;
pub mod figures;
pub mod radial;
pub mod selfsim;
pub mod stationary;

use std::path::{Path, PathBuf};

use hgl_core::grid::read_field_csv;
use hgl_core::stationary::{ForcingShape, ProblemSpec};
use hgl_core::{BoundaryCondition, GridField2D, GridSpec};

use crate::config::Params;
use crate::CliError;

pub fn out_dir(p: &mut Params, cli: &Option<PathBuf>, name: &str) -> Result<PathBuf, CliError> {
    p.get("out", cli.clone(), Path::new("hgl-out").join(name))
}

pub fn boundary(p: &mut Params, cli: &Option<String>, default: BoundaryCondition) -> Result<BoundaryCondition, CliError> {
    let cli = cli.as_deref().map(str::parse::<BoundaryCondition>).transpose()?;
    p.get("bc", cli, default)
}

/// `const`, `sine` or `file:PATH`.
#[derive(Debug, Clone)]
pub enum FieldSource {
    Shape(ForcingShape),
    File(PathBuf),
}

pub fn forcing_source(text: &str) -> Result<FieldSource, CliError> {
    match text.trim() {
        "const" | "constant" => Ok(FieldSource::Shape(ForcingShape::Constant)),
        "sine" => Ok(FieldSource::Shape(ForcingShape::Sine)),
        t => match t.strip_prefix("file:") {
            Some(path) if !path.is_empty() => Ok(FieldSource::File(PathBuf::from(path))),
            _ => Err(CliError::Usage(format!("forcing must be const, sine or file:PATH, got '{t}'"))),
        },
    }
}

pub fn read_field(path: &Path, bc: BoundaryCondition) -> Result<GridField2D, CliError> {
    match read_field_csv(path) {
        Ok(f) => Ok(f.with_bc(bc)),
        Err(hgl_core::Error::Io(e)) => Err(CliError::Usage(format!("cannot read {}: {e}", path.display()))),
        Err(e) => Err(CliError::Usage(format!("{}: {e}", path.display()))),
    }
}

/// A field file fixes the grid; shapes are sampled on `grid`.
pub fn problem(source: &FieldSource, grid: GridSpec, bc: BoundaryCondition, lambda: f64) -> Result<ProblemSpec, CliError> {
    Ok(match source {
        FieldSource::Shape(shape) => ProblemSpec::with_shape(grid, bc, *shape, lambda)?,
        FieldSource::File(path) => {
            let h = read_field(path, bc)?;
            ProblemSpec::new(*h.spec(), bc, h, lambda)?
        }
    })
}

pub fn unit_grid(nx: usize, ny: usize) -> Result<GridSpec, CliError> {
    Ok(GridSpec::new(nx, ny, 1.0, 1.0)?)
}
