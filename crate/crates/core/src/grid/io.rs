//! Field CSV format.
//!
//! ```text
//! # nx=<int> ny=<int> lx=<float> ly=<float> bc=<dirichlet|navier>
//! v(0,0),v(1,0),...,v(nx-1,0)
//! ...
//! v(0,ny-1),...,v(nx-1,ny-1)
//! ```
//!
//! A non-zero origin is appended to the header as `x0=<float> y0=<float>`.

use std::fmt::Write as _;
use std::path::Path;

use super::{BoundaryCondition, GridField2D, GridSpec};
use crate::error::{Error, Result};

pub fn field_to_csv_string(f: &GridField2D) -> String {
    let s = f.spec();
    let mut out = String::with_capacity(s.len() * 24 + 64);
    let _ = write!(out, "# nx={} ny={} lx={} ly={} bc={}", s.nx, s.ny, s.lx, s.ly, f.bc());
    if s.x0 != 0.0 || s.y0 != 0.0 {
        let _ = write!(out, " x0={} y0={}", s.x0, s.y0);
    }
    out.push('\n');
    for j in 0..s.ny {
        for i in 0..s.nx {
            if i > 0 {
                out.push(',');
            }
            let _ = write!(out, "{:e}", f.get(i, j));
        }
        out.push('\n');
    }
    out
}

pub fn write_field_csv(path: impl AsRef<Path>, f: &GridField2D) -> Result<()> {
    std::fs::write(path, field_to_csv_string(f))?;
    Ok(())
}

pub fn read_field_csv(path: impl AsRef<Path>) -> Result<GridField2D> {
    field_from_csv_str(&std::fs::read_to_string(path)?)
}

pub fn field_from_csv_str(text: &str) -> Result<GridField2D> {
    let mut lines = text.lines().filter(|l| !l.trim().is_empty());
    let header = lines.next().ok_or_else(|| Error::Parse("empty field file".into()))?;
    let header = header
        .trim()
        .strip_prefix('#')
        .ok_or_else(|| Error::Parse("field header must start with '#'".into()))?;

    let (mut nx, mut ny, mut lx, mut ly, mut bc) = (None, None, None, None, None);
    let (mut x0, mut y0) = (0.0, 0.0);
    for token in header.split_whitespace() {
        let (key, value) = token
            .split_once('=')
            .ok_or_else(|| Error::Parse(format!("malformed header token '{token}'")))?;
        let float = || value.parse::<f64>().map_err(|e| Error::Parse(format!("{key}: {e}")));
        let int = || value.parse::<usize>().map_err(|e| Error::Parse(format!("{key}: {e}")));
        match key {
            "nx" => nx = Some(int()?),
            "ny" => ny = Some(int()?),
            "lx" => lx = Some(float()?),
            "ly" => ly = Some(float()?),
            "x0" => x0 = float()?,
            "y0" => y0 = float()?,
            "bc" => bc = Some(value.parse::<BoundaryCondition>()?),
            other => return Err(Error::Parse(format!("unknown header key '{other}'"))),
        }
    }
    let missing = |k: &str| Error::Parse(format!("header missing '{k}'"));
    let spec = GridSpec::with_origin(
        nx.ok_or_else(|| missing("nx"))?,
        ny.ok_or_else(|| missing("ny"))?,
        lx.ok_or_else(|| missing("lx"))?,
        ly.ok_or_else(|| missing("ly"))?,
        x0,
        y0,
    )?;
    let bc = bc.ok_or_else(|| missing("bc"))?;

    let mut values = Vec::with_capacity(spec.len());
    let mut rows = 0;
    for (r, line) in lines.enumerate() {
        let before = values.len();
        for cell in line.split(',') {
            let v = cell
                .trim()
                .parse::<f64>()
                .map_err(|e| Error::Parse(format!("row {r}: '{}': {e}", cell.trim())))?;
            values.push(v);
        }
        if values.len() - before != spec.nx {
            return Err(Error::Parse(format!(
                "row {r} has {} values, expected {}",
                values.len() - before,
                spec.nx
            )));
        }
        rows += 1;
    }
    if rows != spec.ny {
        return Err(Error::Parse(format!("found {rows} rows, expected {}", spec.ny)));
    }
    GridField2D::from_values(spec, bc, values)
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    #[test]
    fn header_is_exact() {
        let spec = GridSpec::new(4, 5, 1.0, 2.5).unwrap();
        let f = GridField2D::zeros(spec, BoundaryCondition::Navier);
        let text = field_to_csv_string(&f);
        assert_eq!(text.lines().next().unwrap(), "# nx=4 ny=5 lx=1 ly=2.5 bc=navier");
        assert_eq!(text.lines().count(), 6);
        assert_eq!(text.lines().nth(1).unwrap(), "0e0,0e0,0e0,0e0");
    }

    #[test]
    fn rejects_bad_shapes() {
        assert!(field_from_csv_str("# nx=4 ny=4 lx=1 ly=1 bc=navier\n1,2,3\n").is_err());
        assert!(field_from_csv_str("nx=4\n").is_err());
        assert!(field_from_csv_str("# nx=4 ny=4 lx=1 ly=1 bc=foo\n").is_err());
        let three_rows = "# nx=4 ny=4 lx=1 ly=1 bc=dirichlet\n0,0,0,0\n0,0,0,0\n0,0,0,0\n";
        assert!(field_from_csv_str(three_rows).is_err());
    }

    proptest! {
        #![proptest_config(ProptestConfig::with_cases(24))]
        #[test]
        fn csv_round_trip_is_exact(
            nx in 4usize..9, ny in 4usize..9,
            seed in proptest::collection::vec(-1e6f64..1e6, 81),
            navier in any::<bool>(), x0 in -2.0f64..2.0,
        ) {
            let spec = GridSpec::with_origin(nx, ny, 1.25, 0.75, x0, 0.0).unwrap();
            let bc = if navier { BoundaryCondition::Navier } else { BoundaryCondition::Dirichlet };
            let f = GridField2D::from_values(spec, bc, seed[..nx * ny].to_vec()).unwrap();
            let back = field_from_csv_str(&field_to_csv_string(&f)).unwrap();
            prop_assert_eq!(back, f);
        }
    }
}
