//! Uniform rectangular grids and the scalar fields sampled on them.
//!
//! Nodes are indexed `(i, j)` with `i` along x and `j` along y; values are
//! stored row-major (`j * nx + i`). Node `(0, 0)` sits at the grid origin
//! and node `(nx-1, ny-1)` at `origin + (lx, ly)`.

mod io;
mod ops;

pub use io::{read_field_csv, write_field_csv, field_from_csv_str, field_to_csv_string};
pub use ops::{
    d2_dx2, d2_dy2, d_dx, d_dy, hessian_det, laplacian, quadrature, quadrature_weights,
    sobolev_norms, NormReport,
};

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Boundary-condition kind carried by a field.
///
/// `Dirichlet` is the clamped pair `u = ∂ₙu = 0`, `Navier` the hinged pair
/// `u = Δu = 0`.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum BoundaryCondition {
    Dirichlet,
    Navier,
}

impl BoundaryCondition {
    pub fn as_str(self) -> &'static str {
        match self {
            BoundaryCondition::Dirichlet => "dirichlet",
            BoundaryCondition::Navier => "navier",
        }
    }
}

impl std::fmt::Display for BoundaryCondition {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(self.as_str())
    }
}

impl std::str::FromStr for BoundaryCondition {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s.trim().to_ascii_lowercase().as_str() {
            "dirichlet" | "clamped" => Ok(BoundaryCondition::Dirichlet),
            "navier" | "hinged" => Ok(BoundaryCondition::Navier),
            other => Err(Error::Parse(format!("unknown boundary condition '{other}'"))),
        }
    }
}

/// Geometry of a uniform node grid over an axis-aligned rectangle.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct GridSpec {
    pub nx: usize,
    pub ny: usize,
    pub lx: f64,
    pub ly: f64,
    pub x0: f64,
    pub y0: f64,
}

impl GridSpec {
    pub const MIN_NODES: usize = 4;

    pub fn new(nx: usize, ny: usize, lx: f64, ly: f64) -> Result<Self> {
        Self::with_origin(nx, ny, lx, ly, 0.0, 0.0)
    }

    pub fn with_origin(nx: usize, ny: usize, lx: f64, ly: f64, x0: f64, y0: f64) -> Result<Self> {
        if nx < Self::MIN_NODES || ny < Self::MIN_NODES {
            return Err(Error::GridTooSmall { nx, ny });
        }
        if !(lx.is_finite() && ly.is_finite() && lx > 0.0 && ly > 0.0) {
            return Err(Error::InvalidGrid(format!("extents must be positive, got {lx} x {ly}")));
        }
        if !(x0.is_finite() && y0.is_finite()) {
            return Err(Error::InvalidGrid("origin must be finite".into()));
        }
        Ok(Self { nx, ny, lx, ly, x0, y0 })
    }

    /// `n × n` nodes on the unit square.
    pub fn unit_square(n: usize) -> Result<Self> {
        Self::new(n, n, 1.0, 1.0)
    }

    #[inline]
    pub fn hx(&self) -> f64 {
        self.lx / (self.nx - 1) as f64
    }

    #[inline]
    pub fn hy(&self) -> f64 {
        self.ly / (self.ny - 1) as f64
    }

    #[inline]
    pub fn x(&self, i: usize) -> f64 {
        self.x0 + i as f64 * self.hx()
    }

    #[inline]
    pub fn y(&self, j: usize) -> f64 {
        self.y0 + j as f64 * self.hy()
    }

    #[inline]
    pub fn idx(&self, i: usize, j: usize) -> usize {
        j * self.nx + i
    }

    #[inline]
    pub fn len(&self) -> usize {
        self.nx * self.ny
    }

    #[inline]
    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }

    #[inline]
    pub fn is_boundary(&self, i: usize, j: usize) -> bool {
        i == 0 || j == 0 || i == self.nx - 1 || j == self.ny - 1
    }

    /// Number of interior unknowns along x and y.
    #[inline]
    pub fn interior_dims(&self) -> (usize, usize) {
        (self.nx - 2, self.ny - 2)
    }

    pub fn same_shape(&self, other: &GridSpec) -> bool {
        self.nx == other.nx
            && self.ny == other.ny
            && (self.lx - other.lx).abs() <= 1e-12 * self.lx
            && (self.ly - other.ly).abs() <= 1e-12 * self.ly
            && (self.x0 - other.x0).abs() <= 1e-12 * self.lx.max(1.0)
            && (self.y0 - other.y0).abs() <= 1e-12 * self.ly.max(1.0)
    }
}

/// A scalar field sampled on every node of a [`GridSpec`].
#[derive(Debug, Clone, PartialEq)]
pub struct GridField2D {
    spec: GridSpec,
    values: Vec<f64>,
    bc: BoundaryCondition,
}

impl GridField2D {
    pub fn zeros(spec: GridSpec, bc: BoundaryCondition) -> Self {
        Self { spec, values: vec![0.0; spec.len()], bc }
    }

    /// Takes ownership of `values`; rejects wrong lengths and non-finite entries.
    pub fn from_values(spec: GridSpec, bc: BoundaryCondition, values: Vec<f64>) -> Result<Self> {
        if values.len() != spec.len() {
            return Err(Error::GridMismatch(format!(
                "expected {} values for a {}x{} grid, got {}",
                spec.len(),
                spec.nx,
                spec.ny,
                values.len()
            )));
        }
        if let Some(index) = values.iter().position(|v| !v.is_finite()) {
            return Err(Error::NonFinite { index });
        }
        Ok(Self { spec, values, bc })
    }

    /// Samples `f(x, y)` at every node.
    pub fn from_fn(spec: GridSpec, bc: BoundaryCondition, f: impl Fn(f64, f64) -> f64) -> Self {
        let mut values = Vec::with_capacity(spec.len());
        for j in 0..spec.ny {
            let y = spec.y(j);
            for i in 0..spec.nx {
                values.push(f(spec.x(i), y));
            }
        }
        Self { spec, values, bc }
    }

    /// Samples `f` on interior nodes and sets the boundary ring to zero.
    pub fn from_fn_interior(
        spec: GridSpec,
        bc: BoundaryCondition,
        f: impl Fn(f64, f64) -> f64,
    ) -> Self {
        let mut field = Self::from_fn(spec, bc, f);
        field.zero_boundary();
        field
    }

    #[inline]
    pub fn spec(&self) -> &GridSpec {
        &self.spec
    }

    #[inline]
    pub fn bc(&self) -> BoundaryCondition {
        self.bc
    }

    pub fn with_bc(mut self, bc: BoundaryCondition) -> Self {
        self.bc = bc;
        self
    }

    #[inline]
    pub fn values(&self) -> &[f64] {
        &self.values
    }

    #[inline]
    pub fn values_mut(&mut self) -> &mut [f64] {
        &mut self.values
    }

    pub fn into_values(self) -> Vec<f64> {
        self.values
    }

    #[inline]
    pub fn get(&self, i: usize, j: usize) -> f64 {
        self.values[self.spec.idx(i, j)]
    }

    #[inline]
    pub fn set(&mut self, i: usize, j: usize, v: f64) {
        let k = self.spec.idx(i, j);
        self.values[k] = v;
    }

    pub fn is_finite(&self) -> bool {
        self.values.iter().all(|v| v.is_finite())
    }

    pub fn check_finite(&self) -> Result<()> {
        match self.values.iter().position(|v| !v.is_finite()) {
            Some(index) => Err(Error::NonFinite { index }),
            None => Ok(()),
        }
    }

    pub fn zero_boundary(&mut self) {
        let GridSpec { nx, ny, .. } = self.spec;
        for i in 0..nx {
            self.values[i] = 0.0;
            self.values[(ny - 1) * nx + i] = 0.0;
        }
        for j in 0..ny {
            self.values[j * nx] = 0.0;
            self.values[j * nx + nx - 1] = 0.0;
        }
    }

    /// Largest boundary magnitude; zero for fields honoring a homogeneous condition.
    pub fn boundary_max_abs(&self) -> f64 {
        let GridSpec { nx, ny, .. } = self.spec;
        let mut m = 0.0f64;
        for j in 0..ny {
            for i in 0..nx {
                if self.spec.is_boundary(i, j) {
                    m = m.max(self.get(i, j).abs());
                }
            }
        }
        m
    }

    pub fn max_abs(&self) -> f64 {
        self.values.iter().fold(0.0, |m, v| m.max(v.abs()))
    }

    pub fn map(&self, f: impl Fn(f64) -> f64) -> Self {
        Self { spec: self.spec, values: self.values.iter().map(|&v| f(v)).collect(), bc: self.bc }
    }

    pub fn scaled(&self, c: f64) -> Self {
        self.map(|v| c * v)
    }

    /// `self + c * other`, pointwise.
    pub fn axpy(&self, c: f64, other: &GridField2D) -> Result<Self> {
        self.ensure_same_grid(other)?;
        let values = self.values.iter().zip(&other.values).map(|(a, b)| a + c * b).collect();
        Ok(Self { spec: self.spec, values, bc: self.bc })
    }

    pub fn sub(&self, other: &GridField2D) -> Result<Self> {
        self.axpy(-1.0, other)
    }

    pub fn ensure_same_grid(&self, other: &GridField2D) -> Result<()> {
        if self.spec.same_shape(&other.spec) {
            Ok(())
        } else {
            Err(Error::GridMismatch(format!(
                "{}x{} vs {}x{}",
                self.spec.nx, self.spec.ny, other.spec.nx, other.spec.ny
            )))
        }
    }

    /// Copies the interior nodes into a dense `(nx-2) * (ny-2)` vector, row-major.
    pub fn interior(&self) -> Vec<f64> {
        let GridSpec { nx, ny, .. } = self.spec;
        let mut out = Vec::with_capacity((nx - 2) * (ny - 2));
        for j in 1..ny - 1 {
            out.extend_from_slice(&self.values[j * nx + 1..j * nx + nx - 1]);
        }
        out
    }

    /// Inverse of [`GridField2D::interior`]: boundary ring set to zero.
    pub fn from_interior(spec: GridSpec, bc: BoundaryCondition, interior: &[f64]) -> Self {
        let GridSpec { nx, ny, .. } = spec;
        debug_assert_eq!(interior.len(), (nx - 2) * (ny - 2));
        let mut values = vec![0.0; spec.len()];
        for j in 1..ny - 1 {
            let row = &interior[(j - 1) * (nx - 2)..j * (nx - 2)];
            values[j * nx + 1..j * nx + nx - 1].copy_from_slice(row);
        }
        Self { spec, values, bc }
    }
}
