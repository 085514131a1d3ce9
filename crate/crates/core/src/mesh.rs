//! Uniform grids on the unit interval and unit square, node-centered fields,
//! the two-triangle-per-cell triangulation, and the interpolation operators
//! used to evaluate values at characteristic foot points.
//!
//! Nodes of a [`Grid2`] are numbered row by row: node `(i, j)` has index
//! `j * (nx + 1) + i` and sits at `(i / nx, j / ny)`. Every cell is split by
//! the diagonal running from `(x_{i+1}, y_j)` to `(x_i, y_{j+1})`.

use std::fmt::Write as _;
use std::io::{self, BufRead, Write};
use std::str::FromStr;

use thiserror::Error;

#[derive(Debug, Error)]
pub enum MeshError {
    #[error("grid needs at least 2 cells per axis, got {0}")]
    TooFewCells(usize),
    #[error("point {0} lies outside [0, 1]")]
    OutsideDomain(f64),
    #[error("field has {got} values but its grid has {expected} nodes")]
    LengthMismatch { expected: usize, got: usize },
    #[error("fields live on different grids")]
    GridMismatch,
    #[error("non-finite value {value} at node {node}")]
    NonFinite { node: usize, value: f64 },
    #[error("malformed field dump: {0}")]
    Parse(String),
    #[error(transparent)]
    Io(#[from] io::Error),
}

/// Round-off slack accepted by the interpolation operators at the domain edges.
pub const DOMAIN_TOL: f64 = 1e-12;

/// Anything a [`Field`] can be attached to.
pub trait NodeGrid: Copy + PartialEq + std::fmt::Debug {
    fn node_count(&self) -> usize;
}

/// Uniform grid of `n` cells on `[0, 1]`.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct Grid1 {
    n: usize,
}

impl Grid1 {
    pub fn new(n: usize) -> Result<Self, MeshError> {
        if n < 2 {
            return Err(MeshError::TooFewCells(n));
        }
        Ok(Grid1 { n })
    }

    pub fn cells(&self) -> usize {
        self.n
    }

    pub fn h(&self) -> f64 {
        1.0 / self.n as f64
    }

    pub fn x(&self, i: usize) -> f64 {
        i as f64 / self.n as f64
    }

    pub fn nodes(&self) -> impl Iterator<Item = (usize, f64)> + '_ {
        (0..=self.n).map(move |i| (i, self.x(i)))
    }
}

impl NodeGrid for Grid1 {
    fn node_count(&self) -> usize {
        self.n + 1
    }
}

/// Uniform Cartesian grid on the unit square.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct Grid2 {
    nx: usize,
    ny: usize,
}

/// One triangle of the FE mesh: node indices and vertex coordinates,
/// listed counter-clockwise starting at the right-angle vertex.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Triangle {
    pub nodes: [usize; 3],
    pub vertices: [(f64, f64); 3],
}

impl Triangle {
    pub fn area(&self) -> f64 {
        let [(x0, y0), (x1, y1), (x2, y2)] = self.vertices;
        0.5 * ((x1 - x0) * (y2 - y0) - (x2 - x0) * (y1 - y0))
    }

    /// Gradients of the three P1 basis functions (constant on the element).
    pub fn basis_gradients(&self) -> [(f64, f64); 3] {
        let [(x0, y0), (x1, y1), (x2, y2)] = self.vertices;
        let det = (x1 - x0) * (y2 - y0) - (x2 - x0) * (y1 - y0);
        [
            ((y1 - y2) / det, (x2 - x1) / det),
            ((y2 - y0) / det, (x0 - x2) / det),
            ((y0 - y1) / det, (x1 - x0) / det),
        ]
    }

    /// Gradient of the linear interpolant of nodal `values`.
    pub fn gradient(&self, values: &[f64]) -> (f64, f64) {
        let g = self.basis_gradients();
        let mut gx = 0.0;
        let mut gy = 0.0;
        for (k, &node) in self.nodes.iter().enumerate() {
            gx += g[k].0 * values[node];
            gy += g[k].1 * values[node];
        }
        (gx, gy)
    }

    /// Arithmetic mean of a nodal quantity over the three vertices.
    pub fn vertex_mean(&self, values: &[f64]) -> f64 {
        (values[self.nodes[0]] + values[self.nodes[1]] + values[self.nodes[2]]) / 3.0
    }
}

impl Grid2 {
    pub fn new(nx: usize, ny: usize) -> Result<Self, MeshError> {
        if nx < 2 {
            return Err(MeshError::TooFewCells(nx));
        }
        if ny < 2 {
            return Err(MeshError::TooFewCells(ny));
        }
        Ok(Grid2 { nx, ny })
    }

    pub fn square(n: usize) -> Result<Self, MeshError> {
        Grid2::new(n, n)
    }

    pub fn nx(&self) -> usize {
        self.nx
    }

    pub fn ny(&self) -> usize {
        self.ny
    }

    pub fn hx(&self) -> f64 {
        1.0 / self.nx as f64
    }

    pub fn hy(&self) -> f64 {
        1.0 / self.ny as f64
    }

    pub fn node(&self, i: usize, j: usize) -> usize {
        debug_assert!(i <= self.nx && j <= self.ny);
        j * (self.nx + 1) + i
    }

    pub fn ij(&self, node: usize) -> (usize, usize) {
        (node % (self.nx + 1), node / (self.nx + 1))
    }

    pub fn x(&self, i: usize) -> f64 {
        i as f64 / self.nx as f64
    }

    pub fn y(&self, j: usize) -> f64 {
        j as f64 / self.ny as f64
    }

    pub fn point(&self, node: usize) -> (f64, f64) {
        let (i, j) = self.ij(node);
        (self.x(i), self.y(j))
    }

    pub fn is_boundary(&self, i: usize, j: usize) -> bool {
        i == 0 || j == 0 || i == self.nx || j == self.ny
    }

    pub fn triangle_count(&self) -> usize {
        2 * self.nx * self.ny
    }

    /// The two triangles of cell `(i, j)`: lower-left, then upper-right.
    pub fn cell_triangles(&self, i: usize, j: usize) -> [Triangle; 2] {
        let (x0, x1) = (self.x(i), self.x(i + 1));
        let (y0, y1) = (self.y(j), self.y(j + 1));
        [
            Triangle {
                nodes: [self.node(i, j), self.node(i + 1, j), self.node(i, j + 1)],
                vertices: [(x0, y0), (x1, y0), (x0, y1)],
            },
            Triangle {
                nodes: [
                    self.node(i + 1, j + 1),
                    self.node(i, j + 1),
                    self.node(i + 1, j),
                ],
                vertices: [(x1, y1), (x0, y1), (x1, y0)],
            },
        ]
    }

    pub fn triangles(&self) -> impl Iterator<Item = Triangle> + '_ {
        (0..self.ny).flat_map(move |j| {
            (0..self.nx).flat_map(move |i| self.cell_triangles(i, j).into_iter())
        })
    }
}

impl NodeGrid for Grid2 {
    fn node_count(&self) -> usize {
        (self.nx + 1) * (self.ny + 1)
    }
}

/// What a field represents; used in dump headers.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum FieldLabel {
    Saturation,
    Concentration,
    Pressure,
    VelocityX,
    VelocityY,
    Error,
}

impl FieldLabel {
    pub fn as_str(&self) -> &'static str {
        match self {
            FieldLabel::Saturation => "s",
            FieldLabel::Concentration => "c",
            FieldLabel::Pressure => "p",
            FieldLabel::VelocityX => "vx",
            FieldLabel::VelocityY => "vy",
            FieldLabel::Error => "error",
        }
    }
}

impl FromStr for FieldLabel {
    type Err = MeshError;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        Ok(match s {
            "s" => FieldLabel::Saturation,
            "c" => FieldLabel::Concentration,
            "p" => FieldLabel::Pressure,
            "vx" => FieldLabel::VelocityX,
            "vy" => FieldLabel::VelocityY,
            "error" => FieldLabel::Error,
            other => return Err(MeshError::Parse(format!("unknown label {other:?}"))),
        })
    }
}

/// Node-centered scalar values bound to a grid.
#[derive(Debug, Clone, PartialEq)]
pub struct Field<G: NodeGrid = Grid2> {
    grid: G,
    label: FieldLabel,
    values: Vec<f64>,
}

impl<G: NodeGrid> Field<G> {
    pub fn constant(grid: G, label: FieldLabel, value: f64) -> Self {
        Field {
            grid,
            label,
            values: vec![value; grid.node_count()],
        }
    }

    pub fn zeros(grid: G, label: FieldLabel) -> Self {
        Field::constant(grid, label, 0.0)
    }

    pub fn from_values(grid: G, label: FieldLabel, values: Vec<f64>) -> Result<Self, MeshError> {
        if values.len() != grid.node_count() {
            return Err(MeshError::LengthMismatch {
                expected: grid.node_count(),
                got: values.len(),
            });
        }
        if let Some((node, &value)) = values.iter().enumerate().find(|(_, v)| !v.is_finite()) {
            return Err(MeshError::NonFinite { node, value });
        }
        Ok(Field {
            grid,
            label,
            values,
        })
    }

    pub fn grid(&self) -> G {
        self.grid
    }

    pub fn label(&self) -> FieldLabel {
        self.label
    }

    pub fn values(&self) -> &[f64] {
        &self.values
    }

    pub fn values_mut(&mut self) -> &mut [f64] {
        &mut self.values
    }

    pub fn into_values(self) -> Vec<f64> {
        self.values
    }

    pub fn relabel(mut self, label: FieldLabel) -> Self {
        self.label = label;
        self
    }

    pub fn max(&self) -> f64 {
        self.values.iter().copied().fold(f64::NEG_INFINITY, f64::max)
    }

    pub fn min(&self) -> f64 {
        self.values.iter().copied().fold(f64::INFINITY, f64::min)
    }

    pub fn check_finite(&self) -> Result<(), MeshError> {
        match self.values.iter().enumerate().find(|(_, v)| !v.is_finite()) {
            Some((node, &value)) => Err(MeshError::NonFinite { node, value }),
            None => Ok(()),
        }
    }
}

impl Field<Grid1> {
    pub fn sample(grid: Grid1, label: FieldLabel, u: impl Fn(f64) -> f64) -> Self {
        let values = grid.nodes().map(|(_, x)| u(x)).collect();
        Field {
            grid,
            label,
            values,
        }
    }
}

impl Field<Grid2> {
    pub fn sample(grid: Grid2, label: FieldLabel, u: impl Fn(f64, f64) -> f64) -> Self {
        let values = (0..grid.node_count())
            .map(|k| {
                let (x, y) = grid.point(k);
                u(x, y)
            })
            .collect();
        Field {
            grid,
            label,
            values,
        }
    }

    pub fn at(&self, i: usize, j: usize) -> f64 {
        self.values[self.grid.node(i, j)]
    }

    /// Write the plain-text dump: a `# nx ny time label` header, then one
    /// line per grid row (`j = 0` first) of whitespace-separated values.
    pub fn write_dump<W: Write>(&self, mut out: W, time: f64) -> io::Result<()> {
        let g = self.grid;
        writeln!(out, "# {} {} {:e} {}", g.nx(), g.ny(), time, self.label.as_str())?;
        let mut line = String::new();
        for j in 0..=g.ny() {
            line.clear();
            for i in 0..=g.nx() {
                if i > 0 {
                    line.push(' ');
                }
                write!(line, "{:e}", self.at(i, j)).expect("writing to a String");
            }
            writeln!(out, "{line}")?;
        }
        Ok(())
    }

    /// Parse a dump written by [`Field::write_dump`]; returns the field and its time stamp.
    pub fn read_dump<R: BufRead>(input: R) -> Result<(Self, f64), MeshError> {
        let mut lines = input.lines();
        let header = lines
            .next()
            .ok_or_else(|| MeshError::Parse("empty dump".into()))??;
        let parts: Vec<&str> = header.split_whitespace().collect();
        if parts.len() != 5 || parts[0] != "#" {
            return Err(MeshError::Parse(format!("bad header {header:?}")));
        }
        let num = |s: &str| -> Result<usize, MeshError> {
            s.parse().map_err(|_| MeshError::Parse(format!("bad size {s:?}")))
        };
        let grid = Grid2::new(num(parts[1])?, num(parts[2])?)?;
        let time: f64 = parts[3]
            .parse()
            .map_err(|_| MeshError::Parse(format!("bad time {:?}", parts[3])))?;
        let label: FieldLabel = parts[4].parse()?;
        let mut values = Vec::with_capacity(grid.node_count());
        for line in lines {
            let line = line?;
            if line.trim().is_empty() {
                continue;
            }
            let row: Result<Vec<f64>, _> = line.split_whitespace().map(str::parse).collect();
            let row = row.map_err(|e| MeshError::Parse(format!("bad value: {e}")))?;
            if row.len() != grid.nx() + 1 {
                return Err(MeshError::Parse(format!(
                    "row has {} values, expected {}",
                    row.len(),
                    grid.nx() + 1
                )));
            }
            values.extend(row);
        }
        Ok((Field::from_values(grid, label, values)?, time))
    }
}

/// Componentwise clamp of a point to the unit square.
pub fn clamp_to_domain(x: f64, y: f64) -> (f64, f64) {
    (x.clamp(0.0, 1.0), y.clamp(0.0, 1.0))
}

/// Locate `x` in a grid of `n` cells: bracketing cell index and local
/// coordinate in `[0, 1]`. Points within [`DOMAIN_TOL`] of the ends are
/// snapped onto the domain.
fn locate(x: f64, n: usize) -> Result<(usize, f64), MeshError> {
    if !(-DOMAIN_TOL..=1.0 + DOMAIN_TOL).contains(&x) {
        return Err(MeshError::OutsideDomain(x));
    }
    let scaled = x.clamp(0.0, 1.0) * n as f64;
    let cell = (scaled.floor() as usize).min(n - 1);
    Ok((cell, scaled - cell as f64))
}

/// Piecewise-linear interpolation of a 1-D nodal field.
pub fn interp_linear_1d(field: &Field<Grid1>, x: f64) -> Result<f64, MeshError> {
    let (i, t) = locate(x, field.grid().cells())?;
    let v = field.values();
    Ok((1.0 - t) * v[i] + t * v[i + 1])
}

/// Bilinear interpolation of a 2-D nodal field.
///
/// Uses the same per-axis linear form as [`interp_linear_1d`], so data that is
/// constant in `y` interpolates bit-identically to the 1-D operator.
pub fn interp_bilinear_2d(field: &Field<Grid2>, x: f64, y: f64) -> Result<f64, MeshError> {
    let g = field.grid();
    let (i, tx) = locate(x, g.nx())?;
    let (j, ty) = locate(y, g.ny())?;
    let v = field.values();
    let lower = (1.0 - tx) * v[g.node(i, j)] + tx * v[g.node(i + 1, j)];
    let upper = (1.0 - tx) * v[g.node(i, j + 1)] + tx * v[g.node(i + 1, j + 1)];
    Ok((1.0 - ty) * lower + ty * upper)
}
