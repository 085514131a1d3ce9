//! Global-pressure equation `-div(K lambda grad p) = q` with no-flow
//! boundaries, discretized with piecewise-linear elements on the
//! two-triangle-per-cell mesh, and recovery of the total velocity
//! `v = -K lambda grad p` at the nodes.
//!
//! All cells are treated as regular cells: the element coefficient is the
//! arithmetic mean of `K lambda` over the three vertices. The lower-level
//! [`assemble_stiffness`] takes an arbitrary per-element coefficient so a
//! sharp-interface quadrature can be slotted in.
//!
//! The pure-Neumann problem has constants in its null space. Solving pins the
//! production-well node to `p = 0`.

use thiserror::Error;

use crate::linalg::{conjugate_gradient, CgOptions, CgReport, CsrMatrix, SolveError, TripletBuilder};
use crate::mesh::{Field, FieldLabel, Grid2, MeshError, NodeGrid, Triangle};
use crate::petro::PetroModel;

#[derive(Debug, Error)]
pub enum PressureError {
    #[error("element {element} has non-positive coefficient {value}")]
    NonPositiveCoefficient { element: usize, value: f64 },
    #[error("source terms sum to {sum:e}, expected zero")]
    Incompatible { sum: f64 },
    #[error("well at ({x}, {y}) is not a grid corner node")]
    WellOffCorner { x: f64, y: f64 },
    #[error("injection rate must be finite and non-negative, got {0}")]
    BadRate(f64),
    #[error("pressure solve failed: {0}")]
    Solve(#[from] SolveError),
    #[error(transparent)]
    Mesh(#[from] MeshError),
}

/// Absolute permeability: one value everywhere or a value per node.
#[derive(Debug, Clone, PartialEq)]
pub enum Permeability {
    Uniform(f64),
    Nodal(Vec<f64>),
}

impl Permeability {
    pub fn at(&self, node: usize) -> f64 {
        match self {
            Permeability::Uniform(k) => *k,
            Permeability::Nodal(v) => v[node],
        }
    }
}

impl Default for Permeability {
    fn default() -> Self {
        Permeability::Uniform(1.0)
    }
}

/// Point source and sink of the quarter five-spot.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct WellConfig {
    pub injection: (f64, f64),
    pub production: (f64, f64),
    /// Volumetric rate `Q`.
    pub rate: f64,
    /// Polymer concentration of the injected fluid.
    pub injected_concentration: f64,
}

impl WellConfig {
    /// Injector at `(0, 0)`, producer at `(1, 1)`.
    pub fn quarter_five_spot(rate: f64, injected_concentration: f64) -> Self {
        WellConfig {
            injection: (0.0, 0.0),
            production: (1.0, 1.0),
            rate,
            injected_concentration,
        }
    }

    fn corner_node(grid: Grid2, (x, y): (f64, f64)) -> Result<usize, PressureError> {
        let pick = |v: f64, n: usize| {
            if v == 0.0 {
                Some(0)
            } else if v == 1.0 {
                Some(n)
            } else {
                None
            }
        };
        match (pick(x, grid.nx()), pick(y, grid.ny())) {
            (Some(i), Some(j)) => Ok(grid.node(i, j)),
            _ => Err(PressureError::WellOffCorner { x, y }),
        }
    }

    pub fn injection_node(&self, grid: Grid2) -> Result<usize, PressureError> {
        Self::corner_node(grid, self.injection)
    }

    pub fn production_node(&self, grid: Grid2) -> Result<usize, PressureError> {
        Self::corner_node(grid, self.production)
    }
}

/// Assembled (unpinned) pressure system.
#[derive(Debug, Clone)]
pub struct SparseSystem {
    pub grid: Grid2,
    pub matrix: CsrMatrix,
    pub rhs: Vec<f64>,
    /// Pure-Neumann problem: the node pinned to zero when solving.
    pub pin_node: Option<usize>,
}

impl SparseSystem {
    /// Matrix with the pin applied (identity row/column at the pinned node).
    pub fn pinned_matrix(&self) -> CsrMatrix {
        let mut a = self.matrix.clone();
        if let Some(k) = self.pin_node {
            a.pin(k);
        }
        a
    }
}

/// Standard P1 stiffness with a caller-supplied constant coefficient per element.
pub fn assemble_stiffness(
    grid: Grid2,
    mut coefficient: impl FnMut(&Triangle) -> f64,
) -> Result<CsrMatrix, PressureError> {
    let mut t = TripletBuilder::new(grid.node_count());
    for (element, tri) in grid.triangles().enumerate() {
        let coef = coefficient(&tri);
        if !(coef > 0.0 && coef.is_finite()) {
            return Err(PressureError::NonPositiveCoefficient {
                element,
                value: coef,
            });
        }
        let grads = tri.basis_gradients();
        let scale = coef * tri.area();
        for a in 0..3 {
            for b in 0..3 {
                let val = scale * (grads[a].0 * grads[b].0 + grads[a].1 * grads[b].1);
                t.add(tri.nodes[a], tri.nodes[b], val);
            }
        }
    }
    Ok(t.build())
}

/// `K lambda(s, c)` at every node.
pub fn nodal_conductivity(s: &Field, c: &Field, perm: &Permeability, model: &PetroModel) -> Vec<f64> {
    s.values()
        .iter()
        .zip(c.values())
        .enumerate()
        .map(|(k, (&sv, &cv))| perm.at(k) * model.mobilities(sv, cv).total)
        .collect()
}

fn check_same_grid(a: &Field, b: &Field) -> Result<(), PressureError> {
    if a.grid() != b.grid() {
        return Err(MeshError::GridMismatch.into());
    }
    Ok(())
}

/// Assemble from precomputed nodal `K lambda`.
pub fn assemble_with_conductivity(
    grid: Grid2,
    conductivity: &[f64],
    wells: &WellConfig,
) -> Result<SparseSystem, PressureError> {
    if !(wells.rate >= 0.0 && wells.rate.is_finite()) {
        return Err(PressureError::BadRate(wells.rate));
    }
    let matrix = assemble_stiffness(grid, |tri| tri.vertex_mean(conductivity))?;
    let inj = wells.injection_node(grid)?;
    let prod = wells.production_node(grid)?;
    let mut rhs = vec![0.0; grid.node_count()];
    rhs[inj] += wells.rate;
    rhs[prod] -= wells.rate;
    let sum: f64 = rhs.iter().sum();
    if sum.abs() > 1e-12 * wells.rate.max(f64::MIN_POSITIVE) {
        return Err(PressureError::Incompatible { sum });
    }
    Ok(SparseSystem {
        grid,
        matrix,
        rhs,
        pin_node: Some(prod),
    })
}

/// Assemble the discrete weak form for the current saturation and concentration.
pub fn assemble_pressure(
    s: &Field,
    c: &Field,
    perm: &Permeability,
    model: &PetroModel,
    wells: &WellConfig,
) -> Result<SparseSystem, PressureError> {
    check_same_grid(s, c)?;
    let kl = nodal_conductivity(s, c, perm, model);
    assemble_with_conductivity(s.grid(), &kl, wells)
}

/// Solve the pinned system by preconditioned conjugate gradients.
pub fn solve_pressure(system: &SparseSystem, opts: CgOptions) -> Result<(Field, CgReport), PressureError> {
    let a = system.pinned_matrix();
    let mut b = system.rhs.clone();
    if let Some(k) = system.pin_node {
        b[k] = 0.0;
    }
    let mut p = vec![0.0; b.len()];
    let report = conjugate_gradient(&a, &b, &mut p, opts)?;
    if let Some(k) = system.pin_node {
        p[k] = 0.0;
    }
    Ok((Field::from_values(system.grid, FieldLabel::Pressure, p)?, report))
}

/// Velocity from nodal `K lambda`: per-triangle `-K lambda grad p`, averaged to nodes.
pub fn velocity_with_conductivity(p: &Field, conductivity: &[f64]) -> (Field, Field) {
    let grid = p.grid();
    let n = grid.node_count();
    let mut sx = vec![0.0; n];
    let mut sy = vec![0.0; n];
    let mut count = vec![0u32; n];
    for tri in grid.triangles() {
        let (gx, gy) = tri.gradient(p.values());
        let coef = tri.vertex_mean(conductivity);
        for &node in &tri.nodes {
            sx[node] -= coef * gx;
            sy[node] -= coef * gy;
            count[node] += 1;
        }
    }
    for k in 0..n {
        let w = count[k] as f64;
        sx[k] /= w;
        sy[k] /= w;
    }
    (
        Field::from_values(grid, FieldLabel::VelocityX, sx).expect("sizes match"),
        Field::from_values(grid, FieldLabel::VelocityY, sy).expect("sizes match"),
    )
}

/// Total velocity `v = -K lambda grad p` at the nodes.
pub fn recover_velocity(
    p: &Field,
    s: &Field,
    c: &Field,
    perm: &Permeability,
    model: &PetroModel,
) -> Result<(Field, Field), PressureError> {
    check_same_grid(p, s)?;
    check_same_grid(s, c)?;
    let kl = nodal_conductivity(s, c, perm, model);
    Ok(velocity_with_conductivity(p, &kl))
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_relative_eq;

    #[test]
    fn rhs_has_point_sources_at_corners() {
        let g = Grid2::square(4).unwrap();
        let kl = vec![1.0; g.node_count()];
        let sys = assemble_with_conductivity(g, &kl, &WellConfig::quarter_five_spot(200.0, 0.1)).unwrap();
        assert_eq!(sys.rhs[g.node(0, 0)], 200.0);
        assert_eq!(sys.rhs[g.node(4, 4)], -200.0);
        assert_eq!(sys.rhs.iter().filter(|v| **v != 0.0).count(), 2);
        assert_eq!(sys.pin_node, Some(g.node(4, 4)));
    }

    #[test]
    fn laplacian_row_sums_vanish() {
        let g = Grid2::square(5).unwrap();
        let a = assemble_stiffness(g, |_| 1.0).unwrap();
        let ones = vec![1.0; g.node_count()];
        for v in a.apply(&ones) {
            assert!(v.abs() < 1e-13);
        }
        assert_eq!(a.asymmetry(), 0.0);
    }

    #[test]
    fn rejects_bad_coefficients_and_wells() {
        let g = Grid2::square(3).unwrap();
        let mut kl = vec![1.0; g.node_count()];
        kl[5] = -10.0;
        let wells = WellConfig::quarter_five_spot(1.0, 0.0);
        assert!(matches!(
            assemble_with_conductivity(g, &kl, &wells),
            Err(PressureError::NonPositiveCoefficient { .. })
        ));
        let kl = vec![1.0; g.node_count()];
        let off = WellConfig {
            injection: (0.5, 0.0),
            ..wells
        };
        assert!(matches!(
            assemble_with_conductivity(g, &kl, &off),
            Err(PressureError::WellOffCorner { .. })
        ));
        let neg = WellConfig { rate: -1.0, ..wells };
        assert!(matches!(assemble_with_conductivity(g, &kl, &neg), Err(PressureError::BadRate(_))));
    }

    #[test]
    fn zero_rate_gives_zero_pressure() {
        let g = Grid2::square(4).unwrap();
        let kl = vec![1.0; g.node_count()];
        let sys = assemble_with_conductivity(g, &kl, &WellConfig::quarter_five_spot(0.0, 0.0)).unwrap();
        let (p, _) = solve_pressure(&sys, CgOptions::default()).unwrap();
        assert!(p.values().iter().all(|v| *v == 0.0));
    }

    #[test]
    fn velocity_of_linear_pressure() {
        let g = Grid2::square(6).unwrap();
        let p = Field::<Grid2>::sample(g, FieldLabel::Pressure, |x, _| -x);
        let kl = vec![1.0; g.node_count()];
        let (vx, vy) = velocity_with_conductivity(&p, &kl);
        for k in 0..g.node_count() {
            assert_relative_eq!(vx.values()[k], 1.0, max_relative = 1e-12);
            assert!(vy.values()[k].abs() < 1e-12);
        }
        let flat = Field::constant(g, FieldLabel::Pressure, 3.0);
        let (vx, vy) = velocity_with_conductivity(&flat, &kl);
        assert!(vx.values().iter().chain(vy.values()).all(|v| v.abs() < 1e-12));
    }
}
