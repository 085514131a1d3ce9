//! One modified-method-of-characteristics step for saturation and polymer
//! concentration on a [`Grid2`].
//!
//! Saturation: each node is traced back along `dfds * v` to a foot point, the
//! old saturation is interpolated there, and the capillary diffusion is
//! treated implicitly with half-node coefficients averaged from foot values.
//! Concentration: traced back along `(f/s) v + (D/s) grad s` using the already
//! updated saturation, then a pointwise implicit update with the injection
//! source. Both results are clamped to their physical ranges.

use thiserror::Error;

use crate::linalg::{conjugate_gradient, CgOptions, SolveError, TripletBuilder};
use crate::mesh::{clamp_to_domain, interp_bilinear_2d, Field, FieldLabel, Grid2, MeshError, NodeGrid};
use crate::pressure::{Permeability, PressureError, WellConfig};
use crate::petro::PetroModel;

#[derive(Debug, Error)]
pub enum TransportError {
    #[error("saturation solve failed: {0}")]
    Solve(#[from] SolveError),
    #[error("non-finite {what} at node {node}")]
    NonFinite { what: &'static str, node: usize },
    #[error("invalid step parameter: {0}")]
    BadParams(String),
    #[error(transparent)]
    Mesh(#[from] MeshError),
    #[error(transparent)]
    Wells(#[from] PressureError),
}

/// Primary unknowns and the total velocity at one time level.
#[derive(Debug, Clone, PartialEq)]
pub struct State {
    pub t: f64,
    pub s: Field,
    pub c: Field,
    pub p: Field,
    pub vx: Field,
    pub vy: Field,
}

impl State {
    /// State with zero pressure and velocity.
    pub fn at_rest(t: f64, s: Field, c: Field) -> Result<Self, MeshError> {
        if s.grid() != c.grid() {
            return Err(MeshError::GridMismatch);
        }
        let g = s.grid();
        Ok(State {
            t,
            s: s.relabel(FieldLabel::Saturation),
            c: c.relabel(FieldLabel::Concentration),
            p: Field::zeros(g, FieldLabel::Pressure),
            vx: Field::zeros(g, FieldLabel::VelocityX),
            vy: Field::zeros(g, FieldLabel::VelocityY),
        })
    }

    pub fn grid(&self) -> Grid2 {
        self.s.grid()
    }
}

/// Everything a transport step needs besides the state and the model.
#[derive(Debug, Clone, PartialEq)]
pub struct StepParams {
    pub dt: f64,
    pub porosity: f64,
    pub permeability: Permeability,
    /// Injection source; `None` (or a zero rate) disables all source terms.
    pub wells: Option<WellConfig>,
    /// Upper clamp for the concentration, `max(c_0, c^i)`.
    pub c_max: f64,
    pub solver: CgOptions,
}

impl StepParams {
    pub fn validate(&self) -> Result<(), TransportError> {
        if !(self.dt > 0.0 && self.dt.is_finite()) {
            return Err(TransportError::BadParams(format!("dt = {}", self.dt)));
        }
        if !(self.porosity > 0.0 && self.porosity <= 1.0) {
            return Err(TransportError::BadParams(format!("porosity = {}", self.porosity)));
        }
        if !(self.c_max >= 0.0 && self.c_max.is_finite()) {
            return Err(TransportError::BadParams(format!("c_max = {}", self.c_max)));
        }
        Ok(())
    }

    /// Injection node and lumped point-source density, if active. The density
    /// is `Q` over the node's control area (a quarter cell at a corner), so the
    /// discrete integral of the source is `Q`.
    fn source(&self, grid: Grid2) -> Result<Option<(usize, f64, f64)>, TransportError> {
        match &self.wells {
            Some(w) if w.rate > 0.0 => {
                let node = w.injection_node(grid)?;
                let (i, j) = grid.ij(node);
                let area = boundary_weight(i, grid.nx()) * boundary_weight(j, grid.ny()) * grid.hx() * grid.hy();
                Ok(Some((node, w.rate / area, w.injected_concentration)))
            }
            _ => Ok(None),
        }
    }
}

/// Trapezoid weight of node `i` on an axis with `n` cells.
fn boundary_weight(i: usize, n: usize) -> f64 {
    if i == 0 || i == n {
        0.5
    } else {
        1.0
    }
}

/// Derivative of nodal data along one axis: central differences inside,
/// second-order one-sided differences at the two ends.
pub fn nodal_derivative(n: usize, h: f64, i: usize, value: impl Fn(usize) -> f64) -> f64 {
    if i == 0 {
        (-3.0 * value(0) + 4.0 * value(1) - value(2)) / (2.0 * h)
    } else if i == n {
        (3.0 * value(n) - 4.0 * value(n - 1) + value(n - 2)) / (2.0 * h)
    } else {
        (value(i + 1) - value(i - 1)) / (2.0 * h)
    }
}

/// `(d/dx, d/dy)` of a field at node `(i, j)`.
pub fn nodal_gradient(field: &Field, i: usize, j: usize) -> (f64, f64) {
    let g = field.grid();
    let v = field.values();
    let gx = nodal_derivative(g.nx(), g.hx(), i, |k| v[g.node(k, j)]);
    let gy = nodal_derivative(g.ny(), g.hy(), j, |k| v[g.node(i, k)]);
    (gx, gy)
}

/// Backward characteristic foot `x - speed * dt / phi`.
pub fn foot(x: f64, speed: f64, dt: f64, porosity: f64) -> f64 {
    x - speed * dt / porosity
}

/// Foot of the saturation characteristic through node `(i, j)`.
pub fn trace_foot_s(state: &State, i: usize, j: usize, model: &PetroModel, params: &StepParams) -> (f64, f64) {
    let g = state.grid();
    let k = g.node(i, j);
    let dfds = model.fractional_flow_derivs(state.s.values()[k], state.c.values()[k]).dfds;
    let bx = dfds * state.vx.values()[k];
    let by = dfds * state.vy.values()[k];
    clamp_to_domain(
        foot(g.x(i), bx, params.dt, params.porosity),
        foot(g.y(j), by, params.dt, params.porosity),
    )
}

/// Foot of the concentration characteristic through node `(i, j)`.
///
/// `saturation` is the saturation level used inside the coefficients and for
/// `grad s`; the time-stepping driver passes the freshly updated field.
pub fn trace_foot_c(
    state: &State,
    saturation: &Field,
    i: usize,
    j: usize,
    model: &PetroModel,
    params: &StepParams,
) -> (f64, f64) {
    let g = state.grid();
    let k = g.node(i, j);
    let s = saturation.values()[k];
    let c = state.c.values()[k];
    let f_over_s = model.fractional_flow(s, c) / s;
    let d_over_s = model.capillary_diffusion(s, c, params.permeability.at(k)) / s;
    let (sx, sy) = nodal_gradient(saturation, i, j);
    let ax = f_over_s * state.vx.values()[k] + d_over_s * sx;
    let ay = f_over_s * state.vy.values()[k] + d_over_s * sy;
    clamp_to_domain(
        foot(g.x(i), ax, params.dt, params.porosity),
        foot(g.y(j), ay, params.dt, params.porosity),
    )
}

/// Advance the saturation one step; returns `s^{n+1}`.
pub fn saturation_step(state: &State, model: &PetroModel, params: &StepParams) -> Result<Field, TransportError> {
    params.validate()?;
    let g = state.grid();
    let n = g.node_count();
    let (nx, ny) = (g.nx(), g.ny());
    let (hx2, hy2) = (g.hx() * g.hx(), g.hy() * g.hy());
    let s_old = &state.s;
    let c_old = state.c.values();

    // foot values and |D| evaluated there
    let mut s_foot = vec![0.0; n];
    let mut d_abs = vec![0.0; n];
    for j in 0..=ny {
        for i in 0..=nx {
            let k = g.node(i, j);
            let (xf, yf) = trace_foot_s(state, i, j, model, params);
            let v = interp_bilinear_2d(s_old, xf, yf)?;
            if !v.is_finite() {
                return Err(TransportError::NonFinite { what: "foot saturation", node: k });
            }
            s_foot[k] = v;
            d_abs[k] = model.capillary_diffusion_abs(v, c_old[k], params.permeability.at(k));
        }
    }

    let source = params.source(g)?;
    let inv_dt = params.porosity / params.dt;
    // Rows are scaled by the boundary weights (1/2 per boundary axis) so the
    // ghost-reflected Neumann operator becomes symmetric.
    let weight = boundary_weight;
    let mut t = TripletBuilder::new(n);
    let mut rhs = vec![0.0; n];
    for j in 0..=ny {
        for i in 0..=nx {
            let k = g.node(i, j);
            let w = weight(i, nx) * weight(j, ny);
            let mut diag = w * inv_dt;
            let mut couple = |other: usize, coef: f64, diag: &mut f64| {
                *diag += coef;
                t.add(k, other, -coef);
            };
            let wy = weight(j, ny);
            let wx = weight(i, nx);
            if i < nx {
                let e = g.node(i + 1, j);
                couple(e, wy * 0.5 * (d_abs[k] + d_abs[e]) / hx2, &mut diag);
            }
            if i > 0 {
                let west = g.node(i - 1, j);
                couple(west, wy * 0.5 * (d_abs[k] + d_abs[west]) / hx2, &mut diag);
            }
            if j < ny {
                let nn = g.node(i, j + 1);
                couple(nn, wx * 0.5 * (d_abs[k] + d_abs[nn]) / hy2, &mut diag);
            }
            if j > 0 {
                let sn = g.node(i, j - 1);
                couple(sn, wx * 0.5 * (d_abs[k] + d_abs[sn]) / hy2, &mut diag);
            }
            t.add(k, k, diag);

            let sk = s_old.values()[k];
            let ff = model.fractional_flow_derivs(sk, c_old[k]);
            let (cx, cy) = nodal_gradient(&state.c, i, j);
            let mut r = -ff.dfdc * (state.vx.values()[k] * cx + state.vy.values()[k] * cy);
            if let Some((node, density, _)) = source {
                if node == k {
                    r += (1.0 - ff.f) * density;
                }
            }
            rhs[k] = w * (inv_dt * s_foot[k] + r);
        }
    }
    let a = t.build();
    let mut s_new = s_foot;
    conjugate_gradient(&a, &rhs, &mut s_new, params.solver)?;
    let (lo, hi) = model.saturation_bounds();
    for (k, v) in s_new.iter_mut().enumerate() {
        if !v.is_finite() {
            return Err(TransportError::NonFinite { what: "saturation", node: k });
        }
        *v = v.clamp(lo, hi);
    }
    Ok(Field::from_values(g, FieldLabel::Saturation, s_new)?)
}

/// Advance the concentration one step given the updated saturation.
pub fn concentration_step(
    state: &State,
    s_new: &Field,
    model: &PetroModel,
    params: &StepParams,
) -> Result<Field, TransportError> {
    params.validate()?;
    let g = state.grid();
    if s_new.grid() != g {
        return Err(MeshError::GridMismatch.into());
    }
    let source = params.source(g)?;
    let inv_dt = params.porosity / params.dt;
    let mut c_new = vec![0.0; g.node_count()];
    for j in 0..=g.ny() {
        for i in 0..=g.nx() {
            let k = g.node(i, j);
            let (xf, yf) = trace_foot_c(state, s_new, i, j, model, params);
            let c_foot = interp_bilinear_2d(&state.c, xf, yf)?;
            let (mut sink, mut gain) = (0.0, 0.0);
            if let Some((node, density, c_inj)) = source {
                if node == k {
                    let s = s_new.values()[k];
                    sink = density / s;
                    gain = c_inj * density / s;
                }
            }
            let denom = inv_dt + sink;
            assert!(denom > 0.0, "concentration update denominator {denom}");
            let v = (inv_dt * c_foot + gain) / denom;
            if !v.is_finite() {
                return Err(TransportError::NonFinite { what: "concentration", node: k });
            }
            c_new[k] = v.clamp(0.0, params.c_max);
        }
    }
    Ok(Field::from_values(g, FieldLabel::Concentration, c_new)?)
}
