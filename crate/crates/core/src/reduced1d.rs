//! Reduced one-dimensional system and its characteristic finite-difference
//! scheme:
//!
//! ```text
//! phi s_t + b s_x + (D s_x)_x = F
//! phi c_t + a c_x + G c       = H
//! ```
//!
//! on `[0, 1]` with homogeneous Neumann ends. `D <= 0` is the capillary
//! diffusion, so `(D s_x)_x` is dissipative. A manufactured problem with exact
//! forcing and a few analysis-order probes live here as well.

use std::f64::consts::PI;

use thiserror::Error;

use crate::linalg::{solve_tridiagonal, SolveError};
use crate::mesh::{interp_linear_1d, Field, FieldLabel, Grid1, MeshError};
use crate::petro::PetroModel;
use crate::transport::{foot, nodal_derivative};

#[derive(Debug, Error)]
pub enum Reduced1dError {
    #[error("tridiagonal solve failed: {0}")]
    Solve(#[from] SolveError),
    #[error(transparent)]
    Mesh(#[from] MeshError),
    #[error("non-finite {what} at node {node}")]
    NonFinite { what: &'static str, node: usize },
    #[error("invalid input: {0}")]
    BadInput(String),
}

/// Coefficients of the reduced system. `i` is the node index, `x` its
/// coordinate and `t` the new time level `t^n`.
///
/// Time levels follow the scheme: `b`, `d` and `f` see the old state
/// `(w^{n-1}, m^{n-1})` (with `d` evaluated at the foot saturation), while
/// `a`, `g` and `h` see the new saturation `w^n`.
pub trait Coeffs1D {
    fn porosity(&self, _x: f64) -> f64 {
        1.0
    }
    fn b(&self, i: usize, x: f64, t: f64, s: f64, c: f64) -> f64;
    fn d(&self, i: usize, x: f64, t: f64, s: f64, c: f64) -> f64;
    fn f(&self, i: usize, x: f64, t: f64, s: f64, c: f64, c_x: f64) -> f64;
    fn a(&self, i: usize, x: f64, t: f64, s: f64, c: f64, s_x: f64) -> f64;
    fn g(&self, i: usize, x: f64, t: f64, s: f64) -> f64;
    fn h(&self, i: usize, x: f64, t: f64, s: f64) -> f64;
    /// Optional clamps `((s_lo, s_hi), (c_lo, c_hi))` applied after each step.
    fn bounds(&self) -> Option<((f64, f64), (f64, f64))> {
        None
    }
}

/// The physical coefficients with a prescribed nodal velocity and no sources.
#[derive(Debug, Clone)]
pub struct PhysicalCoeffs1D {
    pub model: PetroModel,
    pub velocity: Vec<f64>,
    pub permeability: f64,
    pub porosity: f64,
    pub c_max: f64,
}

impl Coeffs1D for PhysicalCoeffs1D {
    fn porosity(&self, _x: f64) -> f64 {
        self.porosity
    }
    fn b(&self, i: usize, _x: f64, _t: f64, s: f64, c: f64) -> f64 {
        self.model.fractional_flow_derivs(s, c).dfds * self.velocity[i]
    }
    fn d(&self, _i: usize, _x: f64, _t: f64, s: f64, c: f64) -> f64 {
        self.model.capillary_diffusion(s, c, self.permeability)
    }
    fn f(&self, i: usize, _x: f64, _t: f64, s: f64, c: f64, c_x: f64) -> f64 {
        -self.model.fractional_flow_derivs(s, c).dfdc * (self.velocity[i] * c_x)
    }
    fn a(&self, i: usize, _x: f64, _t: f64, s: f64, c: f64, s_x: f64) -> f64 {
        let f_over_s = self.model.fractional_flow(s, c) / s;
        let d_over_s = self.model.capillary_diffusion(s, c, self.permeability) / s;
        f_over_s * self.velocity[i] + d_over_s * s_x
    }
    fn g(&self, _i: usize, _x: f64, _t: f64, _s: f64) -> f64 {
        0.0
    }
    fn h(&self, _i: usize, _x: f64, _t: f64, _s: f64) -> f64 {
        0.0
    }
    fn bounds(&self) -> Option<((f64, f64), (f64, f64))> {
        Some((self.model.saturation_bounds(), (0.0, self.c_max)))
    }
}

/// Manufactured problem with exact solution
/// `s = 0.5 + 0.25 cos(2 pi x) e^{-t}`, `c = 0.05 (1 + 0.5 cos(pi x) e^{-t})`.
///
/// Cosines keep both profiles compatible with the Neumann ends.
#[derive(Debug, Clone, Copy, Default)]
pub struct Manufactured;

impl Manufactured {
    pub fn s(x: f64, t: f64) -> f64 {
        0.5 + 0.25 * (2.0 * PI * x).cos() * (-t).exp()
    }
    fn s_t(x: f64, t: f64) -> f64 {
        -0.25 * (2.0 * PI * x).cos() * (-t).exp()
    }
    fn s_x(x: f64, t: f64) -> f64 {
        -0.5 * PI * (2.0 * PI * x).sin() * (-t).exp()
    }
    fn s_xx(x: f64, t: f64) -> f64 {
        -PI * PI * (2.0 * PI * x).cos() * (-t).exp()
    }
    pub fn c(x: f64, t: f64) -> f64 {
        0.05 * (1.0 + 0.5 * (PI * x).cos() * (-t).exp())
    }
    fn c_t(x: f64, t: f64) -> f64 {
        -0.025 * (PI * x).cos() * (-t).exp()
    }
    fn c_x(x: f64, t: f64) -> f64 {
        -0.025 * PI * (PI * x).sin() * (-t).exp()
    }
    fn velocity(x: f64) -> f64 {
        0.5 * (PI * x).sin()
    }
    fn diffusion(s: f64) -> f64 {
        -(0.02 + 0.01 * s)
    }
    fn speed_b(x: f64, s: f64) -> f64 {
        0.5 * (PI * x).sin() * (1.0 + s)
    }
    fn speed_a(x: f64, s: f64, c: f64, s_x: f64) -> f64 {
        Self::velocity(x) * (0.5 + c) + Self::diffusion(s) / s * s_x
    }
    fn decay(s: f64) -> f64 {
        0.3 + 0.2 * s
    }
}

impl Coeffs1D for Manufactured {
    fn b(&self, _i: usize, x: f64, _t: f64, s: f64, _c: f64) -> f64 {
        Self::speed_b(x, s)
    }
    fn d(&self, _i: usize, _x: f64, _t: f64, s: f64, _c: f64) -> f64 {
        Self::diffusion(s)
    }
    fn f(&self, _i: usize, x: f64, t: f64, _s: f64, _c: f64, _c_x: f64) -> f64 {
        let s = Self::s(x, t);
        let sx = Self::s_x(x, t);
        // (D(s) s_x)_x = D'(s) s_x^2 + D(s) s_xx with D' = -0.01
        Self::s_t(x, t) + Self::speed_b(x, s) * sx - 0.01 * sx * sx + Self::diffusion(s) * Self::s_xx(x, t)
    }
    fn a(&self, _i: usize, x: f64, _t: f64, s: f64, c: f64, s_x: f64) -> f64 {
        Self::speed_a(x, s, c, s_x)
    }
    fn g(&self, _i: usize, _x: f64, _t: f64, s: f64) -> f64 {
        Self::decay(s)
    }
    fn h(&self, _i: usize, x: f64, t: f64, _s: f64) -> f64 {
        let s = Self::s(x, t);
        let c = Self::c(x, t);
        Self::c_t(x, t) + Self::speed_a(x, s, c, Self::s_x(x, t)) * Self::c_x(x, t) + Self::decay(s) * c
    }
}

/// Errors of one refinement level.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ErrorRecord {
    pub h: f64,
    pub dt: f64,
    pub l2_s: f64,
    pub l2_c: f64,
    pub linf_s: f64,
    pub linf_c: f64,
    /// Order of `l2_s + l2_c` against the previous (coarser) record.
    pub order: Option<f64>,
}

impl ErrorRecord {
    pub fn combined(&self) -> f64 {
        self.l2_s + self.l2_c
    }
}

/// Discrete L2 norm `sqrt(h * sum v_i^2)`.
pub fn discrete_l2(values: &[f64], h: f64) -> f64 {
    (h * values.iter().map(|v| v * v).sum::<f64>()).sqrt()
}

/// Advance `(w, m)` from `t^{n-1}` to `t_new = t^n`.
pub fn step1d<C: Coeffs1D + ?Sized>(
    w: &[f64],
    m: &[f64],
    coeffs: &C,
    grid: Grid1,
    t_new: f64,
    dt: f64,
) -> Result<(Vec<f64>, Vec<f64>), Reduced1dError> {
    let n = grid.cells();
    if w.len() != n + 1 || m.len() != n + 1 {
        return Err(MeshError::LengthMismatch { expected: n + 1, got: w.len().min(m.len()) }.into());
    }
    if !(dt > 0.0 && dt.is_finite()) {
        return Err(Reduced1dError::BadInput(format!("dt = {dt}")));
    }
    let h = grid.h();
    let h2 = h * h;
    let w_old = Field::from_values(grid, FieldLabel::Saturation, w.to_vec())?;
    let m_old = Field::from_values(grid, FieldLabel::Concentration, m.to_vec())?;

    let mut w_foot = vec![0.0; n + 1];
    let mut d_foot = vec![0.0; n + 1];
    let mut rhs = vec![0.0; n + 1];
    for (i, x) in grid.nodes() {
        let phi = coeffs.porosity(x);
        let b = coeffs.b(i, x, t_new, w[i], m[i]);
        let xf = foot(x, b, dt, phi).clamp(0.0, 1.0);
        w_foot[i] = interp_linear_1d(&w_old, xf)?;
        d_foot[i] = coeffs.d(i, x, t_new, w_foot[i], m[i]);
        let c_x = nodal_derivative(n, h, i, |k| m[k]);
        rhs[i] = phi / dt * w_foot[i] + coeffs.f(i, x, t_new, w[i], m[i], c_x);
    }

    // half-node means; the ghost reflection mirrors the first/last one
    let half: Vec<f64> = (0..n).map(|i| 0.5 * (d_foot[i] + d_foot[i + 1])).collect();
    let mut lower = vec![0.0; n + 1];
    let mut diag = vec![0.0; n + 1];
    let mut upper = vec![0.0; n + 1];
    for (i, x) in grid.nodes() {
        let (west, east) = match i {
            0 => (0.0, 2.0 * half[0]),
            _ if i == n => (2.0 * half[n - 1], 0.0),
            _ => (half[i - 1], half[i]),
        };
        lower[i] = west / h2;
        upper[i] = east / h2;
        diag[i] = coeffs.porosity(x) / dt - (west + east) / h2;
    }
    let mut w_new = solve_tridiagonal(&lower, &diag, &upper, &rhs)?;
    let bounds = coeffs.bounds();
    for (i, v) in w_new.iter_mut().enumerate() {
        if !v.is_finite() {
            return Err(Reduced1dError::NonFinite { what: "saturation", node: i });
        }
        if let Some(((lo, hi), _)) = bounds {
            *v = v.clamp(lo, hi);
        }
    }

    let mut m_new = vec![0.0; n + 1];
    for (i, x) in grid.nodes() {
        let phi = coeffs.porosity(x);
        let s = w_new[i];
        let s_x = nodal_derivative(n, h, i, |k| w_new[k]);
        let a = coeffs.a(i, x, t_new, s, m[i], s_x);
        let m_foot = interp_linear_1d(&m_old, foot(x, a, dt, phi).clamp(0.0, 1.0))?;
        let v = (phi / dt * m_foot + coeffs.h(i, x, t_new, s)) / (phi / dt + coeffs.g(i, x, t_new, s));
        if !v.is_finite() {
            return Err(Reduced1dError::NonFinite { what: "concentration", node: i });
        }
        m_new[i] = match bounds {
            Some((_, (lo, hi))) => v.clamp(lo, hi),
            None => v,
        };
    }
    Ok((w_new, m_new))
}

/// Solve the manufactured problem on `n` cells up to `t_final` and measure
/// the errors against the exact solution.
pub fn manufactured_run(n: usize, dt: f64, t_final: f64) -> Result<ErrorRecord, Reduced1dError> {
    let grid = Grid1::new(n)?;
    let steps = (t_final / dt).round();
    if steps < 1.0 || ((steps * dt - t_final).abs() > 1e-9 * t_final.max(1.0)) {
        return Err(Reduced1dError::BadInput(format!("t_final {t_final} is not a multiple of dt {dt}")));
    }
    let mut w: Vec<f64> = grid.nodes().map(|(_, x)| Manufactured::s(x, 0.0)).collect();
    let mut m: Vec<f64> = grid.nodes().map(|(_, x)| Manufactured::c(x, 0.0)).collect();
    for k in 1..=steps as usize {
        let (wn, mn) = step1d(&w, &m, &Manufactured, grid, k as f64 * dt, dt)?;
        w = wn;
        m = mn;
    }
    let t = steps * dt;
    let es: Vec<f64> = grid.nodes().map(|(i, x)| Manufactured::s(x, t) - w[i]).collect();
    let ec: Vec<f64> = grid.nodes().map(|(i, x)| Manufactured::c(x, t) - m[i]).collect();
    let linf = |e: &[f64]| e.iter().fold(0.0_f64, |acc, v| acc.max(v.abs()));
    Ok(ErrorRecord {
        h: grid.h(),
        dt,
        l2_s: discrete_l2(&es, grid.h()),
        l2_c: discrete_l2(&ec, grid.h()),
        linf_s: linf(&es),
        linf_c: linf(&ec),
        order: None,
    })
}

/// Manufactured refinement with `dt = h` over the given cell counts.
pub fn manufactured_convergence(cells: &[usize], t_final: f64) -> Result<Vec<ErrorRecord>, Reduced1dError> {
    let mut out: Vec<ErrorRecord> = Vec::with_capacity(cells.len());
    for &n in cells {
        let mut rec = manufactured_run(n, 1.0 / n as f64, t_final)?;
        if let Some(prev) = out.last() {
            rec.order = Some((prev.combined() / rec.combined()).log2());
        }
        out.push(rec);
    }
    Ok(out)
}

/// A smooth function of `(x, t)` with its first partial derivatives.
pub struct SmoothProfile<'a> {
    pub value: &'a dyn Fn(f64, f64) -> f64,
    pub dt: &'a dyn Fn(f64, f64) -> f64,
    pub dx: &'a dyn Fn(f64, f64) -> f64,
}

/// Largest interior residual of the characteristic time difference
///
/// `| phi s_t + b s_x - phi (s(x_i, t) - s(xbar_i, t - dt)) / dt |`
///
/// with `xbar_i = x_i - b dt / phi`, evaluated on the exact function.
pub fn lemma31_check(s: &SmoothProfile<'_>, b: impl Fn(f64) -> f64, phi: f64, n: usize, t: f64, dt: f64) -> f64 {
    let h = 1.0 / n as f64;
    (1..n)
        .map(|i| {
            let x = i as f64 * h;
            let bx = b(x);
            let exact = phi * (s.dt)(x, t) + bx * (s.dx)(x, t);
            let xf = foot(x, bx, dt, phi);
            let discrete = phi * ((s.value)(x, t) - (s.value)(xf, t - dt)) / dt;
            (exact - discrete).abs()
        })
        .fold(0.0, f64::max)
}

/// Largest interior residual `|(D s')' - delta(Dbar delta s)|` of the
/// half-node diffusion stencil with arithmetic-mean `Dbar`.
pub fn lemma32_check(
    d: impl Fn(f64) -> f64,
    d_x: impl Fn(f64) -> f64,
    s: impl Fn(f64) -> f64,
    s_x: impl Fn(f64) -> f64,
    s_xx: impl Fn(f64) -> f64,
    n: usize,
) -> f64 {
    let h = 1.0 / n as f64;
    let xs: Vec<f64> = (0..=n).map(|i| i as f64 * h).collect();
    let dv: Vec<f64> = xs.iter().map(|&x| d(x)).collect();
    let sv: Vec<f64> = xs.iter().map(|&x| s(x)).collect();
    (1..n)
        .map(|i| {
            let x = xs[i];
            let exact = d_x(x) * s_x(x) + d(x) * s_xx(x);
            let east = 0.5 * (dv[i] + dv[i + 1]) * (sv[i + 1] - sv[i]);
            let west = 0.5 * (dv[i - 1] + dv[i]) * (sv[i] - sv[i - 1]);
            (exact - (east - west) / (h * h)).abs()
        })
        .fold(0.0, f64::max)
}

/// Largest error of piecewise-linear interpolation of `u` on `n` cells at the
/// foot points `x_i - theta h`, `i = 1..=n`.
pub fn peano_check(u: impl Fn(f64) -> f64, n: usize, theta: f64) -> Result<f64, Reduced1dError> {
    if !(0.0..=1.0).contains(&theta) {
        return Err(Reduced1dError::BadInput(format!("theta = {theta}")));
    }
    let grid = Grid1::new(n)?;
    let field = Field::<Grid1>::sample(grid, FieldLabel::Saturation, &u);
    let mut worst = 0.0_f64;
    for i in 1..=n {
        let xf = grid.x(i) - theta * grid.h();
        worst = worst.max((u(xf) - interp_linear_1d(&field, xf)?).abs());
    }
    Ok(worst)
}
