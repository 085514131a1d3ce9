//! Error norms, observed orders, breakthrough detection and the spatial and
//! temporal refinement studies.

use std::io::Write;
use std::path::Path;

use thiserror::Error;

use crate::config::RunConfig;
use crate::mesh::{Field, Grid2, NodeGrid};
use crate::reduced1d::{manufactured_run, ErrorRecord};
use crate::sim::Simulation;

#[derive(Debug, Error)]
pub enum HarnessError {
    #[error("grid {coarse:?} does not nest in {fine:?}")]
    Nesting { coarse: (usize, usize), fine: (usize, usize) },
    #[error("errors must be positive, got ({0}, {1})")]
    NonPositive(f64, f64),
    #[error("degenerate study: {0}")]
    Degenerate(String),
    #[error("verification failed: {0}")]
    Verification(String),
    #[error("level {level}: {source}")]
    Level {
        level: String,
        #[source]
        source: Box<crate::Error>,
    },
}

/// Refinement ratio of `fine` over `coarse`, if it is a power of two in both axes.
fn nesting(coarse: Grid2, fine: Grid2) -> Result<(usize, usize), HarnessError> {
    let err = || HarnessError::Nesting {
        coarse: (coarse.nx(), coarse.ny()),
        fine: (fine.nx(), fine.ny()),
    };
    let ratio = |c: usize, f: usize| {
        if f.is_multiple_of(c) && (f / c).is_power_of_two() {
            Some(f / c)
        } else {
            None
        }
    };
    match (ratio(coarse.nx(), fine.nx()), ratio(coarse.ny(), fine.ny())) {
        (Some(rx), Some(ry)) => Ok((rx, ry)),
        _ => Err(err()),
    }
}

/// Which coarse nodes enter a norm, and whether a constant offset is removed.
#[derive(Debug, Clone, Copy, PartialEq, Default)]
pub struct NormOptions {
    /// Nodes closer than this to `(0, 0)` or `(1, 1)` are skipped.
    pub well_exclusion: f64,
    /// Compare modulo a constant (mean difference removed).
    pub modulo_constant: bool,
}

fn included(grid: Grid2, opts: &NormOptions) -> Vec<usize> {
    (0..grid.nx() + 1)
        .flat_map(|i| (0..grid.ny() + 1).map(move |j| (i, j)))
        .filter(|&(i, j)| {
            let (x, y) = (grid.x(i), grid.y(j));
            x.hypot(y) >= opts.well_exclusion && (1.0 - x).hypot(1.0 - y) >= opts.well_exclusion
        })
        .map(|(i, j)| grid.node(i, j))
        .collect()
}

fn norms_of(diff: &mut [f64], nodes: &[usize], area: f64, opts: &NormOptions) -> (f64, f64) {
    if opts.modulo_constant && !nodes.is_empty() {
        let mean = nodes.iter().map(|&k| diff[k]).sum::<f64>() / nodes.len() as f64;
        diff.iter_mut().for_each(|d| *d -= mean);
    }
    let mut sum = 0.0;
    let mut max = 0.0_f64;
    for &k in nodes {
        sum += diff[k] * diff[k];
        max = max.max(diff[k].abs());
    }
    ((sum * area).sqrt(), max)
}

/// `(e_2, e_max)` of `numeric` against a reference on a nested finer grid.
///
/// `e_2 = sqrt(sum |d|^2 dx dy)` over the coarse nodes.
pub fn error_norms(numeric: &Field, reference: &Field) -> Result<(f64, f64), HarnessError> {
    error_norms_with(&[numeric], &[reference], &NormOptions::default())
}

/// Like [`error_norms`] for a vector field given by components; the nodal
/// difference is the Euclidean length of the component differences.
pub fn error_norms_with(numeric: &[&Field], reference: &[&Field], opts: &NormOptions) -> Result<(f64, f64), HarnessError> {
    assert_eq!(numeric.len(), reference.len(), "component count");
    let coarse = numeric[0].grid();
    let fine = reference[0].grid();
    let (rx, ry) = nesting(coarse, fine)?;
    let n = coarse.node_count();
    let mut diff = vec![0.0; n];
    for (num, refr) in numeric.iter().zip(reference) {
        if num.grid() != coarse || refr.grid() != fine {
            return Err(HarnessError::Degenerate("component grids differ".into()));
        }
        for k in 0..n {
            let (i, j) = coarse.ij(k);
            let d = num.values()[k] - refr.values()[fine.node(i * rx, j * ry)];
            diff[k] = if numeric.len() == 1 { d } else { diff[k].hypot(d) };
        }
    }
    if numeric.len() > 1 && opts.modulo_constant {
        return Err(HarnessError::Degenerate("modulo-constant comparison of a vector field".into()));
    }
    let nodes = included(coarse, opts);
    Ok(norms_of(&mut diff, &nodes, coarse.hx() * coarse.hy(), opts))
}

/// `(e_2, e_max)` against an analytic function.
pub fn error_norms_analytic(numeric: &Field, exact: impl Fn(f64, f64) -> f64, opts: &NormOptions) -> (f64, f64) {
    let g = numeric.grid();
    let mut diff: Vec<f64> = (0..g.node_count())
        .map(|k| {
            let (x, y) = g.point(k);
            numeric.values()[k] - exact(x, y)
        })
        .collect();
    let nodes = included(g, opts);
    norms_of(&mut diff, &nodes, g.hx() * g.hy(), opts)
}

/// `log2(e_h / e_{h/2})`.
pub fn observed_order(e_h: f64, e_h2: f64) -> Result<f64, HarnessError> {
    if !(e_h > 0.0 && e_h2 > 0.0) {
        return Err(HarnessError::NonPositive(e_h, e_h2));
    }
    Ok((e_h / e_h2).log2())
}

/// First time the producer saturation exceeds `threshold`, else `tstop`.
pub fn detect_breakthrough(samples: impl IntoIterator<Item = (f64, f64)>, threshold: f64, tstop: f64) -> f64 {
    samples
        .into_iter()
        .find(|&(_, s)| s > threshold)
        .map_or(tstop, |(t, _)| t)
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum StudyMode {
    Spatial,
    Temporal,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Variable {
    Saturation,
    Concentration,
    Pressure,
    Velocity,
}

impl Variable {
    pub fn as_str(&self) -> &'static str {
        match self {
            Variable::Saturation => "s",
            Variable::Concentration => "c",
            Variable::Pressure => "p",
            Variable::Velocity => "v",
        }
    }
}

/// One row of a study table.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct StudyRow {
    pub variable: Variable,
    pub h: f64,
    pub dt: f64,
    pub e2: f64,
    pub order2: Option<f64>,
    pub emax: f64,
    pub orderinf: Option<f64>,
    /// Comparison time.
    pub time: f64,
}

/// When the compared runs stop.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum StopRule {
    /// At the reference run's breakthrough (or `Tstop` if none).
    Breakthrough,
    FixedTime(f64),
}

/// A refinement study against the finest numerical solution.
#[derive(Debug, Clone)]
pub struct RefinementStudy {
    pub mode: StudyMode,
    pub base: RunConfig,
    /// Cells per side of the study levels (spatial mode).
    pub levels: Vec<usize>,
    /// Time steps of the study levels (temporal mode).
    pub dts: Vec<f64>,
    pub reference_n: usize,
    pub reference_dt: f64,
    pub stop: StopRule,
}

impl RefinementStudy {
    /// Levels 1/8, 1/16, 1/32 against 1/64 at the configured time step.
    pub fn spatial(base: RunConfig) -> Self {
        RefinementStudy {
            mode: StudyMode::Spatial,
            reference_dt: base.dt,
            base,
            levels: vec![8, 16, 32],
            dts: Vec::new(),
            reference_n: 64,
            stop: StopRule::Breakthrough,
        }
    }

    /// Time steps 1/20, 1/40, 1/80 against 1/160 on the configured grid.
    pub fn temporal(base: RunConfig) -> Self {
        RefinementStudy {
            mode: StudyMode::Temporal,
            reference_n: base.n,
            base,
            levels: Vec::new(),
            dts: vec![1.0 / 20.0, 1.0 / 40.0, 1.0 / 80.0],
            reference_dt: 1.0 / 160.0,
            stop: StopRule::Breakthrough,
        }
    }

    pub fn validate(&self) -> Result<(), HarnessError> {
        let bad = |m: String| Err(HarnessError::Degenerate(m));
        match self.mode {
            StudyMode::Spatial => {
                if self.levels.is_empty() {
                    return bad("no levels".into());
                }
                for w in self.levels.windows(2) {
                    if w[1] != 2 * w[0] {
                        return bad(format!("levels {} -> {} do not refine by 2", w[0], w[1]));
                    }
                }
                let finest = *self.levels.last().unwrap();
                if self.reference_n <= finest {
                    return bad(format!("reference {} not finer than {finest}", self.reference_n));
                }
                for &n in &self.levels {
                    let g = Grid2::square(n).map_err(|e| HarnessError::Degenerate(e.to_string()))?;
                    nesting(g, Grid2::square(self.reference_n).expect("reference above a valid level"))?;
                }
            }
            StudyMode::Temporal => {
                if self.dts.is_empty() {
                    return bad("no time steps".into());
                }
                if self.dts.iter().any(|&d| !(d > 0.0 && d.is_finite())) {
                    return bad("time steps must be positive".into());
                }
                for w in self.dts.windows(2) {
                    if ((w[0] / w[1]) - 2.0).abs() > 1e-9 {
                        return bad(format!("time steps {} -> {} do not halve", w[0], w[1]));
                    }
                }
                let finest = *self.dts.last().unwrap();
                if self.reference_dt >= finest {
                    return bad(format!("reference dt {} not finer than {finest}", self.reference_dt));
                }
            }
        }
        Ok(())
    }
}

fn level_err(level: String) -> impl FnOnce(crate::Error) -> HarnessError {
    move |e| HarnessError::Level { level, source: Box::new(e) }
}

/// Run a configuration to the stop rule; returns the simulation and the stop time.
fn run_reference(cfg: RunConfig, stop: StopRule) -> Result<(Simulation, f64), HarnessError> {
    let label = format!("reference n={} dt={}", cfg.n, cfg.dt);
    let mut sim = Simulation::new(RunConfig { out: None, ..cfg }).map_err(level_err(label.clone()))?;
    match stop {
        StopRule::Breakthrough => {
            let summary = sim.run().map_err(level_err(label))?;
            let t = summary.breakthrough_or_stop();
            Ok((sim, t))
        }
        StopRule::FixedTime(t) => {
            sim.advance_to(t).map_err(level_err(label.clone()))?;
            sim.update_pressure().map_err(level_err(label))?;
            Ok((sim, t))
        }
    }
}

fn run_level(cfg: RunConfig, t: f64) -> Result<Simulation, HarnessError> {
    let label = format!("n={} dt={}", cfg.n, cfg.dt);
    let mut sim = Simulation::new(RunConfig { out: None, ..cfg }).map_err(level_err(label.clone()))?;
    sim.advance_to(t).map_err(level_err(label.clone()))?;
    sim.update_pressure().map_err(level_err(label))?;
    Ok(sim)
}

/// Fill in orders between consecutive rows of the same variable.
fn attach_orders(rows: &mut [StudyRow], step_of: impl Fn(&StudyRow) -> f64) {
    for k in 1..rows.len() {
        let (prev, cur) = (rows[k - 1], rows[k]);
        if prev.variable != cur.variable {
            continue;
        }
        let ratio = (step_of(&prev) / step_of(&cur)).ln();
        let order = |a: f64, b: f64| if a > 0.0 && b > 0.0 { Some((a / b).ln() / ratio) } else { None };
        rows[k].order2 = order(prev.e2, cur.e2);
        rows[k].orderinf = order(prev.emax, cur.emax);
    }
}

/// Run every level concurrently and collect results in order.
fn run_levels(cfgs: Vec<RunConfig>, t: f64) -> Result<Vec<Simulation>, HarnessError> {
    std::thread::scope(|scope| {
        let handles: Vec<_> = cfgs.into_iter().map(|c| scope.spawn(move || run_level(c, t))).collect();
        handles.into_iter().map(|h| h.join().expect("level thread panicked")).collect()
    })
}

fn compare(sim: &Simulation, reference: &Simulation, variables: &[Variable], exclusion: f64, t: f64) -> Result<Vec<StudyRow>, HarnessError> {
    let (s, r) = (sim.state(), reference.state());
    let plain = NormOptions::default();
    let well = NormOptions { well_exclusion: exclusion, modulo_constant: false };
    let pressure = NormOptions { well_exclusion: exclusion, modulo_constant: true };
    let mut rows = Vec::new();
    for &v in variables {
        let (e2, emax) = match v {
            Variable::Saturation => error_norms_with(&[&s.s], &[&r.s], &plain)?,
            Variable::Concentration => error_norms_with(&[&s.c], &[&r.c], &plain)?,
            Variable::Pressure => error_norms_with(&[&s.p], &[&r.p], &pressure)?,
            Variable::Velocity => error_norms_with(&[&s.vx, &s.vy], &[&r.vx, &r.vy], &well)?,
        };
        rows.push(StudyRow {
            variable: v,
            h: s.grid().hx(),
            dt: sim.config().dt,
            e2,
            order2: None,
            emax,
            orderinf: None,
            time: t,
        });
    }
    Ok(rows)
}

fn group_by_variable(mut rows: Vec<StudyRow>, variables: &[Variable]) -> Vec<StudyRow> {
    rows.sort_by_key(|r| variables.iter().position(|v| *v == r.variable));
    rows
}

/// Spatial study: each level against the reference grid at the reference stop time.
pub fn run_spatial_study(study: &RefinementStudy) -> Result<Vec<StudyRow>, HarnessError> {
    study.validate()?;
    if study.mode != StudyMode::Spatial {
        return Err(HarnessError::Degenerate("not a spatial study".into()));
    }
    let dt = study.base.dt;
    let (reference, t) = run_reference(
        RunConfig { n: study.reference_n, dt: study.reference_dt, ..study.base.clone() },
        study.stop,
    )?;
    let cfgs = study.levels.iter().map(|&n| RunConfig { n, dt, ..study.base.clone() }).collect();
    let sims = run_levels(cfgs, t)?;
    let vars = [Variable::Saturation, Variable::Concentration, Variable::Pressure, Variable::Velocity];
    let mut rows = Vec::new();
    for sim in &sims {
        rows.extend(compare(sim, &reference, &vars, study.base.well_exclusion, t)?);
    }
    let mut rows = group_by_variable(rows, &vars);
    attach_orders(&mut rows, |r| r.h);
    Ok(rows)
}

/// Temporal study: each time step against the finest one on the same grid.
pub fn run_temporal_study(study: &RefinementStudy) -> Result<Vec<StudyRow>, HarnessError> {
    study.validate()?;
    if study.mode != StudyMode::Temporal {
        return Err(HarnessError::Degenerate("not a temporal study".into()));
    }
    let n = study.reference_n;
    let (reference, t) = run_reference(
        RunConfig { n, dt: study.reference_dt, ..study.base.clone() },
        study.stop,
    )?;
    let cfgs = study.dts.iter().map(|&dt| RunConfig { n, dt, ..study.base.clone() }).collect();
    let sims = run_levels(cfgs, t)?;
    let vars = [Variable::Saturation, Variable::Concentration];
    let mut rows = Vec::new();
    for sim in &sims {
        rows.extend(compare(sim, &reference, &vars, study.base.well_exclusion, t)?);
    }
    let mut rows = group_by_variable(rows, &vars);
    attach_orders(&mut rows, |r| r.dt);
    Ok(rows)
}

fn manufactured_rows(records: &[ErrorRecord], t: f64, by: impl Fn(&StudyRow) -> f64) -> Vec<StudyRow> {
    let mut rows = Vec::new();
    for (v, pick) in [
        (Variable::Saturation, (|r: &ErrorRecord| (r.l2_s, r.linf_s)) as fn(&ErrorRecord) -> (f64, f64)),
        (Variable::Concentration, |r: &ErrorRecord| (r.l2_c, r.linf_c)),
    ] {
        for r in records {
            let (e2, emax) = pick(r);
            rows.push(StudyRow { variable: v, h: r.h, dt: r.dt, e2, order2: None, emax, orderinf: None, time: t });
        }
    }
    attach_orders(&mut rows, by);
    rows
}

/// Spatial study of the manufactured 1-D problem with `dt = h`.
pub fn run_manufactured_spatial(cells: &[usize], t_final: f64) -> Result<Vec<StudyRow>, crate::Error> {
    let recs = cells
        .iter()
        .map(|&n| manufactured_run(n, 1.0 / n as f64, t_final))
        .collect::<Result<Vec<_>, _>>()?;
    Ok(manufactured_rows(&recs, t_final, |r| r.h))
}

/// Time-step study of the manufactured 1-D problem on a fixed fine grid.
pub fn run_manufactured_temporal(n: usize, dts: &[f64], t_final: f64) -> Result<Vec<StudyRow>, crate::Error> {
    for w in dts.windows(2) {
        if !(w[1] < w[0]) {
            return Err(HarnessError::Degenerate(format!("time steps {} -> {} do not refine", w[0], w[1])).into());
        }
    }
    let recs = dts
        .iter()
        .map(|&dt| manufactured_run(n, dt, t_final))
        .collect::<Result<Vec<_>, _>>()?;
    Ok(manufactured_rows(&recs, t_final, |r| r.dt))
}

/// Write rows as CSV with columns `variable,h,dt,e2,order2,emax,orderinf,time`.
pub fn write_csv<W: Write>(rows: &[StudyRow], out: W) -> Result<(), csv::Error> {
    let mut w = csv::Writer::from_writer(out);
    w.write_record(["variable", "h", "dt", "e2", "order2", "emax", "orderinf", "time"])?;
    let opt = |o: Option<f64>| o.map_or(String::new(), |v| format!("{v:.6}"));
    for r in rows {
        w.write_record([
            r.variable.as_str().to_string(),
            format!("{:e}", r.h),
            format!("{:e}", r.dt),
            format!("{:.6e}", r.e2),
            opt(r.order2),
            format!("{:.6e}", r.emax),
            opt(r.orderinf),
            format!("{:e}", r.time),
        ])?;
    }
    w.flush()?;
    Ok(())
}

pub fn write_csv_file(rows: &[StudyRow], path: &Path) -> Result<(), crate::Error> {
    if let Some(dir) = path.parent() {
        std::fs::create_dir_all(dir)?;
    }
    write_csv(rows, std::fs::File::create(path)?)?;
    Ok(())
}

/// Print rows as an aligned table.
pub fn format_table(rows: &[StudyRow]) -> String {
    let mut s = format!(
        "{:<3} {:>9} {:>9} {:>12} {:>7} {:>12} {:>7}\n",
        "var", "h", "dt", "e2", "order", "emax", "order"
    );
    let opt = |o: Option<f64>| o.map_or("-".to_string(), |v| format!("{v:.3}"));
    for r in rows {
        s.push_str(&format!(
            "{:<3} {:>9.5} {:>9.5} {:>12.4e} {:>7} {:>12.4e} {:>7}\n",
            r.variable.as_str(),
            r.h,
            r.dt,
            r.e2,
            opt(r.order2),
            r.emax,
            opt(r.orderinf)
        ));
    }
    s
}

/// One named numeric check against an inclusive range.
#[derive(Debug, Clone, PartialEq)]
pub struct Check {
    pub name: String,
    pub value: f64,
    pub lo: f64,
    pub hi: f64,
}

impl Check {
    fn new(name: impl Into<String>, value: f64, lo: f64, hi: f64) -> Self {
        Check { name: name.into(), value, lo, hi }
    }

    pub fn passed(&self) -> bool {
        self.value >= self.lo && self.value <= self.hi
    }
}

impl std::fmt::Display for Check {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        write!(
            f,
            "{:<4} {:<48} {:>12.5e} in [{:e}, {:e}]",
            if self.passed() { "PASS" } else { "FAIL" },
            self.name,
            self.value,
            self.lo,
            self.hi
        )
    }
}

/// Manufactured convergence and the stencil, characteristic and
/// interpolation order probes of the 1-D scheme.
pub fn verify_1d() -> Result<Vec<Check>, crate::Error> {
    use crate::reduced1d::{lemma31_check, lemma32_check, manufactured_convergence, peano_check, SmoothProfile};
    use std::f64::consts::PI;

    let mut out = Vec::new();
    for r in manufactured_convergence(&[16, 32, 64, 128], 0.5)?.iter().skip(1) {
        let order = r.order.expect("set after the first level");
        out.push(Check::new(format!("manufactured order, h = 1/{}", (1.0 / r.h).round()), order, 0.8, 1.3));
    }

    let s = |x: f64| (2.0 * PI * x).sin();
    let sx = |x: f64| 2.0 * PI * (2.0 * PI * x).cos();
    let sxx = |x: f64| -4.0 * PI * PI * (2.0 * PI * x).sin();
    let stencil = |n| lemma32_check(|x| 1.0 + x * x, |x| 2.0 * x, s, sx, sxx, n);
    out.push(Check::new("diffusion stencil ratio, variable D", stencil(32) / stencil(64), 1.7, 4.5));
    let quad = lemma32_check(|_| 0.7, |_| 0.0, |x| x * x - 0.5 * x, |x| 2.0 * x - 0.5, |_| 2.0, 32);
    out.push(Check::new("diffusion stencil, constant D, quadratic s", quad, 0.0, 1e-10));

    let value = |x: f64, t: f64| (x + t).sin() * (2.0 * t).exp();
    let dt = |x: f64, t: f64| ((x + t).cos() + 2.0 * (x + t).sin()) * (2.0 * t).exp();
    let dx = |x: f64, t: f64| (x + t).cos() * (2.0 * t).exp();
    let prof = SmoothProfile { value: &value, dt: &dt, dx: &dx };
    let speed = |x: f64| 0.5 + 0.5 * x;
    let r1 = lemma31_check(&prof, speed, 1.0, 32, 0.5, 0.05);
    let r2 = lemma31_check(&prof, speed, 1.0, 32, 0.5, 0.025);
    out.push(Check::new("characteristic derivative ratio", r1 / r2, 1.6, 2.4));
    let lin_v = |x: f64, t: f64| 2.0 * x - 1.4 * t;
    let lin_t = |_: f64, _: f64| -1.4;
    let lin_x = |_: f64, _: f64| 2.0;
    let lin = SmoothProfile { value: &lin_v, dt: &lin_t, dx: &lin_x };
    out.push(Check::new("characteristic derivative, linear data", lemma31_check(&lin, |_| 0.7, 1.0, 32, 0.5, 0.05), 0.0, 1e-10));

    let u = |x: f64| (3.0 * x).exp();
    let ratio = peano_check(u, 32, 0.4)? / peano_check(u, 64, 0.4)?;
    out.push(Check::new("interpolation error ratio", ratio, 3.5, 4.5));
    Ok(out)
}
