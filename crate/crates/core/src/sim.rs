//! Time loop for the quarter five-spot flood.
//!
//! Each step: evaluate coefficients at `(s^n, c^n)`, solve pressure and
//! recover the velocity, re-evaluate coefficients, advance saturation, then
//! concentration, then time.

use std::f64::consts::SQRT_2;
use std::fs::File;
use std::io::BufWriter;
use std::path::{Path, PathBuf};

use crate::config::RunConfig;
use crate::mesh::{Field, FieldLabel, Grid2};
use crate::petro::PetroModel;
use crate::pressure::{assemble_with_conductivity, nodal_conductivity, solve_pressure, velocity_with_conductivity};
use crate::transport::{concentration_step, saturation_step, State, StepParams};
use crate::Error;

/// Initial state: the quarter disc of the configured radius about the
/// injector is flooded at `(1 - s_ro, c0)`, the rest holds `(s0_sigma0, 0)`.
///
/// A node is inside when its distance to the origin is below the radius;
/// `radius >= sqrt(2)` floods the whole square.
pub fn init_state(config: &RunConfig) -> Result<State, Error> {
    config.validate()?;
    let grid = Grid2::square(config.n)?;
    let inside = |x: f64, y: f64| config.radius >= SQRT_2 || x.hypot(y) < config.radius;
    let s_in = 1.0 - config.model.s_ro;
    let s = Field::<Grid2>::sample(grid, FieldLabel::Saturation, |x, y| {
        if inside(x, y) {
            s_in
        } else {
            config.s0_sigma0
        }
    });
    let c = Field::<Grid2>::sample(grid, FieldLabel::Concentration, |x, y| if inside(x, y) { config.c0 } else { 0.0 });
    Ok(State::at_rest(0.0, s, c)?)
}

/// Counters over every constitutive evaluation made by the driver.
#[derive(Debug, Clone, Copy, Default, PartialEq, Eq)]
pub struct CoefficientStats {
    pub evaluations: u64,
    /// Evaluations where the effective saturation had to be clamped.
    pub clamped: u64,
    /// Capillary pressure requests outside its domain (must stay zero).
    pub domain_violations: u64,
}

impl CoefficientStats {
    fn record(&mut self, s: &Field, model: &PetroModel) {
        for &v in s.values() {
            let (se, clamped) = model.effective_saturation_checked(v);
            self.evaluations += 1;
            self.clamped += u64::from(clamped);
            if model.capillary_pressure(se).is_err() {
                self.domain_violations += 1;
            }
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct RunSummary {
    pub steps: usize,
    /// Final time in configured units.
    pub final_time: f64,
    /// First time the producer saturation exceeded the threshold.
    pub breakthrough: Option<f64>,
    pub coefficients: CoefficientStats,
    pub pressure_iterations: usize,
    pub dumps: Vec<PathBuf>,
}

impl RunSummary {
    /// Breakthrough time, or the stopping time if it never happened.
    pub fn breakthrough_or_stop(&self) -> f64 {
        self.breakthrough.unwrap_or(self.final_time)
    }
}

/// A running simulation.
#[derive(Debug, Clone)]
pub struct Simulation {
    config: RunConfig,
    state: State,
    params: StepParams,
    production: usize,
    steps: usize,
    stats: CoefficientStats,
    pressure_iterations: usize,
    breakthrough: Option<f64>,
}

impl Simulation {
    pub fn new(config: RunConfig) -> Result<Self, Error> {
        let state = init_state(&config)?;
        let wells = config.wells();
        let production = wells.production_node(state.grid())?;
        let params = StepParams {
            dt: config.dt * config.time_scale(),
            porosity: config.phi,
            permeability: config.permeability(),
            wells: Some(wells),
            c_max: config.c_max(),
            solver: config.solver(),
        };
        Ok(Simulation {
            config,
            state,
            params,
            production,
            steps: 0,
            stats: CoefficientStats::default(),
            pressure_iterations: 0,
            breakthrough: None,
        })
    }

    pub fn state(&self) -> &State {
        &self.state
    }

    pub fn config(&self) -> &RunConfig {
        &self.config
    }

    pub fn steps(&self) -> usize {
        self.steps
    }

    pub fn producer_saturation(&self) -> f64 {
        self.state.s.values()[self.production]
    }

    pub fn breakthrough(&self) -> Option<f64> {
        self.breakthrough
    }

    /// Solve the pressure equation for the current `(s, c)` and store `p`, `v`.
    pub fn update_pressure(&mut self) -> Result<(), Error> {
        let model = &self.config.model;
        let kl = nodal_conductivity(&self.state.s, &self.state.c, &self.params.permeability, model);
        let system = assemble_with_conductivity(self.state.grid(), &kl, &self.config.wells())?;
        let (p, report) = solve_pressure(&system, self.params.solver)?;
        self.pressure_iterations += report.iterations;
        let (vx, vy) = velocity_with_conductivity(&p, &kl);
        self.state.p = p;
        self.state.vx = vx;
        self.state.vy = vy;
        Ok(())
    }

    /// One step of length `dt` (configured units).
    pub fn step(&mut self, dt: f64) -> Result<(), Error> {
        let model = self.config.model;
        self.stats.record(&self.state.s, &model);
        self.update_pressure()?;
        self.stats.record(&self.state.s, &model);
        let params = StepParams {
            dt: dt * self.config.time_scale(),
            ..self.params.clone()
        };
        let s_new = saturation_step(&self.state, &model, &params)?;
        let c_new = concentration_step(&self.state, &s_new, &model, &params)?;
        self.state.s = s_new;
        self.state.c = c_new;
        self.state.t += dt;
        self.steps += 1;
        if self.breakthrough.is_none() && self.producer_saturation() > self.config.breakthrough_threshold() {
            self.breakthrough = Some(self.state.t);
        }
        Ok(())
    }

    /// Step until `t_end`, shortening the last step to land on it exactly.
    pub fn advance_to(&mut self, t_end: f64) -> Result<(), Error> {
        let dt = self.config.dt;
        while self.state.t < t_end - 1e-12 * dt {
            let remaining = t_end - self.state.t;
            let h = if remaining < dt * (1.0 + 1e-9) { remaining } else { dt };
            self.step(h)?;
            if h == remaining {
                self.state.t = t_end;
            }
        }
        Ok(())
    }

    pub fn summary(&self, dumps: Vec<PathBuf>) -> RunSummary {
        RunSummary {
            steps: self.steps,
            final_time: self.state.t,
            breakthrough: self.breakthrough,
            coefficients: self.stats,
            pressure_iterations: self.pressure_iterations,
            dumps,
        }
    }

    /// Write `s`, `c` and `p` dumps tagged with `tag`.
    pub fn dump(&self, dir: &Path, tag: &str) -> Result<Vec<PathBuf>, Error> {
        std::fs::create_dir_all(dir)?;
        let mut written = Vec::new();
        for field in [&self.state.s, &self.state.c, &self.state.p] {
            let path = dir.join(format!("{}_{tag}.dat", field.label().as_str()));
            let file = BufWriter::new(File::create(&path)?);
            field.write_dump(file, self.state.t)?;
            written.push(path);
        }
        Ok(written)
    }

    /// Run to breakthrough or `Tstop`, dumping at the configured cadence.
    ///
    /// On failure the last consistent state is dumped (tag `last`) before the
    /// error is returned.
    pub fn run(&mut self) -> Result<RunSummary, Error> {
        let out = self.config.out.clone();
        let mut dumps = Vec::new();
        if let Some(dir) = &out {
            dumps.extend(self.dump(dir, &format!("{:06}", self.steps))?);
        }
        let tstop = self.config.tstop;
        let dt = self.config.dt;
        while self.breakthrough.is_none() && self.state.t < tstop - 1e-12 * dt {
            let h = dt.min(tstop - self.state.t);
            let backup = self.clone();
            if let Err(e) = self.step(h) {
                if let Some(dir) = &out {
                    // best effort: the original error matters more
                    let _ = backup.dump(dir, "last");
                }
                return Err(e);
            }
            if let Some(dir) = &out {
                let every = self.config.dump_every;
                if every > 0 && self.steps.is_multiple_of(every) {
                    dumps.extend(self.dump(dir, &format!("{:06}", self.steps))?);
                }
            }
        }
        if self.steps > 0 {
            self.update_pressure()?;
        }
        if let Some(dir) = &out {
            dumps.extend(self.dump(dir, "final")?);
        }
        Ok(self.summary(dumps))
    }
}

/// Build and run a simulation from a configuration.
pub fn run_simulation(config: &RunConfig) -> Result<(State, RunSummary), Error> {
    let mut sim = Simulation::new(config.clone())?;
    let summary = sim.run()?;
    Ok((sim.state, summary))
}

#[cfg(test)]
mod tests {
    use super::*;

    fn small(n: usize) -> RunConfig {
        RunConfig { n, dt: 0.02, tstop: 0.1, ..Default::default() }
    }

    #[test]
    fn init_regions() {
        let cfg = small(8);
        let st = init_state(&cfg).unwrap();
        assert_eq!(st.s.at(0, 0), 0.8);
        assert_eq!(st.c.at(0, 0), 0.1);
        assert_eq!(st.s.at(8, 8), 0.21);
        assert_eq!(st.c.at(8, 8), 0.0);

        let none = init_state(&RunConfig { radius: 0.0, ..small(8) }).unwrap();
        assert!(none.s.values().iter().all(|&v| v == 0.21));
        let all = init_state(&RunConfig { radius: SQRT_2, ..small(8) }).unwrap();
        assert!(all.s.values().iter().all(|&v| v == 0.8));
        assert!(init_state(&RunConfig { radius: -1.0, ..small(8) }).is_err());
    }

    #[test]
    fn zero_tstop_takes_no_steps() {
        let (st, sum) = run_simulation(&RunConfig { tstop: 0.0, ..small(4) }).unwrap();
        assert_eq!(sum.steps, 0);
        assert_eq!(st, init_state(&small(4)).unwrap());
    }

    #[test]
    fn no_injection_uniform_state_is_fixed() {
        let cfg = RunConfig { q: 0.0, radius: 0.0, ..small(4) };
        let (st, sum) = run_simulation(&cfg).unwrap();
        assert_eq!(sum.steps, 5);
        assert!(st.s.values().iter().all(|&v| (v - 0.21).abs() < 1e-14));
        assert!(st.c.values().iter().all(|&v| v == 0.0));
    }

    #[test]
    fn advance_lands_on_target() {
        let mut sim = Simulation::new(small(4)).unwrap();
        sim.advance_to(0.05).unwrap();
        assert_eq!(sim.state().t, 0.05);
        assert_eq!(sim.steps(), 3);
    }
}
