//! Run configuration in a flat `key = value` format.
//!
//! One key per line, `#` starts a comment. Unknown keys are errors. Keys:
//!
//! | key | meaning | default |
//! |-----|---------|---------|
//! | `N` | cells per side | 32 |
//! | `dt`, `Tstop` | time step and final time | 0.02, 1.0 |
//! | `time_unit` | `pvi` (pore volumes injected) or `physical` | `pvi` |
//! | `mu_w`, `mu_o`, `s_ra`, `s_ro`, `m`, `alpha0`, `beta_visc`, `eps_sat` | constitutive model | see [`PetroModel`] |
//! | `Q`, `c0`, `ci` | well rate, initial and injected polymer concentration | 200, 0.1, `c0` |
//! | `s0_sigma0` | initial aqueous saturation outside the flooded region | 0.21 |
//! | `phi`, `K` | porosity and permeability | 1, 1 |
//! | `radius` | radius of the initially flooded quarter disc | 0.44 |
//! | `out`, `dump_every` | dump directory and step cadence (0 = final only) | none, 0 |
//! | `threshold` | breakthrough saturation | `1 - s0_sigma0` |
//! | `tol`, `max_iter` | conjugate gradient controls | 1e-10, 20000 |
//! | `well_exclusion` | radius around wells left out of pressure/velocity norms | 0.25 |

use std::fmt;
use std::path::{Path, PathBuf};
use std::str::FromStr;

use thiserror::Error;

use crate::linalg::CgOptions;
use crate::petro::{PetroError, PetroModel};
use crate::pressure::{Permeability, WellConfig};

#[derive(Debug, Error)]
pub enum ConfigError {
    #[error("line {line}: {msg}")]
    Syntax { line: usize, msg: String },
    #[error("unknown key `{0}`")]
    UnknownKey(String),
    #[error("key `{key}`: cannot parse `{value}`")]
    BadValue { key: String, value: String },
    #[error("invalid setting: {0}")]
    Invalid(String),
    #[error(transparent)]
    Petro(#[from] PetroError),
    #[error("reading {path}: {source}")]
    Io { path: PathBuf, source: std::io::Error },
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum TimeUnit {
    /// Time measured in pore volumes injected, `Q t / (phi |Omega|)`.
    #[default]
    PoreVolumes,
    Physical,
}

impl FromStr for TimeUnit {
    type Err = ();
    fn from_str(s: &str) -> Result<Self, ()> {
        match s {
            "pvi" => Ok(TimeUnit::PoreVolumes),
            "physical" => Ok(TimeUnit::Physical),
            _ => Err(()),
        }
    }
}

impl fmt::Display for TimeUnit {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            TimeUnit::PoreVolumes => "pvi",
            TimeUnit::Physical => "physical",
        })
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct RunConfig {
    pub n: usize,
    pub dt: f64,
    pub tstop: f64,
    pub time_unit: TimeUnit,
    pub model: PetroModel,
    pub q: f64,
    pub c0: f64,
    pub c_inj: f64,
    pub s0_sigma0: f64,
    pub phi: f64,
    pub k: f64,
    pub radius: f64,
    pub out: Option<PathBuf>,
    pub dump_every: usize,
    pub threshold: Option<f64>,
    pub tol: f64,
    pub max_iter: usize,
    pub well_exclusion: f64,
}

impl Default for RunConfig {
    fn default() -> Self {
        RunConfig {
            n: 32,
            dt: 1.0 / 50.0,
            tstop: 1.0,
            time_unit: TimeUnit::PoreVolumes,
            model: PetroModel::default(),
            q: 200.0,
            c0: 0.1,
            c_inj: 0.1,
            s0_sigma0: 0.21,
            phi: 1.0,
            k: 1.0,
            radius: 0.44,
            out: None,
            dump_every: 0,
            threshold: None,
            tol: 1e-10,
            max_iter: 20_000,
            well_exclusion: 0.25,
        }
    }
}

fn parse<T: FromStr>(key: &str, value: &str) -> Result<T, ConfigError> {
    value.parse().map_err(|_| ConfigError::BadValue {
        key: key.to_string(),
        value: value.to_string(),
    })
}

impl RunConfig {
    /// Parse configuration text on top of the defaults.
    pub fn parse_str(text: &str) -> Result<Self, ConfigError> {
        let mut cfg = RunConfig::default();
        let mut ci_set = false;
        for (idx, raw) in text.lines().enumerate() {
            let line = raw.split('#').next().unwrap_or("").trim();
            if line.is_empty() {
                continue;
            }
            let (key, value) = line.split_once('=').ok_or_else(|| ConfigError::Syntax {
                line: idx + 1,
                msg: format!("expected `key = value`, got `{line}`"),
            })?;
            let (key, value) = (key.trim(), value.trim());
            if key == "ci" {
                ci_set = true;
            }
            cfg.set(key, value)?;
        }
        if !ci_set {
            cfg.c_inj = cfg.c0;
        }
        cfg.validate()?;
        Ok(cfg)
    }

    pub fn from_file(path: &Path) -> Result<Self, ConfigError> {
        let text = std::fs::read_to_string(path).map_err(|source| ConfigError::Io {
            path: path.to_path_buf(),
            source,
        })?;
        Self::parse_str(&text)
    }

    /// Set one key from its textual value.
    pub fn set(&mut self, key: &str, value: &str) -> Result<(), ConfigError> {
        match key {
            "N" => self.n = parse(key, value)?,
            "dt" => self.dt = parse(key, value)?,
            "Tstop" => self.tstop = parse(key, value)?,
            "time_unit" => self.time_unit = parse(key, value)?,
            "mu_w" => self.model.mu_w = parse(key, value)?,
            "mu_o" => self.model.mu_o = parse(key, value)?,
            "s_ra" => self.model.s_ra = parse(key, value)?,
            "s_ro" => self.model.s_ro = parse(key, value)?,
            "m" => self.model.m = parse(key, value)?,
            "alpha0" => self.model.alpha0 = parse(key, value)?,
            "beta_visc" => self.model.beta_visc = parse(key, value)?,
            "eps_sat" => self.model.eps_sat = parse(key, value)?,
            "Q" => self.q = parse(key, value)?,
            "c0" => self.c0 = parse(key, value)?,
            "ci" => self.c_inj = parse(key, value)?,
            "s0_sigma0" => self.s0_sigma0 = parse(key, value)?,
            "phi" => self.phi = parse(key, value)?,
            "K" => self.k = parse(key, value)?,
            "radius" => self.radius = parse(key, value)?,
            "out" => self.out = Some(PathBuf::from(value)),
            "dump_every" => self.dump_every = parse(key, value)?,
            "threshold" => self.threshold = Some(parse(key, value)?),
            "tol" => self.tol = parse(key, value)?,
            "max_iter" => self.max_iter = parse(key, value)?,
            "well_exclusion" => self.well_exclusion = parse(key, value)?,
            _ => return Err(ConfigError::UnknownKey(key.to_string())),
        }
        Ok(())
    }

    pub fn validate(&self) -> Result<(), ConfigError> {
        self.model.validate()?;
        let bad = |msg: String| Err(ConfigError::Invalid(msg));
        if self.n < 2 {
            return bad(format!("N = {} (need at least 2)", self.n));
        }
        if !(self.dt > 0.0 && self.dt.is_finite()) {
            return bad(format!("dt = {}", self.dt));
        }
        if !(self.tstop >= 0.0 && self.tstop.is_finite()) {
            return bad(format!("Tstop = {}", self.tstop));
        }
        if !(self.q >= 0.0 && self.q.is_finite()) {
            return bad(format!("Q = {}", self.q));
        }
        if !(self.c0 >= 0.0 && self.c_inj >= 0.0 && self.c0.is_finite() && self.c_inj.is_finite()) {
            return bad(format!("c0 = {}, ci = {}", self.c0, self.c_inj));
        }
        let (lo, hi) = self.model.saturation_bounds();
        if !(self.s0_sigma0 >= lo && self.s0_sigma0 <= hi) {
            return bad(format!("s0_sigma0 = {} outside [{lo}, {hi}]", self.s0_sigma0));
        }
        if !(self.phi > 0.0 && self.phi <= 1.0) {
            return bad(format!("phi = {}", self.phi));
        }
        if !(self.k > 0.0 && self.k.is_finite()) {
            return bad(format!("K = {}", self.k));
        }
        if !(self.radius >= 0.0 && self.radius.is_finite()) {
            return bad(format!("radius = {}", self.radius));
        }
        if let Some(t) = self.threshold {
            if !t.is_finite() {
                return bad(format!("threshold = {t}"));
            }
        }
        if !(self.tol > 0.0 && self.tol < 1.0) || self.max_iter == 0 {
            return bad(format!("tol = {}, max_iter = {}", self.tol, self.max_iter));
        }
        if !(self.well_exclusion >= 0.0 && self.well_exclusion < 1.0) {
            return bad(format!("well_exclusion = {}", self.well_exclusion));
        }
        Ok(())
    }

    /// Breakthrough threshold, `1 - s0_sigma0` unless set explicitly.
    pub fn breakthrough_threshold(&self) -> f64 {
        self.threshold.unwrap_or(1.0 - self.s0_sigma0)
    }

    /// Physical time per configured time unit.
    pub fn time_scale(&self) -> f64 {
        match self.time_unit {
            TimeUnit::PoreVolumes if self.q > 0.0 => self.phi / self.q,
            _ => 1.0,
        }
    }

    /// Upper concentration bound `max(c0, ci)`.
    pub fn c_max(&self) -> f64 {
        self.c0.max(self.c_inj)
    }

    pub fn wells(&self) -> WellConfig {
        WellConfig::quarter_five_spot(self.q, self.c_inj)
    }

    pub fn permeability(&self) -> Permeability {
        Permeability::Uniform(self.k)
    }

    pub fn solver(&self) -> CgOptions {
        CgOptions {
            tol: self.tol,
            max_iter: self.max_iter,
        }
    }

    /// Render as parseable configuration text.
    pub fn to_text(&self) -> String {
        let m = &self.model;
        let mut s = format!(
            "N = {}\ndt = {:e}\nTstop = {:e}\ntime_unit = {}\nmu_w = {:e}\nmu_o = {:e}\ns_ra = {:e}\ns_ro = {:e}\n\
             m = {:e}\nalpha0 = {:e}\nbeta_visc = {:e}\neps_sat = {:e}\nQ = {:e}\nc0 = {:e}\nci = {:e}\n\
             s0_sigma0 = {:e}\nphi = {:e}\nK = {:e}\nradius = {:e}\ndump_every = {}\ntol = {:e}\nmax_iter = {}\n\
             well_exclusion = {:e}\n",
            self.n, self.dt, self.tstop, self.time_unit, m.mu_w, m.mu_o, m.s_ra, m.s_ro, m.m, m.alpha0,
            m.beta_visc, m.eps_sat, self.q, self.c0, self.c_inj, self.s0_sigma0, self.phi, self.k, self.radius,
            self.dump_every, self.tol, self.max_iter, self.well_exclusion,
        );
        if let Some(out) = &self.out {
            s.push_str(&format!("out = {}\n", out.display()));
        }
        if let Some(t) = self.threshold {
            s.push_str(&format!("threshold = {t:e}\n"));
        }
        s
    }
}
