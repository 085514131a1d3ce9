//! Two-phase polymer flooding on the unit square: a finite-element pressure
//! solve coupled to a characteristic (MMOC) transport step, plus a reduced
//! one-dimensional scheme and convergence-study tooling.
//!
//! Start from [`sim::Simulation`] for a full run, or [`harness`] for
//! refinement studies. The `examples/` directory has one program per piece.

pub mod config;
pub mod harness;
pub mod linalg;
pub mod mesh;
pub mod petro;
pub mod pressure;
pub mod reduced1d;
pub mod sim;
pub mod transport;

use thiserror::Error;

pub use config::RunConfig;
pub use mesh::{Field, FieldLabel, Grid1, Grid2};
pub use petro::PetroModel;
pub use sim::{init_state, run_simulation, RunSummary, Simulation};
pub use transport::State;

#[derive(Debug, Error)]
pub enum Error {
    #[error("configuration: {0}")]
    Config(#[from] config::ConfigError),
    #[error("constitutive model: {0}")]
    Petro(#[from] petro::PetroError),
    #[error("mesh: {0}")]
    Mesh(#[from] mesh::MeshError),
    #[error("pressure: {0}")]
    Pressure(#[from] pressure::PressureError),
    #[error("transport: {0}")]
    Transport(#[from] transport::TransportError),
    #[error("1-D scheme: {0}")]
    Reduced1d(#[from] reduced1d::Reduced1dError),
    #[error("study: {0}")]
    Study(#[from] harness::HarnessError),
    #[error("io: {0}")]
    Io(#[from] std::io::Error),
    #[error("csv: {0}")]
    Csv(#[from] csv::Error),
}

impl Error {
    /// Process exit code by failure category.
    ///
    /// 2 configuration, 3 solver, 4 verification, 5 I/O, 1 anything else.
    pub fn exit_code(&self) -> i32 {
        use pressure::PressureError as P;
        use transport::TransportError as T;
        match self {
            Error::Config(_) | Error::Petro(_) => 2,
            Error::Pressure(P::Solve(_)) | Error::Transport(T::Solve(_)) | Error::Reduced1d(_) => 3,
            Error::Study(harness::HarnessError::Verification(_)) => 4,
            Error::Io(_) | Error::Csv(_) => 5,
            _ => 1,
        }
    }
}
