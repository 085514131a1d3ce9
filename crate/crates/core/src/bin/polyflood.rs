use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};
use polyflood::harness::{self, RefinementStudy};
use polyflood::{run_simulation, Error, RunConfig};

#[derive(Parser)]
#[command(name = "polyflood", version, about = "Quarter five-spot polymer flood simulator")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Run one flood to breakthrough or Tstop, writing dumps.
    Run(Overrides),
    /// Grid refinement study against the finest grid.
    StudySpatial(Overrides),
    /// Time-step refinement study on the configured grid.
    StudyTemporal(Overrides),
    /// Manufactured 1-D convergence and stencil order checks.
    #[command(name = "verify-1d")]
    Verify1d,
}

#[derive(Args)]
struct Overrides {
    /// `key = value` run configuration file
    #[arg(long)]
    config: Option<PathBuf>,
    /// output directory for dumps and CSV tables
    #[arg(long)]
    out: Option<PathBuf>,
    /// cells per side
    #[arg(long)]
    nx: Option<usize>,
    /// time step (pore volumes unless time_unit = physical)
    #[arg(long, allow_negative_numbers = true)]
    dt: Option<f64>,
    /// final time
    #[arg(long, allow_negative_numbers = true)]
    tstop: Option<f64>,
    /// producer saturation that counts as breakthrough
    #[arg(long, allow_negative_numbers = true)]
    threshold: Option<f64>,
}

impl Overrides {
    fn load(&self) -> Result<RunConfig, Error> {
        let mut cfg = match &self.config {
            Some(p) => RunConfig::from_file(p)?,
            None => RunConfig::default(),
        };
        if let Some(v) = &self.out {
            cfg.out = Some(v.clone());
        }
        if let Some(v) = self.nx {
            cfg.n = v;
        }
        if let Some(v) = self.dt {
            cfg.dt = v;
        }
        if let Some(v) = self.tstop {
            cfg.tstop = v;
        }
        if let Some(v) = self.threshold {
            cfg.threshold = Some(v);
        }
        cfg.validate()?;
        Ok(cfg)
    }
}

fn write_rows(rows: &[harness::StudyRow], cfg: &RunConfig, name: &str) -> Result<(), Error> {
    print!("{}", harness::format_table(rows));
    if let Some(dir) = &cfg.out {
        let path = dir.join(name);
        harness::write_csv_file(rows, &path)?;
        println!("wrote {}", path.display());
    }
    Ok(())
}

fn execute(cmd: Command) -> Result<(), Error> {
    match cmd {
        Command::Run(o) => {
            let cfg = o.load()?;
            let (_, summary) = run_simulation(&cfg)?;
            println!("steps {}", summary.steps);
            println!("final time {}", summary.final_time);
            match summary.breakthrough {
                Some(t) => println!("breakthrough {t}"),
                None => println!("breakthrough none (stopped at Tstop)"),
            }
            let c = summary.coefficients;
            println!(
                "coefficient evaluations {} clamped {} domain violations {}",
                c.evaluations, c.clamped, c.domain_violations
            );
            println!("pressure CG iterations {}", summary.pressure_iterations);
            for d in &summary.dumps {
                println!("dump {}", d.display());
            }
        }
        Command::StudySpatial(o) => {
            let cfg = o.load()?;
            let rows = harness::run_spatial_study(&RefinementStudy::spatial(cfg.clone()))?;
            write_rows(&rows, &cfg, "spatial.csv")?;
        }
        Command::StudyTemporal(o) => {
            let cfg = o.load()?;
            let rows = harness::run_temporal_study(&RefinementStudy::temporal(cfg.clone()))?;
            write_rows(&rows, &cfg, "temporal.csv")?;
        }
        Command::Verify1d => {
            let checks = harness::verify_1d()?;
            for c in &checks {
                println!("{c}");
            }
            let failed = checks.iter().filter(|c| !c.passed()).count();
            if failed > 0 {
                return Err(harness::HarnessError::Verification(format!("{failed} check(s) failed")).into());
            }
        }
    }
    Ok(())
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    match execute(cli.command) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(e.exit_code() as u8)
        }
    }
}
