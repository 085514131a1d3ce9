//! One pressure solve on a uniform state, printing the diagonal profile.
//!
//! `cargo run --release --example pressure_solve -- [N]`

use polyflood::linalg::CgOptions;
use polyflood::mesh::{Field, FieldLabel, Grid2};
use polyflood::petro::PetroModel;
use polyflood::pressure::{assemble_pressure, recover_velocity, solve_pressure, Permeability, WellConfig};

fn main() -> Result<(), Box<dyn std::error::Error>> {
    let n: usize = std::env::args().nth(1).map(|a| a.parse()).transpose()?.unwrap_or(32);
    let pm = PetroModel::default();
    let g = Grid2::square(n)?;
    let s = Field::constant(g, FieldLabel::Saturation, 0.21);
    let c = Field::constant(g, FieldLabel::Concentration, 0.0);
    let perm = Permeability::Uniform(1.0);
    let sys = assemble_pressure(&s, &c, &perm, &pm, &WellConfig::quarter_five_spot(200.0, 0.1))?;
    let (p, report) = solve_pressure(&sys, CgOptions::default())?;
    let (vx, vy) = recover_velocity(&p, &s, &c, &perm, &pm)?;
    println!("CG: {} iterations, relative residual {:.2e}", report.iterations, report.relative_residual);
    println!("{:>6} {:>12} {:>12}", "x=y", "p", "|v|");
    for i in (0..=n).step_by((n / 8).max(1)) {
        println!("{:>6.3} {:>12.4} {:>12.4}", i as f64 / n as f64, p.at(i, i), vx.at(i, i).hypot(vy.at(i, i)));
    }
    Ok(())
}
