//! Grid refinement study at the reference breakthrough time.
//!
//! `cargo run --release --example spatial_study -- [csv-path]`

use polyflood::harness::{format_table, run_spatial_study, write_csv_file, RefinementStudy};
use polyflood::RunConfig;

fn main() -> Result<(), Box<dyn std::error::Error>> {
    let study = RefinementStudy::spatial(RunConfig { tstop: 3.0, ..Default::default() });
    let rows = run_spatial_study(&study)?;
    println!("compared at t = {}", rows[0].time);
    print!("{}", format_table(&rows));
    if let Some(path) = std::env::args().nth(1) {
        write_csv_file(&rows, path.as_ref())?;
    }
    Ok(())
}
