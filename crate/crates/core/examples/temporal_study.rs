//! Time-step refinement study on a fixed grid at the reference breakthrough time.
//!
//! `cargo run --release --example temporal_study -- [N] [csv-path]`

use polyflood::harness::{format_table, run_temporal_study, write_csv_file, RefinementStudy};
use polyflood::RunConfig;

fn main() -> Result<(), Box<dyn std::error::Error>> {
    let mut args = std::env::args().skip(1);
    let n = args.next().map(|a| a.parse()).transpose()?.unwrap_or(16);
    let study = RefinementStudy::temporal(RunConfig { n, tstop: 3.0, ..Default::default() });
    let rows = run_temporal_study(&study)?;
    println!("h = 1/{n}, compared at t = {}", rows[0].time);
    print!("{}", format_table(&rows));
    if let Some(path) = args.next() {
        write_csv_file(&rows, path.as_ref())?;
    }
    Ok(())
}
