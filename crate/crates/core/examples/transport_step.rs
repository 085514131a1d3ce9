//! Advects a saturation bump and a polymer slug through a uniform velocity
//! field with the characteristic transport steps, no wells.

use polyflood::linalg::CgOptions;
use polyflood::mesh::{Field, FieldLabel, Grid2};
use polyflood::petro::PetroModel;
use polyflood::pressure::Permeability;
use polyflood::transport::{concentration_step, saturation_step, State, StepParams};

fn main() -> Result<(), Box<dyn std::error::Error>> {
    let pm = PetroModel::default();
    let n = 32;
    let g = Grid2::square(n)?;
    let bump = |x: f64, y: f64| (-((x - 0.3).powi(2) + (y - 0.3).powi(2)) / 0.01).exp();
    let mut st = State::at_rest(
        0.0,
        Field::<Grid2>::sample(g, FieldLabel::Saturation, |x, y| 0.25 + 0.5 * bump(x, y)),
        Field::<Grid2>::sample(g, FieldLabel::Concentration, |x, y| 0.1 * bump(x, y)),
    )?;
    st.vx.values_mut().iter_mut().for_each(|v| *v = 1.0);
    st.vy.values_mut().iter_mut().for_each(|v| *v = 1.0);
    let params = StepParams {
        dt: 0.01,
        porosity: 1.0,
        permeability: Permeability::Uniform(1.0),
        wells: None,
        c_max: 0.1,
        solver: CgOptions::default(),
    };
    println!("{:>6} {:>9} {:>9} {:>9}", "t", "max s", "max c", "peak at");
    for k in 1..=20 {
        let s = saturation_step(&st, &pm, &params)?;
        let c = concentration_step(&st, &s, &pm, &params)?;
        st.s = s;
        st.c = c;
        st.t += params.dt;
        if k % 5 == 0 {
            let peak = (0..=n).max_by(|&a, &b| st.c.at(a, a).total_cmp(&st.c.at(b, b))).unwrap();
            println!("{:>6.2} {:>9.4} {:>9.4} {:>9.3}", st.t, st.s.max(), st.c.max(), peak as f64 / n as f64);
        }
    }
    Ok(())
}
