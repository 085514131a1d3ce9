//! Tabulates relative permeabilities, capillary pressure and fractional flow
//! for clean water and for the injected polymer concentration.

use polyflood::petro::PetroModel;

fn main() {
    let pm = PetroModel::default();
    let (lo, hi) = pm.saturation_bounds();
    println!("{:>6} {:>8} {:>8} {:>9} {:>8} {:>8} {:>10}", "s", "krw", "kro", "pc", "f(c=0)", "f(c=.1)", "D(c=.1)");
    for k in 0..=20 {
        let s = lo + (hi - lo) * k as f64 / 20.0;
        let se = pm.effective_saturation(s);
        println!(
            "{s:>6.3} {:>8.4} {:>8.4} {:>9.4} {:>8.4} {:>8.4} {:>10.3e}",
            pm.krw(se),
            pm.kro(se),
            pm.capillary_pressure_at(s),
            pm.fractional_flow(s, 0.0),
            pm.fractional_flow(s, 0.1),
            pm.capillary_diffusion(s, 0.1, 1.0),
        );
    }
}
