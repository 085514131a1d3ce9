//! Manufactured convergence of the reduced 1-D scheme plus the stencil,
//! characteristic and interpolation order probes.

use std::f64::consts::PI;

use polyflood::reduced1d::{
    lemma31_check, lemma32_check, manufactured_convergence, peano_check, SmoothProfile,
};

fn main() -> Result<(), Box<dyn std::error::Error>> {
    println!("{:>8} {:>12} {:>12} {:>12} {:>7}", "h", "l2_s", "l2_c", "s+c", "order");
    for r in manufactured_convergence(&[16, 32, 64, 128], 0.5)? {
        let order = r.order.map_or("-".to_string(), |o| format!("{o:.3}"));
        println!("{:>8.5} {:>12.4e} {:>12.4e} {:>12.4e} {:>7}", r.h, r.l2_s, r.l2_c, r.combined(), order);
    }

    let s = |x: f64| (2.0 * PI * x).sin();
    let sx = |x: f64| 2.0 * PI * (2.0 * PI * x).cos();
    let sxx = |x: f64| -4.0 * PI * PI * (2.0 * PI * x).sin();
    for n in [16, 32, 64] {
        let r = lemma32_check(|x| 1.0 + x * x, |x| 2.0 * x, s, sx, sxx, n);
        println!("diffusion stencil n={n:<4} residual {r:.4e}");
    }

    let value = |x: f64, t: f64| (x + t).sin() * (2.0 * t).exp();
    let dt = |x: f64, t: f64| ((x + t).cos() + 2.0 * (x + t).sin()) * (2.0 * t).exp();
    let dx = |x: f64, t: f64| (x + t).cos() * (2.0 * t).exp();
    let prof = SmoothProfile { value: &value, dt: &dt, dx: &dx };
    for step in [0.1, 0.05, 0.025] {
        let r = lemma31_check(&prof, |x| 0.5 + 0.5 * x, 1.0, 32, 0.5, step);
        println!("characteristic dt={step:<6} residual {r:.4e}");
    }

    for n in [8, 16, 32] {
        let e = peano_check(|x| (3.0 * x).exp(), n, 0.4)?;
        println!("interpolation n={n:<4} error {e:.4e}");
    }
    Ok(())
}
