//! Acceptance suite: one PASS/FAIL line per criterion. Exits nonzero if any
//! criterion fails.

use std::f64::consts::PI;
use std::time::{Duration, Instant};

use polyflood::harness::{run_spatial_study, run_temporal_study, RefinementStudy, StudyRow, Variable};
use polyflood::linalg::CgOptions;
use polyflood::mesh::{Field, FieldLabel, Grid1, Grid2, NodeGrid};
use polyflood::petro::PetroModel;
use polyflood::pressure::{assemble_pressure, assemble_stiffness, solve_pressure, Permeability, SparseSystem, WellConfig};
use polyflood::reduced1d::{
    lemma31_check, lemma32_check, manufactured_convergence, peano_check, step1d, PhysicalCoeffs1D, SmoothProfile,
};
use polyflood::transport::{concentration_step, saturation_step, State, StepParams};
use polyflood::{run_simulation, RunConfig};

struct Outcome {
    pass: bool,
    detail: String,
}

fn within(v: f64, lo: f64, hi: f64) -> bool {
    v >= lo && v <= hi
}

fn budget(elapsed: Duration, limit: Duration, out: &mut Outcome) {
    if elapsed > limit {
        out.pass = false;
        out.detail.push_str(&format!("; over time budget {limit:?}"));
    }
}

fn criterion1() -> Outcome {
    let recs = manufactured_convergence(&[16, 32, 64, 128], 0.5).expect("manufactured run");
    let orders: Vec<f64> = recs.iter().filter_map(|r| r.order).collect();
    Outcome {
        pass: orders.iter().all(|&o| within(o, 0.8, 1.3)),
        detail: format!(
            "orders of |zeta|+|theta| {:.3?} (need [0.8, 1.3]), errors [{}]",
            orders,
            recs.iter().map(|r| format!("{:.3e}", r.combined())).collect::<Vec<_>>().join(", ")
        ),
    }
}

fn criterion2() -> Outcome {
    let s = |x: f64| (2.0 * PI * x).sin();
    let sx = |x: f64| 2.0 * PI * (2.0 * PI * x).cos();
    let sxx = |x: f64| -4.0 * PI * PI * (2.0 * PI * x).sin();
    let r = |n| lemma32_check(|x| 1.0 + x * x, |x| 2.0 * x, s, sx, sxx, n);
    let ratios = [r(16) / r(32), r(32) / r(64)];
    let exact = lemma32_check(|_| 1.3, |_| 0.0, |x| 2.0 * x * x - x + 0.2, |x| 4.0 * x - 1.0, |_| 4.0, 32);
    Outcome {
        pass: ratios.iter().all(|&q| within(q, 1.7, 4.5)) && exact <= 1e-10,
        detail: format!("ratios {ratios:.3?} (need [1.7, 4.5]), constant-D quadratic residual {exact:.2e}"),
    }
}

fn criterion3() -> Outcome {
    let value = |x: f64, t: f64| (x + t).sin() * (2.0 * t).exp();
    let dt = |x: f64, t: f64| ((x + t).cos() + 2.0 * (x + t).sin()) * (2.0 * t).exp();
    let dx = |x: f64, t: f64| (x + t).cos() * (2.0 * t).exp();
    let prof = SmoothProfile { value: &value, dt: &dt, dx: &dx };
    let b = |x: f64| 0.5 + 0.5 * x;
    let r = |step| lemma31_check(&prof, b, 1.0, 32, 0.5, step);
    let ratios = [r(0.1) / r(0.05), r(0.05) / r(0.025)];
    Outcome {
        pass: ratios.iter().all(|&q| within(q, 1.6, 2.4)),
        detail: format!("ratios {ratios:.3?} (need [1.6, 2.4])"),
    }
}

fn criterion4() -> Outcome {
    let u = |x: f64| (3.0 * x).exp() * (1.0 + x * x);
    let e: Vec<f64> = [16, 32, 64].iter().map(|&n| peano_check(u, n, 0.37).unwrap()).collect();
    let ratios = [e[0] / e[1], e[1] / e[2]];
    Outcome {
        pass: ratios.iter().all(|&q| within(q, 3.5, 4.5)),
        detail: format!("ratios {ratios:.3?} (need [3.5, 4.5])"),
    }
}

fn orders_of(rows: &[StudyRow], v: Variable, linf: bool) -> Vec<f64> {
    rows.iter()
        .filter(|r| r.variable == v)
        .filter_map(|r| if linf { r.orderinf } else { r.order2 })
        .collect()
}

fn criterion5() -> Outcome {
    let study = RefinementStudy::spatial(RunConfig { tstop: 5.0, ..Default::default() });
    let rows = match run_spatial_study(&study) {
        Ok(r) => r,
        Err(e) => return Outcome { pass: false, detail: format!("study failed: {e}") },
    };
    let checks = [
        ("s L2", orders_of(&rows, Variable::Saturation, false), 0.7, 1.3),
        ("p L2", orders_of(&rows, Variable::Pressure, false), 1.5, 2.5),
        ("v L2", orders_of(&rows, Variable::Velocity, false), 1.5, 2.5),
        ("v Linf", orders_of(&rows, Variable::Velocity, true), 0.7, 1.3),
    ];
    let pass = checks.iter().all(|(_, o, lo, hi)| o.len() == 2 && o.iter().all(|&v| within(v, *lo, *hi)));
    let detail = checks
        .iter()
        .map(|(name, o, lo, hi)| format!("{name} {o:.3?} (need [{lo}, {hi}])"))
        .collect::<Vec<_>>()
        .join(", ");
    Outcome { pass, detail: format!("{detail}; compared at t = {:.4}", rows[0].time) }
}

fn criterion6() -> Outcome {
    let study = RefinementStudy::temporal(RunConfig { n: 16, tstop: 5.0, ..Default::default() });
    let rows = match run_temporal_study(&study) {
        Ok(r) => r,
        Err(e) => return Outcome { pass: false, detail: format!("study failed: {e}") },
    };
    let rates = orders_of(&rows, Variable::Saturation, false);
    Outcome {
        pass: rates.len() == 2 && rates.iter().all(|&r| within(r, 0.6, 1.2)),
        detail: format!("s L2 rates {rates:.3?} (need [0.6, 1.2]); compared at t = {:.4}", rows[0].time),
    }
}

fn invariant_failures() -> Vec<String> {
    let mut fails = Vec::new();
    let pm = PetroModel::default();

    // constitutive signs and bounds
    let (lo, hi) = pm.saturation_bounds();
    for a in 0..100 {
        let s = lo + (hi - lo) * a as f64 / 99.0;
        for b in 0..100 {
            let c = 0.1 * b as f64 / 99.0;
            let se = pm.effective_saturation(s);
            let ok = (0.0..=1.0).contains(&pm.krw(se))
                && (0.0..=1.0).contains(&pm.kro(se))
                && pm.capillary_diffusion(s, c, 1.0) <= 0.0
                && (0.0..=1.0).contains(&pm.fractional_flow(s, c))
                && pm.capillary_pressure(se).is_ok_and(|p| p > 0.0);
            if !ok {
                fails.push(format!("constitutive bounds at s={s} c={c}"));
            }
        }
    }

    // SPD and compatibility of the pressure system
    let g = Grid2::square(8).unwrap();
    let s = Field::<Grid2>::sample(g, FieldLabel::Saturation, |x, y| 0.2 + 0.5 * x * y);
    let c = Field::<Grid2>::sample(g, FieldLabel::Concentration, |x, _| 0.1 * x);
    let sys = assemble_pressure(&s, &c, &Permeability::Uniform(1.0), &pm, &WellConfig::quarter_five_spot(200.0, 0.1)).unwrap();
    let a = sys.pinned_matrix();
    let probe: Vec<f64> = (0..g.node_count()).map(|k| ((k * 7919) % 13) as f64 - 6.0).collect();
    if sys.rhs.iter().sum::<f64>().abs() > 1e-12 || a.asymmetry() > 1e-14 || a.quadratic_form(&probe) <= 0.0 {
        fails.push("pressure system not SPD/compatible".into());
    }

    // constant states preserved, concentration maximum principle off the well
    let step = |st: &State, wells| {
        let p = StepParams {
            dt: 0.02,
            porosity: 1.0,
            permeability: Permeability::Uniform(1.0),
            wells,
            c_max: 0.1,
            solver: CgOptions { tol: 1e-13, max_iter: 10_000 },
        };
        let s1 = saturation_step(st, &pm, &p).unwrap();
        let c1 = concentration_step(st, &s1, &pm, &p).unwrap();
        (s1, c1)
    };
    let with_velocity = |s: Field, c: Field, v: (f64, f64)| {
        let mut st = State::at_rest(0.0, s, c).unwrap();
        st.vx.values_mut().iter_mut().for_each(|x| *x = v.0);
        st.vy.values_mut().iter_mut().for_each(|x| *x = v.1);
        st
    };
    let st = with_velocity(
        Field::constant(g, FieldLabel::Saturation, 0.47),
        Field::constant(g, FieldLabel::Concentration, 0.06),
        (2.0, -1.0),
    );
    let (s1, c1) = step(&st, None);
    if s1.values().iter().any(|v| (v - 0.47).abs() > 1e-12) || c1.values().iter().any(|v| (v - 0.06).abs() > 1e-14) {
        fails.push("constant state not preserved".into());
    }
    let st = with_velocity(s.clone(), Field::<Grid2>::sample(g, FieldLabel::Concentration, |x, y| 0.02 + 0.05 * x * y), (1.0, 1.0));
    let (cmin, cmax) = (st.c.min(), st.c.max());
    let (_, c1) = step(&st, Some(WellConfig::quarter_five_spot(50.0, 0.1)));
    if c1.values().iter().skip(1).any(|&v| v < cmin - 1e-15 || v > cmax + 1e-15) {
        fails.push("concentration maximum principle".into());
    }

    // y-constant 2-D data against the 1-D stepper
    let n = 16;
    let g2 = Grid2::square(n).unwrap();
    let g1 = Grid1::new(n).unwrap();
    let prof = |x: f64| 0.3 + 0.3 * (-(x - 0.4) * (x - 0.4) / 0.03).exp();
    let vel = |x: f64| 1.0 + x;
    let mut st = State::at_rest(
        0.0,
        Field::<Grid2>::sample(g2, FieldLabel::Saturation, |x, _| prof(x)),
        Field::<Grid2>::sample(g2, FieldLabel::Concentration, |x, _| 0.05 * (1.0 + x)),
    )
    .unwrap();
    for k in 0..g2.node_count() {
        st.vx.values_mut()[k] = vel(g2.point(k).0);
    }
    let coeffs = PhysicalCoeffs1D {
        model: pm,
        velocity: g1.nodes().map(|(_, x)| vel(x)).collect(),
        permeability: 1.0,
        porosity: 1.0,
        c_max: 0.1,
    };
    let mut w: Vec<f64> = g1.nodes().map(|(_, x)| prof(x)).collect();
    let mut m: Vec<f64> = g1.nodes().map(|(_, x)| 0.05 * (1.0 + x)).collect();
    let mut worst = 0.0_f64;
    for k in 1..=4 {
        let (s1, c1) = step(&st, None);
        let (w1, m1) = step1d(&w, &m, &coeffs, g1, k as f64 * 0.02, 0.02).unwrap();
        for node in 0..g2.node_count() {
            let (i, _) = g2.ij(node);
            worst = worst.max((s1.values()[node] - w1[i]).abs()).max((c1.values()[node] - m1[i]).abs());
        }
        st.s = s1;
        st.c = c1;
        w = w1;
        m = m1;
    }
    if worst > 1e-12 {
        fails.push(format!("2-D vs 1-D difference {worst:e}"));
    }

    // deterministic dumps
    let dirs = [tempfile::tempdir().unwrap(), tempfile::tempdir().unwrap()];
    let dumps: Vec<_> = dirs
        .iter()
        .map(|d| {
            let cfg = RunConfig { n: 8, tstop: 0.1, out: Some(d.path().into()), dump_every: 2, ..Default::default() };
            run_simulation(&cfg).unwrap().1.dumps
        })
        .collect();
    let same = dumps[0].len() == dumps[1].len()
        && dumps[0].iter().zip(&dumps[1]).all(|(a, b)| std::fs::read(a).unwrap() == std::fs::read(b).unwrap());
    if !same {
        fails.push("dumps differ between identical runs".into());
    }
    fails
}

fn criterion7() -> Outcome {
    let fails = invariant_failures();
    Outcome {
        pass: fails.is_empty(),
        detail: if fails.is_empty() {
            "constitutive sweeps, SPD/compatibility, constant states, max principle, 2-D vs 1-D, determinism".into()
        } else {
            fails.join("; ")
        },
    }
}

fn criterion8() -> Outcome {
    let n = 32;
    let g = Grid2::square(n).unwrap();
    let k = 1.0;
    let (a, b) = (0.6, -1.1);
    let mut rhs = vec![0.0; g.node_count()];
    // natural boundary load of p = a x + b y
    for i in 0..n {
        for (j, flux) in [(0, -k * b), (n, k * b)] {
            rhs[g.node(i, j)] += 0.5 * flux * g.hx();
            rhs[g.node(i + 1, j)] += 0.5 * flux * g.hx();
        }
        for (ii, flux) in [(0, -k * a), (n, k * a)] {
            rhs[g.node(ii, i)] += 0.5 * flux * g.hy();
            rhs[g.node(ii, i + 1)] += 0.5 * flux * g.hy();
        }
    }
    let sys = SparseSystem { grid: g, matrix: assemble_stiffness(g, |_| k).unwrap(), rhs, pin_node: Some(g.node(n, n)) };
    let (p, report) = solve_pressure(&sys, CgOptions { tol: 1e-10, max_iter: 10_000 }).unwrap();
    let err = (0..g.node_count())
        .map(|node| {
            let (x, y) = g.point(node);
            (p.values()[node] - (a * x + b * y - a - b)).abs()
        })
        .fold(0.0, f64::max);
    Outcome {
        pass: report.relative_residual <= 1e-10 && err <= 1e-8,
        detail: format!("relative residual {:.2e}, max nodal error {err:.2e}", report.relative_residual),
    }
}

fn main() {
    type Criterion = (u32, &'static str, fn() -> Outcome, Duration);
    let secs = Duration::from_secs;
    let criteria: [Criterion; 8] = [
        (1, "1-D convergence theorem", criterion1, secs(10)),
        (2, "diffusion stencil order", criterion2, secs(1)),
        (3, "characteristic derivative order", criterion3, secs(1)),
        (4, "interpolation order", criterion4, secs(1)),
        (5, "2-D spatial study", criterion5, secs(300)),
        (6, "2-D temporal study", criterion6, secs(300)),
        (7, "invariant suite", criterion7, secs(300)),
        (8, "pressure linear exactness", criterion8, secs(60)),
    ];
    let mut failed = 0;
    for (id, name, run, limit) in criteria {
        let start = Instant::now();
        let mut out = run();
        let elapsed = start.elapsed();
        budget(elapsed, limit, &mut out);
        if !out.pass {
            failed += 1;
        }
        println!(
            "criterion {id} [{}] {name}: {} ({:.2}s)",
            if out.pass { "PASS" } else { "FAIL" },
            out.detail,
            elapsed.as_secs_f64()
        );
    }
    println!("acceptance: {} of 8 criteria passed", 8 - failed);
    if failed > 0 {
        std::process::exit(1);
    }
}
