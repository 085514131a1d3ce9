use polyflood::linalg::{CgOptions, CsrMatrix};
use polyflood::mesh::{Field, FieldLabel, Grid2, NodeGrid};
use polyflood::petro::PetroModel;
use polyflood::pressure::{
    assemble_pressure, assemble_stiffness, recover_velocity, solve_pressure, Permeability, SparseSystem, WellConfig,
};
use proptest::prelude::*;

fn uniform(n: usize, s: f64, c: f64) -> (Field, Field) {
    let g = Grid2::square(n).unwrap();
    (
        Field::constant(g, FieldLabel::Saturation, s),
        Field::constant(g, FieldLabel::Concentration, c),
    )
}

/// Gaussian elimination with partial pivoting on a dense copy.
fn dense_solve(a: &CsrMatrix, b: &[f64]) -> Vec<f64> {
    let mut m = a.to_dense();
    let mut x = b.to_vec();
    let n = x.len();
    for col in 0..n {
        let piv = (col..n).max_by(|&i, &j| m[i][col].abs().total_cmp(&m[j][col].abs())).unwrap();
        m.swap(col, piv);
        x.swap(col, piv);
        for r in col + 1..n {
            let f = m[r][col] / m[col][col];
            for k in col..n {
                m[r][k] -= f * m[col][k];
            }
            x[r] -= f * x[col];
        }
    }
    for r in (0..n).rev() {
        let mut acc = x[r];
        for k in r + 1..n {
            acc -= m[r][k] * x[k];
        }
        x[r] = acc / m[r][r];
    }
    x
}

#[test]
fn two_by_two_grid_matches_dense_oracle() {
    let pm = PetroModel::default();
    let (s, c) = uniform(2, 0.5, 0.05);
    let sys = assemble_pressure(&s, &c, &Permeability::Uniform(1.0), &pm, &WellConfig::quarter_five_spot(1.0, 0.1)).unwrap();
    let (p, _) = solve_pressure(&sys, CgOptions { tol: 1e-14, max_iter: 100 }).unwrap();
    let mut b = sys.rhs.clone();
    b[8] = 0.0;
    let oracle = dense_solve(&sys.pinned_matrix(), &b);
    for (a, e) in p.values().iter().zip(&oracle) {
        assert!((a - e).abs() <= 1e-12 * (1.0 + e.abs()), "{a} vs {e}");
    }
    // symmetric under x <-> y and decreasing from injector to producer
    assert!((oracle[1] - oracle[3]).abs() < 1e-12);
    assert!(oracle[0] > oracle[4] && oracle[4] > oracle[8]);
}

#[test]
fn constant_coefficient_gives_five_point_laplacian() {
    let g = Grid2::square(6).unwrap();
    let a = assemble_stiffness(g, |_| 1.0).unwrap();
    for j in 1..6 {
        for i in 1..6 {
            let k = g.node(i, j);
            assert!((a.get(k, k) - 4.0).abs() < 1e-14);
            for nb in [g.node(i + 1, j), g.node(i - 1, j), g.node(i, j + 1), g.node(i, j - 1)] {
                assert!((a.get(k, nb) + 1.0).abs() < 1e-14);
            }
            assert_eq!(a.get(k, g.node(i + 1, j + 1)), 0.0);
            assert_eq!(a.get(k, g.node(i - 1, j + 1)), 0.0);
            assert_eq!(a.row(k).filter(|&(_, v)| v != 0.0).count(), 5);
        }
    }
}

/// Natural boundary load of `p = ax + by` with coefficient `k`: each edge
/// carries `k grad p . n` times half its length to both endpoints.
fn boundary_load(g: Grid2, k: f64, a: f64, b: f64) -> Vec<f64> {
    let mut load = vec![0.0; g.node_count()];
    let (nx, ny) = (g.nx(), g.ny());
    for i in 0..nx {
        let half = 0.5 * g.hx();
        for (j, flux) in [(0, -k * b), (ny, k * b)] {
            load[g.node(i, j)] += flux * half;
            load[g.node(i + 1, j)] += flux * half;
        }
    }
    for j in 0..ny {
        let half = 0.5 * g.hy();
        for (i, flux) in [(0, -k * a), (nx, k * a)] {
            load[g.node(i, j)] += flux * half;
            load[g.node(i, j + 1)] += flux * half;
        }
    }
    load
}

#[test]
fn linear_pressure_reproduced_to_solver_tolerance() {
    for n in [4, 16, 32] {
        let g = Grid2::square(n).unwrap();
        let k = 0.7;
        let (a, b) = (1.0, 2.0);
        let exact = |x: f64, y: f64| a * x + b * y - (a + b);
        let sys = SparseSystem {
            grid: g,
            matrix: assemble_stiffness(g, |_| k).unwrap(),
            rhs: boundary_load(g, k, a, b),
            pin_node: Some(g.node(n, n)),
        };
        let (p, report) = solve_pressure(&sys, CgOptions { tol: 1e-10, max_iter: 10_000 }).unwrap();
        assert!(report.relative_residual <= 1e-10);
        for node in 0..g.node_count() {
            let (x, y) = g.point(node);
            assert!((p.values()[node] - exact(x, y)).abs() < 1e-8, "n={n} node={node}");
        }
        let kl = vec![k; g.node_count()];
        let (vx, vy) = polyflood::pressure::velocity_with_conductivity(&p, &kl);
        assert!(vx.values().iter().all(|v| (v + k * a).abs() < 1e-7));
        assert!(vy.values().iter().all(|v| (v + k * b).abs() < 1e-7));
    }
}

#[test]
fn quarter_five_spot_velocity_is_symmetric_and_outward() {
    let pm = PetroModel::default();
    let n = 16;
    let (s, c) = uniform(n, 0.5, 0.05);
    let perm = Permeability::Uniform(1.0);
    let sys = assemble_pressure(&s, &c, &perm, &pm, &WellConfig::quarter_five_spot(1.0, 0.1)).unwrap();
    let (p, _) = solve_pressure(&sys, CgOptions::default()).unwrap();
    let (vx, vy) = recover_velocity(&p, &s, &c, &perm, &pm).unwrap();
    let g = p.grid();
    for j in 0..=n {
        for i in 0..=n {
            assert!((p.at(i, j) - p.at(j, i)).abs() < 1e-8);
            assert!((vx.at(i, j) - vy.at(j, i)).abs() < 1e-8);
        }
    }
    // flow leaves the injector corner along the diagonal
    for i in 1..n / 2 {
        let k = g.node(i, i);
        assert!(vx.values()[k] > 0.0 && vy.values()[k] > 0.0);
    }
}

#[test]
fn velocity_near_injector_converges_at_least_first_order() {
    let pm = PetroModel::default();
    let perm = Permeability::Uniform(1.0);
    let speed_at_quarter = |n: usize| {
        let (s, c) = uniform(n, 0.5, 0.05);
        let sys = assemble_pressure(&s, &c, &perm, &pm, &WellConfig::quarter_five_spot(1.0, 0.1)).unwrap();
        let (p, _) = solve_pressure(&sys, CgOptions::default()).unwrap();
        let (vx, vy) = recover_velocity(&p, &s, &c, &perm, &pm).unwrap();
        vx.at(n / 4, n / 4).hypot(vy.at(n / 4, n / 4))
    };
    let reference = speed_at_quarter(128);
    let errs: Vec<f64> = [16, 32, 64].iter().map(|&n| (speed_at_quarter(n) - reference).abs()).collect();
    for w in errs.windows(2) {
        assert!((w[0] / w[1]).log2() >= 0.9, "{errs:?}");
    }
}

proptest! {
    #![proptest_config(ProptestConfig { cases: 24, ..ProptestConfig::default() })]

    #[test]
    fn pinned_operator_is_spd(
        n in 2usize..7,
        sat in proptest::collection::vec(0.1f64..0.8, 49),
        conc in proptest::collection::vec(0.0f64..0.1, 49),
        x in proptest::collection::vec(-1.0f64..1.0, 49),
    ) {
        let g = Grid2::square(n).unwrap();
        let m = g.node_count();
        let s = Field::from_values(g, FieldLabel::Saturation, sat[..m].to_vec()).unwrap();
        let c = Field::from_values(g, FieldLabel::Concentration, conc[..m].to_vec()).unwrap();
        let sys = assemble_pressure(&s, &c, &Permeability::Uniform(1.0), &PetroModel::default(),
            &WellConfig::quarter_five_spot(200.0, 0.1)).unwrap();
        prop_assert!(sys.rhs.iter().sum::<f64>().abs() < 1e-12);
        prop_assert!(sys.matrix.asymmetry() < 1e-14);
        // the unpinned operator annihilates constants
        let ones = vec![1.0; m];
        prop_assert!(sys.matrix.apply(&ones).iter().all(|v| v.abs() < 1e-12));
        let a = sys.pinned_matrix();
        prop_assert!(a.asymmetry() < 1e-14);
        let v = &x[..m];
        if v.iter().any(|e| *e != 0.0) {
            prop_assert!(a.quadratic_form(v) > 0.0);
        }
    }
}
