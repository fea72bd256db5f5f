use nalgebra::{DMatrix, SymmetricEigen};
use std::f64::consts::PI;
use thetafem::estimators::{compact_form_residual, Constants};
use thetafem::fem::FeSpace;
use thetafem::mesh::build_uniform_mesh;
use thetafem::scheme::{default_theta, make_uniform_grid, scalar_step, SchemeParams, Stepper};
use thetafem::solver::SolverConfig;
use thetafem::study::{make_case, run_level, RunConfig};

fn space(level: u32) -> FeSpace {
    FeSpace::new(build_uniform_mesh(level).unwrap(), SolverConfig::default()).unwrap()
}

fn generalized_eigenvalues(s: &FeSpace) -> Vec<f64> {
    let n = s.n_dofs();
    let dense = |m: &thetafem::fem::SparseMatrix| {
        let mut d = DMatrix::zeros(n, n);
        for i in 0..n {
            for (j, v) in m.row(i) {
                d[(i, j)] = v;
            }
        }
        d
    };
    let l = dense(s.mass()).cholesky().unwrap().l();
    let linv = l.try_inverse().unwrap();
    let c = &linv * dense(s.stiffness()) * linv.transpose();
    let mut ev: Vec<f64> = SymmetricEigen::new((&c + c.transpose()) * 0.5).eigenvalues.iter().copied().collect();
    ev.sort_by(f64::total_cmp);
    ev
}

#[test]
fn smallest_eigenvalue_approaches_two_pi_squared() {
    let ev = generalized_eigenvalues(&space(4));
    assert!((ev[0] / (2.0 * PI * PI) - 1.0).abs() < 0.02, "{}", ev[0]);
    assert!(ev.iter().all(|l| *l > 0.0));
}

#[test]
fn compact_form_holds_for_other_splittings() {
    let s = space(3);
    let f = |x: f64, y: f64, t: f64| (3.0 * t).sin() * x * (1.0 - x) * y * (1.0 - y) + t;
    for (a1, a2) in [(0.6, 0.3), (0.9, 0.9), (0.75, 0.5)] {
        let params = SchemeParams::new(default_theta(), a1, a2, make_uniform_grid(6, 1.0).unwrap()).unwrap();
        let mut st = Stepper::new(&s, params.clone(), &f);
        for r in st.run(&s.zero()).unwrap() {
            assert!(compact_form_residual(&s, &r, &params) < 1e-9);
        }
    }
}

#[test]
fn compact_form_breaks_for_other_theta() {
    let s = space(3);
    let f = |x: f64, y: f64, t: f64| (1.0 + t) * x * y;
    let params = SchemeParams::new(0.25, 0.7, 0.4, make_uniform_grid(4, 1.0).unwrap()).unwrap();
    let mut st = Stepper::new(&s, params, &f);
    assert!(st.run(&s.zero()).is_err());
}

#[test]
fn scalar_recursion_stability() {
    // |R(z)| < 1 for all z > 0
    let theta = default_theta();
    for alpha in [0.51, 0.6, 0.8, 1.0] {
        for z in [1e-3, 0.1, 1.0, 10.0, 1e3, 1e6] {
            let r = scalar_step(z, 1.0, 1.0, theta, alpha);
            assert!(r.abs() < 1.0, "alpha {alpha} z {z}: {r}");
        }
    }
}

#[test]
fn case_one_level_three_magnitudes() {
    // time estimators within a factor 2 of reference level-3 values
    let r = run_level(&make_case(1).unwrap(), 3, &RunConfig::default()).unwrap();
    let row = r.final_row();
    for (ours, reference) in [(row.e_t1_two, 8.5528e-2), (row.e_t2, 1.5603e-1), (row.e_t3, 2.3606e-1)] {
        assert!(ours / reference <= 2.0 && reference / ours <= 2.0, "{ours} vs {reference}");
    }
    assert_eq!(r.n_steps, 8);
    assert!(r.max_compact_residual < 1e-9);
}

#[test]
fn constants_scale_their_terms() {
    let case = make_case(1).unwrap();
    let base = run_level(&case, 3, &RunConfig::default()).unwrap();
    let mut cfg = RunConfig::default();
    cfg.constants = Constants {
        big_c12: 2.0,
        big_c22: 2.0,
        ..Constants::default()
    };
    let scaled = run_level(&case, 3, &cfg).unwrap();
    let (a, b) = (base.final_row(), scaled.final_row());
    assert!((b.e_ell / a.e_ell - 2.0).abs() < 1e-9);
    assert!((b.e_s2 / a.e_s2 - 2.0).abs() < 1e-9);
    assert_eq!(a.e_t2, b.e_t2);
}
