mod common;

use std::f64::consts::PI;

use acns_core::diagnostics::{
    cauchy_difference, energy_parts, free_energy, prolong_face, prolong_scalar, rates, stability_bound,
    stability_energy, total_energy, CauchyNorm, DiagnosticsRow,
};
use acns_core::grid::{inner_product, norm, FaceField, Grid, ModelParams, ScalarField, State};
use acns_core::operators;
use acns_core::schemes::{SchemeKind, SolverSettings, StepInfo, Stepper};
use common::*;

fn spinodal_params(dt: f64) -> ModelParams {
    ModelParams::new(0.1, 0.01, 100.0, 1.0, 1.0, 0.25, dt, 5.0).unwrap()
}

fn state_of(phi: ScalarField, u: FaceField, prm: &ModelParams) -> State {
    let g = *phi.grid();
    State::initial(phi, u, ScalarField::zeros(g), prm)
}

#[test]
fn pure_phase_has_zero_energy() {
    let prm = spinodal_params(0.01);
    let g = Grid::square(16, 2.0 * PI).unwrap();
    let s = state_of(ScalarField::constant(g, 1.0), FaceField::zeros(g), &prm);
    assert_eq!(total_energy(&s, &prm), 0.0);
    assert_eq!(free_energy(&s, &prm), 0.0);
}

#[test]
fn zero_phase_energy_is_pi_squared() {
    let prm = spinodal_params(0.01);
    let g = Grid::square(16, 2.0 * PI).unwrap();
    let s = state_of(ScalarField::zeros(g), FaceField::zeros(g), &prm);
    assert!(s.q.values().iter().all(|&q| (q + 100.0).abs() < 1e-12));
    let w = total_energy(&s, &prm);
    assert!((w - PI * PI).abs() < 1e-10, "{w}");
    assert!((free_energy(&s, &prm) - PI * PI).abs() < 1e-10);
}

#[test]
fn doubling_velocity_quadruples_kinetic_part() {
    let prm = spinodal_params(0.01);
    let g = Grid::square(16, 2.0 * PI).unwrap();
    let mut rng = Lcg(4);
    let phi = random_phi(g, &mut rng, 0.1);
    let u = random_u(g, &mut rng, 1.0);
    let a = energy_parts(&state_of(phi.clone(), u.clone(), &prm), &prm);
    let b = energy_parts(&state_of(phi, &u * 2.0, &prm), &prm);
    assert_eq!(b.u_sq, 4.0 * a.u_sq);
    assert_eq!(a.grad_phi_sq, b.grad_phi_sq);
    assert!(((b.w - a.w) - 1.5 * a.u_sq).abs() < 1e-12 * b.w);
}

#[test]
fn diagnostics_row_matches_header() {
    let prm = spinodal_params(0.01);
    let g = Grid::square(8, 2.0 * PI).unwrap();
    let s = state_of(ScalarField::constant(g, 0.5), FaceField::zeros(g), &prm);
    let row = DiagnosticsRow::new(&s, &prm, &StepInfo::default());
    assert_eq!(
        row.csv_line().split(',').count(),
        DiagnosticsRow::HEADER.split(',').count()
    );
    assert_eq!(row.v, 1.0);
    assert!(row.is_finite());
}

#[test]
fn identical_states_have_zero_difference() {
    let prm = unit_params(0.01, 0.1);
    let st = stepper(16, prm);
    let mut rng = Lcg(6);
    let a = random_level(&st, &mut rng, 3);
    let g = *st.grid();
    // a coarse copy that prolongs exactly: bilinear data
    let bil = |x: f64, y: f64| 0.3 + x - 2.0 * y + 0.5 * x * y;
    let coarse_g = Grid::square(8, 1.0).unwrap();
    let coarse = State {
        phi: ScalarField::from_fn(coarse_g, bil),
        q: ScalarField::zeros(coarse_g),
        u: FaceField::zeros(coarse_g),
        p: ScalarField::from_fn(coarse_g, bil),
        r: 1.0,
        t: a.t,
        n: 3,
    };
    let fine = State {
        phi: ScalarField::from_fn(g, bil),
        p: ScalarField::from_fn(g, bil),
        u: FaceField::zeros(g),
        ..a.clone()
    };
    for kind in [CauchyNorm::GradPhi, CauchyNorm::GradU, CauchyNorm::PressureL2] {
        assert!(cauchy_difference(&coarse, &fine, kind).unwrap() < 1e-13, "{kind:?}");
    }
    assert!(cauchy_difference(&a, &a, CauchyNorm::GradPhi).is_err(), "not nested");
}

#[test]
fn face_prolongation_is_exact_for_cubic_no_slip_fields() {
    let c = Grid::square(8, 1.0).unwrap();
    let f = c.refined();
    // cubic along each axis and zero on every wall
    let ux = |x: f64, y: f64| x * (1.0 - x) * y * (1.0 - y) * (1.0 + 2.0 * y);
    let uy = |x: f64, y: f64| x * (1.0 - x) * y * (1.0 - y) * (1.0 - 0.5 * x);
    let coarse = FaceField::from_fns(c, ux, uy);
    let fine = prolong_face(&coarse, &f).unwrap();
    let exact = FaceField::from_fns(f, ux, uy);
    assert!(max_diff(fine.values(), exact.values()) < 1e-13);
    assert!(fine.walls_are_zero());
}

#[test]
fn scalar_prolongation_is_exact_for_bilinear_data() {
    let c = Grid::new(8, 6, 2.0, 1.5).unwrap();
    let f = c.refined();
    let bil = |x: f64, y: f64| 1.0 - 0.3 * x + 2.0 * y - 1.1 * x * y;
    let fine = prolong_scalar(&ScalarField::from_fn(c, bil), &f).unwrap();
    assert!(max_diff(fine.values(), ScalarField::from_fn(f, bil).values()) < 1e-13);
}

#[test]
fn synthetic_second_order_sequence_has_rate_two() {
    let f = |x: f64, y: f64| (PI * x).cos() * (2.0 * PI * y).cos();
    let gfun = |x: f64, y: f64| (3.0 * x).sin() * (y * y + 1.0);
    let level = |n: usize| {
        let g = Grid::square(n, 1.0).unwrap();
        let h2 = g.hx * g.hx;
        let phi = ScalarField::from_fn(g, |x, y| f(x, y) + 50.0 * h2 * gfun(x, y));
        State {
            phi: phi.clone(),
            q: phi.clone(),
            u: FaceField::from_fns(
                g,
                // the h^2 term does not vanish on the tangential walls
                |x, y| (PI * x).sin() * ((PI * y).sin() + 50.0 * h2 * (PI * y).cos()),
                |x, y| (PI * y).sin() * (PI * x).sin() * x,
            ),
            p: phi,
            r: 1.0,
            t: 0.1,
            n: 10,
        }
    };
    let states: Vec<State> = [16, 32, 64, 128].into_iter().map(level).collect();
    for kind in [CauchyNorm::GradPhi, CauchyNorm::GradU, CauchyNorm::PressureL2] {
        let d: Vec<f64> = states
            .windows(2)
            .map(|w| cauchy_difference(&w[0], &w[1], kind).unwrap())
            .collect();
        let r = rates(&d);
        let last = *r.last().unwrap();
        assert!((last - 2.0).abs() < 0.1, "{kind:?}: {r:?}");
    }
}

/// Full discrete energy law of CNLFAC: the stability estimate before the
/// pressure cross terms are bounded holds with equality.
#[test]
fn cnlfac_energy_law_is_exact() {
    let prm = spinodal_params(0.05);
    let g = Grid::square(16, 2.0 * PI).unwrap();
    let st = Stepper::new(
        g,
        prm,
        SolverSettings {
            tol: 1e-12,
            ..Default::default()
        },
    )
    .unwrap();
    let mut rng = Lcg(31);
    let phi0 = ScalarField::from_vec(g, (0..g.n_cells()).map(|_| 0.3 * rng.next()).collect()).unwrap();
    let init = st.initial_state(phi0).unwrap();
    let mut levels = Vec::new();
    st.run(SchemeKind::Cnlfac, init, 12, |s, _| {
        levels.push(s.clone());
        Ok::<(), ()>(())
    })
    .unwrap();
    let ip = |a: &ScalarField, b: &ScalarField| inner_product(a, b).unwrap();
    let dt = prm.dt;
    let mut dissipation = 0.0;
    for n in 1..levels.len() - 1 {
        let (prev, cur, next) = (&levels[n - 1], &levels[n], &levels[n + 1]);
        let ubar = &(&next.u + &prev.u) * 0.5;
        let mut phidot = &(&next.phi - &prev.phi) * (0.5 / dt);
        phidot.axpy(1.0, &operators::advect_scalar(&ubar, &cur.phi));
        let visc = -inner_product(&operators::lap_dirichlet(&ubar), &ubar).unwrap();
        dissipation += dt * (norm(&phidot).powi(2) / prm.mobility + prm.nu * visc);
        let (a, b) = (&levels[n], &levels[n + 1]);
        let da = operators::div(&a.u);
        let db = operators::div(&b.u);
        let lhs = dissipation
            + stability_energy(a, b, &prm, false)
            + 0.5 * prm.beta * (ip(&da, &da) + ip(&db, &db))
            + 0.5 * prm.alpha * dt * dt * (ip(&a.p, &a.p) + ip(&b.p, &b.p))
            + 0.5 * dt * ip(&b.p, &da)
            - 0.5 * dt * ip(&a.p, &db);
        let rhs = stability_bound(&levels[0], &levels[1], &prm, false);
        assert!((lhs - rhs).abs() < 1e-9 * rhs, "N={}: {lhs} vs {rhs}", n + 1);
        assert!(stability_energy(a, b, &prm, false) <= rhs);
    }
}
