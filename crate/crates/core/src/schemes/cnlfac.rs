//! Crank–Nicolson leap-frog artificial compression step. The phase field and
//! the velocity are solved together in one linear system; q and p follow
//! from explicit updates.

use std::time::Instant;

use crate::grid::{FaceField, ScalarField, State};
use crate::linsolve::CsrMatrix;
use crate::operators::{self, matrices};

use super::{concat, SchemeError, StepInfo, Stepper};

/// Explicit leap-frog update `q^{n+1} = q^{n-1} + (2/eta^2) phi^n (phi^{n+1} - phi^{n-1})`.
pub(crate) fn q_update(
    eta: f64,
    q_nm1: &ScalarField,
    phi_n: &ScalarField,
    phi_np1: &ScalarField,
    phi_nm1: &ScalarField,
) -> ScalarField {
    let c = 2.0 / (eta * eta);
    let (q, pn, pp, pm) = (q_nm1.values(), phi_n.values(), phi_np1.values(), phi_nm1.values());
    let data = (0..q.len()).map(|k| q[k] + c * pn[k] * (pp[k] - pm[k])).collect();
    ScalarField::from_vec(*q_nm1.grid(), data).expect("same grid")
}

/// Artificial compression update `p^{n+1} = p^{n-1} - div(u^n) / (alpha dt)`.
pub(crate) fn p_update(alpha: f64, dt: f64, p_nm1: &ScalarField, u_n: &FaceField) -> ScalarField {
    let mut p = p_nm1.clone();
    p.axpy(-1.0 / (alpha * dt), &operators::div(u_n));
    p
}

/// The coupled `[phi; u]` system of one step: matrix (phi rows scaled by
/// `1/(M dt)` so the coupling blocks are mutual transposes) and right-hand side.
pub(crate) fn assemble(st: &Stepper, prev: &State, cur: &State) -> (CsrMatrix, Vec<f64>) {
    let prm = st.params;
    let m = &st.mats;
    let (dt, mob, eta) = (prm.dt, prm.mobility, prm.eta);
    let lm = prm.lambda * mob;
    let s = 1.0 / (mob * dt);

    let phi_n = &cur.phi;
    let phi_nm1 = &prev.phi;
    let phi_sq: Vec<f64> = phi_n.values().iter().map(|v| v * v).collect();

    let t_mat = matrices::advect(phi_n);
    let t_tr = t_mat.transpose();
    let ttt = t_tr.matmul(&t_mat);
    let conv = matrices::convect_skew(&cur.u);

    let diag: Vec<f64> = phi_sq.iter().map(|v| s * (0.5 / dt + lm / (eta * eta) * v)).collect();
    let a_pp = CsrMatrix::lincomb(&[(1.0, &CsrMatrix::diagonal(&diag)), (-0.5 * s * lm, &m.lap_n)]);
    let a_pu = t_mat.scaled(0.5 * s);
    let a_up = t_tr.scaled(0.5 * s);
    let a_uu = CsrMatrix::lincomb(&[
        (0.5 / dt, &m.interior),
        (-prm.beta / dt, &m.graddiv),
        (0.5, &conv),
        (-0.5 * prm.nu, &m.lap_d),
        (0.5 / mob, &ttt),
        (1.0, &m.walls),
    ]);
    let a = CsrMatrix::block(&[vec![Some(&a_pp), Some(&a_pu)], vec![Some(&a_up), Some(&a_uu)]]);

    // right-hand sides from the matrix-free operators
    let lap_prev = operators::lap_neumann(phi_nm1);
    let t_uprev = operators::advect_scalar(&prev.u, phi_n);
    let (pm, pn, qm, lp, tu) = (
        phi_nm1.values(),
        phi_n.values(),
        prev.q.values(),
        lap_prev.values(),
        t_uprev.values(),
    );
    let b_phi: Vec<f64> = (0..pm.len())
        .map(|k| {
            s * (pm[k] / (2.0 * dt) - 0.5 * tu[k] + 0.5 * lm * lp[k] + lm / (eta * eta) * phi_sq[k] * pm[k]
                - lm * pn[k] * qm[k])
        })
        .collect();

    let mut b_u = &prev.u * (0.5 / dt);
    b_u.axpy(-prm.beta / dt, &operators::graddiv(&prev.u));
    b_u.axpy(-0.5, &operators::convect_skew(&cur.u, &prev.u));
    b_u.axpy(0.5 * prm.nu, &operators::lap_dirichlet(&prev.u));
    b_u.axpy(-1.0, &operators::grad(&cur.p));
    b_u.axpy(0.5 * s, &operators::advect_scalar_adjoint(phi_n, phi_nm1));
    b_u.axpy(-0.5 / mob, &operators::advect_scalar_adjoint(phi_n, &t_uprev));

    (a, concat(&b_phi, b_u.values()))
}

pub(crate) fn step(st: &Stepper, prev: &State, cur: &State) -> Result<(State, StepInfo), SchemeError> {
    let start = Instant::now();
    prev.check_consistent()?;
    cur.check_consistent()?;
    st.grid.check_same(cur.grid())?;
    st.grid.check_same(prev.grid())?;
    let prm = st.params;
    let g = st.grid;
    let mut info = StepInfo::default();

    let (a, b) = assemble(st, prev, cur);
    let x0 = concat(cur.phi.values(), cur.u.values());
    let x = st.solve("cnlfac coupled system", &a, &b, Some(&x0), false, &mut info)?;
    let nc = g.n_cells();
    let phi = ScalarField::from_vec(g, x[..nc].to_vec())?;
    let u = FaceField::from_vec(g, x[nc..].to_vec())?;

    let q = q_update(prm.eta, &prev.q, &cur.phi, &phi, &prev.phi);
    let p = p_update(prm.alpha, prm.dt, &prev.p, &cur.u);
    let n = cur.n + 1;
    info.seconds = start.elapsed().as_secs_f64();
    Ok((
        State {
            phi,
            q,
            u,
            p,
            r: prm.r_exact(prm.time(n)),
            t: prm.time(n),
            n,
        },
        info,
    ))
}
