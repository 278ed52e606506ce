//! Two-level, first-order implicit scheme used to produce the extra back
//! levels the multistep schemes need. The nonlinear coupling is resolved by
//! Picard iteration between a Newton solve for phi (velocity frozen) and a
//! saddle solve for (u, p) (phi frozen).

use std::time::Instant;

use crate::grid::{norm, ScalarField, State};
use crate::linsolve::CsrMatrix;
use crate::operators::{self, matrices};

use super::stokes::augmented_lagrangian;
use super::{SchemeError, StepInfo, Stepper};

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct BootstrapOptions {
    /// Stop when `||u_new - u_old|| < picard_tol`.
    pub picard_tol: f64,
    pub picard_max: usize,
    pub newton_tol: f64,
    pub newton_max: usize,
}

impl Default for BootstrapOptions {
    fn default() -> Self {
        BootstrapOptions {
            picard_tol: 1e-8,
            picard_max: 50,
            newton_tol: 1e-11,
            newton_max: 30,
        }
    }
}

/// `f0(x, y) = (x^2 + y^2)/2 * (x + y)/2 / eta^2 - y / eta^2`, the
/// energy-consistent two-level bulk force.
pub fn f0(x: f64, y: f64, eta: f64) -> f64 {
    ((x * x + y * y) * 0.5 * (x + y) * 0.5 - y) / (eta * eta)
}

/// `d f0 / dx`, nonnegative everywhere.
pub fn f0_dx(x: f64, y: f64, eta: f64) -> f64 {
    (3.0 * x * x + 2.0 * x * y + y * y) / (4.0 * eta * eta)
}

fn newton_phi(
    st: &Stepper,
    cur: &State,
    transport: &ScalarField,
    guess: &ScalarField,
    info: &mut StepInfo,
) -> Result<ScalarField, SchemeError> {
    let prm = st.params;
    let opts = st.bootstrap;
    let (dt, lm, eta) = (prm.dt, prm.lambda * prm.mobility, prm.eta);
    let n = st.grid.n_cells();
    let mut phi = guess.clone();
    let mut trace = Vec::new();
    for _ in 0..opts.newton_max {
        let lap = operators::lap_neumann(&phi);
        let (pv, pn, lv, tv) = (phi.values(), cur.phi.values(), lap.values(), transport.values());
        let res: Vec<f64> = (0..n)
            .map(|k| (pv[k] - pn[k]) / dt + tv[k] - lm * lv[k] + lm * f0(pv[k], pn[k], eta))
            .collect();
        let diag: Vec<f64> = (0..n).map(|k| 1.0 / dt + lm * f0_dx(pv[k], pn[k], eta)).collect();
        let jac = CsrMatrix::lincomb(&[(1.0, &CsrMatrix::diagonal(&diag)), (-lm, &st.mats.lap_n)]);
        let rhs: Vec<f64> = res.iter().map(|v| -v).collect();
        let delta = st.solve("bootstrap newton", &jac, &rhs, None, true, info)?;
        let dmax = delta.iter().fold(0.0f64, |m, v| m.max(v.abs()));
        trace.push(dmax);
        phi.values_mut().iter_mut().zip(&delta).for_each(|(p, d)| *p += d);
        if dmax <= opts.newton_tol * (1.0 + phi.max_abs()) {
            return Ok(phi);
        }
    }
    Err(SchemeError::Newton { trace })
}

pub(crate) fn step(st: &Stepper, cur: &State) -> Result<(State, StepInfo), SchemeError> {
    let start = Instant::now();
    cur.check_consistent()?;
    st.grid.check_same(cur.grid())?;
    let prm = st.params;
    let dt = prm.dt;
    let m = &st.mats;
    let mut info = StepInfo::default();

    let t_mat = matrices::advect(&cur.phi);
    let ttt = t_mat.transpose().matmul(&t_mat);
    let conv = matrices::convect_skew(&cur.u);
    let k = CsrMatrix::lincomb(&[
        (1.0 / dt, &m.interior),
        (1.0, &conv),
        (-prm.nu, &m.lap_d),
        (1.0 / prm.mobility, &ttt),
    ]);
    let gamma = 1e4 * prm.nu;

    let mut u_temp = cur.u.clone();
    let mut phi = cur.phi.clone();
    let mut p = cur.p.clone();
    let mut trace = Vec::new();
    let mut converged = false;
    for it in 1..=st.bootstrap.picard_max {
        let transport = operators::advect_scalar(&u_temp, &cur.phi);
        phi = newton_phi(st, cur, &transport, &phi, &mut info)?;
        let dphi = phi.zip_map(&cur.phi, |a, b| (a - b) / dt);
        let mut f = &cur.u * (1.0 / dt);
        f.axpy(-1.0 / prm.mobility, &operators::advect_scalar_adjoint(&cur.phi, &dphi));
        let (u, p_new, _) = augmented_lagrangian(st, "bootstrap velocity", &k, false, gamma, &f, &p)?;
        p = p_new;
        let inc = norm(&(&u - &u_temp));
        trace.push(inc);
        u_temp = u;
        info.picard_iterations = it;
        if inc < st.bootstrap.picard_tol {
            converged = true;
            break;
        }
    }
    if !converged {
        return Err(SchemeError::Picard { trace });
    }
    let n = cur.n + 1;
    let t = prm.time(n);
    let q = phi.map(|v| prm.q_of(v));
    info.seconds = start.elapsed().as_secs_f64();
    debug_assert!(u_temp.walls_are_zero());
    Ok((
        State {
            phi,
            q,
            u: u_temp,
            p,
            r: prm.r_exact(t),
            t,
            n,
        },
        info,
    ))
}
