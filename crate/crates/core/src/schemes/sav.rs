//! Decoupled SAV steps. Four independent linear solves produce the hat and
//! breve parts of phi and u; a scalar equation fixes the weight `V` that
//! recombines them.

use std::time::Instant;

use crate::grid::{inner_product, FaceField, ScalarField, State};
use crate::linsolve::{CsrMatrix, SparseCholesky};
use crate::operators::{self, matrices};

use super::cnlfac::{p_update, q_update};
use super::{LinearBackend, SchemeError, StepInfo, Stepper};

/// Intermediate quantities of one SAV step.
#[derive(Debug, Clone, PartialEq)]
pub struct SavWork {
    pub phi_hat: ScalarField,
    pub phi_breve: ScalarField,
    pub u_hat: FaceField,
    pub u_breve: FaceField,
    pub mu_hat: ScalarField,
    pub mu_breve: ScalarField,
    /// Lagged chemical potential `mu^n` from the BDF2-type formula.
    pub mu_n: ScalarField,
    pub mu_bar: ScalarField,
    pub v: f64,
    pub a: f64,
    pub b: f64,
}

/// `mu^n = -(1/M) ((3 phi^n - 4 phi^{n-1} + phi^{n-2}) / (2 dt) + r^n / exp(-t^n/T) u^n . grad phi^n)`
pub fn lagged_mu(st: &Stepper, phi_nm2: &ScalarField, prev: &State, cur: &State) -> ScalarField {
    let prm = st.params;
    let e = (-cur.t / prm.t_final).exp();
    let tu = operators::advect_scalar(&cur.u, &cur.phi);
    let (p0, p1, p2, t) = (cur.phi.values(), prev.phi.values(), phi_nm2.values(), tu.values());
    let data = (0..p0.len())
        .map(|k| -((3.0 * p0[k] - 4.0 * p1[k] + p2[k]) / (2.0 * prm.dt) + cur.r / e * t[k]) / prm.mobility)
        .collect();
    ScalarField::from_vec(st.grid, data).expect("same grid")
}

impl Stepper {
    /// Velocity operator shared by the explicit-convection subproblems; fixed
    /// for the whole run, so it is assembled (and factored) once.
    fn ect_velocity(&self) -> Result<&(CsrMatrix, Option<SparseCholesky>), SchemeError> {
        if let Some(v) = self.ect_velocity.get() {
            return Ok(v);
        }
        let prm = self.params;
        let m = &self.mats;
        let a = CsrMatrix::lincomb(&[
            (0.5 / prm.dt, &m.interior),
            (-prm.beta / prm.dt, &m.graddiv),
            (-0.5 * prm.nu, &m.lap_d),
            (1.0, &m.walls),
        ]);
        let f = match self.settings.backend {
            LinearBackend::Direct => Some(SparseCholesky::factor(&a).map_err(|source| SchemeError::Factor {
                what: "ect velocity",
                source,
            })?),
            LinearBackend::Krylov => None,
        };
        Ok(self.ect_velocity.get_or_init(|| (a, f)))
    }
}

pub(crate) fn step(
    st: &Stepper,
    phi_nm2: &ScalarField,
    prev: &State,
    cur: &State,
    explicit_convection: bool,
) -> Result<(State, StepInfo), SchemeError> {
    let start = Instant::now();
    for s in [prev, cur] {
        s.check_consistent()?;
        st.grid.check_same(s.grid())?;
    }
    st.grid.check_same(phi_nm2.grid())?;
    let prm = st.params;
    let g = st.grid;
    let m = &st.mats;
    let (dt, mob, eta) = (prm.dt, prm.mobility, prm.eta);
    let lm = prm.lambda * mob;
    let mut info = StepInfo::default();
    let e = (-cur.t / prm.t_final).exp();

    // Steps 1-2: phase-field subproblems, one shared SPD matrix
    let phi_n = &cur.phi;
    let phi_nm1 = &prev.phi;
    let phi_sq: Vec<f64> = phi_n.values().iter().map(|v| v * v).collect();
    let diag: Vec<f64> = phi_sq.iter().map(|v| 0.5 / dt + lm / (eta * eta) * v).collect();
    let h = CsrMatrix::lincomb(&[(1.0, &CsrMatrix::diagonal(&diag)), (-0.5 * lm, &m.lap_n)]);
    let lap_prev = operators::lap_neumann(phi_nm1);
    let tu = operators::advect_scalar(&cur.u, phi_n);
    let (pm, pn, qm, lp) = (phi_nm1.values(), phi_n.values(), prev.q.values(), lap_prev.values());
    let b1: Vec<f64> = (0..pm.len())
        .map(|k| pm[k] / (2.0 * dt) + 0.5 * lm * lp[k] + lm / (eta * eta) * phi_sq[k] * pm[k] - lm * pn[k] * qm[k])
        .collect();
    let b2: Vec<f64> = tu.values().iter().map(|v| -v).collect();
    let ph = st.prepare("sav phase subproblems", &h, true)?;
    let phi_hat = st.solve_prepared("sav phi hat", &ph, &b1, Some(pn), &mut info)?;
    let phi_breve = st.solve_prepared("sav phi breve", &ph, &b2, None, &mut info)?;
    drop(ph);
    let phi_hat = ScalarField::from_vec(g, phi_hat)?;
    let phi_breve = ScalarField::from_vec(g, phi_breve)?;

    let mu_hat = phi_hat.zip_map(phi_nm1, |a, b| -(a - b) / (2.0 * dt * mob));
    let mu_breve = phi_breve.zip_map(&tu, |a, t| -(a / (2.0 * dt) + t) / mob);
    let mu_n = lagged_mu(st, phi_nm2, prev, cur);
    let stress = operators::mu_grad_phi(&mu_n, phi_n);
    // the scalar equation pairs the velocity with mu through the transport form
    let stress_work = operators::advect_scalar_adjoint(phi_n, &mu_n);

    // Step 3: velocity subproblems
    let mut b3 = &prev.u * (0.5 / dt);
    b3.axpy(-prm.beta / dt, &operators::graddiv(&prev.u));
    b3.axpy(0.5 * prm.nu, &operators::lap_dirichlet(&prev.u));
    b3.axpy(-1.0, &operators::grad(&cur.p));
    let mut b4 = stress.clone();
    let convection = if explicit_convection {
        let c = operators::convect_skew(&cur.u, &cur.u);
        b4.axpy(-1.0, &c);
        Some(c)
    } else {
        b3.axpy(-0.5, &operators::convect_skew(&cur.u, &prev.u));
        None
    };
    let (u_hat, u_breve) = if explicit_convection {
        let (a, fact) = st.ect_velocity()?;
        match fact {
            Some(f) => {
                let t0 = Instant::now();
                let x3 = f.solve(b3.values());
                let x4 = f.solve(b4.values());
                for (what, x, b) in [("sav u hat", &x3, &b3), ("sav u breve", &x4, &b4)] {
                    let rep = crate::linsolve::SolveReport::direct(a, x, b.values(), st.settings.tol, t0);
                    if !rep.converged {
                        return Err(SchemeError::Solve {
                            what,
                            residual: rep.residual,
                            iterations: 1,
                        });
                    }
                    info.solves.push((what, rep));
                }
                (x3, x4)
            }
            None => {
                let pv = st.prepare("sav velocity subproblems", a, true)?;
                let x3 = st.solve_prepared("sav u hat", &pv, b3.values(), Some(cur.u.values()), &mut info)?;
                let x4 = st.solve_prepared("sav u breve", &pv, b4.values(), None, &mut info)?;
                (x3, x4)
            }
        }
    } else {
        let conv = matrices::convect_skew(&cur.u);
        let a = CsrMatrix::lincomb(&[
            (0.5 / dt, &m.interior),
            (-prm.beta / dt, &m.graddiv),
            (0.5, &conv),
            (-0.5 * prm.nu, &m.lap_d),
            (1.0, &m.walls),
        ]);
        let pv = st.prepare("sav velocity subproblems", &a, false)?;
        let x3 = st.solve_prepared("sav u hat", &pv, b3.values(), Some(cur.u.values()), &mut info)?;
        let x4 = st.solve_prepared("sav u breve", &pv, b4.values(), None, &mut info)?;
        (x3, x4)
    };
    let u_hat = FaceField::from_vec(g, u_hat)?;
    let u_breve = FaceField::from_vec(g, u_breve)?;

    // Step 4: scalar equation for V
    let u_hat_avg = &(&u_hat + &prev.u) * 0.5;
    let u_breve_half = &u_breve * 0.5;
    let mut a = (1.0 / dt + 1.0 / prm.t_final) * e * e - inner_product(&tu, &mu_breve)?
        + inner_product(&stress_work, &u_breve_half)?;
    let mut b = -prev.r / dt * e - inner_product(&tu, &mu_hat)? + inner_product(&stress_work, &u_hat_avg)?;
    if let Some(c) = &convection {
        a -= inner_product(c, &u_breve_half)?;
        b -= inner_product(c, &u_hat_avg)?;
    }
    if !(a > 0.0) {
        return Err(SchemeError::NonPositiveA(a));
    }
    let v = -b / a;

    // Step 5: recombination
    let mut phi = phi_hat.clone();
    phi.axpy(v, &phi_breve);
    let mut u = u_hat.clone();
    u.axpy(v, &u_breve);
    let r = 2.0 * e * v - prev.r;
    let q = q_update(eta, &prev.q, phi_n, &phi, phi_nm1);
    let mu_bar = phi.zip_map(phi_nm1, |a, b| (a - b) / (2.0 * dt));
    let mu_bar = mu_bar.zip_map(&tu, |d, t| -(d + v * t) / mob);

    // Step 6: pressure
    let p = p_update(prm.alpha, dt, &prev.p, &cur.u);

    let n = cur.n + 1;
    info.sav = Some(SavWork {
        phi_hat,
        phi_breve,
        u_hat,
        u_breve,
        mu_hat,
        mu_breve,
        mu_n,
        mu_bar,
        v,
        a,
        b,
    });
    info.seconds = start.elapsed().as_secs_f64();
    Ok((
        State {
            phi,
            q,
            u,
            p,
            r,
            t: prm.time(n),
            n,
        },
        info,
    ))
}
