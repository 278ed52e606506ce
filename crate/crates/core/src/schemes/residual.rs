//! Matrix-free residuals of the un-split scheme equations. They take the
//! candidate new level as plain arguments, so they serve both as a check on
//! the split solvers and as the affine maps behind dense oracle solves.

use crate::grid::{inner_product, FaceField, ScalarField, State};
use crate::operators;

use super::bootstrap::f0;
use super::sav::lagged_mu;
use super::Stepper;

/// One block of a residual: its values and the sum of the norms of the
/// terms that produced it.
#[derive(Debug, Clone, PartialEq)]
pub struct Block {
    pub name: &'static str,
    pub values: Vec<f64>,
    pub scale: f64,
}

impl Block {
    fn new(name: &'static str, terms: &[&[f64]], signs: &[f64]) -> Self {
        let n = terms[0].len();
        let mut values = vec![0.0; n];
        let mut scale = 0.0;
        for (t, s) in terms.iter().zip(signs) {
            for (v, x) in values.iter_mut().zip(t.iter()) {
                *v += s * x;
            }
            scale += t.iter().map(|x| x * x).sum::<f64>().sqrt();
        }
        Block { name, values, scale }
    }

    pub fn norm(&self) -> f64 {
        self.values.iter().map(|x| x * x).sum::<f64>().sqrt()
    }

    /// Residual norm relative to the term scale.
    pub fn relative(&self) -> f64 {
        if self.scale == 0.0 {
            self.norm()
        } else {
            self.norm() / self.scale
        }
    }
}

/// Worst relative residual over blocks.
pub fn worst(blocks: &[Block]) -> f64 {
    blocks.iter().map(Block::relative).fold(0.0, f64::max)
}

fn cell(st: &Stepper, v: Vec<f64>) -> ScalarField {
    ScalarField::from_vec(st.grid, v).expect("cell vector")
}

/// Coupled CNLFAC equations (phase equation with q eliminated, momentum).
pub fn cnlfac(st: &Stepper, prev: &State, cur: &State, phi: &ScalarField, u: &FaceField) -> Vec<Block> {
    let prm = st.params;
    let (dt, mob, eta) = (prm.dt, prm.mobility, prm.eta);
    let lm = prm.lambda * mob;
    let u_avg = &(u + &prev.u) * 0.5;
    let dphi = &(phi - &prev.phi) * (0.5 / dt);
    let transport = operators::advect_scalar(&u_avg, &cur.phi);
    let phidot = &dphi + &transport;
    let lap = &operators::lap_neumann(&(phi + &prev.phi)) * (-0.5 * lm);
    let (pn, pp, pm, qm) = (cur.phi.values(), phi.values(), prev.phi.values(), prev.q.values());
    let react = cell(
        st,
        (0..pn.len())
            .map(|k| lm * pn[k] * (pn[k] * (pp[k] - pm[k]) / (eta * eta) + qm[k]))
            .collect(),
    );
    let phase = Block::new(
        "phase",
        &[dphi.values(), transport.values(), lap.values(), react.values()],
        &[1.0, 1.0, 1.0, 1.0],
    );

    let du = &(u - &prev.u) * (0.5 / dt);
    let gd = &operators::graddiv(&(u - &prev.u)) * (-prm.beta / dt);
    let conv = operators::convect_skew(&cur.u, &u_avg);
    let visc = &operators::lap_dirichlet(&u_avg) * (-prm.nu);
    let gp = operators::grad(&cur.p);
    let stress = &operators::advect_scalar_adjoint(&cur.phi, &phidot) * (1.0 / mob);
    let momentum = Block::new(
        "momentum",
        &[
            du.values(),
            gd.values(),
            conv.values(),
            visc.values(),
            gp.values(),
            stress.values(),
        ],
        &[1.0; 6],
    );
    vec![phase, momentum]
}

/// Coupled SAV equations in the unknowns `(phi, u, r)`: phase equation with
/// `mu_bar` written in terms of `phi`, momentum, and the `r` equation.
pub fn sav(
    st: &Stepper,
    phi_nm2: &ScalarField,
    prev: &State,
    cur: &State,
    phi: &ScalarField,
    u: &FaceField,
    r: f64,
    explicit_convection: bool,
) -> Vec<Block> {
    let prm = st.params;
    let (dt, mob, eta) = (prm.dt, prm.mobility, prm.eta);
    let lam = prm.lambda;
    let e = (-cur.t / prm.t_final).exp();
    let v = (r + prev.r) / (2.0 * e);

    let lap = &operators::lap_neumann(&(phi + &prev.phi)) * (-0.5 * lam);
    let (pn, pp, pm, qm) = (cur.phi.values(), phi.values(), prev.phi.values(), prev.q.values());
    let react = cell(
        st,
        (0..pn.len())
            .map(|k| lam * pn[k] * (qm[k] + pn[k] * (pp[k] - pm[k]) / (eta * eta)))
            .collect(),
    );
    let mu_bar = &lap + &react;
    let tu = operators::advect_scalar(&cur.u, &cur.phi);
    let dphi = &(phi - &prev.phi) * (0.5 / dt);
    let phase = Block::new(
        "phase",
        &[
            dphi.values(),
            (&tu * v).values(),
            (&lap * mob).values(),
            (&react * mob).values(),
        ],
        &[1.0; 4],
    );

    let mu_n = lagged_mu(st, phi_nm2, prev, cur);
    let stress = operators::mu_grad_phi(&mu_n, &cur.phi);
    let u_avg = &(u + &prev.u) * 0.5;
    let du = &(u - &prev.u) * (0.5 / dt);
    let gd = &operators::graddiv(&(u - &prev.u)) * (-prm.beta / dt);
    let visc = &operators::lap_dirichlet(&u_avg) * (-prm.nu);
    let gp = operators::grad(&cur.p);
    let explicit = operators::convect_skew(&cur.u, &cur.u);
    let conv = if explicit_convection {
        &explicit * v
    } else {
        operators::convect_skew(&cur.u, &u_avg)
    };
    let momentum = Block::new(
        "momentum",
        &[
            du.values(),
            gd.values(),
            conv.values(),
            visc.values(),
            gp.values(),
            (&stress * v).values(),
        ],
        &[1.0, 1.0, 1.0, 1.0, 1.0, -1.0],
    );

    let ip = |a: &ScalarField, b: &ScalarField| inner_product(a, b).expect("same grid");
    let ipf = |a: &FaceField, b: &FaceField| inner_product(a, b).expect("same grid");
    let drdt = (r - prev.r) / (2.0 * dt);
    let decay = (r + prev.r) / (2.0 * prm.t_final);
    let phase_work = ip(&tu, &mu_bar) / e;
    let stress_work = ip(&operators::advect_scalar(&u_avg, &cur.phi), &mu_n) / e;
    let conv_work = if explicit_convection {
        ipf(&explicit, &u_avg) / e
    } else {
        0.0
    };
    let aux = Block::new(
        "auxiliary",
        &[&[drdt], &[decay], &[phase_work], &[stress_work], &[conv_work]],
        &[1.0, 1.0, -1.0, 1.0, -1.0],
    );
    vec![phase, momentum, aux]
}

/// Bootstrap equations in the unknowns `(phi, u, p)`.
pub fn bootstrap(st: &Stepper, cur: &State, phi: &ScalarField, u: &FaceField, p: &ScalarField) -> Vec<Block> {
    let prm = st.params;
    let (dt, mob, eta) = (prm.dt, prm.mobility, prm.eta);
    let lm = prm.lambda * mob;
    let dphi = &(phi - &cur.phi) * (1.0 / dt);
    let transport = operators::advect_scalar(u, &cur.phi);
    let phidot = &dphi + &transport;
    let lap = &operators::lap_neumann(phi) * (-lm);
    let bulk = phi.zip_map(&cur.phi, |a, b| lm * f0(a, b, eta));
    let phase = Block::new(
        "phase",
        &[dphi.values(), transport.values(), lap.values(), bulk.values()],
        &[1.0; 4],
    );
    let du = &(u - &cur.u) * (1.0 / dt);
    let conv = operators::convect_skew(&cur.u, u);
    let visc = &operators::lap_dirichlet(u) * (-prm.nu);
    let gp = operators::grad(p);
    let stress = &operators::advect_scalar_adjoint(&cur.phi, &phidot) * (1.0 / mob);
    let momentum = Block::new(
        "momentum",
        &[du.values(), conv.values(), visc.values(), gp.values(), stress.values()],
        &[1.0; 5],
    );
    let d = operators::div(u);
    let scale_u: Vec<f64> = u.values().iter().map(|x| x / st.grid.hx.min(st.grid.hy)).collect();
    let mut continuity = Block::new("continuity", &[d.values()], &[1.0]);
    continuity.scale = scale_u.iter().map(|x| x * x).sum::<f64>().sqrt();
    vec![phase, momentum, continuity]
}

/// Steady Stokes equations `-nu lap u + grad p = mu0 grad phi0`, `div u = 0`.
pub fn stokes(st: &Stepper, phi0: &ScalarField, u: &FaceField, p: &ScalarField) -> Vec<Block> {
    let mu0 = super::stokes::chemical_potential(st, phi0);
    let force = operators::mu_grad_phi(&mu0, phi0);
    let visc = &operators::lap_dirichlet(u) * (-st.params.nu);
    let gp = operators::grad(p);
    let momentum = Block::new(
        "momentum",
        &[visc.values(), gp.values(), force.values()],
        &[1.0, 1.0, -1.0],
    );
    let d = operators::div(u);
    let continuity = Block::new("continuity", &[d.values()], &[1.0]);
    vec![momentum, continuity]
}
