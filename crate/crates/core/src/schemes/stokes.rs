//! Velocity–pressure saddle problems, solved by augmented-Lagrangian Uzawa
//! iteration on the grad-div penalized momentum operator.

use crate::grid::{norm, FaceField, ScalarField};
use crate::linsolve::{CsrMatrix, SparseCholesky, SparseLu};
use crate::operators;

use super::{SchemeError, Stepper};

/// Target and acceptance thresholds for `||div u||` (discrete L2).
const DIV_TARGET: f64 = 1e-12;
const DIV_ACCEPT: f64 = 1e-9;
const MAX_SWEEPS: usize = 100;

/// Solves `K u + G p = f`, `D u = 0` with `p` of zero mean. `k` is the
/// momentum operator on interior faces (wall rows empty). Returns the
/// velocity, the pressure and the number of Uzawa sweeps.
pub(crate) fn augmented_lagrangian(
    st: &Stepper,
    what: &'static str,
    k: &CsrMatrix,
    spd: bool,
    gamma: f64,
    f: &FaceField,
    p0: &ScalarField,
) -> Result<(FaceField, ScalarField, usize), SchemeError> {
    let g = st.grid;
    let m = &st.mats;
    let kg = CsrMatrix::lincomb(&[(1.0, k), (-gamma, &m.graddiv), (1.0, &m.walls)]);
    enum Fact {
        C(SparseCholesky),
        L(SparseLu),
    }
    let fact = if spd {
        Fact::C(SparseCholesky::factor(&kg).map_err(|source| SchemeError::Factor { what, source })?)
    } else {
        Fact::L(SparseLu::factor(&kg).map_err(|source| SchemeError::Factor { what, source })?)
    };
    let mut p = p0.clone();
    p.remove_mean();
    let mut trace = Vec::new();
    for sweep in 1..=MAX_SWEEPS {
        let mut rhs = f.clone();
        rhs.axpy(-1.0, &operators::grad(&p));
        rhs.enforce_walls();
        let x = match &fact {
            Fact::C(c) => c.solve(rhs.values()),
            Fact::L(l) => l.solve(rhs.values()),
        };
        let u = FaceField::from_vec(g, x)?;
        let d = operators::div(&u);
        p.axpy(-gamma, &d);
        p.remove_mean();
        let dn = norm(&d);
        trace.push(dn);
        if !dn.is_finite() {
            return Err(SchemeError::NonFinite);
        }
        let stalled = trace.len() >= 3 && dn > 0.5 * trace[trace.len() - 2];
        if dn <= DIV_TARGET || (stalled && dn <= DIV_ACCEPT) {
            return Ok((u, p, sweep));
        }
        if stalled && trace.len() > 10 {
            break;
        }
    }
    Err(SchemeError::Saddle { trace })
}

/// Chemical potential `lambda (-lap phi + f(phi))` with the cubic bulk force.
pub fn chemical_potential(st: &Stepper, phi: &ScalarField) -> ScalarField {
    let prm = st.params;
    let lap = operators::lap_neumann(phi);
    phi.zip_map(&lap, |v, l| prm.lambda * (-l + prm.bulk_force(v)))
}

pub(crate) fn stokes_init(st: &Stepper, phi0: &ScalarField) -> Result<(FaceField, ScalarField), SchemeError> {
    st.grid.check_same(phi0.grid())?;
    let mu0 = chemical_potential(st, phi0);
    let force = operators::mu_grad_phi(&mu0, phi0);
    let k = st.mats.lap_d.scaled(-st.params.nu);
    let gamma = 1e4 * st.params.nu;
    let (u, p, sweeps) = augmented_lagrangian(
        st,
        "stokes initializer",
        &k,
        true,
        gamma,
        &force,
        &ScalarField::zeros(st.grid),
    )?;
    log::debug!("stokes initializer converged in {sweeps} sweeps");
    Ok((u, p))
}
