#![allow(dead_code)]

use acns_core::grid::{FaceField, Grid, ModelParams, ScalarField, State};
use acns_core::schemes::{residual, SolverSettings, Stepper};
use nalgebra::{DMatrix, DVector};

pub struct Lcg(pub u64);

impl Lcg {
    /// Uniform in [-1, 1).
    pub fn next(&mut self) -> f64 {
        self.0 = self
            .0
            .wrapping_mul(6364136223846793005)
            .wrapping_add(1442695040888963407);
        ((self.0 >> 11) as f64) / ((1u64 << 53) as f64) * 2.0 - 1.0
    }
}

/// Convergence-study parameters on the unit square.
pub fn unit_params(dt: f64, t_final: f64) -> ModelParams {
    ModelParams::new(0.1, 1e-4, 10.0, 0.8, 1.0, 0.25, dt, t_final).unwrap()
}

pub fn stepper(n: usize, prm: ModelParams) -> Stepper {
    Stepper::new(Grid::square(n, 1.0).unwrap(), prm, SolverSettings::default()).unwrap()
}

pub fn random_phi(g: Grid, rng: &mut Lcg, noise: f64) -> ScalarField {
    let base = ScalarField::from_fn(g, |x, y| 0.8 * (2.0 * x).cos() * (3.0 * y).cos());
    let data = base.values().iter().map(|v| v + noise * rng.next()).collect();
    ScalarField::from_vec(g, data).unwrap()
}

pub fn random_u(g: Grid, rng: &mut Lcg, amp: f64) -> FaceField {
    FaceField::from_vec(g, (0..g.n_faces()).map(|_| amp * rng.next()).collect()).unwrap()
}

pub fn random_p(g: Grid, rng: &mut Lcg) -> ScalarField {
    let mut p = ScalarField::from_vec(g, (0..g.n_cells()).map(|_| 0.1 * rng.next()).collect()).unwrap();
    p.remove_mean();
    p
}

/// A random but self-consistent level `n` (q from phi, r near its exact value).
pub fn random_level(st: &Stepper, rng: &mut Lcg, n: usize) -> State {
    let g = *st.grid();
    let prm = *st.params();
    let phi = random_phi(g, rng, 0.05);
    let q = ScalarField::from_vec(
        g,
        phi.values().iter().map(|&v| prm.q_of(v) + 0.5 * rng.next()).collect(),
    )
    .unwrap();
    let t = prm.time(n);
    State {
        phi,
        q,
        u: random_u(g, rng, 0.2),
        p: random_p(g, rng),
        r: prm.r_exact(t) * (1.0 + 0.01 * rng.next()),
        t,
        n,
    }
}

pub fn interior_faces(g: &Grid) -> Vec<usize> {
    (0..g.n_faces()).filter(|&k| !g.is_wall_face(k)).collect()
}

pub fn face_from_interior(g: Grid, idx: &[usize], x: &[f64]) -> FaceField {
    let mut v = vec![0.0; g.n_faces()];
    for (k, &i) in idx.iter().enumerate() {
        v[i] = x[k];
    }
    FaceField::from_vec(g, v).unwrap()
}

pub fn stack(blocks: &[residual::Block], face_idx: &[usize], face_blocks: &[&str]) -> Vec<f64> {
    let mut out = Vec::new();
    for b in blocks {
        if face_blocks.contains(&b.name) {
            out.extend(face_idx.iter().map(|&i| b.values[i]));
        } else {
            out.extend_from_slice(&b.values);
        }
    }
    out
}

/// Solves the affine system `res(x) = 0` by probing it on unit vectors and
/// factoring the dense matrix.
pub fn dense_affine_solve(n: usize, res: impl Fn(&[f64]) -> Vec<f64>) -> Vec<f64> {
    let zero = vec![0.0; n];
    let r0 = res(&zero);
    assert_eq!(r0.len(), n, "square system");
    let mut jac = DMatrix::zeros(n, n);
    let mut e = zero.clone();
    for k in 0..n {
        e[k] = 1.0;
        let rk = res(&e);
        for i in 0..n {
            jac[(i, k)] = rk[i] - r0[i];
        }
        e[k] = 0.0;
    }
    let rhs = -DVector::from_vec(r0);
    jac.lu()
        .solve(&rhs)
        .expect("nonsingular dense system")
        .as_slice()
        .to_vec()
}

pub fn max_diff(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).fold(0.0, |m, (x, y)| m.max((x - y).abs()))
}

/// Dense solve of the coupled CNLFAC equations for `(phi, u)`.
pub fn oracle_cnlfac(st: &Stepper, prev: &State, cur: &State) -> (ScalarField, FaceField) {
    let g = *st.grid();
    let fi = interior_faces(&g);
    let nc = g.n_cells();
    let x = dense_affine_solve(nc + fi.len(), |x| {
        let phi = ScalarField::from_vec(g, x[..nc].to_vec()).unwrap();
        let u = face_from_interior(g, &fi, &x[nc..]);
        stack(&residual::cnlfac(st, prev, cur, &phi, &u), &fi, &["momentum"])
    });
    (
        ScalarField::from_vec(g, x[..nc].to_vec()).unwrap(),
        face_from_interior(g, &fi, &x[nc..]),
    )
}

/// Dense solve of the coupled SAV equations for `(phi, u, r)`.
pub fn oracle_sav(
    st: &Stepper,
    phi_nm2: &ScalarField,
    prev: &State,
    cur: &State,
    explicit: bool,
) -> (ScalarField, FaceField, f64) {
    let g = *st.grid();
    let fi = interior_faces(&g);
    let nc = g.n_cells();
    let nf = fi.len();
    let x = dense_affine_solve(nc + nf + 1, |x| {
        let phi = ScalarField::from_vec(g, x[..nc].to_vec()).unwrap();
        let u = face_from_interior(g, &fi, &x[nc..nc + nf]);
        let b = residual::sav(st, phi_nm2, prev, cur, &phi, &u, x[nc + nf], explicit);
        stack(&b, &fi, &["momentum"])
    });
    (
        ScalarField::from_vec(g, x[..nc].to_vec()).unwrap(),
        face_from_interior(g, &fi, &x[nc..nc + nf]),
        x[nc + nf],
    )
}

/// Stokes saddle problem solved densely, pressure pinned to zero mean.
pub fn oracle_stokes(st: &Stepper, phi0: &ScalarField) -> (FaceField, ScalarField) {
    let g = *st.grid();
    let fi = interior_faces(&g);
    let nf = fi.len();
    let nc = g.n_cells();
    let x = dense_affine_solve(nf + nc, |x| {
        let u = face_from_interior(g, &fi, &x[..nf]);
        let p = ScalarField::from_vec(g, x[nf..].to_vec()).unwrap();
        let mut r = stack(&residual::stokes(st, phi0, &u, &p), &fi, &["momentum"]);
        // the divergence rows sum to zero; swap the last one for the mean
        *r.last_mut().unwrap() = x[nf..].iter().sum::<f64>();
        r
    });
    (
        face_from_interior(g, &fi, &x[..nf]),
        ScalarField::from_vec(g, x[nf..].to_vec()).unwrap(),
    )
}

/// Monolithic Newton solve of the bootstrap equations with a
/// finite-difference Jacobian, pressure pinned to zero mean.
pub fn oracle_bootstrap(st: &Stepper, cur: &State) -> (ScalarField, FaceField, ScalarField) {
    let g = *st.grid();
    let fi = interior_faces(&g);
    let nf = fi.len();
    let nc = g.n_cells();
    let n = 2 * nc + nf;
    let res = |x: &[f64]| {
        let phi = ScalarField::from_vec(g, x[..nc].to_vec()).unwrap();
        let u = face_from_interior(g, &fi, &x[nc..nc + nf]);
        let p = ScalarField::from_vec(g, x[nc + nf..].to_vec()).unwrap();
        let mut r = stack(&residual::bootstrap(st, cur, &phi, &u, &p), &fi, &["momentum"]);
        *r.last_mut().unwrap() = x[nc + nf..].iter().sum::<f64>();
        r
    };
    let mut x: Vec<f64> = cur.phi.values().to_vec();
    x.extend(fi.iter().map(|&i| cur.u.values()[i]));
    x.extend(vec![0.0; nc]);
    for _ in 0..30 {
        let r0 = res(&x);
        let mut jac = DMatrix::zeros(n, n);
        for k in 0..n {
            let h = 1e-6 * (1.0 + x[k].abs());
            let mut xp = x.clone();
            xp[k] += h;
            let mut xm = x.clone();
            xm[k] -= h;
            let (rp, rm) = (res(&xp), res(&xm));
            for i in 0..n {
                jac[(i, k)] = (rp[i] - rm[i]) / (2.0 * h);
            }
        }
        let dx = jac.lu().solve(&(-DVector::from_vec(r0))).expect("nonsingular Jacobian");
        for (a, d) in x.iter_mut().zip(dx.iter()) {
            *a += d;
        }
        if dx.amax() < 1e-14 {
            break;
        }
    }
    (
        ScalarField::from_vec(g, x[..nc].to_vec()).unwrap(),
        face_from_interior(g, &fi, &x[nc..nc + nf]),
        ScalarField::from_vec(g, x[nc + nf..].to_vec()).unwrap(),
    )
}
