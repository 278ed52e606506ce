//! Energy and stability quantities, and Cauchy differences between
//! successive refinement levels.

use serde::Serialize;
use thiserror::Error;

use crate::grid::{inner_product, norm, FaceField, Grid, ModelParams, ScalarField, State};
use crate::operators;
use crate::schemes::StepInfo;

#[derive(Debug, Error)]
pub enum DiagnosticsError {
    #[error("grid {fine:?} is not a 2x refinement of {coarse:?}")]
    NotNested { coarse: Grid, fine: Grid },
    #[error("states are at different times ({0} vs {1})")]
    TimeMismatch(f64, f64),
}

/// Components of the total energy
/// `W = 1/2 ||u||^2 + lambda (1/2 ||grad phi||^2 + eta^2/4 ||q||^2)`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct EnergyParts {
    /// `||u||^2`
    pub u_sq: f64,
    pub grad_phi_sq: f64,
    pub q_sq: f64,
    /// `||div u||`
    pub div_u: f64,
    pub w: f64,
}

pub fn energy_parts(state: &State, params: &ModelParams) -> EnergyParts {
    let u_sq = norm(&state.u).powi(2);
    let grad_phi_sq = norm(&operators::grad(&state.phi)).powi(2);
    let q_sq = norm(&state.q).powi(2);
    let w = 0.5 * u_sq + params.lambda * (0.5 * grad_phi_sq + 0.25 * params.eta * params.eta * q_sq);
    EnergyParts {
        u_sq,
        grad_phi_sq,
        q_sq,
        div_u: norm(&operators::div(&state.u)),
        w,
    }
}

/// Total energy in the `q` form evolved by the schemes.
pub fn total_energy(state: &State, params: &ModelParams) -> f64 {
    energy_parts(state, params).w
}

/// Total energy with the double-well potential `(phi^2 - 1)^2 / (4 eta^2)`
/// evaluated from `phi` directly.
pub fn free_energy(state: &State, params: &ModelParams) -> f64 {
    let e2 = params.eta * params.eta;
    let well = state.phi.map(|v| (v * v - 1.0).powi(2) / (4.0 * e2));
    let area = state.grid().cell_area();
    let bulk: f64 = well.values().iter().sum::<f64>() * area;
    0.5 * norm(&state.u).powi(2) + params.lambda * (0.5 * norm(&operators::grad(&state.phi)).powi(2) + bulk)
}

/// One line of `energy.csv`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct DiagnosticsRow {
    pub n: usize,
    pub t: f64,
    #[serde(rename = "W")]
    pub w: f64,
    /// `||u||^2`
    pub kinetic: f64,
    pub grad_phi_sq: f64,
    pub q_sq: f64,
    pub div_u: f64,
    pub r: f64,
    /// SAV weight of the step; 1 for the other schemes.
    #[serde(rename = "V")]
    pub v: f64,
    pub step_seconds: f64,
}

impl DiagnosticsRow {
    pub const HEADER: &'static str = "n,t,W,kinetic,grad_phi_sq,q_sq,div_u,r,V,step_seconds";

    pub fn new(state: &State, params: &ModelParams, info: &StepInfo) -> Self {
        let e = energy_parts(state, params);
        DiagnosticsRow {
            n: state.n,
            t: state.t,
            w: e.w,
            kinetic: e.u_sq,
            grad_phi_sq: e.grad_phi_sq,
            q_sq: e.q_sq,
            div_u: e.div_u,
            r: state.r,
            v: info.sav.as_ref().map_or(1.0, |s| s.v),
            step_seconds: info.seconds,
        }
    }

    pub fn csv_line(&self) -> String {
        format!(
            "{},{:.17e},{:.17e},{:.17e},{:.17e},{:.17e},{:.17e},{:.17e},{:.17e},{:.6e}",
            self.n,
            self.t,
            self.w,
            self.kinetic,
            self.grad_phi_sq,
            self.q_sq,
            self.div_u,
            self.r,
            self.v,
            self.step_seconds
        )
    }

    pub fn is_finite(&self) -> bool {
        [
            self.t,
            self.w,
            self.kinetic,
            self.grad_phi_sq,
            self.q_sq,
            self.div_u,
            self.r,
            self.v,
        ]
        .iter()
        .all(|v| v.is_finite())
    }
}

/// Two-level quantity controlled by the stability estimates:
/// `lambda/4 (|grad phi|^2 + ..) + lambda eta^2/8 (|q|^2 + ..) + 1/4 (|u|^2 + ..)`,
/// plus `1/4 (r^2 + ..)` for the SAV schemes.
pub fn stability_energy(older: &State, newer: &State, params: &ModelParams, sav: bool) -> f64 {
    let one = |s: &State| {
        let e = energy_parts(s, params);
        let mut v = 0.25 * params.lambda * e.grad_phi_sq
            + 0.125 * params.lambda * params.eta * params.eta * e.q_sq
            + 0.25 * e.u_sq;
        if sav {
            v += 0.25 * s.r * s.r;
        }
        v
    };
    one(older) + one(newer)
}

/// Right-hand side of the stability estimates from the two starting levels
/// (levels 0, 1 for CNLFAC and 1, 2 for the SAV schemes). The pressure cross
/// terms can be negative and are kept as they are.
pub fn stability_bound(older: &State, newer: &State, params: &ModelParams, sav: bool) -> f64 {
    let (dt, beta, alpha) = (params.dt, params.beta, params.alpha);
    let div_old = operators::div(&older.u);
    let div_new = operators::div(&newer.u);
    let ip = |a: &ScalarField, b: &ScalarField| inner_product(a, b).expect("same grid");
    stability_energy(older, newer, params, sav)
        + 0.5 * beta * (ip(&div_old, &div_old) + ip(&div_new, &div_new))
        + 0.5 * alpha * dt * dt * (ip(&older.p, &older.p) + ip(&newer.p, &newer.p))
        + 0.5 * dt * ip(&newer.p, &div_old)
        - 0.5 * dt * ip(&older.p, &div_new)
}

/// Which norm a Cauchy difference is measured in.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum CauchyNorm {
    /// `||grad e||` of the phase field difference.
    GradPhi,
    /// Discrete H1 seminorm of the velocity difference.
    GradU,
    /// L2 norm of the mean-free pressure difference.
    PressureL2,
}

fn check_nested(coarse: &Grid, fine: &Grid) -> Result<(), DiagnosticsError> {
    if fine.nx == 2 * coarse.nx
        && fine.ny == 2 * coarse.ny
        && (fine.lx - coarse.lx).abs() <= 1e-12 * coarse.lx
        && (fine.ly - coarse.ly).abs() <= 1e-12 * coarse.ly
    {
        Ok(())
    } else {
        Err(DiagnosticsError::NotNested {
            coarse: *coarse,
            fine: *fine,
        })
    }
}

/// Sample coordinates along one axis: cell centres when `staggered`,
/// otherwise the nodes including both ends.
fn axis(n: usize, h: f64, staggered: bool) -> Vec<(f64, Option<usize>)> {
    if staggered {
        (0..n).map(|i| ((i as f64 + 0.5) * h, Some(i))).collect()
    } else {
        (0..=n).map(|i| (i as f64 * h, Some(i))).collect()
    }
}

/// Cubic Lagrange weights at `x` from the four nearest samples, shifted
/// one-sided near the ends.
fn weights(samples: &[(f64, Option<usize>)], x: f64) -> [(Option<usize>, f64); 4] {
    let k = samples.partition_point(|&(p, _)| p <= x);
    let start = k.saturating_sub(2).min(samples.len() - 4);
    let pts = &samples[start..start + 4];
    let mut out = [(None, 0.0); 4];
    for (a, &(pa, idx)) in pts.iter().enumerate() {
        let mut w = 1.0;
        for (b, &(pb, _)) in pts.iter().enumerate() {
            if a != b {
                w *= (x - pb) / (pa - pb);
            }
        }
        out[a] = (idx, w);
    }
    out
}

fn interpolate(
    at: impl Fn(usize, usize) -> f64,
    xs: &[(f64, Option<usize>)],
    ys: &[(f64, Option<usize>)],
    x: f64,
    y: f64,
) -> f64 {
    let wy = weights(ys, y);
    let mut v = 0.0;
    for (i, a) in weights(xs, x) {
        let Some(i) = i else { continue };
        for &(j, b) in &wy {
            if let Some(j) = j {
                v += a * b * at(i, j);
            }
        }
    }
    v
}

/// Prolongation of a cell field to the 2x refined grid by tensor-product
/// cubic interpolation (one-sided near the boundary).
pub fn prolong_scalar(coarse: &ScalarField, fine: &Grid) -> Result<ScalarField, DiagnosticsError> {
    let c = *coarse.grid();
    check_nested(&c, fine)?;
    let xs = axis(c.nx, c.hx, true);
    let ys = axis(c.ny, c.hy, true);
    let mut data = vec![0.0; fine.n_cells()];
    for j in 0..fine.ny {
        for i in 0..fine.nx {
            let (x, y) = fine.cell_center(i, j);
            data[fine.cell(i, j)] = interpolate(|a, b| coarse.at(a, b), &xs, &ys, x, y);
        }
    }
    Ok(ScalarField::from_vec(*fine, data).expect("fine grid"))
}

/// Prolongation of each face component to the 2x refined grid. Tangentially
/// only stored values enter the stencil, so the discretization error of the
/// coarse solution is carried over smoothly up to the wall.
pub fn prolong_face(coarse: &FaceField, fine: &Grid) -> Result<FaceField, DiagnosticsError> {
    let c = *coarse.grid();
    check_nested(&c, fine)?;
    let mut data = vec![0.0; fine.n_faces()];
    let (xs, ys) = (axis(c.nx, c.hx, false), axis(c.ny, c.hy, true));
    for j in 0..fine.ny {
        for i in 0..=fine.nx {
            let (x, y) = fine.fx_position(i, j);
            data[fine.fx(i, j)] = interpolate(|a, b| coarse.ux(a, b), &xs, &ys, x, y);
        }
    }
    let (xs, ys) = (axis(c.nx, c.hx, true), axis(c.ny, c.hy, false));
    for j in 0..=fine.ny {
        for i in 0..fine.nx {
            let (x, y) = fine.fy_position(i, j);
            data[fine.fy(i, j)] = interpolate(|a, b| coarse.uy(a, b), &xs, &ys, x, y);
        }
    }
    Ok(FaceField::from_vec(*fine, data).expect("fine grid"))
}

/// Distance between a coarse and a fine solution at the same time, measured
/// on the fine grid after prolongation.
pub fn cauchy_difference(coarse: &State, fine: &State, kind: CauchyNorm) -> Result<f64, DiagnosticsError> {
    let g = *fine.grid();
    if (coarse.t - fine.t).abs() > 1e-9 * (1.0 + fine.t.abs()) {
        return Err(DiagnosticsError::TimeMismatch(coarse.t, fine.t));
    }
    Ok(match kind {
        CauchyNorm::GradPhi => {
            let e = &fine.phi - &prolong_scalar(&coarse.phi, &g)?;
            norm(&operators::grad(&e))
        }
        CauchyNorm::GradU => {
            let e = &fine.u - &prolong_face(&coarse.u, &g)?;
            face_gradient_norm(&e)
        }
        CauchyNorm::PressureL2 => {
            let mut e = &fine.p - &prolong_scalar(&coarse.p, &g)?;
            e.remove_mean();
            norm(&e)
        }
    })
}

/// Discrete H1 seminorm of a face field built from differences between
/// stored values only. The half-cell gap to a tangential wall is left out:
/// there an O(h^2) value error would read as an O(h) gradient.
pub fn face_gradient_norm(e: &FaceField) -> f64 {
    let g = *e.grid();
    let mut s = 0.0;
    for j in 0..g.ny {
        for i in 0..g.nx {
            let d = (e.ux(i + 1, j) - e.ux(i, j)) / g.hx;
            s += d * d * g.hx * g.hy;
        }
    }
    for j in 0..g.ny - 1 {
        for i in 1..g.nx {
            let d = (e.ux(i, j + 1) - e.ux(i, j)) / g.hy;
            s += d * d * g.hx * g.hy;
        }
    }
    for j in 0..g.ny {
        for i in 0..g.nx {
            let d = (e.uy(i, j + 1) - e.uy(i, j)) / g.hy;
            s += d * d * g.hx * g.hy;
        }
    }
    for j in 1..g.ny {
        for i in 0..g.nx - 1 {
            let d = (e.uy(i + 1, j) - e.uy(i, j)) / g.hx;
            s += d * d * g.hx * g.hy;
        }
    }
    s.sqrt()
}

/// Observed orders `log2(d_l / d_{l+1})` of a sequence of differences.
pub fn rates(diffs: &[f64]) -> Vec<f64> {
    diffs.windows(2).map(|w| (w[0] / w[1]).log2()).collect()
}
