//! Discrete differential operators on the staggered grid.
//!
//! Every operator has a matrix-free form acting on fields and an assembled
//! CSR form acting on flat vectors (`[ux; uy]` for face fields). Wall faces
//! are excluded from all face operators: their rows are empty and their
//! columns are never referenced.

use crate::grid::{fill_ghost, FaceField, Grid, ScalarField};
use crate::linsolve::{CsrMatrix, TripletBuilder};

/// `(s(i,j) - s(i-1,j)) / hx` on x-faces, likewise on y-faces; zero on walls.
pub fn grad(s: &ScalarField) -> FaceField {
    let g = *s.grid();
    let v = s.values();
    let mut out = vec![0.0; g.n_faces()];
    for j in 0..g.ny {
        for i in 1..g.nx {
            out[g.fx(i, j)] = (v[g.cell(i, j)] - v[g.cell(i - 1, j)]) / g.hx;
        }
    }
    for j in 1..g.ny {
        for i in 0..g.nx {
            out[g.fy(i, j)] = (v[g.cell(i, j)] - v[g.cell(i, j - 1)]) / g.hy;
        }
    }
    FaceField::from_raw(g, out)
}

/// Cell divergence of a face field.
pub fn div(u: &FaceField) -> ScalarField {
    let g = *u.grid();
    let v = u.values();
    let mut out = vec![0.0; g.n_cells()];
    for j in 0..g.ny {
        for i in 0..g.nx {
            out[g.cell(i, j)] = (v[g.fx(i + 1, j)] - v[g.fx(i, j)]) / g.hx + (v[g.fy(i, j + 1)] - v[g.fy(i, j)]) / g.hy;
        }
    }
    ScalarField::from_raw(g, out)
}

/// Five-point Laplacian with zero normal flux, `div(grad s)`.
pub fn lap_neumann(s: &ScalarField) -> ScalarField {
    let g = *s.grid();
    let sg = fill_ghost(s);
    let (ax, ay) = (1.0 / (g.hx * g.hx), 1.0 / (g.hy * g.hy));
    let mut out = vec![0.0; g.n_cells()];
    for j in 0..g.ny {
        for i in 0..g.nx {
            let (ii, jj) = (i as isize, j as isize);
            let c = sg.at(ii, jj);
            out[g.cell(i, j)] = ax * (sg.at(ii + 1, jj) - 2.0 * c + sg.at(ii - 1, jj))
                + ay * (sg.at(ii, jj + 1) - 2.0 * c + sg.at(ii, jj - 1));
        }
    }
    ScalarField::from_raw(g, out)
}

/// Componentwise five-point Laplacian for no-slip velocities. Along the
/// normal the wall faces supply the zero values; tangentially a reflected
/// ghost `-v` places the zero on the wall.
pub fn lap_dirichlet(u: &FaceField) -> FaceField {
    let g = *u.grid();
    let v = u.values();
    let (ax, ay) = (1.0 / (g.hx * g.hx), 1.0 / (g.hy * g.hy));
    let mut out = vec![0.0; g.n_faces()];
    for j in 0..g.ny {
        for i in 1..g.nx {
            let c = v[g.fx(i, j)];
            let s = if j > 0 { v[g.fx(i, j - 1)] } else { -c };
            let n = if j + 1 < g.ny { v[g.fx(i, j + 1)] } else { -c };
            out[g.fx(i, j)] = ax * (v[g.fx(i + 1, j)] - 2.0 * c + v[g.fx(i - 1, j)]) + ay * (n - 2.0 * c + s);
        }
    }
    for j in 1..g.ny {
        for i in 0..g.nx {
            let c = v[g.fy(i, j)];
            let w = if i > 0 { v[g.fy(i - 1, j)] } else { -c };
            let e = if i + 1 < g.nx { v[g.fy(i + 1, j)] } else { -c };
            out[g.fy(i, j)] = ax * (e - 2.0 * c + w) + ay * (v[g.fy(i, j + 1)] - 2.0 * c + v[g.fy(i, j - 1)]);
        }
    }
    FaceField::from_raw(g, out)
}

/// `grad(div u)`
pub fn graddiv(u: &FaceField) -> FaceField {
    grad(&div(u))
}

/// Entries `(row, col, a)` of the centered advective operator `(w . grad) v`
/// restricted to interior faces. Reflected ghost contributions would land on
/// the diagonal and cancel in the skew part, so they are omitted.
fn advective_entries(w: &FaceField, mut emit: impl FnMut(usize, usize, f64)) {
    let g = *w.grid();
    let wv = w.values();
    let (cx, cy) = (0.5 / g.hx, 0.5 / g.hy);
    for j in 0..g.ny {
        for i in 1..g.nx {
            let r = g.fx(i, j);
            let wx = wv[r];
            let wy = 0.25 * (wv[g.fy(i - 1, j)] + wv[g.fy(i, j)] + wv[g.fy(i - 1, j + 1)] + wv[g.fy(i, j + 1)]);
            if i + 1 < g.nx {
                emit(r, g.fx(i + 1, j), cx * wx);
            }
            if i > 1 {
                emit(r, g.fx(i - 1, j), -cx * wx);
            }
            if j + 1 < g.ny {
                emit(r, g.fx(i, j + 1), cy * wy);
            }
            if j > 0 {
                emit(r, g.fx(i, j - 1), -cy * wy);
            }
        }
    }
    for j in 1..g.ny {
        for i in 0..g.nx {
            let r = g.fy(i, j);
            let wy = wv[r];
            let wx = 0.25 * (wv[g.fx(i, j - 1)] + wv[g.fx(i + 1, j - 1)] + wv[g.fx(i, j)] + wv[g.fx(i + 1, j)]);
            if i + 1 < g.nx {
                emit(r, g.fy(i + 1, j), cx * wx);
            }
            if i > 0 {
                emit(r, g.fy(i - 1, j), -cx * wx);
            }
            if j + 1 < g.ny {
                emit(r, g.fy(i, j + 1), cy * wy);
            }
            if j > 1 {
                emit(r, g.fy(i, j - 1), -cy * wy);
            }
        }
    }
}

/// Skew-symmetric convection `1/2 (A(w) - A(w)^T) v`, a second-order
/// approximation of `(w . grad) v + 1/2 (div w) v` with `(convect_skew(w, v), v) = 0`.
pub fn convect_skew(w: &FaceField, v: &FaceField) -> FaceField {
    let g = *w.grid();
    debug_assert_eq!(g, *v.grid());
    let vv = v.values();
    let mut out = vec![0.0; g.n_faces()];
    advective_entries(w, |r, c, a| {
        out[r] += 0.5 * a * vv[c];
        out[c] -= 0.5 * a * vv[r];
    });
    FaceField::from_raw(g, out)
}

/// Centered `(dx s, dy s)` at cell centers with mirrored ghosts.
fn centered_gradient(s: &ScalarField) -> (Vec<f64>, Vec<f64>) {
    let g = *s.grid();
    let sg = fill_ghost(s);
    let mut dx = vec![0.0; g.n_cells()];
    let mut dy = vec![0.0; g.n_cells()];
    for j in 0..g.ny {
        for i in 0..g.nx {
            let (ii, jj) = (i as isize, j as isize);
            let k = g.cell(i, j);
            dx[k] = (sg.at(ii + 1, jj) - sg.at(ii - 1, jj)) / (2.0 * g.hx);
            dy[k] = (sg.at(ii, jj + 1) - sg.at(ii, jj - 1)) / (2.0 * g.hy);
        }
    }
    (dx, dy)
}

/// Transport term `w . grad s` at cell centers: face velocities averaged to
/// centers times centered differences of the ghosted scalar.
pub fn advect_scalar(w: &FaceField, s: &ScalarField) -> ScalarField {
    let g = *s.grid();
    debug_assert_eq!(g, *w.grid());
    let (dx, dy) = centered_gradient(s);
    let wv = w.values();
    let mut out = vec![0.0; g.n_cells()];
    for j in 0..g.ny {
        for i in 0..g.nx {
            let k = g.cell(i, j);
            let wx = 0.5 * (wv[g.fx(i, j)] + wv[g.fx(i + 1, j)]);
            let wy = 0.5 * (wv[g.fy(i, j)] + wv[g.fy(i, j + 1)]);
            out[k] = wx * dx[k] + wy * dy[k];
        }
    }
    ScalarField::from_raw(g, out)
}

/// Adjoint of `w -> advect_scalar(w, s)`: the face field `z` with
/// `(advect_scalar(w, s), c) = (w, z)` for every no-slip `w`.
pub fn advect_scalar_adjoint(s: &ScalarField, c: &ScalarField) -> FaceField {
    let g = *s.grid();
    debug_assert_eq!(g, *c.grid());
    let (dx, dy) = centered_gradient(s);
    let cv = c.values();
    let mut out = vec![0.0; g.n_faces()];
    for j in 0..g.ny {
        for i in 1..g.nx {
            let (a, b) = (g.cell(i - 1, j), g.cell(i, j));
            out[g.fx(i, j)] = 0.5 * (cv[a] * dx[a] + cv[b] * dx[b]);
        }
    }
    for j in 1..g.ny {
        for i in 0..g.nx {
            let (a, b) = (g.cell(i, j - 1), g.cell(i, j));
            out[g.fy(i, j)] = 0.5 * (cv[a] * dy[a] + cv[b] * dy[b]);
        }
    }
    FaceField::from_raw(g, out)
}

/// Phase stress `mu grad phi` on faces: arithmetic face average of `mu`
/// times the face gradient of `phi`; zero on walls.
pub fn mu_grad_phi(mu: &ScalarField, phi: &ScalarField) -> FaceField {
    let g = *phi.grid();
    debug_assert_eq!(g, *mu.grid());
    let m = mu.values();
    let p = phi.values();
    let mut out = vec![0.0; g.n_faces()];
    for j in 0..g.ny {
        for i in 1..g.nx {
            let (a, b) = (g.cell(i - 1, j), g.cell(i, j));
            out[g.fx(i, j)] = 0.5 * (m[a] + m[b]) * (p[b] - p[a]) / g.hx;
        }
    }
    for j in 1..g.ny {
        for i in 0..g.nx {
            let (a, b) = (g.cell(i, j - 1), g.cell(i, j));
            out[g.fy(i, j)] = 0.5 * (m[a] + m[b]) * (p[b] - p[a]) / g.hy;
        }
    }
    FaceField::from_raw(g, out)
}

/// Assembled forms, independent of the matrix-free loops above.
pub mod matrices {
    use super::*;

    /// Gradient, `n_faces x n_cells`.
    pub fn grad(g: &Grid) -> CsrMatrix {
        let mut b = TripletBuilder::with_capacity(g.n_faces(), g.n_cells(), 2 * g.n_faces());
        for j in 0..g.ny {
            for i in 1..g.nx {
                let r = g.fx(i, j);
                b.push(r, g.cell(i, j), 1.0 / g.hx);
                b.push(r, g.cell(i - 1, j), -1.0 / g.hx);
            }
        }
        for j in 1..g.ny {
            for i in 0..g.nx {
                let r = g.fy(i, j);
                b.push(r, g.cell(i, j), 1.0 / g.hy);
                b.push(r, g.cell(i, j - 1), -1.0 / g.hy);
            }
        }
        b.build()
    }

    /// Divergence, `n_cells x n_faces`, restricted to interior face columns.
    pub fn div(g: &Grid) -> CsrMatrix {
        let mut b = TripletBuilder::with_capacity(g.n_cells(), g.n_faces(), 4 * g.n_cells());
        for j in 0..g.ny {
            for i in 0..g.nx {
                let r = g.cell(i, j);
                if i + 1 < g.nx {
                    b.push(r, g.fx(i + 1, j), 1.0 / g.hx);
                }
                if i > 0 {
                    b.push(r, g.fx(i, j), -1.0 / g.hx);
                }
                if j + 1 < g.ny {
                    b.push(r, g.fy(i, j + 1), 1.0 / g.hy);
                }
                if j > 0 {
                    b.push(r, g.fy(i, j), -1.0 / g.hy);
                }
            }
        }
        b.build()
    }

    pub fn lap_neumann(g: &Grid) -> CsrMatrix {
        let (ax, ay) = (1.0 / (g.hx * g.hx), 1.0 / (g.hy * g.hy));
        let mut b = TripletBuilder::with_capacity(g.n_cells(), g.n_cells(), 5 * g.n_cells());
        for j in 0..g.ny {
            for i in 0..g.nx {
                let r = g.cell(i, j);
                let mut nb = |c: usize, a: f64| {
                    b.push(r, c, a);
                    b.push(r, r, -a);
                };
                if i > 0 {
                    nb(g.cell(i - 1, j), ax);
                }
                if i + 1 < g.nx {
                    nb(g.cell(i + 1, j), ax);
                }
                if j > 0 {
                    nb(g.cell(i, j - 1), ay);
                }
                if j + 1 < g.ny {
                    nb(g.cell(i, j + 1), ay);
                }
            }
        }
        b.build()
    }

    pub fn lap_dirichlet(g: &Grid) -> CsrMatrix {
        let (ax, ay) = (1.0 / (g.hx * g.hx), 1.0 / (g.hy * g.hy));
        let mut b = TripletBuilder::with_capacity(g.n_faces(), g.n_faces(), 5 * g.n_faces());
        for j in 0..g.ny {
            for i in 1..g.nx {
                let r = g.fx(i, j);
                b.push(r, r, -2.0 * ax - 2.0 * ay);
                if i > 1 {
                    b.push(r, g.fx(i - 1, j), ax);
                }
                if i + 1 < g.nx {
                    b.push(r, g.fx(i + 1, j), ax);
                }
                if j > 0 {
                    b.push(r, g.fx(i, j - 1), ay);
                } else {
                    b.push(r, r, -ay);
                }
                if j + 1 < g.ny {
                    b.push(r, g.fx(i, j + 1), ay);
                } else {
                    b.push(r, r, -ay);
                }
            }
        }
        for j in 1..g.ny {
            for i in 0..g.nx {
                let r = g.fy(i, j);
                b.push(r, r, -2.0 * ax - 2.0 * ay);
                if j > 1 {
                    b.push(r, g.fy(i, j - 1), ay);
                }
                if j + 1 < g.ny {
                    b.push(r, g.fy(i, j + 1), ay);
                }
                if i > 0 {
                    b.push(r, g.fy(i - 1, j), ax);
                } else {
                    b.push(r, r, -ax);
                }
                if i + 1 < g.nx {
                    b.push(r, g.fy(i + 1, j), ax);
                } else {
                    b.push(r, r, -ax);
                }
            }
        }
        b.build()
    }

    pub fn graddiv(g: &Grid) -> CsrMatrix {
        grad(g).matmul(&div(g))
    }

    pub fn convect_skew(w: &FaceField) -> CsrMatrix {
        let g = w.grid();
        let mut b = TripletBuilder::with_capacity(g.n_faces(), g.n_faces(), 8 * g.n_faces());
        advective_entries(w, |r, c, a| {
            b.push(r, c, 0.5 * a);
            b.push(c, r, -0.5 * a);
        });
        b.build()
    }

    /// `w -> advect_scalar(w, s)` as an `n_cells x n_faces` matrix.
    pub fn advect(s: &ScalarField) -> CsrMatrix {
        let g = s.grid();
        let (dx, dy) = centered_gradient(s);
        let mut b = TripletBuilder::with_capacity(g.n_cells(), g.n_faces(), 4 * g.n_cells());
        for j in 0..g.ny {
            for i in 0..g.nx {
                let r = g.cell(i, j);
                if i > 0 {
                    b.push(r, g.fx(i, j), 0.5 * dx[r]);
                }
                if i + 1 < g.nx {
                    b.push(r, g.fx(i + 1, j), 0.5 * dx[r]);
                }
                if j > 0 {
                    b.push(r, g.fy(i, j), 0.5 * dy[r]);
                }
                if j + 1 < g.ny {
                    b.push(r, g.fy(i, j + 1), 0.5 * dy[r]);
                }
            }
        }
        b.build()
    }
}

/// Which linear stencil a [`StencilOp`] applies.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum OpKind {
    LapNeumann,
    LapDirichlet,
    Grad,
    Div,
    GradDiv,
    ConvectSkew,
}

/// A linear operator on flat vectors with both application paths.
#[derive(Debug, Clone)]
pub struct StencilOp {
    pub kind: OpKind,
    pub grid: Grid,
    /// Advecting velocity for [`OpKind::ConvectSkew`].
    pub frozen: Option<FaceField>,
}

impl StencilOp {
    pub fn new(kind: OpKind, grid: Grid) -> Self {
        assert!(kind != OpKind::ConvectSkew, "convection needs an advecting field");
        StencilOp {
            kind,
            grid,
            frozen: None,
        }
    }

    pub fn convect(w: FaceField) -> Self {
        StencilOp {
            kind: OpKind::ConvectSkew,
            grid: *w.grid(),
            frozen: Some(w),
        }
    }

    /// `(rows, cols)` of the operator.
    pub fn shape(&self) -> (usize, usize) {
        let (nc, nf) = (self.grid.n_cells(), self.grid.n_faces());
        match self.kind {
            OpKind::LapNeumann => (nc, nc),
            OpKind::Grad => (nf, nc),
            OpKind::Div => (nc, nf),
            _ => (nf, nf),
        }
    }

    /// Matrix-free application. Face inputs must have zero wall entries.
    pub fn apply(&self, x: &[f64]) -> Vec<f64> {
        let g = self.grid;
        let cell = || ScalarField::from_vec(g, x.to_vec()).expect("cell vector length");
        let face = || FaceField::from_vec(g, x.to_vec()).expect("face vector length");
        match self.kind {
            OpKind::LapNeumann => lap_neumann(&cell()).into_vec(),
            OpKind::LapDirichlet => lap_dirichlet(&face()).into_vec(),
            OpKind::Grad => grad(&cell()).into_vec(),
            OpKind::Div => div(&face()).into_vec(),
            OpKind::GradDiv => graddiv(&face()).into_vec(),
            OpKind::ConvectSkew => convect_skew(self.frozen.as_ref().expect("frozen field"), &face()).into_vec(),
        }
    }

    pub fn assemble(&self) -> CsrMatrix {
        let g = &self.grid;
        match self.kind {
            OpKind::LapNeumann => matrices::lap_neumann(g),
            OpKind::LapDirichlet => matrices::lap_dirichlet(g),
            OpKind::Grad => matrices::grad(g),
            OpKind::Div => matrices::div(g),
            OpKind::GradDiv => matrices::graddiv(g),
            OpKind::ConvectSkew => matrices::convect_skew(self.frozen.as_ref().expect("frozen field")),
        }
    }
}
