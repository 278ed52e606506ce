//! Staggered (MAC) grid, discrete fields and the model state.
//!
//! Scalars (phi, q, p and the chemical potentials) live at cell centers.
//! The x-velocity lives on vertical faces `(i*hx, (j+1/2)*hy)` and the
//! y-velocity on horizontal faces `((i+1/2)*hx, j*hy)`. Wall faces carry the
//! no-slip condition and are stored explicitly as zeros.

use std::ops::{Add, Mul, Sub};

use serde::{Deserialize, Serialize};
use thiserror::Error;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum GridError {
    #[error("invalid grid: {0}")]
    InvalidGrid(String),
    #[error("grid mismatch: {0:?} vs {1:?}")]
    Mismatch(Grid, Grid),
    #[error("invalid model parameters: {0}")]
    InvalidParams(String),
}

/// Uniform rectangular grid on `[0, lx] x [0, ly]`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Grid {
    pub nx: usize,
    pub ny: usize,
    pub lx: f64,
    pub ly: f64,
    pub hx: f64,
    pub hy: f64,
}

impl Grid {
    pub fn new(nx: usize, ny: usize, lx: f64, ly: f64) -> Result<Self, GridError> {
        if nx < 4 || ny < 4 {
            return Err(GridError::InvalidGrid(format!(
                "need at least 4 cells per axis, got {nx}x{ny}"
            )));
        }
        if !(lx > 0.0 && ly > 0.0 && lx.is_finite() && ly.is_finite()) {
            return Err(GridError::InvalidGrid(format!(
                "extents must be positive, got {lx}x{ly}"
            )));
        }
        Ok(Grid {
            nx,
            ny,
            lx,
            ly,
            hx: lx / nx as f64,
            hy: ly / ny as f64,
        })
    }

    /// Square grid on `[0, l]^2`.
    pub fn square(n: usize, l: f64) -> Result<Self, GridError> {
        Grid::new(n, n, l, l)
    }

    pub fn n_cells(&self) -> usize {
        self.nx * self.ny
    }

    pub fn n_faces_x(&self) -> usize {
        (self.nx + 1) * self.ny
    }

    pub fn n_faces_y(&self) -> usize {
        self.nx * (self.ny + 1)
    }

    pub fn n_faces(&self) -> usize {
        self.n_faces_x() + self.n_faces_y()
    }

    pub fn cell_area(&self) -> f64 {
        self.hx * self.hy
    }

    #[inline]
    pub fn cell(&self, i: usize, j: usize) -> usize {
        i + self.nx * j
    }

    /// Flat index of the x-face `(i, j)`, `i` in `0..=nx`.
    #[inline]
    pub fn fx(&self, i: usize, j: usize) -> usize {
        i + (self.nx + 1) * j
    }

    /// Flat index of the y-face `(i, j)`, `j` in `0..=ny`.
    #[inline]
    pub fn fy(&self, i: usize, j: usize) -> usize {
        self.n_faces_x() + i + self.nx * j
    }

    pub fn cell_center(&self, i: usize, j: usize) -> (f64, f64) {
        ((i as f64 + 0.5) * self.hx, (j as f64 + 0.5) * self.hy)
    }

    pub fn fx_position(&self, i: usize, j: usize) -> (f64, f64) {
        (i as f64 * self.hx, (j as f64 + 0.5) * self.hy)
    }

    pub fn fy_position(&self, i: usize, j: usize) -> (f64, f64) {
        ((i as f64 + 0.5) * self.hx, j as f64 * self.hy)
    }

    /// Whether flat face index `k` is a wall face.
    pub fn is_wall_face(&self, k: usize) -> bool {
        let nfx = self.n_faces_x();
        if k < nfx {
            let i = k % (self.nx + 1);
            i == 0 || i == self.nx
        } else {
            let j = (k - nfx) / self.nx;
            j == 0 || j == self.ny
        }
    }

    /// Grid with twice the resolution on the same domain.
    pub fn refined(&self) -> Grid {
        Grid::new(2 * self.nx, 2 * self.ny, self.lx, self.ly).expect("refinement of a valid grid")
    }

    pub fn check_same(&self, other: &Grid) -> Result<(), GridError> {
        if self == other {
            Ok(())
        } else {
            Err(GridError::Mismatch(*self, *other))
        }
    }
}

/// Common surface of cell and face fields.
pub trait Field {
    fn grid(&self) -> &Grid;
    fn values(&self) -> &[f64];
    /// Quadrature weight of entry `k`.
    fn weight(&self, k: usize) -> f64;
}

/// Discrete L2 inner product (midpoint quadrature).
pub fn inner_product<F: Field>(a: &F, b: &F) -> Result<f64, GridError> {
    a.grid().check_same(b.grid())?;
    Ok(a.values()
        .iter()
        .zip(b.values())
        .enumerate()
        .map(|(k, (x, y))| a.weight(k) * x * y)
        .sum())
}

/// Induced discrete L2 norm.
pub fn norm<F: Field>(a: &F) -> f64 {
    inner_product(a, a).expect("same field").sqrt()
}

/// Cell-centered scalar with zero-flux (mirror) boundary treatment.
#[derive(Debug, Clone, PartialEq)]
pub struct ScalarField {
    grid: Grid,
    data: Vec<f64>,
}

impl Field for ScalarField {
    fn grid(&self) -> &Grid {
        &self.grid
    }
    fn values(&self) -> &[f64] {
        &self.data
    }
    fn weight(&self, _k: usize) -> f64 {
        self.grid.cell_area()
    }
}

impl ScalarField {
    pub fn zeros(grid: Grid) -> Self {
        Self::constant(grid, 0.0)
    }

    pub fn constant(grid: Grid, value: f64) -> Self {
        ScalarField {
            grid,
            data: vec![value; grid.n_cells()],
        }
    }

    pub fn from_vec(grid: Grid, data: Vec<f64>) -> Result<Self, GridError> {
        if data.len() != grid.n_cells() {
            return Err(GridError::InvalidGrid(format!(
                "expected {} cell values, got {}",
                grid.n_cells(),
                data.len()
            )));
        }
        Ok(ScalarField { grid, data })
    }

    pub(crate) fn from_raw(grid: Grid, data: Vec<f64>) -> Self {
        debug_assert_eq!(data.len(), grid.n_cells());
        ScalarField { grid, data }
    }

    /// Samples `f(x, y)` at cell centers.
    pub fn from_fn(grid: Grid, f: impl Fn(f64, f64) -> f64) -> Self {
        let mut data = Vec::with_capacity(grid.n_cells());
        for j in 0..grid.ny {
            for i in 0..grid.nx {
                let (x, y) = grid.cell_center(i, j);
                data.push(f(x, y));
            }
        }
        ScalarField { grid, data }
    }

    pub fn grid(&self) -> &Grid {
        &self.grid
    }

    #[inline]
    pub fn at(&self, i: usize, j: usize) -> f64 {
        self.data[self.grid.cell(i, j)]
    }

    #[inline]
    pub fn set(&mut self, i: usize, j: usize, v: f64) {
        let k = self.grid.cell(i, j);
        self.data[k] = v;
    }

    pub fn values(&self) -> &[f64] {
        &self.data
    }

    pub fn values_mut(&mut self) -> &mut [f64] {
        &mut self.data
    }

    pub fn into_vec(self) -> Vec<f64> {
        self.data
    }

    pub fn mean(&self) -> f64 {
        self.data.iter().sum::<f64>() / self.data.len() as f64
    }

    pub fn max_abs(&self) -> f64 {
        self.data.iter().fold(0.0, |m, v| m.max(v.abs()))
    }

    pub fn is_finite(&self) -> bool {
        self.data.iter().all(|v| v.is_finite())
    }

    /// Pointwise map.
    pub fn map(&self, f: impl Fn(f64) -> f64) -> Self {
        ScalarField {
            grid: self.grid,
            data: self.data.iter().map(|&v| f(v)).collect(),
        }
    }

    /// Pointwise binary combination.
    pub fn zip_map(&self, other: &ScalarField, f: impl Fn(f64, f64) -> f64) -> Self {
        debug_assert_eq!(self.grid, other.grid);
        ScalarField {
            grid: self.grid,
            data: self.data.iter().zip(&other.data).map(|(&a, &b)| f(a, b)).collect(),
        }
    }

    /// `self += a * x`
    pub fn axpy(&mut self, a: f64, x: &ScalarField) {
        debug_assert_eq!(self.grid, x.grid);
        for (s, v) in self.data.iter_mut().zip(&x.data) {
            *s += a * v;
        }
    }

    pub fn scale(&mut self, a: f64) {
        self.data.iter_mut().for_each(|v| *v *= a);
    }

    /// Subtracts the discrete mean.
    pub fn remove_mean(&mut self) {
        let m = self.mean();
        self.data.iter_mut().for_each(|v| *v -= m);
    }
}

/// Cell values padded with one ghost layer.
#[derive(Debug, Clone, PartialEq)]
pub struct GhostedScalar {
    nx: usize,
    ny: usize,
    data: Vec<f64>,
}

impl GhostedScalar {
    /// Value at `(i, j)` with `i` in `-1..=nx`, `j` in `-1..=ny`.
    #[inline]
    pub fn at(&self, i: isize, j: isize) -> f64 {
        let w = self.nx + 2;
        self.data[(i + 1) as usize + w * (j + 1) as usize]
    }

    /// Interior values as a plain field.
    pub fn interior(&self, grid: Grid) -> ScalarField {
        ScalarField::from_fn_index(grid, |i, j| self.at(i as isize, j as isize))
    }

    pub fn dims(&self) -> (usize, usize) {
        (self.nx, self.ny)
    }
}

impl ScalarField {
    fn from_fn_index(grid: Grid, f: impl Fn(usize, usize) -> f64) -> Self {
        let mut data = Vec::with_capacity(grid.n_cells());
        for j in 0..grid.ny {
            for i in 0..grid.nx {
                data.push(f(i, j));
            }
        }
        ScalarField { grid, data }
    }
}

/// Mirror ghost layer: ghost = first interior layer, so the two-point normal
/// difference across every wall vanishes.
pub fn fill_ghost(f: &ScalarField) -> GhostedScalar {
    let g = f.grid;
    let (nx, ny) = (g.nx, g.ny);
    let w = nx + 2;
    let mut data = vec![0.0; w * (ny + 2)];
    for jj in 0..ny + 2 {
        let j = jj.saturating_sub(1).min(ny - 1);
        for ii in 0..nx + 2 {
            let i = ii.saturating_sub(1).min(nx - 1);
            data[ii + w * jj] = f.data[g.cell(i, j)];
        }
    }
    GhostedScalar { nx, ny, data }
}

/// Face-staggered velocity with no-slip walls.
#[derive(Debug, Clone, PartialEq)]
pub struct FaceField {
    grid: Grid,
    data: Vec<f64>,
}

impl Field for FaceField {
    fn grid(&self) -> &Grid {
        &self.grid
    }
    fn values(&self) -> &[f64] {
        &self.data
    }
    fn weight(&self, k: usize) -> f64 {
        if self.grid.is_wall_face(k) {
            0.5 * self.grid.cell_area()
        } else {
            self.grid.cell_area()
        }
    }
}

impl FaceField {
    pub fn zeros(grid: Grid) -> Self {
        FaceField {
            grid,
            data: vec![0.0; grid.n_faces()],
        }
    }

    /// Wraps a flat `[ux; uy]` vector; wall entries are forced to zero.
    pub fn from_vec(grid: Grid, data: Vec<f64>) -> Result<Self, GridError> {
        if data.len() != grid.n_faces() {
            return Err(GridError::InvalidGrid(format!(
                "expected {} face values, got {}",
                grid.n_faces(),
                data.len()
            )));
        }
        let mut f = FaceField { grid, data };
        f.enforce_walls();
        Ok(f)
    }

    /// Wraps a vector whose wall entries are already zero.
    pub(crate) fn from_raw(grid: Grid, data: Vec<f64>) -> Self {
        debug_assert_eq!(data.len(), grid.n_faces());
        let f = FaceField { grid, data };
        debug_assert!(f.walls_are_zero());
        f
    }

    /// Samples the components at their face positions; wall faces are zero.
    pub fn from_fns(grid: Grid, fx: impl Fn(f64, f64) -> f64, fy: impl Fn(f64, f64) -> f64) -> Self {
        let mut f = FaceField::zeros(grid);
        for j in 0..grid.ny {
            for i in 1..grid.nx {
                let (x, y) = grid.fx_position(i, j);
                f.data[grid.fx(i, j)] = fx(x, y);
            }
        }
        for j in 1..grid.ny {
            for i in 0..grid.nx {
                let (x, y) = grid.fy_position(i, j);
                f.data[grid.fy(i, j)] = fy(x, y);
            }
        }
        f
    }

    pub fn grid(&self) -> &Grid {
        &self.grid
    }

    #[inline]
    pub fn ux(&self, i: usize, j: usize) -> f64 {
        self.data[self.grid.fx(i, j)]
    }

    #[inline]
    pub fn uy(&self, i: usize, j: usize) -> f64 {
        self.data[self.grid.fy(i, j)]
    }

    pub fn values(&self) -> &[f64] {
        &self.data
    }

    /// Mutable access to the flat vector. Callers must keep wall faces zero;
    /// [`FaceField::enforce_walls`] restores the invariant.
    pub fn values_mut(&mut self) -> &mut [f64] {
        &mut self.data
    }

    pub fn into_vec(self) -> Vec<f64> {
        self.data
    }

    pub fn enforce_walls(&mut self) {
        let g = self.grid;
        for j in 0..g.ny {
            self.data[g.fx(0, j)] = 0.0;
            self.data[g.fx(g.nx, j)] = 0.0;
        }
        for i in 0..g.nx {
            self.data[g.fy(i, 0)] = 0.0;
            self.data[g.fy(i, g.ny)] = 0.0;
        }
    }

    pub fn walls_are_zero(&self) -> bool {
        (0..self.data.len()).all(|k| !self.grid.is_wall_face(k) || self.data[k] == 0.0)
    }

    pub fn is_finite(&self) -> bool {
        self.data.iter().all(|v| v.is_finite())
    }

    pub fn max_abs(&self) -> f64 {
        self.data.iter().fold(0.0, |m, v| m.max(v.abs()))
    }

    /// `self += a * x`
    pub fn axpy(&mut self, a: f64, x: &FaceField) {
        debug_assert_eq!(self.grid, x.grid);
        for (s, v) in self.data.iter_mut().zip(&x.data) {
            *s += a * v;
        }
    }

    pub fn scale(&mut self, a: f64) {
        self.data.iter_mut().for_each(|v| *v *= a);
    }

    /// Swaps the roles of x and y (transpose of the domain). Square grids only.
    pub fn transposed(&self) -> FaceField {
        let g = self.grid;
        assert_eq!(g.nx, g.ny, "transpose needs a square grid");
        let mut out = FaceField::zeros(g);
        for j in 0..g.ny {
            for i in 0..=g.nx {
                out.data[g.fy(j, i)] = self.ux(i, j);
            }
        }
        for j in 0..=g.ny {
            for i in 0..g.nx {
                out.data[g.fx(j, i)] = self.uy(i, j);
            }
        }
        out
    }
}

macro_rules! field_arith {
    ($t:ty) => {
        impl Add for &$t {
            type Output = $t;
            fn add(self, rhs: &$t) -> $t {
                let mut out = self.clone();
                out.axpy(1.0, rhs);
                out
            }
        }
        impl Sub for &$t {
            type Output = $t;
            fn sub(self, rhs: &$t) -> $t {
                let mut out = self.clone();
                out.axpy(-1.0, rhs);
                out
            }
        }
        impl Mul<f64> for &$t {
            type Output = $t;
            fn mul(self, a: f64) -> $t {
                let mut out = self.clone();
                out.scale(a);
                out
            }
        }
    };
}

field_arith!(ScalarField);
field_arith!(FaceField);

/// Physical and numerical parameters of a run.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ModelParams {
    /// Interface width.
    pub eta: f64,
    /// Surface tension scale.
    pub lambda: f64,
    pub mobility: f64,
    /// Viscosity.
    pub nu: f64,
    /// Artificial compression weight on the pressure update.
    pub alpha: f64,
    /// Grad-div stabilization weight.
    pub beta: f64,
    pub dt: f64,
    /// Final time; also the relaxation time of the auxiliary variable.
    pub t_final: f64,
}

impl ModelParams {
    #[allow(clippy::too_many_arguments)]
    pub fn new(
        eta: f64,
        lambda: f64,
        mobility: f64,
        nu: f64,
        alpha: f64,
        beta: f64,
        dt: f64,
        t_final: f64,
    ) -> Result<Self, GridError> {
        let p = ModelParams {
            eta,
            lambda,
            mobility,
            nu,
            alpha,
            beta,
            dt,
            t_final,
        };
        p.validate()?;
        Ok(p)
    }

    pub fn validate(&self) -> Result<(), GridError> {
        let named = [
            ("eta", self.eta),
            ("lambda", self.lambda),
            ("mobility", self.mobility),
            ("nu", self.nu),
            ("alpha", self.alpha),
            ("beta", self.beta),
            ("dt", self.dt),
            ("t_final", self.t_final),
        ];
        for (name, v) in named {
            if !(v > 0.0 && v.is_finite()) {
                return Err(GridError::InvalidParams(format!("{name} must be positive, got {v}")));
            }
        }
        if self.alpha * self.beta < 0.25 {
            return Err(GridError::InvalidParams(format!(
                "alpha*beta must be >= 1/4, got {}",
                self.alpha * self.beta
            )));
        }
        Ok(())
    }

    /// Logs a warning when the interface is not thin relative to the domain.
    pub fn warn_if_thick_interface(&self, grid: &Grid) {
        if self.eta > 0.1 * grid.lx.min(grid.ly) {
            log::warn!(
                "interface width eta={} is not small against the domain {}x{}",
                self.eta,
                grid.lx,
                grid.ly
            );
        }
    }

    /// `f(phi) = (phi^2 - 1) phi / eta^2`
    pub fn bulk_force(&self, phi: f64) -> f64 {
        (phi * phi - 1.0) * phi / (self.eta * self.eta)
    }

    /// `q = (phi^2 - 1) / eta^2`
    pub fn q_of(&self, phi: f64) -> f64 {
        (phi * phi - 1.0) / (self.eta * self.eta)
    }

    /// `exp(-t / T)`, the exact auxiliary variable.
    pub fn r_exact(&self, t: f64) -> f64 {
        (-t / self.t_final).exp()
    }

    pub fn time(&self, n: usize) -> f64 {
        n as f64 * self.dt
    }
}

/// One complete time level.
#[derive(Debug, Clone, PartialEq)]
pub struct State {
    pub phi: ScalarField,
    pub q: ScalarField,
    pub u: FaceField,
    pub p: ScalarField,
    /// Scalar auxiliary variable; carried unchanged in meaning by non-SAV schemes.
    pub r: f64,
    pub t: f64,
    pub n: usize,
}

impl State {
    /// Level-0 state with `q` and `r` set from their definitions.
    pub fn initial(phi: ScalarField, u: FaceField, p: ScalarField, params: &ModelParams) -> Self {
        let q = phi.map(|v| params.q_of(v));
        State {
            phi,
            q,
            u,
            p,
            r: 1.0,
            t: 0.0,
            n: 0,
        }
    }

    pub fn grid(&self) -> &Grid {
        self.phi.grid()
    }

    pub fn check_consistent(&self) -> Result<(), GridError> {
        let g = self.phi.grid();
        g.check_same(self.q.grid())?;
        g.check_same(self.u.grid())?;
        g.check_same(self.p.grid())
    }

    pub fn is_finite(&self) -> bool {
        self.phi.is_finite() && self.q.is_finite() && self.u.is_finite() && self.p.is_finite() && self.r.is_finite()
    }
}
