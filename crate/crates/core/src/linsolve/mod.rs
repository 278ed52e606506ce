//! Sparse matrices and linear solvers.

mod csr;
mod direct;
mod krylov;

use std::time::Instant;

use thiserror::Error;

pub use csr::{CsrMatrix, TripletBuilder};
pub use direct::{SparseCholesky, SparseLu, SymbolicCache};
pub use krylov::{relative_residual, solve_general, solve_spd};

#[derive(Debug, Error)]
pub enum SolveError {
    #[error("matrix is not square ({0}x{1})")]
    NotSquare(usize, usize),
    #[error("factorization failed: {0}")]
    Factorization(String),
    #[error("{what}: solver did not converge (residual {residual:.3e} after {iterations} iterations)")]
    NotConverged {
        what: String,
        residual: f64,
        iterations: usize,
    },
}

/// Stopping rule for iterative solves.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SolveOptions {
    /// Relative residual tolerance `||b - A x|| / ||b||`.
    pub tol: f64,
    /// Iteration cap; `None` uses `min(10 sqrt(n), 5000)`.
    pub maxit: Option<usize>,
}

impl SolveOptions {
    pub fn new(tol: f64) -> Self {
        SolveOptions { tol, maxit: None }
    }

    pub fn maxit_for(&self, n: usize) -> usize {
        self.maxit
            .unwrap_or_else(|| ((10.0 * (n as f64).sqrt()) as usize).clamp(1, 5000))
    }
}

impl Default for SolveOptions {
    fn default() -> Self {
        SolveOptions::new(1e-8)
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct SolveReport {
    pub iterations: usize,
    /// True relative residual of the returned solution.
    pub residual: f64,
    pub converged: bool,
    pub seconds: f64,
    pub method: &'static str,
}

impl SolveReport {
    pub(crate) fn new(iterations: usize, residual: f64, converged: bool, start: Instant, method: &'static str) -> Self {
        SolveReport {
            iterations,
            residual,
            converged,
            seconds: start.elapsed().as_secs_f64(),
            method,
        }
    }

    /// Report for a direct solve, with the residual checked by a fresh matvec.
    pub fn direct(a: &CsrMatrix, x: &[f64], b: &[f64], tol: f64, start: Instant) -> Self {
        let res = relative_residual(a, x, b);
        SolveReport::new(1, res, res <= tol, start, "direct")
    }
}
