//! Finite-volume solvers for the Allen–Cahn–Navier–Stokes phase-field model
//! on staggered grids.

pub mod diagnostics;
pub mod grid;
pub mod harness;
pub mod linsolve;
pub mod operators;
pub mod schemes;
