//! Time integrators: Stokes initializer, first-order bootstrap, the
//! Crank–Nicolson leap-frog artificial compression scheme (CNLFAC) and the
//! two decoupled SAV variants (ACSAV, ACSAV-ECT).

mod bootstrap;
mod cnlfac;
pub mod residual;
mod sav;
mod stokes;

use std::cell::OnceCell;
use std::fmt;
use std::str::FromStr;
use std::time::Instant;

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::grid::{FaceField, Grid, GridError, ModelParams, ScalarField, State};
use crate::linsolve::{
    self, CsrMatrix, SolveError, SolveOptions, SolveReport, SparseCholesky, SparseLu, SymbolicCache,
};
use crate::operators::matrices;

pub use bootstrap::BootstrapOptions;
pub use sav::SavWork;

#[derive(Debug, Error)]
pub enum SchemeError {
    #[error("{what}: linear solve failed (residual {residual:.3e} after {iterations} iterations)")]
    Solve {
        what: &'static str,
        residual: f64,
        iterations: usize,
    },
    #[error("{what}: {source}")]
    Factor { what: &'static str, source: SolveError },
    #[error("SAV coefficient A = {0:e} is not positive")]
    NonPositiveA(f64),
    #[error("Picard iteration did not converge; increment trace {trace:?}")]
    Picard { trace: Vec<f64> },
    #[error("Newton iteration did not converge; residual trace {trace:?}")]
    Newton { trace: Vec<f64> },
    #[error("saddle-point iteration did not converge; divergence trace {trace:?}")]
    Saddle { trace: Vec<f64> },
    #[error("state became non-finite")]
    NonFinite,
    #[error("scheme {0} needs {1} back levels")]
    MissingLevels(SchemeKind, usize),
    #[error(transparent)]
    Grid(#[from] GridError),
    #[error("step {step}: {source}")]
    AtStep {
        step: usize,
        #[source]
        source: Box<SchemeError>,
    },
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum SchemeKind {
    Bootstrap,
    Cnlfac,
    Acsav,
    #[serde(alias = "acsav_ect")]
    AcsavEct,
}

impl SchemeKind {
    /// Number of bootstrap steps before the multistep scheme can start.
    pub fn bootstrap_steps(self) -> usize {
        match self {
            SchemeKind::Bootstrap => 0,
            SchemeKind::Cnlfac => 1,
            SchemeKind::Acsav | SchemeKind::AcsavEct => 2,
        }
    }

    pub fn is_sav(self) -> bool {
        matches!(self, SchemeKind::Acsav | SchemeKind::AcsavEct)
    }

    pub fn name(self) -> &'static str {
        match self {
            SchemeKind::Bootstrap => "bootstrap",
            SchemeKind::Cnlfac => "cnlfac",
            SchemeKind::Acsav => "acsav",
            SchemeKind::AcsavEct => "acsav-ect",
        }
    }
}

impl fmt::Display for SchemeKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for SchemeKind {
    type Err = String;
    fn from_str(s: &str) -> Result<Self, String> {
        match s.to_ascii_lowercase().replace('_', "-").as_str() {
            "bootstrap" => Ok(SchemeKind::Bootstrap),
            "cnlfac" => Ok(SchemeKind::Cnlfac),
            "acsav" => Ok(SchemeKind::Acsav),
            "acsav-ect" => Ok(SchemeKind::AcsavEct),
            other => Err(format!("unknown scheme '{other}'")),
        }
    }
}

/// How the per-step linear systems are solved.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum LinearBackend {
    /// Jacobi-preconditioned CG / BiCGStab.
    Krylov,
    /// Sparse Cholesky / LU.
    Direct,
}

impl FromStr for LinearBackend {
    type Err = String;
    fn from_str(s: &str) -> Result<Self, String> {
        match s {
            "krylov" => Ok(LinearBackend::Krylov),
            "direct" => Ok(LinearBackend::Direct),
            other => Err(format!("unknown linear backend '{other}'")),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SolverSettings {
    pub tol: f64,
    pub maxit: Option<usize>,
    pub backend: LinearBackend,
}

impl Default for SolverSettings {
    fn default() -> Self {
        SolverSettings {
            tol: 1e-8,
            maxit: None,
            backend: LinearBackend::Direct,
        }
    }
}

impl SolverSettings {
    fn options(&self) -> SolveOptions {
        SolveOptions {
            tol: self.tol,
            maxit: self.maxit,
        }
    }
}

/// Per-step record of the work done.
#[derive(Debug, Clone, Default)]
pub struct StepInfo {
    pub solves: Vec<(&'static str, SolveReport)>,
    pub sav: Option<SavWork>,
    pub picard_iterations: usize,
    pub seconds: f64,
}

/// Grid operators assembled once per run.
#[derive(Debug, Clone)]
pub(crate) struct Matrices {
    pub lap_n: CsrMatrix,
    pub lap_d: CsrMatrix,
    pub graddiv: CsrMatrix,
    /// Unit diagonal on wall faces, zero elsewhere.
    pub walls: CsrMatrix,
    /// Unit diagonal on interior faces.
    pub interior: CsrMatrix,
}

impl Matrices {
    fn new(g: &Grid) -> Self {
        let graddiv = matrices::grad(g).matmul(&matrices::div(g));
        let wall_mask: Vec<f64> = (0..g.n_faces())
            .map(|k| if g.is_wall_face(k) { 1.0 } else { 0.0 })
            .collect();
        let walls = CsrMatrix::diagonal(&wall_mask);
        let interior = CsrMatrix::diagonal(&wall_mask.iter().map(|w| 1.0 - w).collect::<Vec<_>>());
        Matrices {
            lap_n: matrices::lap_neumann(g),
            lap_d: matrices::lap_dirichlet(g),
            graddiv,
            walls,
            interior,
        }
    }
}

/// A factorization (or the matrix itself, for Krylov) that can be applied to
/// several right-hand sides.
enum Prepared<'a> {
    Krylov(&'a CsrMatrix, bool),
    Cholesky(&'a CsrMatrix, SparseCholesky),
    Lu(&'a CsrMatrix, SparseLu),
}

/// Drives the schemes on one grid with fixed parameters.
pub struct Stepper {
    grid: Grid,
    params: ModelParams,
    settings: SolverSettings,
    bootstrap: BootstrapOptions,
    pub(crate) mats: Matrices,
    ect_velocity: OnceCell<(CsrMatrix, Option<SparseCholesky>)>,
    symbolic: SymbolicCache,
}

impl Stepper {
    pub fn new(grid: Grid, params: ModelParams, settings: SolverSettings) -> Result<Self, SchemeError> {
        params.validate()?;
        params.warn_if_thick_interface(&grid);
        Ok(Stepper {
            grid,
            params,
            settings,
            bootstrap: BootstrapOptions::default(),
            mats: Matrices::new(&grid),
            ect_velocity: OnceCell::new(),
            symbolic: SymbolicCache::default(),
        })
    }

    pub fn with_bootstrap_options(mut self, opts: BootstrapOptions) -> Self {
        self.bootstrap = opts;
        self
    }

    pub fn grid(&self) -> &Grid {
        &self.grid
    }

    pub fn params(&self) -> &ModelParams {
        &self.params
    }

    pub fn settings(&self) -> &SolverSettings {
        &self.settings
    }

    fn prepare<'a>(&self, what: &'static str, a: &'a CsrMatrix, spd: bool) -> Result<Prepared<'a>, SchemeError> {
        let start = Instant::now();
        let prepared = match (self.settings.backend, spd) {
            (LinearBackend::Krylov, _) => Ok(Prepared::Krylov(a, spd)),
            (LinearBackend::Direct, true) => SparseCholesky::factor_cached(a, &self.symbolic, what)
                .map(|f| Prepared::Cholesky(a, f))
                .map_err(|source| SchemeError::Factor { what, source }),
            (LinearBackend::Direct, false) => SparseLu::factor_cached(a, &self.symbolic, what)
                .map(|f| Prepared::Lu(a, f))
                .map_err(|source| SchemeError::Factor { what, source }),
        };
        log::trace!("prepared {what} in {:.2e}s", start.elapsed().as_secs_f64());
        prepared
    }

    fn solve_prepared(
        &self,
        what: &'static str,
        p: &Prepared<'_>,
        b: &[f64],
        x0: Option<&[f64]>,
        info: &mut StepInfo,
    ) -> Result<Vec<f64>, SchemeError> {
        let start = Instant::now();
        let opts = self.settings.options();
        let (x, rep) = match p {
            Prepared::Krylov(a, true) => linsolve::solve_spd(a, b, x0, &opts, false),
            Prepared::Krylov(a, false) => linsolve::solve_general(a, b, x0, &opts),
            Prepared::Cholesky(a, f) => {
                let x = f.solve(b);
                let rep = SolveReport::direct(a, &x, b, opts.tol, start);
                (x, rep)
            }
            Prepared::Lu(a, f) => {
                let x = f.solve(b);
                let rep = SolveReport::direct(a, &x, b, opts.tol, start);
                (x, rep)
            }
        };
        if !rep.converged || !x.iter().all(|v| v.is_finite()) {
            return Err(SchemeError::Solve {
                what,
                residual: rep.residual,
                iterations: rep.iterations,
            });
        }
        info.solves.push((what, rep));
        Ok(x)
    }

    fn solve(
        &self,
        what: &'static str,
        a: &CsrMatrix,
        b: &[f64],
        x0: Option<&[f64]>,
        spd: bool,
        info: &mut StepInfo,
    ) -> Result<Vec<f64>, SchemeError> {
        let p = self.prepare(what, a, spd)?;
        self.solve_prepared(what, &p, b, x0, info)
    }

    /// Advances with the bootstrap scheme to level `n + 1`.
    pub fn bootstrap_step(&self, cur: &State) -> Result<(State, StepInfo), SchemeError> {
        bootstrap::step(self, cur)
    }

    pub fn cnlfac_step(&self, prev: &State, cur: &State) -> Result<(State, StepInfo), SchemeError> {
        cnlfac::step(self, prev, cur)
    }

    pub fn acsav_step(
        &self,
        phi_nm2: &ScalarField,
        prev: &State,
        cur: &State,
    ) -> Result<(State, StepInfo), SchemeError> {
        sav::step(self, phi_nm2, prev, cur, false)
    }

    pub fn acsav_ect_step(
        &self,
        phi_nm2: &ScalarField,
        prev: &State,
        cur: &State,
    ) -> Result<(State, StepInfo), SchemeError> {
        sav::step(self, phi_nm2, prev, cur, true)
    }

    /// Solves the steady Stokes problem driven by the initial phase stress.
    pub fn stokes_init(&self, phi0: &ScalarField) -> Result<(FaceField, ScalarField), SchemeError> {
        stokes::stokes_init(self, phi0)
    }

    /// Level-0 state: `phi0` with the Stokes velocity and pressure.
    pub fn initial_state(&self, phi0: ScalarField) -> Result<State, SchemeError> {
        let (u, p) = self.stokes_init(&phi0)?;
        Ok(State::initial(phi0, u, p, &self.params))
    }

    /// Runs `n_steps` steps of `kind` from `init`, bootstrapping the first
    /// levels. `observe` sees every level including the initial one.
    pub fn run<E>(
        &self,
        kind: SchemeKind,
        init: State,
        n_steps: usize,
        mut observe: impl FnMut(&State, &StepInfo) -> Result<(), E>,
    ) -> Result<State, RunError<E>> {
        observe(&init, &StepInfo::default()).map_err(RunError::Observer)?;
        // back levels, oldest first
        let mut levels: Vec<State> = vec![init];
        let mut phi_nm2: Option<ScalarField> = None;
        for step in 0..n_steps {
            let cur = levels.last().expect("at least one level");
            let wrap = |e: SchemeError| {
                RunError::Scheme(SchemeError::AtStep {
                    step: step + 1,
                    source: Box::new(e),
                })
            };
            let (mut next, info) = if step < kind.bootstrap_steps() || kind == SchemeKind::Bootstrap {
                self.bootstrap_step(cur).map_err(wrap)?
            } else {
                let prev = &levels[levels.len() - 2];
                match kind {
                    SchemeKind::Cnlfac => self.cnlfac_step(prev, cur).map_err(wrap)?,
                    SchemeKind::Acsav => self
                        .acsav_step(phi_nm2.as_ref().expect("three levels"), prev, cur)
                        .map_err(wrap)?,
                    SchemeKind::AcsavEct => self
                        .acsav_ect_step(phi_nm2.as_ref().expect("three levels"), prev, cur)
                        .map_err(wrap)?,
                    SchemeKind::Bootstrap => unreachable!(),
                }
            };
            if !kind.is_sav() && kind != SchemeKind::Bootstrap {
                // r is only evolved by the SAV schemes
                next.r = self.params.r_exact(next.t);
            }
            if !next.is_finite() {
                return Err(wrap(SchemeError::NonFinite));
            }
            observe(&next, &info).map_err(RunError::Observer)?;
            if levels.len() == 2 {
                let old = levels.remove(0);
                phi_nm2 = Some(old.phi);
            }
            levels.push(next);
        }
        Ok(levels.pop().expect("final level"))
    }
}

#[derive(Debug, Error)]
pub enum RunError<E> {
    #[error(transparent)]
    Scheme(SchemeError),
    #[error("observer failed: {0}")]
    Observer(E),
}

/// Flat `[a; b]` concatenation.
pub(crate) fn concat(a: &[f64], b: &[f64]) -> Vec<f64> {
    let mut v = Vec::with_capacity(a.len() + b.len());
    v.extend_from_slice(a);
    v.extend_from_slice(b);
    v
}
