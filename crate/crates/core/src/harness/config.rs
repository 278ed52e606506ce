//! Run configuration: a flat file of dotted keys (`model.eta = 0.04`),
//! which is also valid TOML.

use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};

use crate::grid::{Grid, ModelParams};
use crate::schemes::{LinearBackend, SchemeKind, SolverSettings};

use super::HarnessError;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Domain {
    pub lx: f64,
    pub ly: f64,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct GridSize {
    pub nx: usize,
    pub ny: usize,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct TimeConfig {
    pub dt: f64,
    pub t_end: f64,
    /// Field snapshot cadence in steps; 0 disables periodic snapshots.
    #[serde(default)]
    pub output_every: usize,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ModelConfig {
    pub eta: f64,
    pub lambda: f64,
    pub mobility: f64,
    pub nu: f64,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SchemeConfig {
    pub kind: SchemeKind,
    pub alpha: f64,
    pub beta: f64,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum InitKind {
    Cosine,
    Spinodal,
    Bubbles,
}

/// Initial velocity and pressure.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum VelocityInit {
    /// `u = 0`, `p = 0`.
    #[default]
    Rest,
    /// Steady Stokes flow driven by the initial capillary force.
    Stokes,
}

/// `1 + tanh((radius - |x - c|) / (width_factor * eta))` contribution.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Bubble {
    pub cx: f64,
    pub cy: f64,
    pub radius: f64,
    pub width_factor: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct InitConfig {
    pub kind: InitKind,
    #[serde(default)]
    pub seed: u64,
    #[serde(default)]
    pub mean: f64,
    #[serde(default)]
    pub amplitude: f64,
    #[serde(default)]
    pub bubbles: Vec<Bubble>,
    #[serde(default)]
    pub velocity: VelocityInit,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SolverConfig {
    pub tol: f64,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub maxit: Option<usize>,
    #[serde(default = "default_backend")]
    pub backend: LinearBackend,
}

fn default_backend() -> LinearBackend {
    LinearBackend::Direct
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Format {
    Csv,
    Vtk,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct OutputConfig {
    pub dir: PathBuf,
    #[serde(default)]
    pub formats: Vec<Format>,
    /// Extra snapshot times, rounded to the nearest step.
    #[serde(default)]
    pub times: Vec<f64>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct RunConfig {
    pub domain: Domain,
    pub grid: GridSize,
    pub time: TimeConfig,
    pub model: ModelConfig,
    pub scheme: SchemeConfig,
    pub init: InitConfig,
    pub solver: SolverConfig,
    pub output: OutputConfig,
}

impl RunConfig {
    pub fn parse(text: &str) -> Result<Self, HarnessError> {
        let cfg: RunConfig = toml::from_str(text).map_err(|e| HarnessError::Config(e.to_string()))?;
        cfg.validate()?;
        Ok(cfg)
    }

    pub fn load(path: &Path) -> Result<Self, HarnessError> {
        let text = std::fs::read_to_string(path).map_err(|e| HarnessError::io(path, e))?;
        RunConfig::parse(&text)
    }

    /// Flat `section.key = value` lines, one per leaf.
    pub fn to_flat(&self) -> String {
        let value = toml::Value::try_from(self).expect("config serializes");
        let mut out = String::new();
        flatten("", &value, &mut out);
        out
    }

    pub fn validate(&self) -> Result<(), HarnessError> {
        let bad = |m: String| Err(HarnessError::Config(m));
        if !(self.time.dt > 0.0) {
            return bad(format!("time.dt must be positive, got {}", self.time.dt));
        }
        if !(self.time.t_end >= self.time.dt) {
            return bad(format!("time.t_end = {} is shorter than one step", self.time.t_end));
        }
        if self.init.kind == InitKind::Bubbles && self.init.bubbles.is_empty() {
            return bad("init.bubbles is empty".into());
        }
        if !(self.solver.tol > 0.0) {
            return bad(format!("solver.tol must be positive, got {}", self.solver.tol));
        }
        self.grid_obj()?;
        self.params()?;
        Ok(())
    }

    pub fn grid_obj(&self) -> Result<Grid, HarnessError> {
        Ok(Grid::new(self.grid.nx, self.grid.ny, self.domain.lx, self.domain.ly)?)
    }

    /// Model parameters; the auxiliary-variable time scale is `t_end`.
    pub fn params(&self) -> Result<ModelParams, HarnessError> {
        Ok(ModelParams::new(
            self.model.eta,
            self.model.lambda,
            self.model.mobility,
            self.model.nu,
            self.scheme.alpha,
            self.scheme.beta,
            self.time.dt,
            self.time.t_end,
        )?)
    }

    pub fn settings(&self) -> SolverSettings {
        SolverSettings {
            tol: self.solver.tol,
            maxit: self.solver.maxit,
            backend: self.solver.backend,
        }
    }

    pub fn n_steps(&self) -> usize {
        (self.time.t_end / self.time.dt).round() as usize
    }

    fn base(lx: f64, n: usize, dt: f64, t_end: f64, model: ModelConfig, init: InitConfig, dir: &str) -> Self {
        RunConfig {
            domain: Domain { lx, ly: lx },
            grid: GridSize { nx: n, ny: n },
            time: TimeConfig {
                dt,
                t_end,
                output_every: 0,
            },
            model,
            scheme: SchemeConfig {
                kind: SchemeKind::Acsav,
                alpha: 1.0,
                beta: 0.25,
            },
            init,
            solver: SolverConfig {
                tol: 1e-8,
                maxit: None,
                backend: LinearBackend::Direct,
            },
            output: OutputConfig {
                dir: PathBuf::from(dir),
                formats: vec![Format::Csv],
                times: Vec::new(),
            },
        }
    }

    /// Refinement level `l >= 1` of the convergence study on the unit square:
    /// `20 * 2^(l-1)` cells per axis, `dt = 0.01 / 2^(l-1)`, `t = 0.1`.
    pub fn convergence(level: u32, kind: SchemeKind) -> Self {
        let k = 1usize << (level - 1);
        let mut c = RunConfig::base(
            1.0,
            20 * k,
            0.01 / k as f64,
            0.1,
            ModelConfig {
                eta: 0.1,
                lambda: 1e-4,
                mobility: 10.0,
                nu: 0.8,
            },
            InitConfig {
                kind: InitKind::Cosine,
                seed: 0,
                mean: 0.0,
                amplitude: 0.0,
                bubbles: Vec::new(),
                velocity: VelocityInit::Stokes,
            },
            "out/converge",
        );
        c.scheme.kind = kind;
        c.solver.tol = 1e-10;
        c
    }

    /// Spinodal decomposition on `[0, 2 pi]^2` from a small random perturbation.
    pub fn spinodal() -> Self {
        RunConfig::base(
            2.0 * std::f64::consts::PI,
            80,
            0.01,
            5.0,
            ModelConfig {
                eta: 0.1,
                lambda: 0.01,
                mobility: 100.0,
                nu: 1.0,
            },
            InitConfig {
                kind: InitKind::Spinodal,
                seed: 1,
                mean: 0.0,
                amplitude: 0.001,
                bubbles: Vec::new(),
                velocity: VelocityInit::Rest,
            },
            "out/spinodal",
        )
    }

    /// A large and a small bubble on `[0, 2 pi]^2`; the small one shrinks away.
    pub fn bubble() -> Self {
        use std::f64::consts::PI;
        let mut c = RunConfig::base(
            2.0 * PI,
            256,
            0.025,
            1.5,
            ModelConfig {
                eta: 0.04,
                lambda: 0.01,
                mobility: 10.0,
                nu: 1.0,
            },
            InitConfig {
                kind: InitKind::Bubbles,
                seed: 0,
                mean: 0.0,
                amplitude: 0.0,
                bubbles: vec![
                    Bubble {
                        cx: PI - 0.8,
                        cy: PI,
                        radius: 1.4,
                        width_factor: 1.5,
                    },
                    Bubble {
                        cx: PI + 1.7,
                        cy: PI,
                        radius: 0.5,
                        width_factor: 1.5,
                    },
                ],
                velocity: VelocityInit::Rest,
            },
            "out/bubble",
        );
        c.output.times = vec![0.0, 0.5, 0.75, 1.0, 1.25];
        c
    }

    /// Two touching bubbles on `[0, 1.5]^2` relaxing into one.
    pub fn relax() -> Self {
        let b = |cx| Bubble {
            cx,
            cy: 0.75,
            radius: 0.25,
            width_factor: 1.0,
        };
        let mut c = RunConfig::base(
            1.5,
            80,
            0.005,
            0.9,
            ModelConfig {
                eta: 0.02,
                lambda: 0.01,
                mobility: 10.0,
                nu: 1.0,
            },
            InitConfig {
                kind: InitKind::Bubbles,
                seed: 0,
                mean: 0.0,
                amplitude: 0.0,
                bubbles: vec![b(0.5), b(1.0)],
                velocity: VelocityInit::Rest,
            },
            "out/relax",
        );
        c.output.times = vec![0.0, 0.1, 0.3, 0.6, 0.9];
        c
    }
}

fn flatten(prefix: &str, v: &toml::Value, out: &mut String) {
    match v {
        toml::Value::Table(t) => {
            for (k, child) in t {
                let key = if prefix.is_empty() {
                    k.clone()
                } else {
                    format!("{prefix}.{k}")
                };
                flatten(&key, child, out);
            }
        }
        leaf => {
            out.push_str(prefix);
            out.push_str(" = ");
            out.push_str(&leaf.to_string());
            out.push('\n');
        }
    }
}
