//! Experiment drivers: single runs, the refinement study, the bubble and
//! relaxation shape studies, and the timing benchmark.

use std::fmt::Write as _;
use std::path::Path;
use std::time::Instant;

use crate::diagnostics::{cauchy_difference, free_energy, rates, CauchyNorm, DiagnosticsRow};
use crate::grid::{FaceField, ScalarField, State};
use crate::schemes::{RunError, SchemeKind, StepInfo, Stepper};

use super::config::{Format, InitKind, RunConfig, VelocityInit};
use super::init::{init_bubbles, init_cosine, init_spinodal};
use super::metrics::{area_perimeter, components};
use super::output::{field_csv_string, vtk_string, OutputDir};
use super::HarnessError;

/// Level set separating the two phases in the shape metrics. The bubble
/// initial data takes values near -1 and 1, so the midpoint 0 is used.
pub const PHASE_THRESHOLD: f64 = 0.0;

const NOTES: &[&str] = &[
    "finite-volume MAC discretization; velocity walls are no-slip, phase field is zero-flux",
    "the auxiliary variable time scale T equals time.t_end",
];

pub fn initial_phi(cfg: &RunConfig) -> Result<ScalarField, HarnessError> {
    let g = cfg.grid_obj()?;
    Ok(match cfg.init.kind {
        InitKind::Cosine => init_cosine(g),
        InitKind::Spinodal => init_spinodal(g, cfg.init.mean, cfg.init.amplitude, cfg.init.seed),
        InitKind::Bubbles => init_bubbles(g, cfg.model.eta, &cfg.init.bubbles),
    })
}

/// Level 0 of `cfg`: the initial phase field with either a fluid at rest or
/// the Stokes flow it drives.
pub fn initial_state(cfg: &RunConfig, stepper: &Stepper) -> Result<State, HarnessError> {
    let phi = initial_phi(cfg)?;
    Ok(match cfg.init.velocity {
        VelocityInit::Stokes => stepper.initial_state(phi)?,
        VelocityInit::Rest => {
            let g = *phi.grid();
            State::initial(phi, FaceField::zeros(g), ScalarField::zeros(g), stepper.params())
        }
    })
}

/// What a run produced.
#[derive(Debug, Clone)]
pub struct RunSummary {
    pub rows: Vec<DiagnosticsRow>,
    /// SAV coefficient `A` of every SAV step.
    pub sav_a: Vec<f64>,
    pub final_state: State,
    /// Wall time of the time loop (excluding the initial Stokes solve).
    pub seconds: f64,
}

/// Steps at which snapshots are due: every `output_every` steps plus the
/// requested times rounded to the nearest step.
fn snapshot_steps(cfg: &RunConfig) -> Result<Vec<usize>, HarnessError> {
    let n = cfg.n_steps();
    let mut steps: Vec<usize> = Vec::new();
    if cfg.time.output_every > 0 {
        steps.extend((0..=n).step_by(cfg.time.output_every));
    }
    for &t in &cfg.output.times {
        let k = (t / cfg.time.dt).round();
        if (k * cfg.time.dt - t).abs() > 0.5 * cfg.time.dt || k < 0.0 || k as usize > n {
            return Err(HarnessError::Config(format!("snapshot time {t} is outside the run")));
        }
        steps.push(k as usize);
    }
    steps.sort_unstable();
    steps.dedup();
    Ok(steps)
}

/// Runs `cfg` from its initial data. Files go to `out` when given; `hook`
/// sees every level with its diagnostics row.
pub fn run_config(
    cfg: &RunConfig,
    out: Option<&Path>,
    hook: impl FnMut(&State, &DiagnosticsRow),
) -> Result<RunSummary, HarnessError> {
    cfg.validate()?;
    let stepper = Stepper::new(cfg.grid_obj()?, cfg.params()?, cfg.settings())?;
    let init = initial_state(cfg, &stepper)?;
    run_from(cfg, &stepper, init, out, hook)
}

/// Like [`run_config`] from a given level-0 state.
pub fn run_from(
    cfg: &RunConfig,
    stepper: &Stepper,
    init: State,
    out: Option<&Path>,
    mut hook: impl FnMut(&State, &DiagnosticsRow),
) -> Result<RunSummary, HarnessError> {
    let params = *stepper.params();
    let snaps = snapshot_steps(cfg)?;
    let mut dir = out.map(OutputDir::create).transpose()?;
    let mut rows = Vec::new();
    let mut sav_a = Vec::new();
    let mut energy = format!("{}\n", DiagnosticsRow::HEADER);
    let mut drift = String::from("n,t,W_free,q_drift\n");
    let start = Instant::now();
    let observe = |s: &State, info: &StepInfo| -> Result<(), HarnessError> {
        let row = DiagnosticsRow::new(s, &params, info);
        if !row.is_finite() {
            return Err(HarnessError::NonFinite(s.n));
        }
        if let Some(w) = &info.sav {
            sav_a.push(w.a);
        }
        hook(s, &row);
        if let Some(d) = dir.as_mut() {
            energy.push_str(&row.csv_line());
            energy.push('\n');
            let q_drift = s
                .phi
                .values()
                .iter()
                .zip(s.q.values())
                .fold(0.0f64, |m, (&p, &q)| m.max((q - params.q_of(p)).abs()));
            let _ = writeln!(
                drift,
                "{},{:.17e},{:.17e},{:.6e}",
                s.n,
                s.t,
                free_energy(s, &params),
                q_drift
            );
            if snaps.binary_search(&s.n).is_ok() {
                for f in &cfg.output.formats {
                    match f {
                        Format::Vtk => d.write(&format!("fields/state_{:06}.vtk", s.n), &vtk_string(s))?,
                        Format::Csv => d.write(&format!("fields/state_{:06}.csv", s.n), &field_csv_string(s))?,
                    };
                }
            }
        }
        rows.push(row);
        Ok(())
    };
    let final_state = match stepper.run(cfg.scheme.kind, init, cfg.n_steps(), observe) {
        Ok(s) => s,
        Err(RunError::Scheme(e)) => return Err(e.into()),
        Err(RunError::Observer(e)) => return Err(e),
    };
    let seconds = start.elapsed().as_secs_f64();
    if let Some(d) = dir.as_mut() {
        d.write("energy.csv", &energy)?;
        d.write("energy_free.csv", &drift)?;
        d.write_manifest(&cfg.to_flat(), NOTES)?;
    }
    Ok(RunSummary {
        rows,
        sav_a,
        final_state,
        seconds,
    })
}

/// One line of `rates.csv`: differences between level `l` and `l + 1` and
/// the observed order against the previous pair.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct RateRow {
    pub level: u32,
    pub dphi: f64,
    pub rate_phi: Option<f64>,
    pub du: f64,
    pub rate_u: Option<f64>,
    pub dp: f64,
    pub rate_p: Option<f64>,
}

pub const RATES_HEADER: &str = "level,dphi,rate_phi,du,rate_u,dp,rate_p";

pub fn rates_csv(rows: &[RateRow]) -> String {
    let f = |r: Option<f64>| r.map_or(String::new(), |v| format!("{v:.4}"));
    let mut s = format!("{RATES_HEADER}\n");
    for r in rows {
        let _ = writeln!(
            s,
            "{},{:.6e},{},{:.6e},{},{:.6e},{}",
            r.level,
            r.dphi,
            f(r.rate_phi),
            r.du,
            f(r.rate_u),
            r.dp,
            f(r.rate_p)
        );
    }
    s
}

/// Refinement study on levels `1..=levels` of [`RunConfig::convergence`].
pub fn converge(kind: SchemeKind, levels: u32, out: Option<&Path>) -> Result<Vec<RateRow>, HarnessError> {
    if kind == SchemeKind::Bootstrap || levels < 2 {
        return Err(HarnessError::Config(
            "the refinement study needs a multistep scheme and at least 2 levels".into(),
        ));
    }
    let mut finals = Vec::new();
    for level in 1..=levels {
        let cfg = RunConfig::convergence(level, kind);
        let sub = out.map(|p| p.join(format!("level{level}")));
        let s = run_config(&cfg, sub.as_deref(), |_, _| {}).map_err(|e| HarnessError::Level {
            level,
            source: Box::new(e),
        })?;
        log::info!("{kind} level {level}: {} steps in {:.2}s", cfg.n_steps(), s.seconds);
        finals.push(s.final_state);
    }
    let mut d = [Vec::new(), Vec::new(), Vec::new()];
    for w in finals.windows(2) {
        for (k, norm) in [CauchyNorm::GradPhi, CauchyNorm::GradU, CauchyNorm::PressureL2]
            .into_iter()
            .enumerate()
        {
            d[k].push(cauchy_difference(&w[0], &w[1], norm)?);
        }
    }
    let r: Vec<Vec<f64>> = d.iter().map(|v| rates(v)).collect();
    let rows: Vec<RateRow> = (0..d[0].len())
        .map(|i| {
            let rate = |k: usize| if i == 0 { None } else { Some(r[k][i - 1]) };
            RateRow {
                level: i as u32 + 1,
                dphi: d[0][i],
                rate_phi: rate(0),
                du: d[1][i],
                rate_u: rate(1),
                dp: d[2][i],
                rate_p: rate(2),
            }
        })
        .collect();
    if let Some(p) = out {
        let mut dir = OutputDir::create(p)?;
        dir.write("rates.csv", &rates_csv(&rows))?;
        let cfg = RunConfig::convergence(1, kind);
        dir.write_manifest(
            &cfg.to_flat(),
            &[
                "unit-square domain; level l uses 20*2^(l-1) cells per axis and dt = 0.01/2^(l-1)",
                "Cauchy differences use cubic prolongation of the coarse level",
            ],
        )?;
    }
    Ok(rows)
}

/// Number of components of `{phi > 0}` over time.
#[derive(Debug, Clone, PartialEq)]
pub struct ShapeSample {
    pub t: f64,
    pub components: usize,
    pub area: f64,
    pub isoperimetric: f64,
}

/// Runs `cfg` and records the phase-region shape every `every` steps.
pub fn shape_study(
    cfg: &RunConfig,
    every: usize,
    out: Option<&Path>,
) -> Result<(RunSummary, Vec<ShapeSample>), HarnessError> {
    let mut samples = Vec::new();
    let summary = run_config(cfg, out, |s, _| {
        if s.n % every.max(1) == 0 {
            let (area, perimeter) = area_perimeter(&s.phi, PHASE_THRESHOLD);
            samples.push(ShapeSample {
                t: s.t,
                components: components(&s.phi, PHASE_THRESHOLD).len(),
                area,
                isoperimetric: if area > 0.0 {
                    perimeter * perimeter / (4.0 * std::f64::consts::PI * area)
                } else {
                    f64::NAN
                },
            });
        }
    })?;
    if let Some(p) = out {
        let mut s = String::from("t,components,area,isoperimetric\n");
        for x in &samples {
            let _ = writeln!(s, "{:.6},{},{:.8},{:.8}", x.t, x.components, x.area, x.isoperimetric);
        }
        std::fs::write(p.join("shape.csv"), s).map_err(|e| HarnessError::io(p, e))?;
    }
    Ok((summary, samples))
}

/// First sampled time at which fewer than `from` components remain.
pub fn first_drop(samples: &[ShapeSample], from: usize) -> Option<f64> {
    samples.iter().find(|s| s.components < from).map(|s| s.t)
}

#[derive(Debug, Clone, PartialEq)]
pub struct BenchRow {
    pub case: &'static str,
    pub scheme: SchemeKind,
    pub steps: usize,
    pub seconds: f64,
    /// Time relative to CNLFAC on the same case.
    pub relative: f64,
}

/// The benchmark cases: spinodal decomposition (T = 5) and two-bubble
/// relaxation (T = 0.9), both on 80 x 80 grids.
pub fn bench_cases() -> Vec<(&'static str, RunConfig)> {
    vec![("spinodal", RunConfig::spinodal()), ("relax", RunConfig::relax())]
}

/// Times the three schemes on each case from a shared initial state. The
/// schemes run in turn `rounds` times and each keeps its fastest run, so
/// interference from other load on the machine is not charged to one scheme.
pub fn bench(rounds: usize, out: Option<&Path>) -> Result<Vec<BenchRow>, HarnessError> {
    let mut rows = Vec::new();
    for (case, base) in bench_cases() {
        rows.extend(bench_case(case, &base, rounds)?);
    }
    if let Some(p) = out {
        let mut dir = OutputDir::create(p)?;
        let mut s = String::from("case,scheme,steps,seconds,relative_to_cnlfac\n");
        for r in &rows {
            let _ = writeln!(
                s,
                "{},{},{},{:.4},{:.4}",
                r.case, r.scheme, r.steps, r.seconds, r.relative
            );
        }
        dir.write("bench.csv", &s)?;
        dir.write_manifest(
            &RunConfig::spinodal().to_flat(),
            &["timings are wall-clock seconds of the time loop, fastest of the rounds"],
        )?;
    }
    Ok(rows)
}

pub fn bench_case(case: &'static str, base: &RunConfig, rounds: usize) -> Result<Vec<BenchRow>, HarnessError> {
    let stepper = Stepper::new(base.grid_obj()?, base.params()?, base.settings())?;
    let init = initial_state(base, &stepper)?;
    let kinds = [SchemeKind::Cnlfac, SchemeKind::Acsav, SchemeKind::AcsavEct];
    let mut rows: Vec<BenchRow> = kinds
        .iter()
        .map(|&kind| BenchRow {
            case,
            scheme: kind,
            steps: base.n_steps(),
            seconds: f64::INFINITY,
            relative: 0.0,
        })
        .collect();
    for round in 0..rounds.max(1) {
        for row in &mut rows {
            let mut cfg = base.clone();
            cfg.scheme.kind = row.scheme;
            cfg.output.times.clear();
            // fresh stepper so no factorization is shared between schemes
            let st = Stepper::new(cfg.grid_obj()?, cfg.params()?, cfg.settings())?;
            let s = run_from(&cfg, &st, init.clone(), None, |_, _| {})?;
            log::info!("bench {case} {} round {}: {:.2}s", row.scheme, round + 1, s.seconds);
            row.seconds = row.seconds.min(s.seconds);
        }
    }
    let base_t = rows[0].seconds;
    for r in &mut rows {
        r.relative = r.seconds / base_t;
    }
    Ok(rows)
}
