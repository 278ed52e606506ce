//! Acceptance suite. Runs the ten criteria in order and prints one PASS/FAIL
//! line for each, then the list of failed criteria. With `ACCEPTANCE_STRICT=1`
//! the process exits non-zero if any fails. Pass criterion numbers as
//! arguments to run a subset, e.g. `cargo test --test acceptance -- 3 7`.

mod common;

use std::collections::HashMap;
use std::f64::consts::PI;
use std::panic::{catch_unwind, AssertUnwindSafe};
use std::time::Instant;

use acns_core::diagnostics::{stability_bound, stability_energy};
use acns_core::grid::{inner_product, norm, FaceField, Grid, ScalarField, State};
use acns_core::harness::experiments::{bench, converge, first_drop, run_config, shape_study};
use acns_core::harness::RunConfig;
use acns_core::operators;
use acns_core::schemes::{residual, BootstrapOptions, SchemeKind};

use common::*;

const SCHEMES: [SchemeKind; 3] = [SchemeKind::Cnlfac, SchemeKind::Acsav, SchemeKind::AcsavEct];

struct Outcome {
    pass: bool,
    detail: String,
}

fn outcome(pass: bool, detail: impl Into<String>) -> Outcome {
    Outcome {
        pass,
        detail: detail.into(),
    }
}

/// What criteria 4-6 need from one spinodal run.
#[derive(Clone)]
struct SpinodalRecord {
    w: Vec<f64>,
    /// Largest `E_N - bound`, relative to the bound.
    excess: f64,
    min_a: f64,
    max_v_dev: f64,
    max_r_err: f64,
    error: Option<String>,
}

#[derive(Default)]
struct Runs {
    spinodal: HashMap<(SchemeKind, u64), SpinodalRecord>,
}

impl Runs {
    fn spinodal(&mut self, kind: SchemeKind, dt: f64) -> SpinodalRecord {
        self.spinodal
            .entry((kind, dt.to_bits()))
            .or_insert_with(|| spinodal_run(kind, dt))
            .clone()
    }
}

fn spinodal_run(kind: SchemeKind, dt: f64) -> SpinodalRecord {
    let mut cfg = RunConfig::spinodal();
    cfg.scheme.kind = kind;
    cfg.time.dt = dt;
    let prm = cfg.params().unwrap();
    let sav = kind.is_sav();
    // the bound is evaluated at the last two bootstrap levels
    let first = kind.bootstrap_steps();
    let mut prev: Option<State> = None;
    let mut bound = f64::NAN;
    let mut excess = f64::NEG_INFINITY;
    let mut w = Vec::new();
    let mut max_v_dev: f64 = 0.0;
    let mut max_r_err: f64 = 0.0;
    let res = run_config(&cfg, None, |s, row| {
        w.push(row.w);
        if s.n > first {
            max_v_dev = max_v_dev.max((row.v - 1.0).abs());
        }
        max_r_err = max_r_err.max((s.r - prm.r_exact(s.t)).abs());
        if let Some(p) = &prev {
            if s.n == first {
                bound = stability_bound(p, s, &prm, sav);
            } else if s.n > first {
                let e = stability_energy(p, s, &prm, sav);
                excess = excess.max((e - bound) / bound);
            }
        }
        prev = Some(s.clone());
    });
    match res {
        Ok(summary) => SpinodalRecord {
            w,
            excess,
            min_a: summary.sav_a.iter().cloned().fold(f64::INFINITY, f64::min),
            max_v_dev,
            max_r_err,
            error: None,
        },
        Err(e) => SpinodalRecord {
            w,
            excess,
            min_a: f64::NAN,
            max_v_dev,
            max_r_err,
            error: Some(e.to_string()),
        },
    }
}

fn random_scalar(g: Grid, rng: &mut Lcg) -> ScalarField {
    ScalarField::from_vec(g, (0..g.n_cells()).map(|_| rng.next()).collect()).unwrap()
}

fn random_face(g: Grid, rng: &mut Lcg) -> FaceField {
    FaceField::from_vec(g, (0..g.n_faces()).map(|_| rng.next()).collect()).unwrap()
}

fn identities(_: &mut Runs) -> Outcome {
    let grids = [
        Grid::new(8, 8, 1.0, 1.0).unwrap(),
        Grid::new(13, 10, 2.0, 1.3).unwrap(),
        Grid::new(32, 32, 2.0 * PI, 2.0 * PI).unwrap(),
        Grid::new(64, 48, 1.5, 1.0).unwrap(),
        Grid::new(64, 64, 1.0, 1.0).unwrap(),
    ];
    let mut rng = Lcg(2024);
    let (mut dual, mut gd, mut skew): (f64, f64, f64) = (0.0, 0.0, 0.0);
    for k in 0..100 {
        let g = grids[k % grids.len()];
        let h = g.hx.min(g.hy);
        let s = random_scalar(g, &mut rng);
        let v = random_face(g, &mut rng);
        let w = random_face(g, &mut rng);
        let lhs = inner_product(&operators::grad(&s), &v).unwrap();
        let rhs = inner_product(&s, &operators::div(&v)).unwrap();
        dual = dual.max((lhs + rhs).abs() / (norm(&s) * norm(&v) / h));
        let d = norm(&operators::div(&v));
        let pair = inner_product(&operators::graddiv(&v), &v).unwrap();
        gd = gd.max((pair + d * d).abs() / (d * d));
        let c = inner_product(&operators::convect_skew(&w, &v), &v).unwrap();
        skew = skew.max(c.abs() / (norm(&w) * norm(&v).powi(2) / h));
    }
    let worst = dual.max(gd).max(skew);
    outcome(
        worst <= 1e-12,
        format!("relative defects: duality {dual:.1e}, grad-div {gd:.1e}, skew {skew:.1e} (100 fields each)"),
    )
}

fn operator_order(_: &mut Runs) -> Outcome {
    let ns = [32, 64, 128];
    let sq = |n: usize| Grid::square(n, 2.0 * PI).unwrap();
    let max_cells = |f: &ScalarField, exact: &dyn Fn(f64, f64) -> f64| {
        let g = *f.grid();
        let mut e: f64 = 0.0;
        for j in 0..g.ny {
            for i in 0..g.nx {
                let (x, y) = g.cell_center(i, j);
                e = e.max((f.at(i, j) - exact(x, y)).abs());
            }
        }
        e
    };
    let lap_n: Vec<f64> = ns
        .iter()
        .map(|&n| {
            let f = ScalarField::from_fn(sq(n), |x, y| x.cos() * (2.0 * y).cos());
            max_cells(&operators::lap_neumann(&f), &|x, y| -5.0 * x.cos() * (2.0 * y).cos())
        })
        .collect();
    let lap_d: Vec<f64> = ns
        .iter()
        .map(|&n| {
            let g = sq(n);
            let a = |x: f64, y: f64| x.sin() * y.sin();
            let b = |x: f64, y: f64| (2.0 * x).sin() * y.sin();
            let v = FaceField::from_fns(g, a, b);
            let exact = FaceField::from_fns(g, |x, y| -2.0 * a(x, y), |x, y| -5.0 * b(x, y));
            (&operators::lap_dirichlet(&v) - &exact).max_abs()
        })
        .collect();
    let adv: Vec<f64> = ns
        .iter()
        .map(|&n| {
            let g = sq(n);
            let w = FaceField::from_fns(g, |x, y| x.sin() * y.cos(), |x, y| -x.cos() * y.sin());
            let s = ScalarField::from_fn(g, |x, y| x.cos() * (2.0 * y).cos());
            let exact = |x: f64, y: f64| {
                -x.sin() * y.cos() * x.sin() * (2.0 * y).cos() + x.cos() * y.sin() * x.cos() * 2.0 * (2.0 * y).sin()
            };
            max_cells(&operators::advect_scalar(&w, &s), &exact)
        })
        .collect();
    let ratios = |e: &[f64]| -> Vec<f64> { e.windows(2).map(|w| w[0] / w[1]).collect() };
    let all: Vec<(&str, Vec<f64>)> = vec![
        ("lap_neumann", ratios(&lap_n)),
        ("lap_dirichlet", ratios(&lap_d)),
        ("advect_scalar", ratios(&adv)),
    ];
    let pass = all.iter().all(|(_, r)| r.iter().all(|&x| x >= 3.5));
    let detail = all
        .iter()
        .map(|(n, r)| format!("{n} {:.2}/{:.2}", r[0], r[1]))
        .collect::<Vec<_>>()
        .join(", ");
    outcome(pass, format!("error ratios 32-64-128: {detail}"))
}

fn temporal_convergence(_: &mut Runs) -> Outcome {
    let mut pass = true;
    let mut parts = Vec::new();
    for kind in SCHEMES {
        match converge(kind, 4, None) {
            Ok(rows) => {
                let last = rows.last().unwrap();
                let r = [last.rate_phi, last.rate_u, last.rate_p].map(|v| v.unwrap_or(f64::NAN));
                pass &= r.iter().all(|&x| x >= 1.8);
                parts.push(format!("{kind} {:.2}/{:.2}/{:.2}", r[0], r[1], r[2]));
            }
            Err(e) => {
                pass = false;
                parts.push(format!("{kind} failed: {e}"));
            }
        }
    }
    outcome(pass, format!("finest rates grad phi/grad u/p: {}", parts.join(", ")))
}

fn stability(runs: &mut Runs) -> Outcome {
    let mut pass = true;
    let mut parts = Vec::new();
    for dt in [0.01, 0.1, 0.5] {
        for kind in SCHEMES {
            let r = runs.spinodal(kind, dt);
            let ok = r.error.is_none() && r.excess <= 1e-12;
            pass &= ok;
            match &r.error {
                Some(e) => parts.push(format!("{kind}@{dt}: {e}")),
                None => parts.push(format!("{kind}@{dt} {:.2e}", r.excess)),
            }
        }
    }
    outcome(
        pass,
        format!("max (E_N - bound)/bound over T = 5: {}", parts.join(", ")),
    )
}

fn energy_decay(runs: &mut Runs) -> Outcome {
    let mut pass = true;
    let mut parts = Vec::new();
    for kind in [SchemeKind::Cnlfac, SchemeKind::Acsav] {
        for dt in [0.01, 0.005, 0.0025, 0.00125] {
            let r = runs.spinodal(kind, dt);
            let w0 = r.w[0];
            let start = kind.bootstrap_steps();
            let rise = r.w[start..]
                .windows(2)
                .map(|p| (p[1] - p[0]) / w0)
                .fold(f64::NEG_INFINITY, f64::max);
            let ok = r.error.is_none() && rise <= 1e-8;
            pass &= ok;
            // reported only: each leap-frog parity chain on its own
            let chain = r.w[start..]
                .windows(3)
                .map(|p| (p[2] - p[0]) / w0)
                .fold(f64::NEG_INFINITY, f64::max);
            parts.push(format!("{kind}@{dt} {rise:.1e} (per parity {chain:.1e})"));
        }
    }
    outcome(pass, format!("largest step increase of W / W(0): {}", parts.join(", ")))
}

fn sav_health(runs: &mut Runs) -> Outcome {
    let dts = [0.01, 0.005, 0.0025, 0.00125];
    let mut pass = true;
    let mut parts = Vec::new();
    for kind in [SchemeKind::Acsav, SchemeKind::AcsavEct] {
        let recs: Vec<SpinodalRecord> = dts.iter().map(|&dt| runs.spinodal(kind, dt)).collect();
        let min_a = recs.iter().map(|r| r.min_a).fold(f64::INFINITY, f64::min);
        let v_dev = recs.iter().map(|r| r.max_v_dev).fold(0.0, f64::max);
        let errs: Vec<f64> = recs.iter().map(|r| r.max_r_err).collect();
        let rates: Vec<f64> = errs.windows(2).map(|w| (w[0] / w[1]).log2()).collect();
        let last = *rates.last().unwrap();
        let ok = recs.iter().all(|r| r.error.is_none()) && min_a > 0.0 && v_dev < 0.1 && last >= 1.8;
        pass &= ok;
        parts.push(format!(
            "{kind}: min A {min_a:.3e}, max |V-1| {v_dev:.2e}, r errors {:?} rates {:?}",
            errs.iter().map(|e| format!("{e:.2e}")).collect::<Vec<_>>(),
            rates.iter().map(|r| format!("{r:.2}")).collect::<Vec<_>>()
        ));
    }
    outcome(pass, parts.join("; "))
}

fn splitting(_: &mut Runs) -> Outcome {
    let mut worst: f64 = 0.0;
    let mut tol = 0.0;
    for n in [8, 16, 32, 64] {
        let st = stepper(n, unit_params(0.01, 0.1));
        tol = st.settings().tol;
        let mut rng = Lcg(n as u64 + 100);
        let phi_nm2 = random_phi(*st.grid(), &mut rng, 0.05);
        let prev = random_level(&st, &mut rng, 1);
        let cur = random_level(&st, &mut rng, 2);
        for explicit in [false, true] {
            let (next, _) = if explicit {
                st.acsav_ect_step(&phi_nm2, &prev, &cur).unwrap()
            } else {
                st.acsav_step(&phi_nm2, &prev, &cur).unwrap()
            };
            let b = residual::sav(&st, &phi_nm2, &prev, &cur, &next.phi, &next.u, next.r, explicit);
            worst = worst.max(residual::worst(&b));
        }
    }
    outcome(
        worst <= 10.0 * tol,
        format!(
            "worst relative residual {worst:.2e} against 10 x tol = {:.0e} on 8..64 grids",
            10.0 * tol
        ),
    )
}

fn dynamics(_: &mut Runs) -> Outcome {
    let mut pass = true;
    let mut parts = Vec::new();
    for kind in [SchemeKind::Cnlfac, SchemeKind::Acsav] {
        let mut cfg = RunConfig::bubble();
        cfg.scheme.kind = kind;
        cfg.output.times.clear();
        match shape_study(&cfg, 1, None) {
            Ok((_, samples)) => {
                let start = samples[0].components;
                let t = first_drop(&samples, 2);
                let ok = start == 2 && t.is_some_and(|t| (t - 1.25).abs() <= 0.15);
                pass &= ok;
                parts.push(format!(
                    "bubble {kind}: {start} components at t = 0, small one gone at t = {t:?}"
                ));
            }
            Err(e) => {
                pass = false;
                parts.push(format!("bubble {kind} failed: {e}"));
            }
        }
        let mut cfg = RunConfig::relax();
        cfg.scheme.kind = kind;
        cfg.output.times.clear();
        let every = 10;
        match shape_study(&cfg, every, None) {
            Ok((_, samples)) => {
                let merged = samples.iter().position(|s| s.components == 1);
                let merged_by = merged.map(|k| samples[k].t);
                let mut ok = merged_by.is_some_and(|t| t <= 0.6 + 1e-9);
                let mut rise = f64::NEG_INFINITY;
                // Allen-Cahn does not conserve area: the merged drop shrinks
                // and vanishes before the end. Its shape is judged while it
                // still covers a resolved share of the initial area.
                let resolved = samples
                    .iter()
                    .position(|s| s.area < 0.05 * samples[0].area)
                    .unwrap_or(samples.len());
                if let Some(k) = merged.filter(|&k| k < resolved) {
                    let after = &samples[k..resolved];
                    ok &= after.iter().all(|s| s.components == 1);
                    rise = after
                        .windows(2)
                        .map(|w| w[1].isoperimetric - w[0].isoperimetric)
                        .fold(f64::NEG_INFINITY, f64::max);
                    ok &= rise <= 0.0;
                } else {
                    ok = false;
                }
                pass &= ok;
                parts.push(format!(
                    "relax {kind}: one component from t = {merged_by:?} ({} at t = 0), ratio {:.4} -> {:.4} at t = {:.2}, largest rise {rise:.1e}",
                    samples[0].components,
                    samples[merged.unwrap_or(0)].isoperimetric,
                    samples[resolved.max(1) - 1].isoperimetric,
                    samples[resolved.max(1) - 1].t
                ));
            }
            Err(e) => {
                pass = false;
                parts.push(format!("relax {kind} failed: {e}"));
            }
        }
    }
    outcome(pass, parts.join("; "))
}

fn efficiency(_: &mut Runs) -> Outcome {
    match bench(3, None) {
        Ok(rows) => {
            let mut pass = true;
            let mut parts = Vec::new();
            for case in ["spinodal", "relax"] {
                let t = |k: SchemeKind| rows.iter().find(|r| r.case == case && r.scheme == k).unwrap().seconds;
                let (c, a, e) = (t(SchemeKind::Cnlfac), t(SchemeKind::Acsav), t(SchemeKind::AcsavEct));
                pass &= e < a && a < c && a / c < 0.6;
                parts.push(format!(
                    "{case}: cnlfac {c:.1}s, acsav {a:.1}s ({:.2}), acsav-ect {e:.1}s ({:.2})",
                    a / c,
                    e / c
                ));
            }
            outcome(pass, parts.join("; "))
        }
        Err(e) => outcome(false, format!("benchmark failed: {e}")),
    }
}

fn oracles(_: &mut Runs) -> Outcome {
    let prm = unit_params(0.01, 0.1);
    let st = stepper(8, prm).with_bootstrap_options(BootstrapOptions {
        picard_tol: 1e-12,
        ..BootstrapOptions::default()
    });
    let mut worst: Vec<(&str, f64)> = Vec::new();
    let mut rng = Lcg(77);

    let phi0 = random_phi(*st.grid(), &mut rng, 0.1);
    let (u, p) = st.stokes_init(&phi0).unwrap();
    let (uo, po) = oracle_stokes(&st, &phi0);
    worst.push((
        "stokes",
        max_diff(u.values(), uo.values()).max(max_diff(p.values(), po.values())),
    ));

    let cur = random_level(&st, &mut rng, 0);
    let (next, _) = st.bootstrap_step(&cur).unwrap();
    let (phi, u, p) = oracle_bootstrap(&st, &cur);
    let d = max_diff(next.phi.values(), phi.values())
        .max(max_diff(next.u.values(), u.values()))
        .max(max_diff(next.p.values(), p.values()));
    worst.push(("bootstrap", d));

    let phi_nm2 = random_phi(*st.grid(), &mut rng, 0.05);
    let prev = random_level(&st, &mut rng, 1);
    let cur = random_level(&st, &mut rng, 2);
    let (next, _) = st.cnlfac_step(&prev, &cur).unwrap();
    let (phi, u) = oracle_cnlfac(&st, &prev, &cur);
    worst.push((
        "cnlfac",
        max_diff(next.phi.values(), phi.values()).max(max_diff(next.u.values(), u.values())),
    ));
    for explicit in [false, true] {
        let (next, _) = if explicit {
            st.acsav_ect_step(&phi_nm2, &prev, &cur).unwrap()
        } else {
            st.acsav_step(&phi_nm2, &prev, &cur).unwrap()
        };
        let (phi, u, r) = oracle_sav(&st, &phi_nm2, &prev, &cur, explicit);
        let d = max_diff(next.phi.values(), phi.values())
            .max(max_diff(next.u.values(), u.values()))
            .max((next.r - r).abs());
        worst.push((if explicit { "acsav-ect" } else { "acsav" }, d));
    }
    let pass = worst.iter().all(|(_, d)| *d <= 1e-9);
    let detail = worst
        .iter()
        .map(|(n, d)| format!("{n} {d:.1e}"))
        .collect::<Vec<_>>()
        .join(", ");
    outcome(pass, format!("max deviation from dense solves on 8x8: {detail}"))
}

type Criterion = (usize, &'static str, fn(&mut Runs) -> Outcome);

fn main() {
    let wanted: Vec<usize> = std::env::args().skip(1).filter_map(|a| a.parse().ok()).collect();
    let criteria: [Criterion; 10] = [
        (1, "operator identities", identities),
        (2, "second-order operators", operator_order),
        (3, "temporal convergence", temporal_convergence),
        (4, "unconditional stability", stability),
        (5, "energy decay", energy_decay),
        (6, "SAV health", sav_health),
        (7, "splitting faithfulness", splitting),
        (8, "dynamics proxies", dynamics),
        (9, "efficiency ordering", efficiency),
        (10, "oracle equivalence", oracles),
    ];
    let mut runs = Runs::default();
    let mut failed = Vec::new();
    for (k, name, f) in criteria {
        if !wanted.is_empty() && !wanted.contains(&k) {
            continue;
        }
        let start = Instant::now();
        let o = catch_unwind(AssertUnwindSafe(|| f(&mut runs))).unwrap_or_else(|_| outcome(false, "panicked"));
        println!(
            "criterion {k:>2} {}: {name} [{:.0}s] {}",
            if o.pass { "PASS" } else { "FAIL" },
            start.elapsed().as_secs_f64(),
            o.detail
        );
        if !o.pass {
            failed.push(k);
        }
    }
    println!("failed criteria: {failed:?}");
    if !failed.is_empty() && std::env::var("ACCEPTANCE_STRICT").is_ok_and(|v| v == "1") {
        std::process::exit(1);
    }
}
