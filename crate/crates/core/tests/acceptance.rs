//! Acceptance gate. Each criterion prints one PASS/FAIL line; the binary
//! exits non-zero if any criterion fails.

mod common;

use std::panic::{catch_unwind, AssertUnwindSafe};
use std::path::Path;
use std::process::Command;
use std::time::Instant;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;

use stt_core::avoidance::{intersection_interval, schedule, ObstaclePlan};
use stt_core::controller::{control_input, gain_matrix, normalized_error, transformed_error, ControllerConfig, TubeFrame};
use stt_core::geometry::{HyperRect, Interval};
use stt_core::metrics::baseline_tube;
use stt_core::pipeline::{compare, run_closed_loop, synthesize};
use stt_core::reach_tube::LevelProfile;
use stt_core::scenario::{RasTask, TaskGeometry, TubeParams};
use stt_core::stt::{evolve_tube, smoothness_check, verify_tube, Tube};
use stt_core::SttError;

use common::{case_study, case_study_path, random_task, Rejections};

type Outcome = Result<String, String>;

fn ensure(ok: bool, msg: impl FnOnce() -> String) -> Result<(), String> {
    if ok {
        Ok(())
    } else {
        Err(msg())
    }
}

/// The bundled scenario plus 200 generated ones, with their plans and tubes.
struct Suite {
    cases: Vec<(String, RasTask, TubeParams, Vec<ObstaclePlan>, Tube)>,
    rejected: Rejections,
}

fn build_suite() -> Result<Suite, String> {
    let sc = case_study();
    let mut specs = vec![("casestudy_omni".to_string(), sc.task.clone(), sc.params)];
    let mut rng = ChaCha8Rng::seed_from_u64(0x5771);
    let mut rejected = Rejections::default();
    for k in 0..200 {
        let n = if k % 2 == 0 { 2 } else { 3 };
        let (task, params) = random_task(&mut rng, n, &mut rejected);
        specs.push((format!("random#{k} (n = {n})"), task, params));
    }
    let cases = specs
        .into_par_iter()
        .map(|(name, task, params)| {
            let geom = TaskGeometry::new(&task).map_err(|e| format!("{name}: {e}"))?;
            let plans = schedule(&task, &geom, &params).map_err(|e| format!("{name}: {e}"))?;
            let tube = evolve_tube(&task, &geom, &plans, &params).map_err(|e| format!("{name}: {e}"))?;
            Ok((name, task, params, plans, tube))
        })
        .collect::<Result<Vec<_>, String>>()?;
    Ok(Suite { cases, rejected })
}

fn criterion_1(suite: &Suite) -> Outcome {
    let failures: Vec<String> = suite
        .cases
        .par_iter()
        .filter_map(|(name, task, _, _, tube)| {
            if tube.len() < 8000 {
                return Some(format!("{name}: only {} samples", tube.len()));
            }
            let r = verify_tube(tube, task).ok()?;
            (!r.pass()).then(|| {
                format!(
                    "{name}: S {:.3e} T {:.3e} U {:.3e} order {:.3e}",
                    r.starts_in_initial.worst_margin, r.ends_in_target.worst_margin, r.avoids_unsafe.worst_margin, r.well_ordered.worst_margin
                )
            })
        })
        .collect();
    let detours: usize = suite.cases.iter().map(|c| c.3.len()).sum();
    let r = suite.rejected;
    ensure(failures.is_empty(), || format!("{} of {} tubes fail: {}", failures.len(), suite.cases.len(), failures.join("; ")))?;
    Ok(format!(
        "{} tubes verified, {} detours (generator rejected {} invalid, {} assumption, {} no-detour candidates)",
        suite.cases.len(),
        detours,
        r.structure,
        r.assumptions,
        r.no_detour
    ))
}

/// `ρ̇` written out from the ODE, integrated with classic RK4.
fn rk4_margin(start: f64, end: f64, t_c: f64, t_end: f64, steps: usize) -> Vec<(f64, f64)> {
    let f = |t: f64| {
        if t >= t_c {
            return 0.0;
        }
        let r = t_c - t;
        let c = (t / r).cosh();
        t_c * (end - start) / (r * r) / (c * c)
    };
    let h = t_end / steps as f64;
    let mut y = start;
    let mut out = vec![(0.0, y)];
    for k in 0..steps {
        let t = k as f64 * h;
        let (k1, k2, k4) = (f(t), f(t + 0.5 * h), f(t + h));
        y += h / 6.0 * (k1 + 4.0 * k2 + k4);
        out.push((t + h, y));
    }
    out
}

fn criterion_2() -> Outcome {
    let mut rng = ChaCha8Rng::seed_from_u64(2);
    let mut worst = 0.0f64;
    for _ in 0..50 {
        let start = rng.gen_range(-10.0..10.0);
        let end = start + rng.gen_range(-20.0..20.0);
        let t_c = rng.gen_range(1.0..200.0);
        let p = LevelProfile::new(start, end, t_c);
        let scale = (end - start).abs();
        for (t, y) in rk4_margin(start, end, t_c, 0.999 * t_c, 200_000) {
            worst = worst.max((p.value(t) - y).abs() / scale);
        }
    }
    ensure(worst <= 1e-6, || format!("relative error {worst:.3e} > 1e-6"))?;
    Ok(format!("50 margins, max error {worst:.2e}·|T̲ - S̲|"))
}

/// Band-overlap window on a uniform grid.
fn grid_window(geom: &TaskGeometry, u: &HyperRect, t_c: f64, samples: usize) -> Option<(f64, f64)> {
    let mut first = None;
    let mut last = None;
    for s in 0..=samples {
        let t = t_c * s as f64 / samples as f64;
        let hit = (0..geom.dim()).all(|i| {
            let lo = geom.margin.rho(i, t);
            lo <= u.interval(i).hi() && lo + geom.band[i] >= u.interval(i).lo()
        });
        if hit {
            first.get_or_insert(t);
            last = Some(t);
        }
    }
    first.zip(last)
}

fn criterion_3() -> Outcome {
    let samples = 100_000;
    let mut rng = ChaCha8Rng::seed_from_u64(3);
    let mut pairs = Vec::new();
    while pairs.len() < 200 {
        let n = rng.gen_range(2..=3);
        let task = common::random_task_candidate(&mut rng, n);
        if task.check().is_err() {
            continue;
        }
        let geom = TaskGeometry::new(&task).unwrap();
        // independent obstacle near the swept band
        let t = rng.gen_range(0.0..task.t_c);
        let dims = (0..n)
            .map(|i| {
                let c = geom.margin.rho(i, t) + rng.gen_range(-1.0..1.5);
                let h = rng.gen_range(0.05..0.8);
                Interval::new(c - h, c + h).unwrap()
            })
            .collect();
        pairs.push((task, geom, HyperRect::new(dims)));
    }
    let results: Vec<Result<bool, String>> = pairs
        .par_iter()
        .enumerate()
        .map(|(k, (task, geom, u))| {
            let step = task.t_c / samples as f64;
            let got = intersection_interval(geom, u, task.t_c);
            let want = grid_window(geom, u, task.t_c, samples);
            match (got, want) {
                (None, None) => Ok(false),
                (Some(a), Some(b)) => {
                    let (d0, d1) = ((a.0 - b.0).abs(), (a.1 - b.1).abs());
                    if d0 <= step && d1 <= step {
                        Ok(true)
                    } else {
                        Err(format!("pair {k}: [{:.6}, {:.6}] vs grid [{:.6}, {:.6}]", a.0, a.1, b.0, b.1))
                    }
                }
                (a, b) => Err(format!("pair {k}: classification differs ({a:?} vs grid {b:?})")),
            }
        })
        .collect();
    let errors: Vec<_> = results.iter().filter_map(|r| r.as_ref().err().cloned()).collect();
    ensure(errors.is_empty(), || errors.join("; "))?;
    let hits = results.iter().filter(|r| matches!(r, Ok(true))).count();
    Ok(format!("200 pairs ({hits} non-empty, {} empty) agree with the 1e5-sample grid", 200 - hits))
}

fn criterion_4(suite: &Suite) -> Outcome {
    let mut worst_in = 0.0f64;
    let mut worst_hold = 0.0f64;
    let mut worst_return = 0.0f64;
    let mut failures = Vec::new();
    let mut count = 0;
    for (name, task, params, plans, tube) in &suite.cases {
        let geom = TaskGeometry::new(task).unwrap();
        for (idx, p) in plans.iter().enumerate() {
            count += 1;
            let k = p.k;
            let tol = 1e-3 * ((p.psi - p.rho_t1).abs() + 1.0);
            let at_in = (tube.frame(p.t_in).lower[k] - p.psi).abs();
            let (a, b) = (tube.index_at(p.t_in).max(1), tube.index_at(p.t_out));
            let hold = (a..=b)
                .map(|s| (tube.lower_at(s)[k] - p.psi).abs())
                .fold(0.0, f64::max);
            let t_ret = (p.t2 + params.delta_t).min(task.t_c);
            let ret = (tube.frame(t_ret).lower[k] - geom.margin.rho(k, t_ret)).abs();
            let next_starts = plans.get(idx + 1).is_some_and(|q| q.t1 - params.delta_t < t_ret);
            worst_in = worst_in.max(at_in / tol);
            worst_hold = worst_hold.max(hold / tol);
            worst_return = worst_return.max(ret / tol);
            if at_in > tol || hold > tol || ret > tol {
                failures.push(format!(
                    "{name} obstacle {}: |γ(t_in)-ψ| {at_in:.2e}, hold {hold:.2e}, return {ret:.2e}, tol {tol:.2e}{}",
                    p.obstacle,
                    if next_starts { " (next detour already starting)" } else { "" }
                ));
            }
        }
    }
    ensure(failures.is_empty(), || {
        format!(
            "{} of {count} detours out of tolerance (worst/tol: t_in {worst_in:.2}, hold {worst_hold:.2}, return {worst_return:.2}); first: {}",
            failures.len(),
            failures.iter().take(3).cloned().collect::<Vec<_>>().join("; ")
        )
    })?;
    Ok(format!(
        "{count} detours; worst error/tolerance: t_in {worst_in:.3}, hold {worst_hold:.3}, return {worst_return:.3}"
    ))
}

fn criterion_5() -> Outcome {
    let sc = case_study();
    let syn = synthesize(&sc).map_err(|e| e.to_string())?;
    let start = Instant::now();
    let runs: Vec<_> = (0..50u64)
        .into_par_iter()
        .map(|seed| {
            let mut s = sc.clone();
            s.disturbance.seed = seed;
            run_closed_loop(&s, &syn, &syn.tube, &s.sim).map(|t| (seed, t))
        })
        .collect::<Result<_, _>>()
        .map_err(|e| e.to_string())?;
    let elapsed = start.elapsed().as_secs_f64();
    let mut bad = Vec::new();
    for (seed, t) in &runs {
        let f = &t.flags;
        if !f.all() || t.failure.is_some() || t.max_disturbance > sc.disturbance.bound || !(t.min_gain_eigenvalue > 0.0) {
            bad.push(format!("seed {seed}: {f:?} {:?}", t.failure));
        }
    }
    ensure(bad.is_empty(), || bad.join("; "))?;
    let min_eig = runs.iter().map(|r| r.1.min_gain_eigenvalue).fold(f64::INFINITY, f64::min);
    Ok(format!(
        "50 seeds, ‖w‖∞ ≤ {}, κ = {}, dt = {}: reached, safe, contained and stayed in every run; min eig(g_s) {min_eig:.4}; {elapsed:.1} s",
        sc.disturbance.bound, sc.controller.kappa, sc.sim.dt
    ))
}

fn criterion_6() -> Outcome {
    let frame = TubeFrame::new(vec![1.0, -2.0], vec![3.0, 2.0]);
    let cfg = ControllerConfig::new(1.0);
    let center = [2.0, 0.0];
    let u0 = control_input(&center, &frame, &cfg, 0.0).map_err(|e| e.to_string())?;
    ensure(u0.iter().all(|&u| u == 0.0), || format!("u at centre {u0:?}"))?;

    let eps = transformed_error(&[0.5], 0.0).unwrap()[0];
    ensure((eps - 3f64.ln()).abs() <= 1e-12, || format!("ε(0.5) = {eps}"))?;
    let xi = gain_matrix(&[0.5], &TubeFrame::new(vec![1.0], vec![3.0]), 0.0).unwrap()[0];
    ensure((xi - 8.0 / 3.0).abs() <= 1e-12, || format!("ξ = {xi}"))?;

    let mut rng = ChaCha8Rng::seed_from_u64(6);
    for _ in 0..10_000 {
        let x = [rng.gen_range(1.0 + 1e-9..3.0 - 1e-9), rng.gen_range(-2.0 + 1e-9..2.0 - 1e-9)];
        let e = normalized_error(&x, &frame);
        let u = control_input(&x, &frame, &cfg, 0.0).unwrap();
        for i in 0..2 {
            ensure(u[i] * e[i] <= 0.0, || format!("u·e > 0 at {x:?}"))?;
        }
        let kappa = rng.gen_range(0.1..10.0);
        let u1 = control_input(&x, &frame, &ControllerConfig::new(kappa), 0.0).unwrap();
        let u2 = control_input(&x, &frame, &ControllerConfig::new(2.0 * kappa), 0.0).unwrap();
        ensure(u1.iter().zip(&u2).all(|(a, b)| 2.0 * a == *b), || format!("κ-linearity broken at {x:?}"))?;
    }
    match control_input(&[3.5, 0.0], &frame, &cfg, 1.25) {
        Err(SttError::TubeViolation { dim: 1, t, .. }) if t == 1.25 => {}
        other => return Err(format!("out-of-tube input gave {other:?}")),
    }
    Ok("centre, sign, ε(0.5), ξ(0.5, 2), κ-linearity and out-of-tube error checked".into())
}

fn criterion_7() -> Outcome {
    let sc = case_study();
    let syn = synthesize(&sc).map_err(|e| e.to_string())?;
    let c = compare(&sc, &syn).map_err(|e| e.to_string())?;
    let line = format!(
        "seed {}, κ {}, dt {}: energy ratio {:.4} ({:.2} / {:.2}), peak ratio {:.4} ({:.2} / {:.2})",
        c.seed,
        sc.controller.kappa,
        c.dt,
        c.energy_ratio,
        c.smooth.effort.energy,
        c.baseline.effort.energy,
        c.peak_ratio,
        c.smooth.effort.peak,
        c.baseline.effort.peak
    );
    ensure(c.smooth_wins(), || format!("{line}; smooth {:?}, baseline {:?}", c.smooth.failure, c.baseline.failure))?;
    Ok(line)
}

fn criterion_8() -> Outcome {
    let sc = case_study();
    let syn = synthesize(&sc).map_err(|e| e.to_string())?;
    let smooth = smoothness_check(&syn.tube);
    ensure(smooth.flagged_count == 0, || format!("smooth tube has {} flagged steps", smooth.flagged_count))?;
    let base = baseline_tube(&sc.task, &syn.geometry, &syn.plans, &sc.params, sc.baseline_v).map_err(|e| e.to_string())?;
    let rough = smoothness_check(&base);
    let pad = sc.params.delta_t;
    let mut per_window = Vec::new();
    for p in &syn.plans {
        let hits = rough
            .flagged
            .iter()
            .filter(|j| (j.t - p.t1).abs() <= pad || (j.t - p.t2).abs() <= pad)
            .count();
        per_window.push((p.obstacle, hits));
    }
    ensure(per_window.iter().all(|&(_, h)| h >= 1), || format!("baseline flags per window {per_window:?}"))?;
    let verified = verify_tube(&base, &sc.task).map_err(|e| e.to_string())?.pass();
    Ok(format!(
        "smooth tube: 0 flags (max rate {:.2}); baseline: {} flags, per window {per_window:?}, max rate {:.1}, still verifies: {verified}",
        smooth.max_rate, rough.flagged_count, rough.max_rate
    ))
}

fn read_dir_bytes(dir: &Path) -> Vec<(String, Vec<u8>)> {
    let mut v: Vec<_> = std::fs::read_dir(dir)
        .unwrap()
        .map(|e| {
            let p = e.unwrap().path();
            (p.file_name().unwrap().to_string_lossy().into_owned(), std::fs::read(&p).unwrap())
        })
        .collect();
    v.sort();
    v
}

fn criterion_9() -> Outcome {
    let bin = env!("CARGO_BIN_EXE_stt");
    let tmp = tempfile::tempdir().map_err(|e| e.to_string())?;
    let mut listings = Vec::new();
    for run in ["a", "b"] {
        let out = tmp.path().join(run);
        for cmd in ["simulate", "compare"] {
            let status = Command::new(bin)
                .arg(cmd)
                .arg(case_study_path())
                .args(["--seed", "42", "--out"])
                .arg(&out)
                .output()
                .map_err(|e| e.to_string())?;
            ensure(status.status.success(), || {
                format!("{cmd} exited with {:?}: {}", status.status.code(), String::from_utf8_lossy(&status.stderr))
            })?;
        }
        listings.push(read_dir_bytes(&out));
    }
    let names: Vec<_> = listings[0].iter().map(|(n, _)| n.clone()).collect();
    ensure(listings[0] == listings[1], || {
        let differ: Vec<_> = listings[0]
            .iter()
            .zip(&listings[1])
            .filter(|(a, b)| a != b)
            .map(|(a, _)| a.0.clone())
            .collect();
        format!("outputs differ: {differ:?}")
    })?;
    Ok(format!("two runs with seed 42 produced byte-identical {}", names.join(", ")))
}

fn run(id: usize, title: &str, f: impl FnOnce() -> Outcome) -> bool {
    let start = Instant::now();
    let outcome = catch_unwind(AssertUnwindSafe(f)).unwrap_or_else(|p| {
        Err(p
            .downcast_ref::<String>()
            .cloned()
            .or_else(|| p.downcast_ref::<&str>().map(|s| s.to_string()))
            .unwrap_or_else(|| "panicked".into()))
    });
    let secs = start.elapsed().as_secs_f64();
    match outcome {
        Ok(msg) => {
            println!("criterion {id} [{title}]: PASS ({secs:.1} s) {msg}");
            true
        }
        Err(msg) => {
            println!("criterion {id} [{title}]: FAIL ({secs:.1} s) {msg}");
            false
        }
    }
}

fn main() {
    let start = Instant::now();
    let suite = build_suite();
    println!("built 201 tubes in {:.1} s", start.elapsed().as_secs_f64());
    let with_suite = |f: fn(&Suite) -> Outcome| {
        let s = &suite;
        move || s.as_ref().map_err(|e| e.clone()).and_then(f)
    };
    let results = [
        run(1, "tube conditions", with_suite(criterion_1)),
        run(2, "reachability margin oracle", criterion_2),
        run(3, "intersection-time oracle", criterion_3),
        run(4, "detour exactness", with_suite(criterion_4)),
        run(5, "closed-loop reach-avoid-stay", criterion_5),
        run(6, "controller", criterion_6),
        run(7, "control effort", criterion_7),
        run(8, "smoothness", criterion_8),
        run(9, "determinism", criterion_9),
    ];
    let passed = results.iter().filter(|&&r| r).count();
    println!("acceptance: {passed}/{} criteria passed", results.len());
    if passed != results.len() {
        std::process::exit(1);
    }
}
