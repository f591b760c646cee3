#![allow(dead_code)]

use std::path::PathBuf;

use rand::Rng;
use rand_chacha::ChaCha8Rng;

use stt_core::avoidance::{intersection_windows, plan_all};
use stt_core::geometry::{HyperRect, Interval};
use stt_core::io::{parse_scenario, Scenario};
use stt_core::reach_tube::ReachMargin;
use stt_core::scenario::{validate_assumptions, RasTask, TaskGeometry, TubeParams};
use stt_core::SttError;

pub fn case_study_path() -> PathBuf {
    PathBuf::from(env!("CARGO_MANIFEST_DIR")).join("scenarios/casestudy_omni.scenario")
}

pub fn case_study() -> Scenario {
    parse_scenario(&case_study_path()).expect("bundled scenario parses")
}

fn iv(lo: f64, hi: f64) -> Interval {
    Interval::new(lo, hi).unwrap()
}

/// Tube parameters for a generated task: windows padded by 2% of t_c and a
/// denominator floor small enough for millimetre-level detours.
pub fn params_for(t_c: f64) -> TubeParams {
    let delta = 0.02 * t_c;
    let eps = 1e-3 * delta;
    TubeParams {
        delta,
        delta_t: delta / 2.0,
        v: delta / 8.0,
        eps_den: eps,
        dt: eps / 2.0,
    }
}

/// One attempt at a random task. Obstacles sit on the nominal band at
/// well-separated times, occasionally pushed off it.
pub fn random_task_candidate(rng: &mut ChaCha8Rng, n: usize) -> RasTask {
    let t_c = rng.gen_range(20.0..100.0);
    let x0: Vec<f64> = (0..n).map(|_| rng.gen_range(-1.0..1.0)).collect();
    let d_s: Vec<f64> = (0..n).map(|_| rng.gen_range(0.2..0.5)).collect();
    let eta: Vec<f64> = x0
        .iter()
        .map(|x| {
            let len = rng.gen_range(3.0..12.0);
            if rng.gen_bool(0.8) { x + len } else { x - len }
        })
        .collect();
    let d_t: Vec<f64> = (0..n).map(|_| rng.gen_range(0.2..0.5)).collect();
    let initial = HyperRect::new(
        (0..n)
            .map(|i| iv(x0[i] - d_s[i] * rng.gen_range(1.0..1.5), x0[i] + d_s[i] * rng.gen_range(1.0..1.5)))
            .collect(),
    );
    let target = HyperRect::new(
        (0..n)
            .map(|i| iv(eta[i] - d_t[i] * rng.gen_range(1.0..1.5), eta[i] + d_t[i] * rng.gen_range(1.0..1.5)))
            .collect(),
    );
    let workspace = HyperRect::new(
        (0..n)
            .map(|i| {
                let a = initial.interval(i).hull(target.interval(i));
                iv(a.lo() - 6.0, a.hi() + 6.0)
            })
            .collect(),
    );

    let band: Vec<f64> = (0..n).map(|i| 2.0 * d_s[i].min(d_t[i])).collect();
    let s_lo: Vec<f64> = (0..n).map(|i| x0[i] - d_s[i]).collect();
    let t_lo: Vec<f64> = (0..n).map(|i| eta[i] - d_t[i]).collect();
    let margin = ReachMargin::new(s_lo, t_lo, t_c);

    let count = rng.gen_range(1..=3usize);
    let slots = [0.2, 0.45, 0.7];
    let mut unsafe_sets = Vec::new();
    let mut d_u = Vec::new();
    for slot in &slots[..count] {
        let t = (slot + rng.gen_range(-0.05..0.05)) * t_c;
        let off_path = rng.gen_bool(0.15);
        let pushed = rng.gen_range(0..n);
        let dims = (0..n)
            .map(|i| {
                let c = margin.rho(i, t) + 0.5 * band[i] + rng.gen_range(-0.3..0.3);
                let half = rng.gen_range(0.1..0.5);
                let c = if off_path && i == pushed { c + 4.0 } else { c };
                iv(c - half, c + half)
            })
            .collect();
        unsafe_sets.push(HyperRect::new(dims));
        d_u.push(rng.gen_range(0.05..0.2));
    }
    RasTask {
        initial,
        target,
        unsafe_sets,
        d_u,
        t_c,
        x0,
        eta,
        d_s,
        d_t,
        constrained: vec![true; n],
        workspace,
    }
}

#[derive(Debug, Default, Clone, Copy)]
pub struct Rejections {
    pub structure: usize,
    pub assumptions: usize,
    pub no_detour: usize,
}

/// Draws candidates until one satisfies the task invariants and the
/// separation assumptions.
pub fn random_task(rng: &mut ChaCha8Rng, n: usize, rejected: &mut Rejections) -> (RasTask, TubeParams) {
    loop {
        let task = random_task_candidate(rng, n);
        if task.check().is_err() {
            rejected.structure += 1;
            continue;
        }
        let params = params_for(task.t_c);
        let Ok(geom) = TaskGeometry::new(&task) else {
            rejected.structure += 1;
            continue;
        };
        match plan_all(&task, &geom, &params) {
            Ok(_) => {
                if validate_assumptions(&task, &geom, &params, &intersection_windows(&task, &geom)).pass() {
                    return (task, params);
                }
                rejected.assumptions += 1;
            }
            Err(SttError::Infeasible { .. }) => rejected.no_detour += 1,
            Err(e) => panic!("unexpected planning error: {e}"),
        }
    }
}
