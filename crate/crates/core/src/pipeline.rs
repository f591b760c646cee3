//! End-to-end runs shared by the command line tool and the C interface.

use std::path::Path;

use serde::{Deserialize, Serialize};

use crate::avoidance::{intersection_windows, plan_all, ObstaclePlan};
use crate::error::{Result, SttError};
use crate::io::{save_json, save_trace_csv, save_tube_csv, Scenario};
use crate::metrics::{baseline_tube, Comparison};
use crate::plant::{simulate, SimOptions, SimTrace};
use crate::scenario::{validate_assumptions, TaskGeometry, ValidationReport};
use crate::stt::{evolve_tube, smoothness_check, verify_tube, SmoothnessReport, Tube, VerificationReport};

/// Everything produced by tube synthesis.
#[derive(Debug, Clone)]
pub struct Synthesis {
    pub geometry: TaskGeometry,
    /// Non-empty plans ordered by window start.
    pub plans: Vec<ObstaclePlan>,
    pub tube: Tube,
    pub report: SynthesisReport,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SynthesisReport {
    pub scenario: String,
    pub validation: ValidationReport,
    /// One entry per obstacle, in file order; empty plans included.
    pub plans: Vec<ObstaclePlan>,
    pub verification: VerificationReport,
    pub smoothness: SmoothnessReport,
}

impl SynthesisReport {
    pub fn pass(&self) -> bool {
        self.validation.pass() && self.verification.pass() && self.smoothness.pass()
    }
}

/// Checks the assumptions, plans every detour and integrates the tube.
pub fn synthesize(sc: &Scenario) -> Result<Synthesis> {
    let geometry = TaskGeometry::new(&sc.task)?;
    let windows = intersection_windows(&sc.task, &geometry);
    let validation = validate_assumptions(&sc.task, &geometry, &sc.params, &windows);
    if let Some(c) = validation.separation.iter().find(|c| !c.pass) {
        return Err(SttError::AssumptionViolation(format!(
            "obstacle {} is not separated from {} in any dimension",
            c.obstacle,
            if c.initial_witness.is_none() { "the initial box" } else { "the target box" }
        )));
    }
    if let Some(c) = validation.temporal.iter().find(|c| !c.pass) {
        return Err(SttError::AssumptionViolation(format!(
            "obstacles {} and {} are only {:.6} s apart (need > {} s)",
            c.first, c.second, c.gap, c.required
        )));
    }
    let all = plan_all(&sc.task, &geometry, &sc.params)?;
    let mut plans: Vec<_> = all.iter().filter(|p| !p.empty).cloned().collect();
    plans.sort_by(|a, b| a.t_in.total_cmp(&b.t_in));
    let tube = evolve_tube(&sc.task, &geometry, &plans, &sc.params)?;
    let verification = verify_tube(&tube, &sc.task)?;
    let smoothness = smoothness_check(&tube);
    Ok(Synthesis {
        geometry,
        plans,
        tube,
        report: SynthesisReport {
            scenario: sc.name.clone(),
            validation,
            plans: all,
            verification,
            smoothness,
        },
    })
}

/// Closed-loop run of the scenario's plant inside `tube`.
pub fn run_closed_loop(sc: &Scenario, syn: &Synthesis, tube: &Tube, opts: &SimOptions) -> Result<SimTrace> {
    let dynamics = sc.dynamics();
    simulate(&sc.task, tube, &syn.plans, &sc.controller, dynamics.as_ref(), &sc.disturbance, opts)
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RunMetadata {
    pub scenario: String,
    pub seed: u64,
    pub plant: String,
    pub kappa: f64,
    pub dt: f64,
    pub steps: usize,
    pub stay_horizon: f64,
    pub record_every: usize,
    pub flags: crate::plant::SimFlags,
    pub failure: Option<crate::plant::SimFailure>,
    pub effort: crate::metrics::EffortReport,
    pub max_disturbance: f64,
    pub disturbance_bound: f64,
    pub min_gain_eigenvalue: f64,
}

impl RunMetadata {
    pub fn new(sc: &Scenario, trace: &SimTrace) -> Self {
        Self {
            scenario: sc.name.clone(),
            seed: sc.disturbance.seed,
            plant: sc.dynamics().name().to_string(),
            kappa: sc.controller.kappa,
            dt: trace.dt,
            steps: trace.steps,
            stay_horizon: sc.sim.stay_horizon,
            record_every: sc.sim.record_every,
            flags: trace.flags.clone(),
            failure: trace.failure.clone(),
            effort: trace.effort,
            max_disturbance: trace.max_disturbance,
            disturbance_bound: sc.disturbance.bound,
            min_gain_eigenvalue: trace.min_gain_eigenvalue,
        }
    }

    pub fn pass(&self) -> bool {
        self.flags.all() && self.failure.is_none()
    }
}

/// Smooth and reconstructed-baseline runs with the same seed, gain and step.
pub fn compare(sc: &Scenario, syn: &Synthesis) -> Result<Comparison> {
    let base = baseline_tube(&sc.task, &syn.geometry, &syn.plans, &sc.params, sc.baseline_v)?;
    let opts = SimOptions {
        dt: sc.compare_dt,
        stay_horizon: 0.0,
        record_every: usize::MAX,
    };
    let smooth = run_closed_loop(sc, syn, &syn.tube, &opts)?;
    let baseline = run_closed_loop(sc, syn, &base, &opts)?;
    Ok(Comparison::new(&sc.name, sc.disturbance.seed, sc.baseline_v, &smooth, &baseline))
}

pub fn write_synthesis(dir: &Path, syn: &Synthesis) -> Result<()> {
    std::fs::create_dir_all(dir)?;
    save_tube_csv(&syn.tube, &dir.join("tube.csv"))?;
    save_json(&syn.report, &dir.join("synthesis.json"))
}

pub fn write_run(dir: &Path, trace: &SimTrace, meta: &RunMetadata) -> Result<()> {
    std::fs::create_dir_all(dir)?;
    save_trace_csv(trace, &dir.join("trace.csv"))?;
    save_json(meta, &dir.join("trace.json"))
}
