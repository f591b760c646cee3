//! Plant models, bounded disturbances and the closed-loop simulator.

use nalgebra::{DMatrix, SymmetricEigen};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::avoidance::ObstaclePlan;
use crate::controller::{control_input, ControllerConfig};
use crate::error::{Result, SttError};
use crate::metrics::{EffortAccumulator, EffortReport};
use crate::scenario::RasTask;
use crate::stt::Tube;

/// Control-affine plant `ẋ = f(x) + g(x) u + w`.
pub trait Dynamics: Send + Sync {
    fn dim(&self) -> usize;

    fn name(&self) -> &'static str;

    fn derivative(&self, x: &[f64], u: &[f64], w: &[f64], out: &mut [f64]);

    /// `g(x)`.
    fn input_matrix(&self, x: &[f64]) -> DMatrix<f64>;

    /// Smallest eigenvalue of the symmetric part of `g(x)`.
    fn min_gain_eigenvalue(&self, x: &[f64]) -> f64 {
        let g = self.input_matrix(x);
        let sym = (&g + g.transpose()) * 0.5;
        SymmetricEigen::new(sym).eigenvalues.min()
    }
}

/// Planar omnidirectional robot: `ẋ = R(x₃) [v₁, v₂, ω] + w`.
#[derive(Debug, Clone, Copy, Default)]
pub struct OmniRobot;

pub fn omni_derivative(x: &[f64], v: &[f64], w: &[f64]) -> [f64; 3] {
    let (s, c) = x[2].sin_cos();
    [
        v[0] * c - v[1] * s + w[0],
        v[0] * s + v[1] * c + w[1],
        v[2] + w[2],
    ]
}

impl Dynamics for OmniRobot {
    fn dim(&self) -> usize {
        3
    }

    fn name(&self) -> &'static str {
        "omni"
    }

    fn derivative(&self, x: &[f64], u: &[f64], w: &[f64], out: &mut [f64]) {
        out.copy_from_slice(&omni_derivative(x, u, w));
    }

    fn input_matrix(&self, x: &[f64]) -> DMatrix<f64> {
        let (s, c) = x[2].sin_cos();
        DMatrix::from_row_slice(3, 3, &[c, -s, 0.0, s, c, 0.0, 0.0, 0.0, 1.0])
    }

    fn min_gain_eigenvalue(&self, x: &[f64]) -> f64 {
        // symmetric part is diag(cos, cos, 1)
        x[2].cos().min(1.0)
    }
}

/// `ẋ_i = a x_i + u_i + w_i` in every dimension.
#[derive(Debug, Clone, Copy)]
pub struct Integrator {
    pub n: usize,
    pub a: f64,
}

impl Integrator {
    pub fn new(n: usize) -> Self {
        Self { n, a: 0.0 }
    }
}

impl Dynamics for Integrator {
    fn dim(&self) -> usize {
        self.n
    }

    fn name(&self) -> &'static str {
        "integrator"
    }

    fn derivative(&self, x: &[f64], u: &[f64], w: &[f64], out: &mut [f64]) {
        for i in 0..self.n {
            out[i] = self.a * x[i] + u[i] + w[i];
        }
    }

    fn input_matrix(&self, _x: &[f64]) -> DMatrix<f64> {
        DMatrix::identity(self.n, self.n)
    }

    fn min_gain_eigenvalue(&self, _x: &[f64]) -> f64 {
        1.0
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize, Default)]
#[serde(rename_all = "lowercase")]
pub enum DisturbanceKind {
    #[default]
    None,
    Uniform,
    Sinusoidal,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DisturbanceModel {
    pub kind: DisturbanceKind,
    /// Cap on `‖w‖∞`.
    pub bound: f64,
    pub seed: u64,
    /// Hz, sinusoidal only.
    pub frequency: f64,
    /// rad, sinusoidal only. Component `i` is shifted by a further `i` rad.
    pub phase: f64,
}

impl Default for DisturbanceModel {
    fn default() -> Self {
        Self {
            kind: DisturbanceKind::None,
            bound: 0.0,
            seed: 0,
            frequency: 0.1,
            phase: 0.0,
        }
    }
}

impl DisturbanceModel {
    pub fn uniform(bound: f64, seed: u64) -> Self {
        Self {
            kind: DisturbanceKind::Uniform,
            bound,
            seed,
            ..Self::default()
        }
    }

    pub fn sampler(&self) -> DisturbanceSampler {
        DisturbanceSampler {
            model: self.clone(),
            rng: ChaCha8Rng::seed_from_u64(self.seed),
        }
    }
}

/// Stateful sampler; the sequence depends only on the seed and the number
/// of calls.
pub struct DisturbanceSampler {
    model: DisturbanceModel,
    rng: ChaCha8Rng,
}

impl DisturbanceSampler {
    pub fn sample(&mut self, t: f64, out: &mut [f64]) {
        let b = self.model.bound;
        match self.model.kind {
            DisturbanceKind::None => out.fill(0.0),
            DisturbanceKind::Uniform => {
                for w in out.iter_mut() {
                    *w = if b > 0.0 { self.rng.gen_range(-b..=b) } else { 0.0 };
                }
            }
            DisturbanceKind::Sinusoidal => {
                let arg = 2.0 * std::f64::consts::PI * self.model.frequency * t + self.model.phase;
                for (i, w) in out.iter_mut().enumerate() {
                    *w = b * (arg + i as f64).sin();
                }
            }
        }
    }
}

pub fn sample_disturbance(sampler: &mut DisturbanceSampler, t: f64, n: usize) -> Vec<f64> {
    let mut w = vec![0.0; n];
    sampler.sample(t, &mut w);
    w
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SimOptions {
    /// Integration step. Adjusted down so that `t_c` falls on the grid.
    pub dt: f64,
    pub stay_horizon: f64,
    /// Keep every n-th step in the trace (the last step is always kept).
    pub record_every: usize,
}

impl SimOptions {
    pub fn for_task(task: &RasTask) -> Self {
        Self {
            dt: 1e-3,
            stay_horizon: 0.25 * task.t_c,
            record_every: 10,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SimFlags {
    /// `x(t) ∈ T` at some step with `t ≤ t_c`.
    pub reached: bool,
    /// `x(t) ∉ U` at every step.
    pub safe: bool,
    /// Strictly inside the tube at every step.
    pub contained: bool,
    /// `x(t) ∈ T` for every step in `[t_c, t_c + stay_horizon]`.
    pub stayed: bool,
}

impl SimFlags {
    pub fn all(&self) -> bool {
        self.reached && self.safe && self.contained && self.stayed
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SimFailure {
    pub t: f64,
    pub reason: String,
}

/// Recorded closed-loop run. Rows are stored row-major.
#[derive(Debug, Clone, PartialEq)]
pub struct SimTrace {
    pub n: usize,
    pub t: Vec<f64>,
    pub x: Vec<f64>,
    pub lower: Vec<f64>,
    pub upper: Vec<f64>,
    pub u: Vec<f64>,
    /// 1-based obstacle whose detour is in progress, 0 if none.
    pub active_obstacle: Vec<usize>,
    pub flags: SimFlags,
    pub failure: Option<SimFailure>,
    /// Effort over `[0, t_c]` on the full integration grid.
    pub effort: EffortReport,
    /// Largest `‖w‖∞` applied.
    pub max_disturbance: f64,
    /// Smallest eigenvalue of the symmetric part of `g(x)` over recorded rows.
    pub min_gain_eigenvalue: f64,
    pub dt: f64,
    pub steps: usize,
}

impl SimTrace {
    pub fn rows(&self) -> usize {
        self.t.len()
    }

    pub fn state(&self, r: usize) -> &[f64] {
        &self.x[r * self.n..(r + 1) * self.n]
    }

    pub fn input(&self, r: usize) -> &[f64] {
        &self.u[r * self.n..(r + 1) * self.n]
    }

    pub fn final_state(&self) -> &[f64] {
        self.state(self.rows() - 1)
    }
}

fn active_obstacle(plans: &[ObstaclePlan], t: f64) -> usize {
    plans
        .iter()
        .find(|p| p.t1 <= t && t <= p.t2)
        .map_or(0, |p| p.obstacle)
}

/// Runs the closed loop from `task.x0` until `t_c + stay_horizon`. Input and
/// disturbance are sampled at the start of each step and held while the
/// plant is advanced by one RK4 step.
pub fn simulate(
    task: &RasTask,
    tube: &Tube,
    plans: &[ObstaclePlan],
    cfg: &ControllerConfig,
    dynamics: &dyn Dynamics,
    disturbance: &DisturbanceModel,
    opts: &SimOptions,
) -> Result<SimTrace> {
    let n = dynamics.dim();
    if task.dim() != n || tube.dim() != n {
        return Err(SttError::DimensionMismatch {
            expected: n,
            found: if task.dim() != n { task.dim() } else { tube.dim() },
        });
    }
    if !(opts.dt > 0.0) || !(opts.stay_horizon >= 0.0) || opts.record_every == 0 {
        return Err(SttError::Precondition("dt > 0, stay_horizon ≥ 0 and record_every ≥ 1 required".into()));
    }
    let start = tube.frame(0.0);
    if let Some(i) = (0..n).find(|&i| !(start.lower[i] < task.x0[i] && task.x0[i] < start.upper[i])) {
        return Err(SttError::Precondition(format!(
            "x(0) is not strictly inside Γ(0) in dimension {}: {} ∉ ({}, {})",
            i + 1,
            task.x0[i],
            start.lower[i],
            start.upper[i]
        )));
    }

    let reach_steps = (task.t_c / opts.dt).round().max(1.0) as usize;
    let h = task.t_c / reach_steps as f64;
    let steps = reach_steps + (opts.stay_horizon / h).round() as usize;

    let mut trace = SimTrace {
        n,
        t: Vec::new(),
        x: Vec::new(),
        lower: Vec::new(),
        upper: Vec::new(),
        u: Vec::new(),
        active_obstacle: Vec::new(),
        flags: SimFlags {
            reached: false,
            safe: true,
            contained: true,
            stayed: true,
        },
        failure: None,
        effort: EffortReport::default(),
        max_disturbance: 0.0,
        min_gain_eigenvalue: f64::INFINITY,
        dt: h,
        steps,
    };

    let mut sampler = disturbance.sampler();
    let mut effort = EffortAccumulator::new(h);
    let mut x = task.x0.clone();
    let mut w = vec![0.0; n];
    let (mut k1, mut k2, mut k3, mut k4, mut tmp) = (vec![0.0; n], vec![0.0; n], vec![0.0; n], vec![0.0; n], vec![0.0; n]);

    for s in 0..=steps {
        let t = s as f64 * h;
        let frame = tube.frame(t);
        let in_target = task.target.contains_point(&x);
        if s <= reach_steps && in_target {
            trace.flags.reached = true;
        }
        if s >= reach_steps && !in_target {
            trace.flags.stayed = false;
        }
        if task.unsafe_sets.iter().any(|u| u.contains_point(&x)) {
            trace.flags.safe = false;
        }
        let u = match control_input(&x, &frame, cfg, t) {
            Ok(u) => u,
            Err(e) => {
                trace.flags.contained = false;
                trace.failure = Some(SimFailure { t, reason: e.to_string() });
                record(&mut trace, dynamics, t, &x, &frame.lower, &frame.upper, &vec![f64::NAN; n], plans);
                break;
            }
        };
        if s <= reach_steps {
            effort.push(&u);
        }
        if s % opts.record_every == 0 || s == steps {
            record(&mut trace, dynamics, t, &x, &frame.lower, &frame.upper, &u, plans);
        }
        if s == steps {
            break;
        }

        sampler.sample(t, &mut w);
        trace.max_disturbance = w.iter().fold(trace.max_disturbance, |m, v| m.max(v.abs()));
        // The controller is part of the vector field and is re-evaluated at
        // every stage; only the disturbance is held over the step.
        let stage = |t: f64, x: &[f64], out: &mut [f64]| -> Result<()> {
            let u = control_input(x, &tube.frame(t), cfg, t)?;
            dynamics.derivative(x, &u, &w, out);
            Ok(())
        };
        dynamics.derivative(&x, &u, &w, &mut k1);
        let mut staged = || -> Result<()> {
            for i in 0..n {
                tmp[i] = x[i] + 0.5 * h * k1[i];
            }
            stage(t + 0.5 * h, &tmp, &mut k2)?;
            for i in 0..n {
                tmp[i] = x[i] + 0.5 * h * k2[i];
            }
            stage(t + 0.5 * h, &tmp, &mut k3)?;
            for i in 0..n {
                tmp[i] = x[i] + h * k3[i];
            }
            stage(t + h, &tmp, &mut k4)
        };
        if let Err(e) = staged() {
            trace.flags.contained = false;
            trace.failure = Some(SimFailure {
                t,
                reason: format!("RK4 stage left the tube: {e}"),
            });
            break;
        }
        for i in 0..n {
            x[i] += h / 6.0 * (k1[i] + 2.0 * k2[i] + 2.0 * k3[i] + k4[i]);
        }
        if x.iter().any(|v| !v.is_finite()) {
            trace.flags.contained = false;
            trace.failure = Some(SimFailure {
                t: t + h,
                reason: "state became non-finite".into(),
            });
            break;
        }
    }
    if trace.failure.is_some() {
        trace.flags.stayed = false;
    }
    trace.effort = effort.finish();
    Ok(trace)
}

#[allow(clippy::too_many_arguments)]
fn record(
    trace: &mut SimTrace,
    dynamics: &dyn Dynamics,
    t: f64,
    x: &[f64],
    lower: &[f64],
    upper: &[f64],
    u: &[f64],
    plans: &[ObstaclePlan],
) {
    trace.t.push(t);
    trace.x.extend_from_slice(x);
    trace.lower.extend_from_slice(lower);
    trace.upper.extend_from_slice(upper);
    trace.u.extend_from_slice(u);
    trace.active_obstacle.push(active_obstacle(plans, t));
    trace.min_gain_eigenvalue = trace.min_gain_eigenvalue.min(dynamics.min_gain_eigenvalue(x));
}
