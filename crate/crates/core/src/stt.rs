//! The adaptive spatiotemporal tube.
//!
//! In every dimension except the active plan's detour dimension the lower
//! bound follows the reachability margin. In the detour dimension it obeys
//!
//! ```text
//! γ̇ = α₁ ρ̇ + α₂ φ₁ + α₃ φ₂
//! ```
//!
//! where the activation weights switch smoothly between tracking the margin,
//! approaching the detour level and returning to the margin, and the
//! shapers `φ₁ = (h₁ - γ) / (t_in - t)`, `φ₂ = (h₂ - γ) / (t2 - t)` steer the
//! bound onto the blends `h₁`, `h₂`. The upper bound is the lower bound plus
//! the constant width `2 min(d_s, d_t)`.

use serde::{Deserialize, Serialize};

use crate::avoidance::{active_plan, ObstaclePlan};
use crate::error::{Result, SttError};
use crate::geometry::{HyperRect, Interval};
use crate::scenario::{RasTask, TaskGeometry, TubeParams};

/// Acceptance slack for the initial and target containment checks.
pub const CONTAINMENT_SLACK: f64 = 1e-6;

/// Smooth unit step `0.5 tanh(t / v)`.
#[inline]
pub fn smoothstep(t: f64, v: f64) -> f64 {
    0.5 * (t / v).tanh()
}

/// Activation weights `(α₁, α₂, α₃)` of `plan` at time `t`.
pub fn activation_weights(plan: &ObstaclePlan, params: &TubeParams, t: f64) -> (f64, f64, f64) {
    let v = params.v;
    let dt = params.delta_t;
    let s = |x: f64| smoothstep(x, v);
    let a1 = s(t) - s(t - plan.t1 + dt) + s(t - plan.t2 - dt) + 0.5;
    let a2 = s(t - plan.t1 + dt) - s(t - plan.t_in - dt);
    let a3 = s(t - plan.t_out + dt) - s(t - plan.t2 - dt);
    (a1, a2, a3)
}

/// `φ₁`: rate that steers `gamma_now` onto the approach blend by `t_in`.
pub fn approach_shaper(plan: &ObstaclePlan, params: &TubeParams, t: f64, gamma_now: f64) -> f64 {
    (plan.approach_level(t) - gamma_now) / (plan.t_in - t).max(params.eps_den)
}

/// `φ₂`: rate that steers `gamma_now` onto the return blend by `t2`.
pub fn return_shaper(plan: &ObstaclePlan, params: &TubeParams, t: f64, gamma_now: f64) -> f64 {
    (plan.return_level(t) - gamma_now) / (plan.t2 - t).max(params.eps_den)
}

/// Right-hand side of the tube ODE.
pub struct TubeOde<'a> {
    pub geom: &'a TaskGeometry,
    pub plans: &'a [ObstaclePlan],
    pub params: &'a TubeParams,
}

impl TubeOde<'_> {
    /// Writes `γ̇_L(t)` for the lower bound `gamma` into `out`.
    pub fn derivative(&self, t: f64, gamma: &[f64], out: &mut [f64]) -> Result<()> {
        for (i, o) in out.iter_mut().enumerate() {
            *o = self.geom.margin.rho_dot(i, t);
        }
        let mut in_window = self.plans.iter().filter(|p| p.t1 <= t && t <= p.t2);
        if let (Some(a), Some(b)) = (in_window.next(), in_window.next()) {
            return Err(SttError::AssumptionViolation(format!(
                "obstacles {} and {} are both active at t = {t}",
                a.obstacle, b.obstacle
            )));
        }
        if let Some(plan) = active_plan(self.plans, self.params, t) {
            let k = plan.k;
            let (a1, a2, a3) = activation_weights(plan, self.params, t);
            let g = gamma[k];
            out[k] = a1 * out[k]
                + a2 * approach_shaper(plan, self.params, t, g)
                + a3 * return_shaper(plan, self.params, t, g);
        }
        Ok(())
    }
}

/// Free-function form of [`TubeOde::derivative`].
pub fn gamma_derivative(
    geom: &TaskGeometry,
    plans: &[ObstaclePlan],
    params: &TubeParams,
    gamma: &[f64],
    t: f64,
) -> Result<Vec<f64>> {
    let mut out = vec![0.0; gamma.len()];
    TubeOde { geom, plans, params }.derivative(t, gamma, &mut out)?;
    Ok(out)
}

/// Lower/upper bounds at one instant.
#[derive(Debug, Clone, PartialEq)]
pub struct TubeFrame {
    pub lower: Vec<f64>,
    pub upper: Vec<f64>,
}

impl TubeFrame {
    pub fn new(lower: Vec<f64>, upper: Vec<f64>) -> Self {
        Self { lower, upper }
    }

    pub fn dim(&self) -> usize {
        self.lower.len()
    }

    /// `γ_s,i = γ_U,i + γ_L,i`.
    pub fn sum(&self, i: usize) -> f64 {
        self.upper[i] + self.lower[i]
    }

    /// `γ_d,i = γ_U,i - γ_L,i`.
    pub fn width(&self, i: usize) -> f64 {
        self.upper[i] - self.lower[i]
    }

    /// The cross-section as a box, if every dimension is well ordered.
    pub fn as_rect(&self) -> Option<HyperRect> {
        self.lower
            .iter()
            .zip(&self.upper)
            .map(|(&l, &u)| Interval::new(l, u).ok())
            .collect::<Option<Vec<_>>>()
            .map(HyperRect::new)
    }
}

/// Tube sampled on a uniform grid starting at `t = 0`. Between samples the
/// bounds are interpolated linearly; past the last sample they are held.
#[derive(Debug, Clone, PartialEq)]
pub struct Tube {
    dt: f64,
    dim: usize,
    lower: Vec<f64>,
    upper: Vec<f64>,
}

impl Tube {
    /// Builds a tube from row-major samples (`samples × dim`).
    pub fn from_samples(dt: f64, dim: usize, lower: Vec<f64>, upper: Vec<f64>) -> Result<Self> {
        if !(dt > 0.0) || dim == 0 || lower.len() != upper.len() || lower.len() % dim != 0 || lower.is_empty() {
            return Err(SttError::TubeFormat(format!(
                "inconsistent tube samples (dt = {dt}, dim = {dim}, {} / {} values)",
                lower.len(),
                upper.len()
            )));
        }
        Ok(Self { dt, dim, lower, upper })
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn dt(&self) -> f64 {
        self.dt
    }

    pub fn len(&self) -> usize {
        self.lower.len() / self.dim
    }

    pub fn is_empty(&self) -> bool {
        self.lower.is_empty()
    }

    pub fn time(&self, s: usize) -> f64 {
        s as f64 * self.dt
    }

    pub fn t_end(&self) -> f64 {
        self.time(self.len() - 1)
    }

    pub fn lower_at(&self, s: usize) -> &[f64] {
        &self.lower[s * self.dim..(s + 1) * self.dim]
    }

    pub fn upper_at(&self, s: usize) -> &[f64] {
        &self.upper[s * self.dim..(s + 1) * self.dim]
    }

    pub fn frame_at(&self, s: usize) -> TubeFrame {
        TubeFrame::new(self.lower_at(s).to_vec(), self.upper_at(s).to_vec())
    }

    /// Interpolated bounds at time `t`, written into `lower`/`upper`.
    pub fn eval_into(&self, t: f64, lower: &mut [f64], upper: &mut [f64]) {
        let last = self.len() - 1;
        let pos = (t / self.dt).max(0.0);
        let s = (pos.floor() as usize).min(last);
        if s >= last {
            lower.copy_from_slice(self.lower_at(last));
            upper.copy_from_slice(self.upper_at(last));
            return;
        }
        let w = pos - s as f64;
        let (l0, l1) = (self.lower_at(s), self.lower_at(s + 1));
        let (u0, u1) = (self.upper_at(s), self.upper_at(s + 1));
        for i in 0..self.dim {
            lower[i] = l0[i] + w * (l1[i] - l0[i]);
            upper[i] = u0[i] + w * (u1[i] - u0[i]);
        }
    }

    pub fn frame(&self, t: f64) -> TubeFrame {
        let mut lower = vec![0.0; self.dim];
        let mut upper = vec![0.0; self.dim];
        self.eval_into(t, &mut lower, &mut upper);
        TubeFrame::new(lower, upper)
    }

    /// Slope of the interpolated lower bound in dimension `i` at time `t`.
    pub fn lower_rate(&self, i: usize, t: f64) -> f64 {
        let last = self.len() - 1;
        if last == 0 || t >= self.t_end() {
            return 0.0;
        }
        let s = ((t / self.dt).max(0.0).floor() as usize).min(last - 1);
        (self.lower_at(s + 1)[i] - self.lower_at(s)[i]) / self.dt
    }

    /// Sample index closest to time `t`.
    pub fn index_at(&self, t: f64) -> usize {
        ((t / self.dt).round().max(0.0) as usize).min(self.len() - 1)
    }
}

/// Integrates the tube ODE with fixed-step RK4 from `γ_L(0) = ρ(0)` over
/// `[0, t_c]` and attaches the upper bound.
pub fn evolve_tube(task: &RasTask, geom: &TaskGeometry, plans: &[ObstaclePlan], params: &TubeParams) -> Result<Tube> {
    let n = geom.dim();
    let steps = (task.t_c / params.dt).round().max(1.0) as usize;
    let h = task.t_c / steps as f64;
    let ode = TubeOde { geom, plans, params };

    let mut lower = Vec::with_capacity((steps + 1) * n);
    let mut g: Vec<f64> = geom.margin.s_lo.clone();
    lower.extend_from_slice(&g);
    let (mut k1, mut k2, mut k3, mut k4) = (vec![0.0; n], vec![0.0; n], vec![0.0; n], vec![0.0; n]);
    let mut tmp = vec![0.0; n];
    for s in 0..steps {
        let t = s as f64 * h;
        ode.derivative(t, &g, &mut k1)?;
        for i in 0..n {
            tmp[i] = g[i] + 0.5 * h * k1[i];
        }
        ode.derivative(t + 0.5 * h, &tmp, &mut k2)?;
        for i in 0..n {
            tmp[i] = g[i] + 0.5 * h * k2[i];
        }
        ode.derivative(t + 0.5 * h, &tmp, &mut k3)?;
        for i in 0..n {
            tmp[i] = g[i] + h * k3[i];
        }
        ode.derivative(t + h, &tmp, &mut k4)?;
        for i in 0..n {
            g[i] += h / 6.0 * (k1[i] + 2.0 * k2[i] + 2.0 * k3[i] + k4[i]);
        }
        if let Some(i) = g.iter().position(|v| !v.is_finite()) {
            return Err(SttError::SynthesisFailure {
                t: t + h,
                reason: format!("non-finite lower bound in dimension {}", i + 1),
            });
        }
        lower.extend_from_slice(&g);
    }
    let upper = lower
        .chunks(n)
        .flat_map(|row| row.iter().zip(&geom.band).map(|(l, w)| l + w))
        .collect();
    Tube::from_samples(h, n, lower, upper)
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Violation {
    pub t: f64,
    /// 1-based dimension, where meaningful.
    pub dim: Option<usize>,
    /// 1-based obstacle, where meaningful.
    pub obstacle: Option<usize>,
    pub margin: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ConditionReport {
    pub pass: bool,
    /// Smallest margin observed (slack, clearance or width).
    pub worst_margin: f64,
    pub violation_count: usize,
    /// First violations, at most [`MAX_LISTED`].
    pub violations: Vec<Violation>,
}

/// Cap on the violations listed per condition.
pub const MAX_LISTED: usize = 32;

impl ConditionReport {
    fn new() -> Self {
        Self {
            pass: true,
            worst_margin: f64::INFINITY,
            violation_count: 0,
            violations: Vec::new(),
        }
    }

    fn observe(&mut self, margin: f64, ok: bool, v: impl FnOnce() -> Violation) {
        self.worst_margin = self.worst_margin.min(margin);
        if !ok {
            self.pass = false;
            self.violation_count += 1;
            if self.violations.len() < MAX_LISTED {
                self.violations.push(v());
            }
        }
    }
}

/// Outcome of the four tube conditions.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct VerificationReport {
    /// Γ(0) ⊆ S.
    pub starts_in_initial: ConditionReport,
    /// Γ(t_c) ⊆ T.
    pub ends_in_target: ConditionReport,
    /// Γ(t) ∩ U = ∅ on every sample in `[0, t_c]`.
    pub avoids_unsafe: ConditionReport,
    /// γ_L < γ_U on every sample and dimension.
    pub well_ordered: ConditionReport,
    pub samples: usize,
}

impl VerificationReport {
    pub fn pass(&self) -> bool {
        self.starts_in_initial.pass && self.ends_in_target.pass && self.avoids_unsafe.pass && self.well_ordered.pass
    }
}

fn containment(report: &mut ConditionReport, set: &HyperRect, frame: &TubeFrame, t: f64) {
    for i in 0..frame.dim() {
        let iv = set.interval(i);
        let slack = (frame.lower[i] - iv.lo()).min(iv.hi() - frame.upper[i]);
        report.observe(slack, slack >= -CONTAINMENT_SLACK, || Violation {
            t,
            dim: Some(i + 1),
            obstacle: None,
            margin: slack,
        });
    }
}

/// Checks the tube conditions on every grid sample up to `t_c`.
pub fn verify_tube(tube: &Tube, task: &RasTask) -> Result<VerificationReport> {
    if tube.dim() != task.dim() {
        return Err(SttError::DimensionMismatch {
            expected: task.dim(),
            found: tube.dim(),
        });
    }
    let mut initial = ConditionReport::new();
    containment(&mut initial, &task.initial, &tube.frame_at(0), 0.0);
    let mut target = ConditionReport::new();
    containment(&mut target, &task.target, &tube.frame(task.t_c), task.t_c);

    let mut avoid = ConditionReport::new();
    let mut ordered = ConditionReport::new();
    let last = tube.index_at(task.t_c);
    for s in 0..=last {
        let t = tube.time(s);
        let (lo, hi) = (tube.lower_at(s), tube.upper_at(s));
        for i in 0..tube.dim() {
            let w = hi[i] - lo[i];
            ordered.observe(w, w > 0.0, || Violation {
                t,
                dim: Some(i + 1),
                obstacle: None,
                margin: w,
            });
        }
        for (j, u) in task.unsafe_sets.iter().enumerate() {
            let clearance = u
                .dims()
                .iter()
                .enumerate()
                .map(|(i, iv)| (iv.lo() - hi[i]).max(lo[i] - iv.hi()))
                .fold(f64::NEG_INFINITY, f64::max);
            avoid.observe(clearance, clearance > 0.0, || Violation {
                t,
                dim: None,
                obstacle: Some(j + 1),
                margin: clearance,
            });
        }
    }
    Ok(VerificationReport {
        starts_in_initial: initial,
        ends_in_target: target,
        avoids_unsafe: avoid,
        well_ordered: ordered,
        samples: last + 1,
    })
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DimSmoothness {
    /// 1-based dimension.
    pub dim: usize,
    pub max_rate: f64,
    pub p99_rate: f64,
    /// Largest admissible rate, `10 × p99_rate`.
    pub bound: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Jump {
    pub t: f64,
    pub dim: usize,
    pub rate: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SmoothnessReport {
    /// Largest finite-difference rate `|Δγ| / dt` over all bounds.
    pub max_rate: f64,
    /// Largest single-step change `|Δγ|`.
    pub max_jump: f64,
    pub per_dim: Vec<DimSmoothness>,
    pub flagged_count: usize,
    /// Every flagged step (time of the step start).
    pub flagged: Vec<Jump>,
}

impl SmoothnessReport {
    pub fn pass(&self) -> bool {
        self.flagged_count == 0
    }
}

/// Nearest-rank percentile of an unsorted sample.
fn percentile(values: &mut [f64], q: f64) -> f64 {
    if values.is_empty() {
        return 0.0;
    }
    values.sort_by(f64::total_cmp);
    let rank = ((q * values.len() as f64).ceil() as usize).clamp(1, values.len());
    values[rank - 1]
}

/// Finite-difference smoothness scan. A step is flagged when its rate
/// exceeds ten times the 99th-percentile rate of its dimension.
pub fn smoothness_check(tube: &Tube) -> SmoothnessReport {
    let dt = tube.dt();
    let steps = tube.len().saturating_sub(1);
    let mut per_dim = Vec::with_capacity(tube.dim());
    let mut flagged = Vec::new();
    let mut max_rate = 0.0f64;
    let mut max_jump = 0.0f64;
    for i in 0..tube.dim() {
        let mut rates = Vec::with_capacity(2 * steps);
        for s in 0..steps {
            let dl = (tube.lower_at(s + 1)[i] - tube.lower_at(s)[i]).abs();
            let du = (tube.upper_at(s + 1)[i] - tube.upper_at(s)[i]).abs();
            rates.push(dl / dt);
            rates.push(du / dt);
            max_jump = max_jump.max(dl).max(du);
        }
        let dim_max = rates.iter().copied().fold(0.0, f64::max);
        max_rate = max_rate.max(dim_max);
        let p99 = percentile(&mut rates.clone(), 0.99);
        let bound = 10.0 * p99;
        for s in 0..steps {
            let r = rates[2 * s].max(rates[2 * s + 1]);
            if r * dt > bound * dt {
                flagged.push(Jump {
                    t: tube.time(s),
                    dim: i + 1,
                    rate: r,
                });
            }
        }
        per_dim.push(DimSmoothness {
            dim: i + 1,
            max_rate: dim_max,
            p99_rate: p99,
            bound,
        });
    }
    SmoothnessReport {
        max_rate,
        max_jump,
        per_dim,
        flagged_count: flagged.len(),
        flagged,
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::avoidance::{schedule, Side};
    use crate::geometry::HyperRect;

    fn rect(b: &[(f64, f64)]) -> HyperRect {
        HyperRect::from_bounds(b).unwrap()
    }

    fn params() -> TubeParams {
        TubeParams {
            delta: 0.4,
            delta_t: 0.2,
            v: 0.05,
            eps_den: 4e-4,
            dt: 2e-4,
        }
    }

    fn case_study() -> RasTask {
        RasTask::fully_constrained(
            rect(&[(0.0, 0.5), (0.0, 0.5)]),
            rect(&[(11.0, 11.5), (7.0, 7.5)]),
            vec![
                rect(&[(1.5, 2.0), (0.5, 3.0)]),
                rect(&[(5.2, 6.8), (3.2, 4.0)]),
                rect(&[(7.0, 8.0), (0.0, 8.0)]),
            ],
            vec![0.1; 3],
            80.0,
            vec![0.25, 0.25],
            vec![11.25, 7.25],
            vec![0.25, 0.25],
            vec![0.2, 0.2],
            rect(&[(-1.0, 12.5), (-1.0, 10.0)]),
        )
        .unwrap()
    }

    fn plan(t_in: f64, t_out: f64, psi: f64, rho_t1: f64, rho_t2: f64) -> ObstaclePlan {
        ObstaclePlan {
            obstacle: 1,
            t_in,
            t_out,
            t1: t_in - 4.0,
            t2: t_out + 4.0,
            k: 0,
            side: Side::Lower,
            psi,
            rho_t1,
            rho_t2,
            margin_k: crate::reach_tube::LevelProfile::new(rho_t2, rho_t2, 80.0),
            empty: false,
            rule_dim: 0,
        }
    }

    #[test]
    fn smoothstep_values() {
        assert_eq!(smoothstep(0.0, 0.5), 0.0);
        assert!((smoothstep(10.0, 0.5) - 0.5).abs() < 1e-15);
        assert!((smoothstep(-10.0, 0.5) + 0.5).abs() < 1e-15);
        assert!((smoothstep(0.5, 0.5) - 0.5 * 1f64.tanh()).abs() < 1e-15);
        assert!((smoothstep(0.5, 0.5) - 0.380_797).abs() < 1e-6);
    }

    #[test]
    fn weights_follow_the_three_phases() {
        let p = plan(20.0, 30.0, 2.1, 1.0, 5.0);
        let params = TubeParams {
            delta: 4.0,
            delta_t: 2.0,
            v: 0.5,
            eps_den: 0.08,
            dt: 0.01,
        };
        let close = |w: (f64, f64, f64), e: (f64, f64, f64)| {
            (w.0 - e.0).abs() < 1e-3 && (w.1 - e.1).abs() < 1e-3 && (w.2 - e.2).abs() < 1e-3
        };
        assert!(close(activation_weights(&p, &params, 7.0), (1.0, 0.0, 0.0)));
        assert!(close(activation_weights(&p, &params, 18.0), (0.0, 1.0, 0.0)));
        assert!(close(activation_weights(&p, &params, 32.0), (0.0, 0.0, 1.0)));
        assert!(close(activation_weights(&p, &params, 45.0), (1.0, 0.0, 0.0)));
    }

    #[test]
    fn shaper_edge_values() {
        let params = TubeParams::defaults_for(80.0);
        let p = plan(20.0, 30.0, 2.1, 1.0, 5.0);
        assert_eq!(approach_shaper(&p, &params, 21.0, 2.1), 0.0);
        assert!((approach_shaper(&p, &params, p.t1, 0.5) - (1.0 - 0.5) / 4.0).abs() < 1e-15);
        assert_eq!(p.return_level(p.t_out), 2.1);
        assert_eq!(return_shaper(&p, &params, 40.0, 5.0), 0.0);
        // h₂ runs monotonically from ψ towards ρ_k(t2)
        let mut prev = p.return_level(p.t_out);
        for s in 1..1000 {
            let h = p.return_level(p.t_out + 4.0 * s as f64 / 1000.0);
            assert!(h >= prev);
            prev = h;
        }
    }

    #[test]
    fn derivative_without_plans_is_margin_rate() {
        let task = case_study();
        let geom = TaskGeometry::new(&task).unwrap();
        let g = gamma_derivative(&geom, &[], &params(), &[0.0, 0.0], 0.0).unwrap();
        assert!((g[0] - 11.05 / 80.0).abs() < 1e-15);
        assert!((g[1] - 7.05 / 80.0).abs() < 1e-15);
    }

    #[test]
    fn overlapping_windows_are_rejected() {
        let task = case_study();
        let geom = TaskGeometry::new(&task).unwrap();
        let a = plan(20.0, 30.0, 2.1, 1.0, 5.0);
        let mut b = a.clone();
        b.obstacle = 2;
        let r = gamma_derivative(&geom, &[a, b], &params(), &[0.0, 0.0], 25.0);
        assert!(matches!(r, Err(SttError::AssumptionViolation(_))));
    }

    #[test]
    fn case_study_tube_properties() {
        let task = case_study();
        let geom = TaskGeometry::new(&task).unwrap();
        let p = params();
        let plans = schedule(&task, &geom, &p).unwrap();
        let tube = evolve_tube(&task, &geom, &plans, &p).unwrap();

        assert_eq!(tube.lower_at(0), &geom.margin.s_lo[..]);
        for s in (0..tube.len()).step_by(97) {
            for i in 0..2 {
                assert!((tube.upper_at(s)[i] - tube.lower_at(s)[i] - geom.band[i]).abs() < 1e-12);
            }
        }
        let report = verify_tube(&tube, &task).unwrap();
        assert!(report.pass(), "{report:#?}");

        for plan in &plans {
            let k = plan.k;
            let tol = 1e-3 * ((plan.psi - plan.rho_t1).abs() + 1.0);
            let at_in = tube.frame(plan.t_in).lower[k];
            assert!((at_in - plan.psi).abs() <= tol, "obstacle {}: {at_in} vs {}", plan.obstacle, plan.psi);
            let (a, b) = (tube.index_at(plan.t_in), tube.index_at(plan.t_out));
            for s in a..=b {
                assert!((tube.lower_at(s)[k] - plan.psi).abs() <= tol);
            }
            let (lo, hi) = (tube.lower_at(a)[k], tube.upper_at(a)[k]);
            let u = task.unsafe_sets[plan.obstacle - 1].interval(k);
            match plan.side {
                Side::Lower => assert!(lo > u.hi()),
                Side::Upper => assert!(hi < u.lo()),
            }
        }
        let sm = smoothness_check(&tube);
        assert_eq!(sm.flagged_count, 0, "{:?}", &sm.per_dim);
    }

    #[test]
    fn constant_tube_is_flat() {
        let task = RasTask::fully_constrained(
            rect(&[(0.0, 1.0), (0.0, 1.0)]),
            rect(&[(0.0, 1.0), (0.0, 1.0)]),
            vec![],
            vec![],
            10.0,
            vec![0.5, 0.5],
            vec![0.5, 0.5],
            vec![0.5, 0.5],
            vec![0.5, 0.5],
            rect(&[(-1.0, 2.0), (-1.0, 2.0)]),
        )
        .unwrap();
        let geom = TaskGeometry::new(&task).unwrap();
        let tube = evolve_tube(&task, &geom, &[], &TubeParams::defaults_for(10.0)).unwrap();
        let sm = smoothness_check(&tube);
        assert_eq!(sm.max_rate, 0.0);
        assert_eq!(sm.flagged_count, 0);
        assert!(verify_tube(&tube, &task).unwrap().pass());
    }

    #[test]
    fn tangent_obstacle_fails_avoidance() {
        let mut task = case_study();
        task.unsafe_sets = vec![rect(&[(0.4, 1.0), (-0.6, 0.0)])];
        task.d_u = vec![0.1];
        // Γ(0) = [0, 0.4]² touches the obstacle corner at (0.4, 0)
        let geom = TaskGeometry::new(&task).unwrap();
        let tube = evolve_tube(&task, &geom, &[], &params()).unwrap();
        let report = verify_tube(&tube, &task).unwrap();
        assert!(!report.avoids_unsafe.pass);
        assert_eq!(report.avoids_unsafe.violations[0].t, 0.0);
        assert!(report.well_ordered.pass);
    }

    #[test]
    fn interpolation_and_hold() {
        let tube = Tube::from_samples(0.5, 1, vec![0.0, 1.0, 3.0], vec![1.0, 2.0, 4.0]).unwrap();
        let f = tube.frame(0.75);
        assert!((f.lower[0] - 2.0).abs() < 1e-15 && (f.upper[0] - 3.0).abs() < 1e-15);
        assert_eq!(tube.frame(10.0).lower[0], 3.0);
        assert_eq!(tube.lower_rate(0, 0.6), 4.0);
        assert_eq!(tube.lower_rate(0, 5.0), 0.0);
    }
}
