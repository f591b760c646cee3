//! Control effort and the abrupt reference tube used for comparison.
//!
//! The reference tube imitates a step-like obstacle circumvention: outside
//! detour windows it is the reachability margin, and around `t1` and `t2` it
//! jumps to and from the detour level with a very steep tanh. It is labelled
//! "reconstructed" wherever it is reported.

use serde::{Deserialize, Serialize};

use crate::avoidance::ObstaclePlan;
use crate::error::{Result, SttError};
use crate::plant::{SimFlags, SimTrace};
use crate::scenario::{RasTask, TaskGeometry, TubeParams};
use crate::stt::Tube;

pub const BASELINE_LABEL: &str = "reconstructed";

#[derive(Debug, Clone, Copy, Default, PartialEq, Serialize, Deserialize)]
pub struct EffortReport {
    /// `∫ ‖u‖² dt`.
    pub energy: f64,
    /// `max ‖u‖`.
    pub peak: f64,
    /// `∫ ‖u‖ dt`.
    pub l1: f64,
}

/// Trapezoidal effort integrals on a uniform grid, fed one input at a time.
pub struct EffortAccumulator {
    h: f64,
    prev: Option<f64>,
    report: EffortReport,
}

impl EffortAccumulator {
    pub fn new(h: f64) -> Self {
        Self {
            h,
            prev: None,
            report: EffortReport::default(),
        }
    }

    pub fn push(&mut self, u: &[f64]) {
        let norm = u.iter().map(|v| v * v).sum::<f64>().sqrt();
        if let Some(p) = self.prev {
            self.report.energy += 0.5 * self.h * (p * p + norm * norm);
            self.report.l1 += 0.5 * self.h * (p + norm);
        }
        self.report.peak = self.report.peak.max(norm);
        self.prev = Some(norm);
    }

    pub fn finish(self) -> EffortReport {
        self.report
    }
}

/// Effort over `[0, t_c]` from the recorded rows of `trace`. Rows whose input
/// is not finite (the failure row) are skipped.
pub fn control_effort(trace: &SimTrace, t_c: f64) -> Result<EffortReport> {
    if trace.rows() == 0 {
        return Err(SttError::EmptyTrace);
    }
    let mut r = EffortReport::default();
    let mut prev: Option<(f64, f64)> = None;
    for row in 0..trace.rows() {
        let t = trace.t[row];
        if t > t_c + 1e-12 {
            break;
        }
        let u = trace.input(row);
        if u.iter().any(|v| !v.is_finite()) {
            break;
        }
        let norm = u.iter().map(|v| v * v).sum::<f64>().sqrt();
        if let Some((tp, np)) = prev {
            let h = t - tp;
            r.energy += 0.5 * h * (np * np + norm * norm);
            r.l1 += 0.5 * h * (np + norm);
        }
        r.peak = r.peak.max(norm);
        prev = Some((t, norm));
    }
    Ok(r)
}

/// Default steepness of the reference tube relative to the smooth one.
pub const BASELINE_STEEPNESS: f64 = 20.0;

/// Abrupt reference tube on the same grid as the smooth tube: in each plan's
/// dimension the lower bound is `ρ_k + β (ψ - ρ_k)` with
/// `β = ½ [tanh((t - t1) / v_b) - tanh((t - t2) / v_b)]`.
pub fn baseline_tube(task: &RasTask, geom: &TaskGeometry, plans: &[ObstaclePlan], params: &TubeParams, v_base: f64) -> Result<Tube> {
    if !(v_base > 0.0) {
        return Err(SttError::Precondition("baseline steepness v_b must be positive".into()));
    }
    let n = geom.dim();
    let steps = (task.t_c / params.dt).round().max(1.0) as usize;
    let h = task.t_c / steps as f64;
    let mut lower = Vec::with_capacity((steps + 1) * n);
    let mut upper = Vec::with_capacity((steps + 1) * n);
    let mut row = vec![0.0; n];
    for s in 0..=steps {
        let t = s as f64 * h;
        for (i, r) in row.iter_mut().enumerate() {
            *r = geom.margin.rho(i, t);
        }
        for p in plans.iter().filter(|p| !p.empty) {
            let beta = 0.5 * (((t - p.t1) / v_base).tanh() - ((t - p.t2) / v_base).tanh());
            let rho = geom.margin.rho(p.k, t);
            row[p.k] += beta * (p.psi - rho);
        }
        lower.extend_from_slice(&row);
        upper.extend(row.iter().zip(&geom.band).map(|(l, w)| l + w));
    }
    Tube::from_samples(h, n, lower, upper)
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RunSummary {
    pub flags: SimFlags,
    pub effort: EffortReport,
    pub failure: Option<String>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Comparison {
    pub scenario: String,
    pub seed: u64,
    pub dt: f64,
    pub baseline_label: String,
    pub baseline_v: f64,
    pub smooth: RunSummary,
    pub baseline: RunSummary,
    /// smooth / baseline.
    pub energy_ratio: f64,
    pub peak_ratio: f64,
    pub l1_ratio: f64,
}

impl Comparison {
    pub fn new(scenario: &str, seed: u64, baseline_v: f64, smooth: &SimTrace, baseline: &SimTrace) -> Self {
        let summary = |t: &SimTrace| RunSummary {
            flags: t.flags.clone(),
            effort: t.effort,
            failure: t.failure.as_ref().map(|f| format!("t = {}: {}", f.t, f.reason)),
        };
        let (s, b) = (smooth.effort, baseline.effort);
        Self {
            scenario: scenario.to_string(),
            seed,
            dt: smooth.dt,
            baseline_label: BASELINE_LABEL.into(),
            baseline_v,
            smooth: summary(smooth),
            baseline: summary(baseline),
            energy_ratio: s.energy / b.energy,
            peak_ratio: s.peak / b.peak,
            l1_ratio: s.l1 / b.l1,
        }
    }

    /// Smooth tube cheaper in both energy and peak, with both runs intact.
    pub fn smooth_wins(&self) -> bool {
        self.smooth.failure.is_none()
            && self.baseline.failure.is_none()
            && self.energy_ratio < 1.0
            && self.peak_ratio < 1.0
    }
}
