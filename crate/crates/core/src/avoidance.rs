//! Obstacle scheduling: when the nominal tube would meet each obstacle, in
//! which dimension to bend it, to which side, and to what level.
//!
//! The nominal cross-section in dimension `i` is the band
//! `[ρᵢ(t), ρᵢ(t) + wᵢ]` with `wᵢ = 2 min(d_s, d_t)`. Because `ρᵢ` is
//! monotone, the times at which a band edge crosses a level have the closed
//! form `t = t_c · a / (1 + a)` with `a = atanh(ratio)`, which is what
//! [`crossing_fractions`] evaluates.

use serde::{Deserialize, Serialize};

use crate::error::{Result, SttError};
use crate::geometry::{HyperRect, Interval};
use crate::reach_tube::LevelProfile;
use crate::stt::TubeOde;
use crate::scenario::{RasTask, TaskGeometry, TubeParams};

/// Which obstacle face the detoured tube passes.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum Side {
    /// Lower tube bound held above the obstacle.
    #[serde(rename = "L")]
    Lower,
    /// Upper tube bound held below the obstacle.
    #[serde(rename = "U")]
    Upper,
}

impl Side {
    pub fn other(self) -> Side {
        match self {
            Side::Lower => Side::Upper,
            Side::Upper => Side::Lower,
        }
    }
}

/// Avoidance schedule for one obstacle.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ObstaclePlan {
    /// 1-based obstacle index.
    pub obstacle: usize,
    pub t_in: f64,
    pub t_out: f64,
    pub t1: f64,
    pub t2: f64,
    /// 0-based detour dimension.
    pub k: usize,
    pub side: Side,
    pub psi: f64,
    /// ρ_k(t1), the level the approach starts from.
    pub rho_t1: f64,
    /// ρ_k(t2), the level the return ends at.
    pub rho_t2: f64,
    /// Margin of the detour dimension, followed again once the return ends.
    pub margin_k: LevelProfile,
    /// No intersection with the nominal tube; the plan does nothing.
    pub empty: bool,
    /// 0-based dimension picked by the argmax/argmin rule alone.
    pub rule_dim: usize,
}

impl ObstaclePlan {
    fn empty(obstacle: usize) -> Self {
        Self {
            obstacle,
            t_in: f64::NAN,
            t_out: f64::NAN,
            t1: f64::NAN,
            t2: f64::NAN,
            k: 0,
            side: Side::Lower,
            psi: f64::NAN,
            rho_t1: f64::NAN,
            rho_t2: f64::NAN,
            margin_k: LevelProfile::new(f64::NAN, f64::NAN, f64::NAN),
            empty: true,
            rule_dim: 0,
        }
    }

    /// `h₁`: tanh blend from `ρ_k(t1)` to `ψ`, reaching `ψ` at `t_in`.
    /// The blend argument is clamped at zero before `t1`.
    pub fn approach_level(&self, t: f64) -> f64 {
        if t >= self.t_in {
            return self.psi;
        }
        let arg = (t - self.t1).max(0.0) / (self.t_in - t);
        (self.psi - self.rho_t1) * arg.tanh() + self.rho_t1
    }

    /// `h₂`: tanh blend from `ψ` back to `ρ_k(t2)`, reaching it at `t2`.
    /// The blend argument is clamped at zero before `t_out`; past `t2` the
    /// level is the margin itself, so the tube does not lag behind it while
    /// the return weight switches off.
    pub fn return_level(&self, t: f64) -> f64 {
        if t >= self.t2 {
            return self.margin_k.value(t);
        }
        let arg = (t - self.t_out).max(0.0) / (self.t2 - t);
        (self.rho_t2 - self.psi) * arg.tanh() + self.psi
    }

    /// Idealized lower bound in the detour dimension: the level the tube is
    /// steered towards at time `t`, or `None` outside `[t1, t2]`.
    pub fn target_level(&self, t: f64) -> Option<f64> {
        if self.empty || t < self.t1 || t > self.t2 {
            None
        } else if t < self.t_in {
            Some(self.approach_level(t))
        } else if t <= self.t_out {
            Some(self.psi)
        } else {
            Some(self.return_level(t))
        }
    }
}

/// Maps a level-crossing ratio to the crossing time as a fraction of `t_c`,
/// clamped to `[0, 1]`.
pub fn crossing_fraction(ratio: f64) -> f64 {
    if ratio.is_nan() || ratio <= 0.0 {
        0.0
    } else if ratio >= 1.0 {
        1.0
    } else {
        let a = ratio.atanh();
        a / (1.0 + a)
    }
}

/// Ratio `(level - start) / (end - start)`, with a constant profile mapped to
/// `±∞` (or 0 when the level equals the start).
fn ratio(level: f64, start: f64, end: f64) -> f64 {
    let num = level - start;
    let den = end - start;
    if den == 0.0 {
        if num > 0.0 {
            f64::INFINITY
        } else if num < 0.0 {
            f64::NEG_INFINITY
        } else {
            0.0
        }
    } else {
        num / den
    }
}

/// The four clamped crossing fractions of obstacle `obstacle` in dimension
/// `i`: lower/upper obstacle face against the lower band corner, then
/// against the upper band corner.
pub fn crossing_fractions(geom: &TaskGeometry, obstacle: &HyperRect, i: usize) -> [f64; 4] {
    let u = obstacle.interval(i);
    let s_lo = geom.margin.s_lo[i];
    let t_lo = geom.margin.t_lo[i];
    let s_hi = s_lo + geom.band[i];
    let t_hi = t_lo + geom.band[i];
    [
        crossing_fraction(ratio(u.lo(), s_lo, t_lo)),
        crossing_fraction(ratio(u.hi(), s_lo, t_lo)),
        crossing_fraction(ratio(u.lo(), s_hi, t_hi)),
        crossing_fraction(ratio(u.hi(), s_hi, t_hi)),
    ]
}

fn min4(f: &[f64; 4]) -> f64 {
    f.iter().copied().fold(f64::INFINITY, f64::min)
}

fn max4(f: &[f64; 4]) -> f64 {
    f.iter().copied().fold(f64::NEG_INFINITY, f64::max)
}

/// Range of values the nominal band sweeps in dimension `i`.
fn swept_range(geom: &TaskGeometry, i: usize) -> Interval {
    let a = geom.margin.s_lo[i];
    let b = geom.margin.t_lo[i];
    Interval::new(a.min(b), a.max(b) + geom.band[i]).unwrap_or_else(|_| Interval::unbounded())
}

/// Fractions `[start, end]` of `t_c` during which the nominal band overlaps
/// the obstacle in dimension `i`, or `None` if it never does.
pub fn overlap_window(geom: &TaskGeometry, obstacle: &HyperRect, i: usize) -> Option<(f64, f64)> {
    if !swept_range(geom, i).intersects(obstacle.interval(i)) {
        return None;
    }
    let f = crossing_fractions(geom, obstacle, i);
    Some((min4(&f), max4(&f)))
}

/// Time interval `[t_in, t_out]` during which the nominal tube overlaps the
/// obstacle in every dimension, or `None`.
pub fn intersection_interval(geom: &TaskGeometry, obstacle: &HyperRect, t_c: f64) -> Option<(f64, f64)> {
    let mut start = f64::NEG_INFINITY;
    let mut end = f64::INFINITY;
    for i in 0..geom.dim() {
        let (s, e) = overlap_window(geom, obstacle, i)?;
        start = start.max(s);
        end = end.min(e);
    }
    (start <= end).then_some((start * t_c, end * t_c))
}

/// Intersection windows of every obstacle, in file order.
pub fn intersection_windows(task: &RasTask, geom: &TaskGeometry) -> Vec<Option<(f64, f64)>> {
    task.unsafe_sets
        .iter()
        .map(|u| intersection_interval(geom, u, task.t_c))
        .collect()
}

/// Detour dimension by the three-step rule: the dimension entering last
/// (`i₁`), the one leaving first (`i₂`), and of those the one with the
/// narrower fraction spread. Ties go to the lowest index.
pub fn select_dimension(geom: &TaskGeometry, obstacle: &HyperRect) -> usize {
    let n = geom.dim();
    let fr: Vec<[f64; 4]> = (0..n).map(|i| crossing_fractions(geom, obstacle, i)).collect();
    let mut i1 = 0;
    let mut i2 = 0;
    for i in 1..n {
        if min4(&fr[i]) > min4(&fr[i1]) {
            i1 = i;
        }
        if max4(&fr[i]) < max4(&fr[i2]) {
            i2 = i;
        }
    }
    let spread = |i: usize| max4(&fr[i]) - min4(&fr[i]);
    let (first, second) = if i1 <= i2 { (i1, i2) } else { (i2, i1) };
    if spread(second) < spread(first) {
        second
    } else {
        first
    }
}

/// ψ for obstacle `j` in dimension `k`.
pub fn detour_level(task: &RasTask, geom: &TaskGeometry, j: usize, k: usize, side: Side) -> f64 {
    let u = task.unsafe_sets[j].interval(k);
    let d_u = task.d_u[j];
    match side {
        Side::Lower => u.hi() + d_u,
        Side::Upper => u.lo() - geom.band[k] - d_u,
    }
}

fn side_fits(task: &RasTask, geom: &TaskGeometry, k: usize, psi: f64) -> bool {
    psi.is_finite() && task.workspace.interval(k).contains_interval(&Interval::point(psi).hull(&Interval::point(psi + geom.band[k])))
}

/// Sides that keep the detoured band inside the workspace, closest detour
/// level to `ρ_k(t_in)` first.
fn ranked_sides(task: &RasTask, geom: &TaskGeometry, j: usize, k: usize, t_in: f64) -> Vec<(Side, f64)> {
    let rho = geom.margin.rho(k, t_in);
    let mut sides: Vec<(Side, f64)> = [Side::Lower, Side::Upper]
        .into_iter()
        .map(|s| (s, detour_level(task, geom, j, k, s)))
        .filter(|&(_, psi)| side_fits(task, geom, k, psi))
        .collect();
    sides.sort_by(|a, b| (a.1 - rho).abs().total_cmp(&(b.1 - rho).abs()));
    sides
}

/// Side whose detour level is closest to `ρ_k(t_in)` among those that fit in
/// the workspace.
pub fn select_side(task: &RasTask, geom: &TaskGeometry, j: usize, k: usize, t_in: f64) -> Result<Side> {
    ranked_sides(task, geom, j, k, t_in)
        .first()
        .map(|&(s, _)| s)
        .ok_or_else(|| SttError::Infeasible {
            obstacle: j + 1,
            reason: format!("no detour side fits the workspace in dimension {}", k + 1),
        })
}

fn make_plan(
    geom: &TaskGeometry,
    params: &TubeParams,
    j: usize,
    (t_in, t_out): (f64, f64),
    k: usize,
    side: Side,
    psi: f64,
    rule_dim: usize,
) -> ObstaclePlan {
    let t1 = t_in - params.delta;
    let t2 = t_out + params.delta;
    ObstaclePlan {
        obstacle: j + 1,
        t_in,
        t_out,
        t1,
        t2,
        k,
        side,
        psi,
        rho_t1: geom.margin.rho(k, t1),
        rho_t2: geom.margin.rho(k, t2),
        margin_k: geom.margin.profile(k),
        empty: false,
        rule_dim,
    }
}

/// Integrates the detour dimension of `plan` alone and checks that the
/// resulting band stays clear of every obstacle from shortly before `t1`
/// until shortly after `t2`.
pub fn detour_is_clear(task: &RasTask, geom: &TaskGeometry, params: &TubeParams, plan: &ObstaclePlan) -> bool {
    let n = geom.dim();
    let k = plan.k;
    let pad = 2.0 * (params.delta_t + 4.0 * params.v);
    let from = (plan.t1 - pad).max(0.0);
    let to = (plan.t2 + pad).min(task.t_c);
    let steps = ((to - from) / params.dt).ceil().max(1.0) as usize;
    let h = (to - from) / steps as f64;
    let plans = std::slice::from_ref(plan);
    let ode = TubeOde { geom, plans, params };
    let rate = |t: f64, g: f64| {
        let mut state = vec![0.0; n];
        state[k] = g;
        let mut out = vec![0.0; n];
        ode.derivative(t, &state, &mut out).map(|_| out[k]).unwrap_or(f64::NAN)
    };

    // Each step checks the band swept between consecutive samples, so a
    // graze shorter than one step cannot slip through.
    let mut g = geom.margin.rho(k, from);
    let mut lower = vec![0.0; n];
    let mut prev: Option<Vec<f64>> = None;
    for s in 0..=steps {
        let t = from + s as f64 * h;
        for (i, l) in lower.iter_mut().enumerate() {
            *l = geom.margin.rho(i, t);
        }
        lower[k] = g;
        if !g.is_finite() {
            return false;
        }
        let before = prev.as_deref().unwrap_or(&lower);
        let clear = task.unsafe_sets.iter().all(|u| {
            (0..n).any(|i| {
                let lo = lower[i].min(before[i]);
                let band = Interval::point(lo).hull(&Interval::point(lower[i].max(before[i]) + geom.band[i]));
                !band.intersects(u.interval(i))
            })
        });
        prev = Some(lower.clone());
        if !clear {
            return false;
        }
        let k1 = rate(t, g);
        let k2 = rate(t + 0.5 * h, g + 0.5 * h * k1);
        let k3 = rate(t + 0.5 * h, g + 0.5 * h * k2);
        let k4 = rate(t + h, g + h * k3);
        g += h / 6.0 * (k1 + 2.0 * k2 + 2.0 * k3 + k4);
    }
    true
}

/// Plans the detour for obstacle `j` (0-based). The argmax/argmin rule and
/// the closest-side rule are tried first; when that detour would sweep the
/// tube through an obstacle, the remaining dimension/side pairs are tried in
/// order of increasing fraction spread.
pub fn plan_obstacle(task: &RasTask, geom: &TaskGeometry, params: &TubeParams, j: usize) -> Result<ObstaclePlan> {
    let obstacle = &task.unsafe_sets[j];
    let Some(window) = intersection_interval(geom, obstacle, task.t_c) else {
        return Ok(ObstaclePlan::empty(j + 1));
    };
    if window.0 - params.delta < 0.0 {
        return Err(SttError::Infeasible {
            obstacle: j + 1,
            reason: format!(
                "intersection starts at t = {:.6} s, earlier than the margin Δ = {} s",
                window.0, params.delta
            ),
        });
    }
    let rule_dim = select_dimension(geom, obstacle);
    let n = geom.dim();
    let spread = |i: usize| {
        let f = crossing_fractions(geom, obstacle, i);
        max4(&f) - min4(&f)
    };
    let mut dims: Vec<usize> = (0..n).filter(|&i| i != rule_dim).collect();
    dims.sort_by(|&a, &b| spread(a).total_cmp(&spread(b)).then(a.cmp(&b)));
    dims.insert(0, rule_dim);

    for k in dims {
        for (side, psi) in ranked_sides(task, geom, j, k, window.0) {
            let plan = make_plan(geom, params, j, window, k, side, psi, rule_dim);
            if detour_is_clear(task, geom, params, &plan) {
                return Ok(plan);
            }
        }
    }
    Err(SttError::Infeasible {
        obstacle: j + 1,
        reason: "no dimension/side detour avoids the unsafe sets".into(),
    })
}

/// Plans for every obstacle, including empty ones, in obstacle order.
pub fn plan_all(task: &RasTask, geom: &TaskGeometry, params: &TubeParams) -> Result<Vec<ObstaclePlan>> {
    (0..task.obstacle_count())
        .map(|j| plan_obstacle(task, geom, params, j))
        .collect()
}

/// Non-empty plans sorted by `t_in`. Fails if two windows are closer than
/// `2Δ`.
pub fn schedule(task: &RasTask, geom: &TaskGeometry, params: &TubeParams) -> Result<Vec<ObstaclePlan>> {
    let windows = intersection_windows(task, geom);
    let report = crate::scenario::validate_assumptions(task, geom, params, &windows);
    if let Some(bad) = report.temporal.iter().find(|c| !c.pass) {
        return Err(SttError::AssumptionViolation(format!(
            "obstacles {} and {} are only {:.6} s apart (need > {} s)",
            bad.first, bad.second, bad.gap, bad.required
        )));
    }
    let mut plans: Vec<_> = plan_all(task, geom, params)?.into_iter().filter(|p| !p.empty).collect();
    plans.sort_by(|a, b| a.t_in.total_cmp(&b.t_in));
    Ok(plans)
}

/// Plan in charge at time `t`. A plan keeps control past `t2` until its
/// return weight has died out (`t2 + δt + 4v`), or until halfway to the next
/// window if that comes first, so the return shaper can absorb what is left
/// of its convergence error.
pub fn active_plan<'a>(plans: &'a [ObstaclePlan], params: &TubeParams, t: f64) -> Option<&'a ObstaclePlan> {
    let settle = params.delta_t + 4.0 * params.v;
    let live = || plans.iter().filter(|p| !p.empty && p.t2.is_finite());
    live()
        .filter(|p| {
            let next_t1 = live().map(|q| q.t1).filter(|&t1| t1 > p.t2).fold(f64::INFINITY, f64::min);
            t < (p.t2 + settle).min(0.5 * (p.t2 + next_t1))
        })
        .min_by(|a, b| a.t1.total_cmp(&b.t1))
}
