//! Reach-avoid-stay task description, the centered initial/target boxes and
//! the assumption checks the tube synthesis relies on.

use serde::{Deserialize, Serialize};

use crate::error::{Result, SttError};
use crate::geometry::{HyperRect, Interval};
use crate::reach_tube::ReachMargin;

/// A prescribed-time reach-avoid-stay task.
///
/// All boxes have one interval per *state* dimension. Dimensions the task
/// does not constrain carry unbounded intervals in the initial, target,
/// unsafe and workspace boxes.
#[derive(Debug, Clone, PartialEq)]
pub struct RasTask {
    pub initial: HyperRect,
    pub target: HyperRect,
    pub unsafe_sets: Vec<HyperRect>,
    /// Detour clearance per obstacle.
    pub d_u: Vec<f64>,
    pub t_c: f64,
    pub x0: Vec<f64>,
    pub eta: Vec<f64>,
    pub d_s: Vec<f64>,
    pub d_t: Vec<f64>,
    pub constrained: Vec<bool>,
    pub workspace: HyperRect,
}

impl RasTask {
    /// Task in which every state dimension is constrained.
    #[allow(clippy::too_many_arguments)]
    pub fn fully_constrained(
        initial: HyperRect,
        target: HyperRect,
        unsafe_sets: Vec<HyperRect>,
        d_u: Vec<f64>,
        t_c: f64,
        x0: Vec<f64>,
        eta: Vec<f64>,
        d_s: Vec<f64>,
        d_t: Vec<f64>,
        workspace: HyperRect,
    ) -> Result<Self> {
        let n = initial.dim();
        let task = Self {
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
        };
        task.check()?;
        Ok(task)
    }

    pub fn dim(&self) -> usize {
        self.x0.len()
    }

    pub fn obstacle_count(&self) -> usize {
        self.unsafe_sets.len()
    }

    /// Checks the structural invariants of the task.
    pub fn check(&self) -> Result<()> {
        let n = self.dim();
        let lens = [
            self.initial.dim(),
            self.target.dim(),
            self.eta.len(),
            self.d_s.len(),
            self.d_t.len(),
            self.constrained.len(),
            self.workspace.dim(),
        ];
        if let Some(&bad) = lens.iter().find(|&&l| l != n) {
            return Err(SttError::DimensionMismatch {
                expected: n,
                found: bad,
            });
        }
        if let Some(u) = self.unsafe_sets.iter().find(|u| u.dim() != n) {
            return Err(SttError::DimensionMismatch {
                expected: n,
                found: u.dim(),
            });
        }
        if self.d_u.len() != self.unsafe_sets.len() {
            return Err(SttError::InvalidTask(format!(
                "{} obstacle margins for {} obstacles",
                self.d_u.len(),
                self.unsafe_sets.len()
            )));
        }
        if !(self.t_c > 0.0 && self.t_c.is_finite()) {
            return Err(SttError::InvalidTask("t_c must be positive".into()));
        }
        for i in 0..n {
            if !self.initial.interval(i).contains_strictly(self.x0[i]) {
                return Err(SttError::InvalidTask(format!(
                    "x0[{}] = {} is not interior to the initial set",
                    i + 1,
                    self.x0[i]
                )));
            }
            if !self.target.interval(i).contains_strictly(self.eta[i]) {
                return Err(SttError::InvalidTask(format!(
                    "eta[{}] = {} is not interior to the target set",
                    i + 1,
                    self.eta[i]
                )));
            }
            if !(self.d_s[i] > 0.0 && self.d_t[i] > 0.0) {
                return Err(SttError::InvalidTask(format!(
                    "d_s and d_t must be positive (dimension {})",
                    i + 1
                )));
            }
        }
        for (j, (u, &du)) in self.unsafe_sets.iter().zip(&self.d_u).enumerate() {
            if !(du > 0.0) {
                return Err(SttError::InvalidTask(format!(
                    "obstacle {} margin must be positive",
                    j + 1
                )));
            }
            if !self.initial.disjoint(u)? {
                return Err(SttError::InvalidTask(format!(
                    "initial set intersects obstacle {}",
                    j + 1
                )));
            }
            if !self.target.disjoint(u)? {
                return Err(SttError::InvalidTask(format!(
                    "target set intersects obstacle {}",
                    j + 1
                )));
            }
        }
        Ok(())
    }
}

/// Tube shaping parameters (all in seconds).
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct TubeParams {
    /// Margin Δ added around each intersection interval.
    pub delta: f64,
    /// Buffer δt compensating for the smooth activation switches.
    pub delta_t: f64,
    /// Smoothing scale of `s(t) = 0.5 tanh(t / v)`.
    pub v: f64,
    /// Floor for the shaper denominators.
    pub eps_den: f64,
    /// Integration step of the tube ODE.
    pub dt: f64,
}

impl TubeParams {
    pub fn defaults_for(t_c: f64) -> Self {
        let delta = 0.05 * t_c;
        let delta_t = delta / 2.0;
        Self {
            delta,
            delta_t,
            v: delta_t / 4.0,
            eps_den: 1e-3 * t_c,
            dt: t_c / 8000.0,
        }
    }

    pub fn check(&self) -> Result<()> {
        let mut bad = Vec::new();
        if !(self.delta > 0.0) {
            bad.push("delta must be positive");
        }
        if !(self.delta_t > 0.0 && self.delta_t < self.delta) {
            bad.push("delta_t must satisfy 0 < delta_t < delta");
        }
        if !(self.v > 0.0) {
            bad.push("v must be positive");
        }
        if !(self.eps_den > 0.0) {
            bad.push("eps_den must be positive");
        }
        if !(self.dt > 0.0) {
            bad.push("dt must be positive");
        }
        if bad.is_empty() {
            Ok(())
        } else {
            Err(SttError::InvalidTask(bad.join("; ")))
        }
    }
}

/// A box centered on a reference point, possibly shrunk to fit its parent.
#[derive(Debug, Clone, PartialEq)]
pub struct CenteredBox {
    pub rect: HyperRect,
    /// Effective half extents after shrinking.
    pub half: Vec<f64>,
    /// Dimensions (0-based) whose configured extent had to be reduced.
    pub shrunk: Vec<usize>,
}

fn centered_box(parent: &HyperRect, center: &[f64], half: &[f64], what: &str) -> Result<CenteredBox> {
    let mut dims = Vec::with_capacity(center.len());
    let mut eff = Vec::with_capacity(center.len());
    let mut shrunk = Vec::new();
    for (i, (&c, &d)) in center.iter().zip(half).enumerate() {
        let iv = parent.interval(i);
        let fit = d.min(c - iv.lo()).min(iv.hi() - c);
        if !(fit > 0.0) {
            return Err(SttError::InvalidTask(format!(
                "{what} center lies on the boundary in dimension {}",
                i + 1
            )));
        }
        if fit < d {
            shrunk.push(i);
        }
        dims.push(Interval::centered(c, fit)?);
        eff.push(fit);
    }
    Ok(CenteredBox {
        rect: HyperRect::new(dims),
        half: eff,
        shrunk,
    })
}

/// Ŝ: box of half extent `d_s` around `x0`, shrunk to stay inside the
/// initial set.
pub fn build_initial_box(task: &RasTask) -> Result<CenteredBox> {
    centered_box(&task.initial, &task.x0, &task.d_s, "initial box")
}

/// T̂: box of half extent `d_t` around `eta`, shrunk to stay inside the
/// target set.
pub fn build_target_box(task: &RasTask) -> Result<CenteredBox> {
    centered_box(&task.target, &task.eta, &task.d_t, "target box")
}

/// Derived geometry shared by the avoidance planner and the tube ODE.
#[derive(Debug, Clone)]
pub struct TaskGeometry {
    pub s_hat: CenteredBox,
    pub t_hat: CenteredBox,
    /// Tube width per dimension, `2 min(d_s, d_t)` with effective extents.
    pub band: Vec<f64>,
    pub margin: ReachMargin,
}

impl TaskGeometry {
    pub fn new(task: &RasTask) -> Result<Self> {
        let s_hat = build_initial_box(task)?;
        let t_hat = build_target_box(task)?;
        let band = s_hat
            .half
            .iter()
            .zip(&t_hat.half)
            .map(|(a, b)| 2.0 * a.min(*b))
            .collect();
        let margin = ReachMargin::new(s_hat.rect.lower(), t_hat.rect.lower(), task.t_c);
        Ok(Self {
            s_hat,
            t_hat,
            band,
            margin,
        })
    }

    pub fn dim(&self) -> usize {
        self.band.len()
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SeparationCheck {
    /// 1-based obstacle index.
    pub obstacle: usize,
    /// 1-based dimension separating Ŝ from the obstacle, if any.
    pub initial_witness: Option<usize>,
    /// 1-based dimension separating T̂ from the obstacle, if any.
    pub target_witness: Option<usize>,
    pub pass: bool,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct WindowPairCheck {
    pub first: usize,
    pub second: usize,
    pub gap: f64,
    pub required: f64,
    pub pass: bool,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ValidationReport {
    pub separation: Vec<SeparationCheck>,
    pub temporal: Vec<WindowPairCheck>,
    /// 1-based dimensions where Ŝ or T̂ had to be shrunk.
    pub shrunk_initial: Vec<usize>,
    pub shrunk_target: Vec<usize>,
    pub separation_ok: bool,
    pub temporal_ok: bool,
}

impl ValidationReport {
    pub fn pass(&self) -> bool {
        self.separation_ok && self.temporal_ok
    }
}

/// Checks that every obstacle is separated from Ŝ and from T̂ in at least
/// one dimension, and that non-empty intersection windows are pairwise
/// more than `2Δ` apart. `windows[j]` is obstacle `j`'s `[t_in, t_out]`.
pub fn validate_assumptions(
    task: &RasTask,
    geometry: &TaskGeometry,
    params: &TubeParams,
    windows: &[Option<(f64, f64)>],
) -> ValidationReport {
    let witness = |b: &HyperRect, u: &HyperRect| {
        b.dims()
            .iter()
            .zip(u.dims())
            .position(|(x, y)| !x.intersects(y))
            .map(|i| i + 1)
    };
    let separation: Vec<_> = task
        .unsafe_sets
        .iter()
        .enumerate()
        .map(|(j, u)| {
            let initial_witness = witness(&geometry.s_hat.rect, u);
            let target_witness = witness(&geometry.t_hat.rect, u);
            SeparationCheck {
                obstacle: j + 1,
                initial_witness,
                target_witness,
                pass: initial_witness.is_some() && target_witness.is_some(),
            }
        })
        .collect();

    let active: Vec<_> = windows
        .iter()
        .enumerate()
        .filter_map(|(j, w)| w.map(|(t_in, t_out)| (j + 1, t_in, t_out)))
        .collect();
    let required = 2.0 * params.delta;
    let mut temporal = Vec::new();
    for (a, &(p, p_in, p_out)) in active.iter().enumerate() {
        for &(q, q_in, q_out) in &active[a + 1..] {
            // negative when the windows overlap
            let gap = (q_in - p_out).max(p_in - q_out);
            temporal.push(WindowPairCheck {
                first: p,
                second: q,
                gap,
                required,
                pass: gap > required,
            });
        }
    }
    let shift = |v: &[usize]| v.iter().map(|i| i + 1).collect::<Vec<_>>();
    ValidationReport {
        separation_ok: separation.iter().all(|c| c.pass),
        temporal_ok: temporal.iter().all(|c| c.pass),
        separation,
        temporal,
        shrunk_initial: shift(&geometry.s_hat.shrunk),
        shrunk_target: shift(&geometry.t_hat.shrunk),
    }
}
