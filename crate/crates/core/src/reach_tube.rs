//! Nominal reachability margin: the lower tube corner that slides from the
//! initial box to the target box by the prescribed time.
//!
//! The margin obeys `ρ̇ = t_c (end - start) / (t_c - t)² · sech²(t / (t_c - t))`
//! for `t < t_c` and `ρ̇ = 0` afterwards. Its exact solution with
//! `ρ(0) = start` is `start + (end - start) · tanh(t / (t_c - t))`, which is
//! what is evaluated here.

use serde::{Deserialize, Serialize};

/// Relative distance to `t_c` below which the post-deadline branch is used.
const DEADLINE_GUARD: f64 = 1e-9;

/// Scalar margin between two levels. Used for both the lower and the upper
/// tube corner.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct LevelProfile {
    pub start: f64,
    pub end: f64,
    pub t_c: f64,
}

impl LevelProfile {
    pub fn new(start: f64, end: f64, t_c: f64) -> Self {
        Self { start, end, t_c }
    }

    #[inline]
    fn past_deadline(&self, t: f64) -> bool {
        self.t_c - t < DEADLINE_GUARD * self.t_c
    }

    pub fn value(&self, t: f64) -> f64 {
        if self.past_deadline(t) {
            return self.end;
        }
        let t = t.max(0.0);
        self.start + (self.end - self.start) * (t / (self.t_c - t)).tanh()
    }

    pub fn rate(&self, t: f64) -> f64 {
        if self.past_deadline(t) {
            return 0.0;
        }
        let t = t.max(0.0);
        let rem = self.t_c - t;
        self.t_c * (self.end - self.start) / (rem * rem) * sech2(t / rem)
    }

    /// Progress fraction `tanh(t / (t_c - t)) ∈ [0, 1]`.
    pub fn progress(&self, t: f64) -> f64 {
        if self.past_deadline(t) {
            1.0
        } else {
            let t = t.max(0.0);
            (t / (self.t_c - t)).tanh()
        }
    }
}

/// `sech²(x)` without overflow for large `|x|`.
#[inline]
pub(crate) fn sech2(x: f64) -> f64 {
    let e = (-2.0 * x.abs()).exp();
    let s = 2.0 * (-x.abs()).exp() / (1.0 + e);
    s * s
}

/// Per-dimension reachability margin ρ(t) from the lower corner of the
/// initial box to the lower corner of the target box.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ReachMargin {
    pub s_lo: Vec<f64>,
    pub t_lo: Vec<f64>,
    pub t_c: f64,
}

impl ReachMargin {
    pub fn new(s_lo: Vec<f64>, t_lo: Vec<f64>, t_c: f64) -> Self {
        assert_eq!(s_lo.len(), t_lo.len(), "margin corners must have equal length");
        Self { s_lo, t_lo, t_c }
    }

    pub fn dim(&self) -> usize {
        self.s_lo.len()
    }

    pub fn profile(&self, i: usize) -> LevelProfile {
        LevelProfile::new(self.s_lo[i], self.t_lo[i], self.t_c)
    }

    pub fn rho(&self, i: usize, t: f64) -> f64 {
        self.profile(i).value(t)
    }

    pub fn rho_dot(&self, i: usize, t: f64) -> f64 {
        self.profile(i).rate(t)
    }
}
