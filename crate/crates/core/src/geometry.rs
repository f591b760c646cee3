//! Closed intervals and axis-aligned hyperrectangles.
//!
//! Every set in a reach-avoid-stay task (initial set, target set, obstacle
//! projections, tube cross-sections) is handled as a product of closed
//! intervals. Shared endpoints count as intersecting, so a tube that merely
//! touches an obstacle is reported as a collision.

use serde::{Deserialize, Serialize};

use crate::error::{Result, SttError};

/// Closed interval `[lo, hi]` with `lo <= hi`. Endpoints may be infinite,
/// which is how unconstrained state dimensions are represented.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Interval {
    lo: f64,
    hi: f64,
}

impl Interval {
    pub fn new(lo: f64, hi: f64) -> Result<Self> {
        if lo.is_nan() || hi.is_nan() || lo > hi {
            return Err(SttError::InvalidInterval { lo, hi });
        }
        Ok(Self { lo, hi })
    }

    /// The whole real line.
    pub fn unbounded() -> Self {
        Self {
            lo: f64::NEG_INFINITY,
            hi: f64::INFINITY,
        }
    }

    pub fn point(x: f64) -> Self {
        Self { lo: x, hi: x }
    }

    /// Symmetric interval `[center - half, center + half]`.
    pub fn centered(center: f64, half: f64) -> Result<Self> {
        Self::new(center - half, center + half)
    }

    #[inline]
    pub fn lo(&self) -> f64 {
        self.lo
    }

    #[inline]
    pub fn hi(&self) -> f64 {
        self.hi
    }

    pub fn width(&self) -> f64 {
        self.hi - self.lo
    }

    pub fn is_bounded(&self) -> bool {
        self.lo.is_finite() && self.hi.is_finite()
    }

    /// True iff the closed intervals share at least one point.
    #[inline]
    pub fn intersects(&self, other: &Interval) -> bool {
        self.lo.max(other.lo) <= self.hi.min(other.hi)
    }

    /// `None` is the empty set.
    pub fn intersection(&self, other: &Interval) -> Option<Interval> {
        let lo = self.lo.max(other.lo);
        let hi = self.hi.min(other.hi);
        (lo <= hi).then_some(Interval { lo, hi })
    }

    pub fn contains(&self, x: f64) -> bool {
        self.lo <= x && x <= self.hi
    }

    pub fn contains_strictly(&self, x: f64) -> bool {
        self.lo < x && x < self.hi
    }

    /// True iff `inner ⊆ self`.
    pub fn contains_interval(&self, inner: &Interval) -> bool {
        self.lo <= inner.lo && inner.hi <= self.hi
    }

    /// Signed gap between the two intervals: positive when separated,
    /// zero when touching, negative when they overlap.
    pub fn separation(&self, other: &Interval) -> f64 {
        (other.lo - self.hi).max(self.lo - other.hi)
    }

    /// Smallest interval containing both.
    pub fn hull(&self, other: &Interval) -> Interval {
        Interval {
            lo: self.lo.min(other.lo),
            hi: self.hi.max(other.hi),
        }
    }
}

/// Axis-aligned hyperrectangle, one interval per state dimension.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct HyperRect {
    dims: Vec<Interval>,
}

impl HyperRect {
    pub fn new(dims: Vec<Interval>) -> Self {
        Self { dims }
    }

    /// Builds a box from `(lo, hi)` pairs.
    pub fn from_bounds(bounds: &[(f64, f64)]) -> Result<Self> {
        bounds
            .iter()
            .map(|&(lo, hi)| Interval::new(lo, hi))
            .collect::<Result<Vec<_>>>()
            .map(Self::new)
    }

    pub fn dim(&self) -> usize {
        self.dims.len()
    }

    pub fn dims(&self) -> &[Interval] {
        &self.dims
    }

    pub fn interval(&self, i: usize) -> &Interval {
        &self.dims[i]
    }

    pub fn lower(&self) -> Vec<f64> {
        self.dims.iter().map(Interval::lo).collect()
    }

    pub fn upper(&self) -> Vec<f64> {
        self.dims.iter().map(Interval::hi).collect()
    }

    fn check_dims(&self, other: &HyperRect) -> Result<()> {
        if self.dim() != other.dim() {
            return Err(SttError::DimensionMismatch {
                expected: self.dim(),
                found: other.dim(),
            });
        }
        Ok(())
    }

    /// `inner ⊆ self`.
    pub fn contains(&self, inner: &HyperRect) -> Result<bool> {
        self.check_dims(inner)?;
        Ok(self
            .dims
            .iter()
            .zip(&inner.dims)
            .all(|(o, i)| o.contains_interval(i)))
    }

    /// True iff some dimension separates the two boxes. Touching boxes are
    /// not disjoint.
    pub fn disjoint(&self, other: &HyperRect) -> Result<bool> {
        self.check_dims(other)?;
        Ok(self
            .dims
            .iter()
            .zip(&other.dims)
            .any(|(a, b)| !a.intersects(b)))
    }

    pub fn contains_point(&self, x: &[f64]) -> bool {
        x.len() == self.dim() && self.dims.iter().zip(x).all(|(iv, &v)| iv.contains(v))
    }

    /// Clearance between two boxes: the largest per-dimension separation.
    /// Positive iff the boxes are disjoint.
    pub fn clearance(&self, other: &HyperRect) -> Result<f64> {
        self.check_dims(other)?;
        Ok(self
            .dims
            .iter()
            .zip(&other.dims)
            .map(|(a, b)| a.separation(b))
            .fold(f64::NEG_INFINITY, f64::max))
    }
}

/// Free-function form of [`Interval::intersects`].
pub fn intersects(a: &Interval, b: &Interval) -> bool {
    a.intersects(b)
}

pub fn box_contains(outer: &HyperRect, inner: &HyperRect) -> Result<bool> {
    outer.contains(inner)
}

pub fn box_disjoint(a: &HyperRect, b: &HyperRect) -> Result<bool> {
    a.disjoint(b)
}
