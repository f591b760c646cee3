//! Smooth adaptive spatiotemporal tubes for prescribed-time reach-avoid-stay
//! tasks, together with the approximation-free controller that keeps a
//! control-affine plant inside them.
//!
//! The pipeline is: [`scenario`] (task and assumption checks) →
//! [`avoidance`] (obstacle windows and detour plans) → [`stt`] (tube ODE,
//! verification) → [`controller`] + [`plant`] (closed loop) → [`metrics`]
//! (control effort, abrupt baseline). [`io`] reads scenario files and writes
//! the CSV/JSON artifacts.

pub mod avoidance;
pub mod controller;
pub mod error;
pub mod geometry;
pub mod io;
pub mod metrics;
pub mod pipeline;
pub mod plant;
pub mod reach_tube;
pub mod scenario;
pub mod stt;

pub use error::{Result, SttError};
