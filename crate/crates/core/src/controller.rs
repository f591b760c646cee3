//! Approximation-free tube-following feedback.
//!
//! With `e = (2x - γ_s) / γ_d` the normalized position inside the tube,
//! `ε = ln((1 + e) / (1 - e))` and `ξ = diag(4 / (γ_d (1 - e²)))`, the input is
//! `u = -κ ξ ε`. Nothing about the plant enters the law; only the state and
//! the tube cross-section at the current time.

use serde::{Deserialize, Serialize};

use crate::error::{Result, SttError};
pub use crate::stt::TubeFrame;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ControllerConfig {
    pub kappa: f64,
    /// +1 for a positive-definite input matrix, -1 for a negative-definite one.
    pub gain_sign: f64,
    /// Optional per-component saturation `|u_i| ≤ u_max`.
    pub u_max: Option<f64>,
}

impl Default for ControllerConfig {
    fn default() -> Self {
        Self {
            kappa: 2.0,
            gain_sign: 1.0,
            u_max: None,
        }
    }
}

impl ControllerConfig {
    pub fn new(kappa: f64) -> Self {
        Self {
            kappa,
            ..Self::default()
        }
    }

    pub fn check(&self) -> Result<()> {
        let mut bad = Vec::new();
        if !(self.kappa > 0.0 && self.kappa.is_finite()) {
            bad.push(crate::error::FieldError::new("controller.kappa", "must be positive and finite"));
        }
        if self.gain_sign != 1.0 && self.gain_sign != -1.0 {
            bad.push(crate::error::FieldError::new("controller.gain_sign", "must be +1 or -1"));
        }
        if let Some(m) = self.u_max {
            if !(m > 0.0) {
                bad.push(crate::error::FieldError::new("controller.u_max", "must be positive"));
            }
        }
        if bad.is_empty() {
            Ok(())
        } else {
            Err(SttError::Config(bad))
        }
    }
}

/// `e_i = (2x_i - γ_s,i) / γ_d,i`. Values outside (-1, 1) are passed through.
pub fn normalized_error(x: &[f64], frame: &TubeFrame) -> Vec<f64> {
    x.iter()
        .enumerate()
        .map(|(i, &xi)| (2.0 * xi - frame.sum(i)) / frame.width(i))
        .collect()
}

fn check_inside(e: &[f64], t: f64) -> Result<()> {
    match e.iter().position(|v| !(v.abs() < 1.0)) {
        Some(i) => Err(SttError::TubeViolation { dim: i + 1, t, e: e[i] }),
        None => Ok(()),
    }
}

/// `ε_i = ln((1 + e_i) / (1 - e_i))`. `t` is only used to label errors.
pub fn transformed_error(e: &[f64], t: f64) -> Result<Vec<f64>> {
    check_inside(e, t)?;
    // ln((1+e)/(1-e)) = 2 atanh(e), better conditioned near 0
    Ok(e.iter().map(|&v| 2.0 * v.atanh()).collect())
}

/// Diagonal of `ξ`: `4 / (γ_d,i (1 - e_i²))`.
pub fn gain_matrix(e: &[f64], frame: &TubeFrame, t: f64) -> Result<Vec<f64>> {
    check_inside(e, t)?;
    Ok(e
        .iter()
        .enumerate()
        .map(|(i, &v)| 4.0 / (frame.width(i) * (1.0 - v * v)))
        .collect())
}

/// `u = gain_sign · (-κ) · ξ · ε`, saturated if `u_max` is set.
pub fn control_input(x: &[f64], frame: &TubeFrame, cfg: &ControllerConfig, t: f64) -> Result<Vec<f64>> {
    if x.len() != frame.dim() {
        return Err(SttError::DimensionMismatch {
            expected: frame.dim(),
            found: x.len(),
        });
    }
    let e = normalized_error(x, frame);
    let eps = transformed_error(&e, t)?;
    let xi = gain_matrix(&e, frame, t)?;
    let scale = -cfg.gain_sign * cfg.kappa;
    Ok(xi
        .iter()
        .zip(&eps)
        .map(|(g, v)| {
            let u = scale * g * v;
            match cfg.u_max {
                Some(m) => u.clamp(-m, m),
                None => u,
            }
        })
        .collect())
}
