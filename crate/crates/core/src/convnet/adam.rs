//! Adam with bias-corrected moment estimates.

use serde::{Deserialize, Serialize};

use super::tensor::{real, Real};
use crate::error::{Error, Result};

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct AdamConfig {
    pub alpha: f64,
    pub beta1: f64,
    pub beta2: f64,
    pub epsilon: f64,
}

impl Default for AdamConfig {
    fn default() -> Self {
        AdamConfig {
            alpha: 1e-3,
            beta1: 0.9,
            beta2: 0.999,
            epsilon: 1e-8,
        }
    }
}

#[derive(Debug, Clone)]
pub struct AdamState<T> {
    pub m: Vec<T>,
    pub v: Vec<T>,
    pub t: u64,
    pub config: AdamConfig,
}

impl<T: Real> AdamState<T> {
    pub fn new(n_params: usize, config: AdamConfig) -> Self {
        AdamState {
            m: vec![T::zero(); n_params],
            v: vec![T::zero(); n_params],
            t: 0,
            config,
        }
    }
}

/// One in-place Adam update. Rejects non-finite gradients before touching
/// any state.
pub fn adam_step<T: Real>(params: &mut [T], grads: &[T], state: &mut AdamState<T>) -> Result<()> {
    if params.len() != grads.len() || params.len() != state.m.len() {
        return Err(Error::Data(format!(
            "adam: {} params, {} grads, {} moments",
            params.len(),
            grads.len(),
            state.m.len()
        )));
    }
    if let Some(i) = grads.iter().position(|g| !g.is_finite()) {
        return Err(Error::Training(format!(
            "non-finite gradient at parameter {i} (step {})",
            state.t + 1
        )));
    }
    state.t += 1;
    let cfg = state.config;
    let t = state.t as i32;
    let b1: T = real(cfg.beta1);
    let b2: T = real(cfg.beta2);
    let one = T::one();
    let alpha: T = real(cfg.alpha);
    let eps: T = real(cfg.epsilon);
    let c1: T = real(1.0 - cfg.beta1.powi(t));
    let c2: T = real(1.0 - cfg.beta2.powi(t));

    for (((p, &g), m), v) in params
        .iter_mut()
        .zip(grads)
        .zip(state.m.iter_mut())
        .zip(state.v.iter_mut())
    {
        *m = b1 * *m + (one - b1) * g;
        *v = b2 * *v + (one - b2) * g * g;
        let m_hat = *m / c1;
        let v_hat = *v / c2;
        *p = *p - alpha * m_hat / (v_hat.sqrt() + eps);
    }
    Ok(())
}
