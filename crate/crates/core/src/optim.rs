//! Adam with bias-corrected moments.

use alloc::vec;
use alloc::vec::Vec;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::math::sqrt;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct AdamConfig {
    pub lr: f64,
    pub beta1: f64,
    pub beta2: f64,
    pub eps_hat: f64,
}

impl Default for AdamConfig {
    fn default() -> Self {
        AdamConfig { lr: 0.001, beta1: 0.9, beta2: 0.999, eps_hat: 1e-8 }
    }
}

impl AdamConfig {
    pub fn validate(&self) -> Result<()> {
        let ok = self.lr >= 0.0
            && self.lr.is_finite()
            && (0.0..1.0).contains(&self.beta1)
            && (0.0..1.0).contains(&self.beta2)
            && self.eps_hat > 0.0;
        if ok {
            Ok(())
        } else {
            Err(Error::InvalidArgument("adam needs lr >= 0, betas in [0,1), eps_hat > 0".into()))
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct AdamState {
    pub step: u64,
    pub m: Vec<f64>,
    pub v: Vec<f64>,
}

impl AdamState {
    pub fn new(len: usize) -> Self {
        AdamState { step: 0, m: vec![0.0; len], v: vec![0.0; len] }
    }
}

/// One in-place Adam update.
pub fn adam_step(params: &mut [f64], grads: &[f64], state: &mut AdamState, cfg: &AdamConfig) -> Result<()> {
    if grads.len() != params.len() || state.m.len() != params.len() || state.v.len() != params.len() {
        return Err(Error::DimensionMismatch { what: "adam vectors", expected: params.len(), got: grads.len() });
    }
    state.step += 1;
    let t = state.step as i32;
    let c1 = 1.0 - libm::pow(cfg.beta1, t as f64);
    let c2 = 1.0 - libm::pow(cfg.beta2, t as f64);
    for i in 0..params.len() {
        let g = grads[i];
        state.m[i] = cfg.beta1 * state.m[i] + (1.0 - cfg.beta1) * g;
        state.v[i] = cfg.beta2 * state.v[i] + (1.0 - cfg.beta2) * g * g;
        let m_hat = state.m[i] / c1;
        let v_hat = state.v[i] / c2;
        params[i] -= cfg.lr * m_hat / (sqrt(v_hat) + cfg.eps_hat);
    }
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn zero_gradient_keeps_params() {
        let mut p = [0.5, -1.0];
        let mut s = AdamState::new(2);
        for _ in 0..5 {
            adam_step(&mut p, &[0.0, 0.0], &mut s, &AdamConfig::default()).unwrap();
        }
        assert_eq!(p, [0.5, -1.0]);
    }

    #[test]
    fn constant_gradient_step_is_bounded_by_lr() {
        let cfg = AdamConfig { lr: 0.01, ..AdamConfig::default() };
        let mut p = [0.0];
        let mut s = AdamState::new(1);
        let mut prev = 0.0;
        for _ in 0..200 {
            adam_step(&mut p, &[3.7], &mut s, &cfg).unwrap();
            let step = prev - p[0];
            assert!(step > 0.0 && step <= cfg.lr * (1.0 + 1e-6));
            prev = p[0];
        }
        assert!(((prev - p[0]).abs()).abs() <= cfg.lr);
    }

    #[test]
    fn length_mismatch() {
        let mut p = [0.0; 2];
        let mut s = AdamState::new(2);
        assert!(adam_step(&mut p, &[1.0], &mut s, &AdamConfig::default()).is_err());
    }
}
