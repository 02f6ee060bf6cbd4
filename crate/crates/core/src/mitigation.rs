//! Zero-noise extrapolation: global folding `U (U^dagger U)^m` and
//! extrapolation of the scaled expectations back to zero noise.

use alloc::vec;
use alloc::vec::Vec;
use serde::{Deserialize, Serialize};

use crate::circuit::CircuitSpec;
use crate::density::{run_noisy_circuit, NoiseModel};
use crate::error::{Error, Result};
use crate::rng;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Extrapolation {
    #[default]
    Linear,
    Richardson,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ZneConfig {
    pub scale_factors: Vec<u32>,
    pub extrapolation: Extrapolation,
    /// Shots per scale; `None` uses exact expectations.
    pub n_cir: Option<u64>,
}

impl Default for ZneConfig {
    fn default() -> Self {
        ZneConfig { scale_factors: vec![1, 3, 5], extrapolation: Extrapolation::Linear, n_cir: None }
    }
}

impl ZneConfig {
    pub fn validate(&self) -> Result<()> {
        if self.scale_factors.len() < 2 {
            return Err(Error::InvalidArgument("zne needs at least two scale factors".into()));
        }
        for (i, &s) in self.scale_factors.iter().enumerate() {
            if s % 2 == 0 {
                return Err(Error::InvalidArgument(alloc::format!("scale factor {s} is not odd")));
            }
            if i > 0 && s <= self.scale_factors[i - 1] {
                return Err(Error::InvalidArgument("scale factors must be strictly increasing".into()));
            }
        }
        if self.n_cir == Some(0) {
            return Err(Error::InvalidArgument("n_cir must be >= 1".into()));
        }
        Ok(())
    }
}

/// Replaces the trainable block `U` by `U (U^dagger U)^((lambda-1)/2)`.
pub fn fold_global(circuit: &CircuitSpec, lambda: u32) -> Result<CircuitSpec> {
    if lambda.is_multiple_of(2) {
        return Err(Error::InvalidArgument(alloc::format!("fold factor {lambda} must be odd")));
    }
    let base = &circuit.trainable_ops;
    let inverse: Vec<_> = base.iter().rev().map(|op| op.inverted()).collect();
    let mut ops = base.clone();
    for _ in 0..(lambda - 1) / 2 {
        ops.extend(inverse.iter().cloned());
        ops.extend(base.iter().cloned());
    }
    Ok(CircuitSpec { trainable_ops: ops, ..circuit.clone() })
}

/// Extrapolates `(lambda, value)` points to `lambda = 0`.
pub fn zne_estimate(points: &[(f64, f64)], method: Extrapolation) -> Result<f64> {
    if points.len() < 2 {
        return Err(Error::InvalidArgument("extrapolation needs at least two points".into()));
    }
    for (i, a) in points.iter().enumerate() {
        if points[..i].iter().any(|b| b.0 == a.0) {
            return Err(Error::InvalidArgument(alloc::format!("duplicate scale factor {}", a.0)));
        }
    }
    if points.iter().all(|p| p.1 == points[0].1) {
        return Ok(points[0].1);
    }
    let n = points.len() as f64;
    Ok(match method {
        Extrapolation::Linear => {
            let xm = points.iter().map(|p| p.0).sum::<f64>() / n;
            let ym = points.iter().map(|p| p.1).sum::<f64>() / n;
            let sxy: f64 = points.iter().map(|p| (p.0 - xm) * (p.1 - ym)).sum();
            let sxx: f64 = points.iter().map(|p| (p.0 - xm) * (p.0 - xm)).sum();
            ym - sxy / sxx * xm
        }
        Extrapolation::Richardson => points
            .iter()
            .enumerate()
            .map(|(i, &(xi, yi))| {
                let w: f64 = points
                    .iter()
                    .enumerate()
                    .filter(|&(j, _)| j != i)
                    .map(|(_, &(xj, _))| -xj / (xi - xj))
                    .product();
                yi * w
            })
            .sum(),
    })
}

/// The extrapolated value is linear in the measured values:
/// `estimate = sum_j w_j y_j`. Returns the weights `w_j`.
pub fn extrapolation_weights(lambdas: &[f64], method: Extrapolation) -> Result<Vec<f64>> {
    (0..lambdas.len())
        .map(|j| {
            let unit: Vec<(f64, f64)> =
                lambdas.iter().enumerate().map(|(i, &x)| (x, if i == j { 1.0 } else { 0.0 })).collect();
            zne_estimate(&unit, method)
        })
        .collect()
}

/// Variance of the extrapolated estimate when every scale is measured with
/// `n_cir` independent shots: `sum_j w_j^2 (1 - <Z>_j^2) / n_cir`, where the
/// points carry the exact scaled expectations.
pub fn zne_shot_variance(points: &[(f64, f64)], method: Extrapolation, n_cir: u64) -> Result<f64> {
    if n_cir == 0 {
        return Err(Error::InvalidArgument("n_cir must be >= 1".into()));
    }
    let lambdas: Vec<f64> = points.iter().map(|p| p.0).collect();
    let w = extrapolation_weights(&lambdas, method)?;
    Ok(w.iter().zip(points).map(|(w, p)| w * w * (1.0 - p.1 * p.1)).sum::<f64>() / n_cir as f64)
}

/// Folds at every scale, evaluates (sampled or exact) and extrapolates.
/// Returns the estimate and the `(lambda, value)` points.
pub fn mitigated_expectation(
    circuit: &CircuitSpec,
    enc: &[f64],
    theta: &[f64],
    noise: &NoiseModel,
    zne: &ZneConfig,
    seed: u64,
) -> Result<(f64, Vec<(f64, f64)>)> {
    zne.validate()?;
    let mut points = Vec::with_capacity(zne.scale_factors.len());
    for (i, &lambda) in zne.scale_factors.iter().enumerate() {
        let folded = fold_global(circuit, lambda)?;
        let dm = run_noisy_circuit(&folded, enc, theta, noise)?;
        let value = match zne.n_cir {
            None => dm.expectation_z(circuit.output_wire())?,
            Some(n) => dm.sample_shots(circuit.output_wire(), n, rng::mix(seed, i as u64))?,
        };
        points.push((lambda as f64, value));
    }
    Ok((zne_estimate(&points, zne.extrapolation)?, points))
}
