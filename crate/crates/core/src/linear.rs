use alloc::vec;
use alloc::vec::Vec;
use rand::Rng as _;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::math::sqrt;
use crate::rng::Rng;

/// Dense affine map `y = W x + b`, weights row-major `out_dim x in_dim`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct LinearLayer {
    pub in_dim: usize,
    pub out_dim: usize,
    pub weights: Vec<f64>,
    pub bias: Vec<f64>,
}

impl LinearLayer {
    pub fn zeros(in_dim: usize, out_dim: usize) -> Self {
        LinearLayer { in_dim, out_dim, weights: vec![0.0; in_dim * out_dim], bias: vec![0.0; out_dim] }
    }

    pub fn identity(dim: usize) -> Self {
        let mut l = Self::zeros(dim, dim);
        for i in 0..dim {
            l.weights[i * dim + i] = 1.0;
        }
        l
    }

    /// Weights and bias uniform in `[-1/sqrt(in_dim), 1/sqrt(in_dim)]`.
    pub fn random(in_dim: usize, out_dim: usize, rng: &mut Rng) -> Self {
        let bound = 1.0 / sqrt(in_dim as f64);
        let mut draw = || rng.random_range(-bound..=bound);
        let weights = (0..in_dim * out_dim).map(|_| draw()).collect();
        let bias = (0..out_dim).map(|_| draw()).collect();
        LinearLayer { in_dim, out_dim, weights, bias }
    }

    pub fn validate(&self) -> Result<()> {
        if self.in_dim == 0 || self.out_dim == 0 {
            return Err(Error::InvalidArgument("linear layer dims must be >= 1".into()));
        }
        if self.weights.len() != self.in_dim * self.out_dim || self.bias.len() != self.out_dim {
            return Err(Error::DimensionMismatch {
                what: "linear layer storage",
                expected: self.in_dim * self.out_dim + self.out_dim,
                got: self.weights.len() + self.bias.len(),
            });
        }
        if self.weights.iter().chain(&self.bias).any(|v| !v.is_finite()) {
            return Err(Error::NonFinite { what: "linear layer" });
        }
        Ok(())
    }

    pub fn param_count(&self) -> usize {
        self.weights.len() + self.bias.len()
    }

    pub fn forward(&self, x: &[f64]) -> Result<Vec<f64>> {
        if x.len() != self.in_dim {
            return Err(Error::DimensionMismatch { what: "linear input", expected: self.in_dim, got: x.len() });
        }
        Ok((0..self.out_dim)
            .map(|o| {
                let row = &self.weights[o * self.in_dim..(o + 1) * self.in_dim];
                row.iter().zip(x).map(|(w, v)| w * v).sum::<f64>() + self.bias[o]
            })
            .collect())
    }

    /// Accumulates `dW`, `db` into `grad` (laid out as weights then bias) and
    /// returns `dL/dx`.
    pub fn backward(&self, x: &[f64], dy: &[f64], grad: &mut [f64]) -> Vec<f64> {
        let (gw, gb) = grad.split_at_mut(self.weights.len());
        let mut dx = vec![0.0; self.in_dim];
        for (o, &g) in dy.iter().enumerate() {
            if g == 0.0 {
                continue;
            }
            let row = &self.weights[o * self.in_dim..(o + 1) * self.in_dim];
            let grow = &mut gw[o * self.in_dim..(o + 1) * self.in_dim];
            for i in 0..self.in_dim {
                grow[i] += g * x[i];
                dx[i] += g * row[i];
            }
            gb[o] += g;
        }
        dx
    }

    pub fn write_params(&self, out: &mut Vec<f64>) {
        out.extend_from_slice(&self.weights);
        out.extend_from_slice(&self.bias);
    }

    /// Reads weights then bias from the front of `src`; returns the rest.
    pub fn read_params<'a>(&mut self, src: &'a [f64]) -> &'a [f64] {
        let (w, rest) = src.split_at(self.weights.len());
        self.weights.copy_from_slice(w);
        let (b, rest) = rest.split_at(self.bias.len());
        self.bias.copy_from_slice(b);
        rest
    }
}
