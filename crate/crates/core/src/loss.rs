use alloc::vec::Vec;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::math::{exp, ln};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Loss {
    Mse,
    CrossEntropy,
}

impl Loss {
    /// Loss value and gradient with respect to `output`.
    ///
    /// For cross-entropy `target` holds a single class index (as `f64`) and
    /// `output` holds logits.
    pub fn evaluate(self, output: &[f64], target: &[f64]) -> Result<(f64, Vec<f64>)> {
        match self {
            Loss::Mse => mse(output, target),
            Loss::CrossEntropy => {
                let class = target.first().copied().unwrap_or(-1.0);
                if class < 0.0 || libm::trunc(class) != class || class as usize >= output.len() {
                    return Err(Error::InvalidArgument(alloc::format!(
                        "class label {class} invalid for {} logits",
                        output.len()
                    )));
                }
                Ok(softmax_cross_entropy(output, class as usize))
            }
        }
    }
}

/// Mean squared error over the output dimensions.
pub fn mse(output: &[f64], target: &[f64]) -> Result<(f64, Vec<f64>)> {
    if output.len() != target.len() {
        return Err(Error::DimensionMismatch { what: "mse target", expected: output.len(), got: target.len() });
    }
    let n = output.len() as f64;
    let mut loss = 0.0;
    let grad = output
        .iter()
        .zip(target)
        .map(|(o, t)| {
            let d = o - t;
            loss += d * d;
            2.0 * d / n
        })
        .collect();
    Ok((loss / n, grad))
}

pub fn softmax(logits: &[f64]) -> Vec<f64> {
    let max = logits.iter().copied().fold(f64::NEG_INFINITY, f64::max);
    let e: Vec<f64> = logits.iter().map(|&z| exp(z - max)).collect();
    let s: f64 = e.iter().sum();
    e.into_iter().map(|v| v / s).collect()
}

pub fn softmax_cross_entropy(logits: &[f64], class: usize) -> (f64, Vec<f64>) {
    let p = softmax(logits);
    let loss = -ln(p[class].max(1e-300));
    let grad = p.iter().enumerate().map(|(i, &pi)| if i == class { pi - 1.0 } else { pi }).collect();
    (loss, grad)
}
