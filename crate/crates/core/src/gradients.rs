//! Analytic gradients: parameter shift over every gate occurrence of a slot
//! (two terms for Pauli-generated rotations, four for CRX),
//! an adjoint sweep for ideal statevector training, and hybrid backprop
//! through the encoder, the chips and the aggregator.

use alloc::vec;
use alloc::vec::Vec;
use serde::{Deserialize, Serialize};

use crate::circuit::{AngleOffset, CircuitSpec, Stage};
use crate::density::{run_noisy_offset, NoiseModel};
use crate::ensemble::{Aggregator, Encoder, EnsembleModel, ForwardCache};
use crate::error::{Error, Result};
use crate::gate::GateKind;
use crate::math::{sqrt, FRAC_PI_2};

/// Where circuit expectations are evaluated.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub enum Backend {
    Ideal,
    Noisy(NoiseModel),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum GradientMethod {
    /// Two shifted evaluations per gate occurrence; works on every backend.
    #[default]
    ParameterShift,
    /// Reverse-mode sweep over the statevector; ideal backend only.
    Adjoint,
}

/// Gradient aligned with [`EnsembleModel::params`].
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct GradientVector {
    pub values: Vec<f64>,
}

impl GradientVector {
    pub fn zeros(len: usize) -> Self {
        GradientVector { values: vec![0.0; len] }
    }

    pub fn len(&self) -> usize {
        self.values.len()
    }

    pub fn is_empty(&self) -> bool {
        self.values.is_empty()
    }

    pub fn is_finite(&self) -> bool {
        self.values.iter().all(|v| v.is_finite())
    }
}

/// `<Z>` on the circuit's output wire under `backend`.
pub fn expectation(circuit: &CircuitSpec, enc: &[f64], theta: &[f64], backend: &Backend) -> Result<f64> {
    expectation_offset(circuit, enc, theta, backend, None)
}

fn expectation_offset(
    circuit: &CircuitSpec,
    enc: &[f64],
    theta: &[f64],
    backend: &Backend,
    offset: Option<AngleOffset>,
) -> Result<f64> {
    match backend {
        Backend::Ideal => circuit.run_offset(enc, theta, offset)?.expectation_z(circuit.output_wire()),
        Backend::Noisy(noise) => {
            run_noisy_offset(circuit, enc, theta, noise, offset)?.expectation_z(circuit.output_wire())
        }
    }
}

/// `d<Z>/d theta[slot]` by the two-term shift rule, summed over every gate
/// occurrence that reads the slot.
pub fn param_shift(circuit: &CircuitSpec, enc: &[f64], theta: &[f64], slot: usize, backend: &Backend) -> Result<f64> {
    param_shift_stage(circuit, Stage::Trainable, enc, theta, slot, backend)
}

/// Shift rule for either the encoding angles or the trainable parameters.
pub fn param_shift_stage(
    circuit: &CircuitSpec,
    stage: Stage,
    enc: &[f64],
    theta: &[f64],
    slot: usize,
    backend: &Backend,
) -> Result<f64> {
    circuit.check_lengths(enc, theta)?;
    let count = match stage {
        Stage::Encoding => circuit.num_encoding,
        Stage::Trainable => circuit.num_trainable,
    };
    if slot >= count {
        return Err(Error::InvalidSlot { slot, count });
    }
    let ops = match stage {
        Stage::Encoding => &circuit.encoding_ops,
        Stage::Trainable => &circuit.trainable_ops,
    };
    let mut total = 0.0;
    for (gate, position) in circuit.occurrences(stage, slot) {
        let diff = |shift: f64| -> Result<f64> {
            let at = |delta| Some(AngleOffset { stage, gate, position, delta });
            Ok(expectation_offset(circuit, enc, theta, backend, at(shift))?
                - expectation_offset(circuit, enc, theta, backend, at(-shift))?)
        };
        total += if ops[gate].kind == GateKind::CRX {
            // The controlled generator has eigenvalues {0, +-1/2}, so the
            // expectation carries two frequencies and needs four terms.
            let r2 = sqrt(2.0);
            let c_plus = (r2 + 1.0) / (4.0 * r2);
            let c_minus = (r2 - 1.0) / (4.0 * r2);
            c_plus * diff(FRAC_PI_2)? - c_minus * diff(3.0 * FRAC_PI_2)?
        } else {
            0.5 * diff(FRAC_PI_2)?
        };
    }
    Ok(total)
}

/// Central difference `(f(x + h e) - f(x - h e)) / 2h`.
pub fn finite_diff_oracle<F: Fn(&[f64]) -> f64>(f: F, x: &[f64], slot: usize, h: f64) -> Result<f64> {
    if h.is_nan() || h <= 0.0 {
        return Err(Error::InvalidArgument("finite-difference step must be positive".into()));
    }
    if slot >= x.len() {
        return Err(Error::InvalidSlot { slot, count: x.len() });
    }
    let mut xp = x.to_vec();
    xp[slot] += h;
    let mut xm = x.to_vec();
    xm[slot] -= h;
    Ok((f(&xp) - f(&xm)) / (2.0 * h))
}

/// Expectation plus its gradient with respect to both angle vectors.
#[derive(Debug, Clone, PartialEq)]
pub struct CircuitGradient {
    pub value: f64,
    /// Empty when the encoding gradient was not requested.
    pub d_enc: Vec<f64>,
    pub d_theta: Vec<f64>,
}

pub fn circuit_gradient(
    circuit: &CircuitSpec,
    enc: &[f64],
    theta: &[f64],
    backend: &Backend,
    method: GradientMethod,
    with_encoding: bool,
) -> Result<CircuitGradient> {
    match (method, backend) {
        (GradientMethod::Adjoint, Backend::Ideal) => adjoint(circuit, enc, theta, with_encoding),
        (GradientMethod::Adjoint, Backend::Noisy(_)) => {
            Err(Error::InvalidArgument("adjoint gradients need the ideal backend".into()))
        }
        (GradientMethod::ParameterShift, _) => {
            let value = expectation(circuit, enc, theta, backend)?;
            let d_theta = (0..circuit.num_trainable)
                .map(|s| param_shift_stage(circuit, Stage::Trainable, enc, theta, s, backend))
                .collect::<Result<Vec<_>>>()?;
            let d_enc = if with_encoding {
                (0..circuit.num_encoding)
                    .map(|s| param_shift_stage(circuit, Stage::Encoding, enc, theta, s, backend))
                    .collect::<Result<Vec<_>>>()?
            } else {
                Vec::new()
            };
            Ok(CircuitGradient { value, d_enc, d_theta })
        }
    }
}

fn adjoint(circuit: &CircuitSpec, enc: &[f64], theta: &[f64], with_encoding: bool) -> Result<CircuitGradient> {
    circuit.validate()?;
    let mut psi = circuit.run(enc, theta)?;
    let wire = circuit.output_wire();
    let value = psi.expectation_z(wire)?;
    let mut lambda = psi.z_applied(wire);
    let mut mu = psi.clone();
    let mut d_theta = vec![0.0; circuit.num_trainable];
    let mut d_enc = if with_encoding { vec![0.0; circuit.num_encoding] } else { Vec::new() };

    let mut sweep = |ops: &[crate::gate::GateOp], params: &[f64], grads: &mut [f64]| -> Result<()> {
        for op in ops.iter().rev() {
            let angles = op.gather(params)?;
            let inv = op.matrix(&angles).adjoint();
            psi.apply_matrix(&op.wires, &inv);
            for (p, &slot) in op.slots.iter().enumerate() {
                mu.amplitudes_mut().copy_from_slice(psi.amplitudes());
                mu.apply_matrix(&op.wires, &op.derivative(&angles, p));
                grads[slot] += 2.0 * lambda.inner(&mu).re;
            }
            lambda.apply_matrix(&op.wires, &inv);
        }
        Ok(())
    };
    sweep(&circuit.trainable_ops, theta, &mut d_theta)?;
    if with_encoding {
        sweep(&circuit.encoding_ops, enc, &mut d_enc)?;
    }
    Ok(CircuitGradient { value, d_enc, d_theta })
}

/// Backpropagates `d_output = dL/d(model output)` through the cached forward
/// pass. Chips whose downstream gradient is exactly zero are skipped.
pub fn hybrid_backward(
    model: &EnsembleModel,
    cache: &ForwardCache,
    d_output: &[f64],
    backend: &Backend,
    method: GradientMethod,
) -> Result<GradientVector> {
    if cache.version != model.version() {
        return Err(Error::StaleCache { cached: cache.version, current: model.version() });
    }
    if d_output.len() != model.output_dim() {
        return Err(Error::DimensionMismatch { what: "output gradient", expected: model.output_dim(), got: d_output.len() });
    }
    let k = model.num_chips();
    let mut grad = GradientVector::zeros(model.param_count());
    let enc_len = model.encoder.param_count();
    let theta_len = model.chip.num_trainable;
    let agg_start = enc_len + k * theta_len;
    let head_start = agg_start + model.aggregator.param_count();

    let d_agg = match &model.head {
        Some(h) => h.backward(&cache.aggregated, d_output, &mut grad.values[head_start..]),
        None => d_output.to_vec(),
    };
    let d_chip: Vec<f64> = match &model.aggregator {
        Aggregator::Mean => vec![d_agg[0] / k as f64; k],
        Aggregator::WeightedSum(w) => {
            for (g, f) in grad.values[agg_start..head_start].iter_mut().zip(&cache.chip_outputs) {
                *g += d_agg[0] * f;
            }
            w.iter().map(|wc| d_agg[0] * wc).collect()
        }
        Aggregator::Linear(l) => l.backward(&cache.chip_outputs, &d_agg, &mut grad.values[agg_start..head_start]),
    };

    let with_encoding = model.encoder.is_trainable();
    let width = model.chip.num_encoding;
    let mut d_angles = vec![vec![0.0; width]; k];
    for c in 0..k {
        if d_chip[c] == 0.0 {
            continue;
        }
        let g = circuit_gradient(&model.chip, &cache.chip_angles[c], &model.thetas[c], backend, method, with_encoding)?;
        let start = enc_len + c * theta_len;
        for (dst, v) in grad.values[start..start + theta_len].iter_mut().zip(&g.d_theta) {
            *dst += d_chip[c] * v;
        }
        for (dst, v) in d_angles[c].iter_mut().zip(&g.d_enc) {
            *dst = d_chip[c] * v;
        }
    }

    match &model.encoder {
        Encoder::Scale { .. } => {}
        Encoder::Linear(l) => {
            let d_encoded = model.partition.merge(&d_angles)?;
            l.backward(&cache.padded_input, &d_encoded, &mut grad.values[..enc_len]);
        }
        Encoder::PerChip(ls) => {
            let mut offset = 0;
            for (c, l) in ls.iter().enumerate() {
                let n = l.param_count();
                l.backward(&cache.raw_blocks[c], &d_angles[c], &mut grad.values[offset..offset + n]);
                offset += n;
            }
        }
    }
    if !grad.is_finite() {
        return Err(Error::NonFinite { what: "gradient" });
    }
    Ok(grad)
}
